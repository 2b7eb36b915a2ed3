import pytest

from cswitch.corpus import Lexicon, TaggedUtterance, Token, language


def tok(surface, code=None):
    return Token(surface, language(code) if code else None)


def utt(utt_id, surfaces, codes=None, start=0.0, end=0.0, speaker=""):
    """Build a TaggedUtterance from parallel surface/code lists."""
    if codes is None:
        codes = [None] * len(surfaces)
    tokens = [tok(s, c) for s, c in zip(surfaces, codes)]
    return TaggedUtterance(id=utt_id, speaker=speaker, start_s=start, end_s=end, tokens=tokens)


@pytest.fixture
def eng_zul_lexicons():
    return [
        Lexicon(language("eng"), {"the", "go", "now", "yes", "a", "hello", "world"}),
        Lexicon(language("zul"), {"umuntu", "yebo", "manje", "umfana", "a"}),
    ]


@pytest.fixture
def lexicon_dir(tmp_path):
    d = tmp_path / "lexicons"
    d.mkdir()
    (d / "eng").write_text("the\ngo\nnow\nyes\na\nhello\nworld\n", encoding="utf-8")
    (d / "zul").write_text("umuntu\nyebo\nmanje\numfana\na\n", encoding="utf-8")
    return d

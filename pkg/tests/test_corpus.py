import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cswitch.corpus import (
    Family,
    ParseConfig,
    TagPolicy,
    UttKind,
    classify_utterance,
    corpus_stats,
    language,
    parse_data_dir,
    parse_text_file,
    tag_tokens,
    write_data_dir,
)
from cswitch.errors import DataError

from conftest import tok, utt


def write_data(tmp_path, text, segments=None, utt2spk=None):
    d = tmp_path / "data"
    d.mkdir(exist_ok=True)
    (d / "text").write_text(text, encoding="utf-8")
    if segments is not None:
        (d / "segments").write_text(segments, encoding="utf-8")
    if utt2spk is not None:
        (d / "utt2spk").write_text(utt2spk, encoding="utf-8")
    return d


class TestLanguageRegistry:
    def test_family_assignment_is_fixed(self):
        assert language("eng").family is Family.ENGLISH
        assert language("zul").family is Family.NGUNI
        assert language("xho").family is Family.NGUNI
        assert language("sot").family is Family.SOTHO
        assert language("tsn").family is Family.SOTHO
        assert language("fra").family is Family.OTHER

    def test_interning(self):
        assert language("eng") is language("eng")


class TestParsing:
    def test_minimal_text_line(self, tmp_path):
        d = write_data(tmp_path, "utt1 hello world\n")
        (u,) = parse_data_dir(d)
        assert u.id == "utt1"
        assert [t.surface for t in u.tokens] == ["hello", "world"]
        assert all(t.lang is None for t in u.tokens)
        assert u.duration_s == 0.0

    def test_inline_tags_pass_through(self, tmp_path):
        d = write_data(tmp_path, "utt2 yebo_zul yes_eng\n")
        (u,) = parse_data_dir(d, ParseConfig(inline_tags=True))
        assert [(t.surface, t.lang.code) for t in u.tokens] == [("yebo", "zul"), ("yes", "eng")]

    def test_inline_tags_off_by_default(self, tmp_path):
        d = write_data(tmp_path, "utt2 yebo_zul\n")
        (u,) = parse_data_dir(d)
        assert u.tokens[0].surface == "yebo_zul"
        assert u.tokens[0].lang is None

    def test_unknown_suffix_is_not_a_tag(self, tmp_path):
        d = write_data(tmp_path, "utt1 foo_bar\n")
        (u,) = parse_data_dir(d, ParseConfig(inline_tags=True))
        assert u.tokens[0].surface == "foo_bar"

    def test_segments_arithmetic(self, tmp_path):
        d = write_data(tmp_path, "utt1 hello\n", segments="utt1 rec1 3.50 5.25\n")
        (u,) = parse_data_dir(d)
        assert u.start_s == 3.50
        assert u.end_s == 5.25
        assert u.duration_s == pytest.approx(1.75)

    def test_duplicate_id_is_hard_error(self, tmp_path):
        d = write_data(tmp_path, "utt1 a\nutt1 b\n")
        with pytest.raises(DataError, match="utt1"):
            parse_data_dir(d)

    def test_malformed_segment_line_names_line_number(self, tmp_path):
        d = write_data(tmp_path, "utt1 a\n", segments="utt1 rec1 0.00\n")
        with pytest.raises(DataError, match=":1"):
            parse_data_dir(d)

    def test_segment_only_utterance_kept_empty(self, tmp_path):
        d = write_data(tmp_path, "utt1 a\n", segments="utt1 r 0.00 1.00\nutt9 r 2.00 3.00\n")
        utts = parse_data_dir(d)
        assert [u.id for u in utts] == ["utt1", "utt9"]
        assert utts[1].tokens == []
        assert utts[1].duration_s == pytest.approx(1.0)

    def test_utt2spk(self, tmp_path):
        d = write_data(tmp_path, "utt1 a\n", utt2spk="utt1 spkA\n")
        (u,) = parse_data_dir(d)
        assert u.speaker == "spkA"

    def test_casefold_default(self, tmp_path):
        d = write_data(tmp_path, "utt1 Hello WORLD\n")
        (u,) = parse_data_dir(d)
        assert [t.surface for t in u.tokens] == ["hello", "world"]
        (u,) = parse_data_dir(d, ParseConfig(casefold=False))
        assert [t.surface for t in u.tokens] == ["Hello", "WORLD"]

    def test_missing_text_file(self, tmp_path):
        with pytest.raises(DataError, match="text"):
            parse_data_dir(tmp_path)


class TestTagging:
    def test_unique_membership(self, eng_zul_lexicons):
        (out,) = tag_tokens([utt("u1", ["umuntu"])], eng_zul_lexicons)
        assert out.tokens[0].lang == language("zul")

    def test_stickiness_rule(self, eng_zul_lexicons):
        # "a" is in both lexicons; the previous resolved token is English,
        # so stickiness keeps it English
        (out,) = tag_tokens([utt("u1", ["the", "a"])], eng_zul_lexicons)
        assert [t.lang.code for t in out.tokens] == ["eng", "eng"]
        (out,) = tag_tokens([utt("u2", ["umuntu", "a"])], eng_zul_lexicons)
        assert [t.lang.code for t in out.tokens] == ["zul", "zul"]

    def test_priority_when_no_previous(self, eng_zul_lexicons):
        (out,) = tag_tokens([utt("u1", ["a"])], eng_zul_lexicons,
                            TagPolicy(priority=("zul", "eng")))
        assert out.tokens[0].lang.code == "zul"

    def test_miss_stays_unknown(self, eng_zul_lexicons):
        (out,) = tag_tokens([utt("u1", ["qwertyx"])], eng_zul_lexicons)
        assert out.tokens[0].lang is None

    def test_empty_lexicon_list_is_error(self):
        with pytest.raises(DataError):
            tag_tokens([utt("u1", ["a"])], [])

    def test_no_sticky_falls_back_to_priority(self, eng_zul_lexicons):
        policy = TagPolicy(priority=("zul", "eng"), sticky=False)
        (out,) = tag_tokens([utt("u1", ["the", "a"])], eng_zul_lexicons, policy)
        assert [t.lang.code for t in out.tokens] == ["eng", "zul"]

    @given(st.lists(st.sampled_from(["the", "a", "umuntu", "manje", "zzz"]), max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_tagging_is_deterministic(self, words):
        from cswitch.corpus import Lexicon

        lexicons = [
            Lexicon(language("eng"), {"the", "a"}),
            Lexicon(language("zul"), {"umuntu", "manje", "a"}),
        ]
        one = tag_tokens([utt("u", words)], lexicons)
        two = tag_tokens([utt("u", words)], lexicons)
        assert one == two


class TestClassification:
    def test_monolingual(self):
        cls = classify_utterance(utt("u", ["a", "b", "c"], ["eng", "eng", "eng"]))
        assert cls.kind is UttKind.MONOLINGUAL
        assert cls.label() == "eng"

    def test_code_switched(self):
        cls = classify_utterance(utt("u", ["a", "b", "c"], ["eng", "zul", "eng"]))
        assert cls.kind is UttKind.CODE_SWITCHED
        assert cls.languages == frozenset({language("eng"), language("zul")})

    def test_bantu_to_bantu_is_code_switched(self):
        cls = classify_utterance(utt("u", ["a", "b"], ["zul", "sot"]))
        assert cls.kind is UttKind.CODE_SWITCHED
        assert cls.label() == "cs:sot+zul"

    def test_more_than_two_languages(self):
        cls = classify_utterance(utt("u", ["a", "b", "c"], ["eng", "zul", "sot"]))
        assert len(cls.languages) == 3

    def test_all_unknown_is_untagged(self):
        assert classify_utterance(utt("u", ["a", "b"])).kind is UttKind.UNTAGGED
        assert classify_utterance(utt("u", [])).kind is UttKind.UNTAGGED

    def test_unknowns_ignored_for_classification(self):
        cls = classify_utterance(utt("u", ["a", "b"], ["eng", None]))
        assert cls.kind is UttKind.MONOLINGUAL


class TestCorpusStats:
    def test_monolingual_duration(self):
        stats = corpus_stats([utt("u", ["a", "b", "c"], ["eng"] * 3, start=0.0, end=60.0)])
        assert stats.per_language["eng"].mono_dur_s == pytest.approx(60.0)
        assert stats.per_language["eng"].cs_dur_s == 0.0
        assert stats.switch_count == 0

    def test_proportional_cs_apportionment(self):
        stats = corpus_stats([utt("u", ["x", "y", "z"], ["eng", "zul", "zul"], 0.0, 60.0)])
        assert stats.per_language["eng"].cs_dur_s == pytest.approx(20.0)
        assert stats.per_language["zul"].cs_dur_s == pytest.approx(40.0)
        assert stats.per_language["eng"].mono_dur_s == 0.0
        assert stats.switch_count == 1

    def test_switch_counting_skips_unknown(self):
        stats = corpus_stats([utt("u", "abcd", ["eng", None, "zul", "eng"])])
        # eng-None, None-zul: not counted; zul-eng counted
        assert stats.switch_count == 1

    def test_token_and_type_counts(self):
        utts = [
            utt("u1", ["the", "the", "umuntu"], ["eng", "eng", "zul"]),
            utt("u2", ["the"], ["eng"]),
        ]
        stats = corpus_stats(utts)
        assert stats.per_language["eng"].token_count == 3
        assert stats.per_language["eng"].type_count == 1
        assert stats.per_language["zul"].token_count == 1
        assert stats.total_tokens == 4

    def test_duplicating_an_utterance_keeps_types(self):
        base = utt("u1", ["the", "go"], ["eng", "eng"])
        dup = utt("u2", ["the", "go"], ["eng", "eng"])
        one = corpus_stats([base])
        two = corpus_stats([base, dup])
        assert two.per_language["eng"].type_count == one.per_language["eng"].type_count
        assert two.per_language["eng"].token_count == 2 * one.per_language["eng"].token_count

    def test_duration_sum_identity(self):
        utts = [
            utt("u1", ["a"], ["eng"], 0.0, 7.5),
            utt("u2", ["a", "b", "c"], ["eng", "zul", "sot"], 1.0, 11.0),
            utt("u3", ["x"], [None], 0.0, 99.0),  # untagged: excluded
            utt("u4", [], None, 0.0, 5.0),  # untranscribed: excluded
        ]
        stats = corpus_stats(utts)
        per_lang = sum(s.mono_dur_s + s.cs_dur_s for s in stats.per_language.values())
        assert per_lang == pytest.approx(17.5, abs=1e-9)
        assert stats.tagged_duration_s == pytest.approx(17.5, abs=1e-9)

    def test_class_counts(self):
        utts = [
            utt("u1", ["a"], ["eng"]),
            utt("u2", ["a", "b"], ["eng", "zul"]),
            utt("u3", ["zzz"]),
        ]
        stats = corpus_stats(utts)
        assert stats.class_counts["mono:eng"] == 1
        assert stats.class_counts["cs"] == 1
        assert stats.class_counts["untagged"] == 1

    def test_tsv_shape(self):
        stats = corpus_stats([utt("u", ["x", "y", "z"], ["eng", "zul", "zul"], 0.0, 60.0)])
        lines = stats.to_tsv().strip().split("\n")
        assert lines[0].split("\t") == [
            "language", "mono_min", "cs_min", "total_h", "total_pct", "tokens", "types",
        ]
        assert lines[-1].startswith("total\t")


class TestRoundTrip:
    def test_dump_and_reparse(self, tmp_path):
        utts = [
            utt("u1", ["hello", "yebo"], ["eng", "zul"], 0.25, 2.75, speaker="spk1"),
            utt("u2", ["world"], [None], 0.0, 1.5),
            utt("u3", [], None, 3.0, 4.0),
        ]
        out = tmp_path / "dump"
        write_data_dir(utts, out)
        back = parse_data_dir(out, ParseConfig(inline_tags=True))
        assert back == utts

    @given(
        st.lists(
            st.tuples(
                st.lists(
                    st.tuples(
                        st.text(alphabet="abcxyz", min_size=1, max_size=5),
                        st.sampled_from([None, "eng", "zul", "sot"]),
                    ),
                    max_size=5,
                ),
                st.floats(min_value=0, max_value=100),
                st.floats(min_value=0, max_value=50),
            ),
            max_size=6,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, tmp_path_factory, specs):
        utts = []
        for i, (token_specs, start, extra) in enumerate(specs):
            start = round(start, 2)
            end = round(start + extra, 2)
            tokens = [tok(s, c) for s, c in token_specs]
            utts.append(
                utt(f"u{i}", [t.surface for t in tokens],
                    [t.lang.code if t.lang else None for t in tokens], start, end)
            )
        out = tmp_path_factory.mktemp("dump")
        write_data_dir(utts, out)
        back = parse_data_dir(out, ParseConfig(inline_tags=True))
        assert back == utts

    def test_text_file_parse_matches_dir_parse(self, tmp_path):
        (tmp_path / "text").write_text("u1 a b\nu2 c\n", encoding="utf-8")
        assert parse_text_file(tmp_path / "text") == parse_data_dir(tmp_path)

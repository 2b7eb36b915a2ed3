"""Corpus ingestion, token-level language tagging and corpus statistics.

Transcriptions are read from Kaldi-style data directories (``text``,
``segments``, ``utt2spk``), turned into :class:`TaggedUtterance` objects whose
tokens carry per-word language identity, and summarised into duration, token,
type and switch-count statistics.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import DataError


class Family(Enum):
    ENGLISH = "english"
    NGUNI = "nguni"
    SOTHO = "sotho"
    OTHER = "other"


# Fixed family assignment per language code. isiZulu and isiXhosa are Nguni
# languages; Sesotho and Setswana are Sotho languages. Unregistered codes map
# to OTHER.
_FAMILIES = {
    "eng": Family.ENGLISH,
    "zul": Family.NGUNI,
    "xho": Family.NGUNI,
    "sot": Family.SOTHO,
    "tsn": Family.SOTHO,
}

BANTU_FAMILIES = frozenset({Family.NGUNI, Family.SOTHO})

DEFAULT_LANGUAGES = ("eng", "zul", "xho", "sot", "tsn")


@dataclass(frozen=True)
class LanguageId:
    code: str
    family: Family

    def __post_init__(self):
        if not self.code:
            raise DataError("language code must be non-empty")


_LANGUAGE_CACHE: dict[str, LanguageId] = {}


def language(code: str) -> LanguageId:
    """Return the LanguageId for ``code`` with its fixed family assignment."""
    lang = _LANGUAGE_CACHE.get(code)
    if lang is None:
        lang = LanguageId(code, _FAMILIES.get(code, Family.OTHER))
        _LANGUAGE_CACHE[code] = lang
    return lang


@dataclass(frozen=True)
class Token:
    """A surface form with an optional language tag (None = unknown)."""

    surface: str
    lang: LanguageId | None = None


@dataclass
class TaggedUtterance:
    """An utterance as a token sequence plus timing and speaker metadata.

    ``tokens`` is empty for segmented-but-untranscribed utterances; durations
    are zero when no segment timing is known.
    """

    id: str
    speaker: str = ""
    start_s: float = 0.0
    end_s: float = 0.0
    tokens: list[Token] = field(default_factory=list)

    def __post_init__(self):
        if self.end_s < self.start_s:
            raise DataError(f"utterance {self.id}: end {self.end_s} before start {self.start_s}")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def known_tags(self) -> list[LanguageId]:
        return [t.lang for t in self.tokens if t.lang is not None]


@dataclass
class Lexicon:
    """A language's word list; membership is exact match after normalization."""

    language: LanguageId
    words: set[str]

    def __post_init__(self):
        if any(not w for w in self.words):
            raise DataError(f"lexicon {self.language.code}: empty word")


def load_lexicon(path: str | Path, code: str | None = None, casefold: bool = True) -> Lexicon:
    """Load a one-word-per-line lexicon; the filename stem is the language code."""
    path = Path(path)
    if code is None:
        code = path.stem
    words = set()
    with open(path, encoding="utf-8") as fp:
        for line in fp:
            word = line.strip()
            if not word:
                continue
            words.add(word.lower() if casefold else word)
    return Lexicon(language(code), words)


def load_lexicons(directory: str | Path, casefold: bool = True) -> list[Lexicon]:
    """Load every file in ``directory`` as a lexicon, sorted by language code."""
    directory = Path(directory)
    paths = sorted(p for p in directory.iterdir() if p.is_file())
    if not paths:
        raise DataError(f"no lexicon files in {directory}")
    return [load_lexicon(p, casefold=casefold) for p in paths]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParseConfig:
    """Options for reading Kaldi-style data directories.

    With ``inline_tags`` a token ``word_<code>`` (single trailing underscore
    plus a recognized language code) is split into surface and tag.
    """

    inline_tags: bool = False
    casefold: bool = True
    languages: tuple[str, ...] = DEFAULT_LANGUAGES


def parse_token(raw: str, config: ParseConfig) -> Token:
    surface, tag = raw, None
    if config.inline_tags and "_" in raw:
        stem, _, suffix = raw.rpartition("_")
        if stem and suffix in config.languages:
            surface, tag = stem, language(suffix)
    if config.casefold:
        surface = surface.lower()
    return Token(surface, tag)


def parse_text_file(path: str | Path, config: ParseConfig = ParseConfig()) -> list[TaggedUtterance]:
    """Parse a Kaldi ``text`` file: one utterance id plus tokens per line."""
    utts: list[TaggedUtterance] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, 1):
            parts = line.split()
            if not parts:
                continue
            utt_id, raw_tokens = parts[0], parts[1:]
            if utt_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate utterance id {utt_id!r}")
            seen.add(utt_id)
            tokens = [parse_token(raw, config) for raw in raw_tokens]
            utts.append(TaggedUtterance(id=utt_id, tokens=tokens))
    return utts


def parse_data_dir(path: str | Path, config: ParseConfig = ParseConfig()) -> list[TaggedUtterance]:
    """Parse a Kaldi-style data directory into tagged utterances.

    Requires a ``text`` file; ``segments`` (utt-id rec-id start end) and
    ``utt2spk`` are applied when present. Utterances that appear only in
    ``segments`` are kept with empty token lists.
    """
    path = Path(path)
    text_path = path / "text"
    if not text_path.exists():
        raise DataError(f"missing text file: {text_path}")
    utts = parse_text_file(text_path, config)
    by_id = {u.id: u for u in utts}

    segments_path = path / "segments"
    if segments_path.exists():
        with open(segments_path, encoding="utf-8") as fp:
            for lineno, line in enumerate(fp, 1):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != 4:
                    raise DataError(f"{segments_path}:{lineno}: expected 4 fields, got {len(parts)}")
                utt_id, _rec_id, start_raw, end_raw = parts
                try:
                    start_s, end_s = float(start_raw), float(end_raw)
                except ValueError:
                    raise DataError(f"{segments_path}:{lineno}: malformed segment times") from None
                if end_s < start_s:
                    raise DataError(f"{segments_path}:{lineno}: segment ends before it starts")
                utt = by_id.get(utt_id)
                if utt is None:
                    utt = TaggedUtterance(id=utt_id)
                    by_id[utt_id] = utt
                    utts.append(utt)
                utt.start_s, utt.end_s = start_s, end_s

    utt2spk_path = path / "utt2spk"
    if utt2spk_path.exists():
        with open(utt2spk_path, encoding="utf-8") as fp:
            for line in fp:
                parts = line.split()
                if len(parts) != 2:
                    continue
                utt = by_id.get(parts[0])
                if utt is not None:
                    utt.speaker = parts[1]

    return utts


def _fmt_seconds(value: float) -> str:
    # segments carry at least two decimals; keep full precision when rounding
    # to two would lose information.
    short = f"{value:.2f}"
    return short if float(short) == value else repr(value)


def write_data_dir(utts: list[TaggedUtterance], out_dir: str | Path) -> None:
    """Write the canonical corpus dump: ``text`` with inline tags, ``segments``, ``utt2spk``.

    Re-parsing the dump with inline tags enabled reproduces an equal corpus.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "text", "w", encoding="utf-8", newline="\n") as fp:
        for u in utts:
            rendered = [
                t.surface if t.lang is None else f"{t.surface}_{t.lang.code}"
                for t in u.tokens
            ]
            fp.write(" ".join([u.id] + rendered) + "\n")
    with open(out_dir / "segments", "w", encoding="utf-8", newline="\n") as fp:
        for u in utts:
            fp.write(f"{u.id} {u.id} {_fmt_seconds(u.start_s)} {_fmt_seconds(u.end_s)}\n")
    speakers = [(u.id, u.speaker) for u in utts if u.speaker]
    if speakers:
        with open(out_dir / "utt2spk", "w", encoding="utf-8", newline="\n") as fp:
            for utt_id, spk in speakers:
                fp.write(f"{utt_id} {spk}\n")


# ---------------------------------------------------------------------------
# Tagging
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TagPolicy:
    """How ambiguous and unknown words are resolved during tagging.

    A word found in several lexicons keeps the previous resolved token's
    language when that language is a candidate (``sticky``), otherwise the
    first candidate in ``priority`` order wins. ``priority=None`` uses the
    lexicon list order.
    """

    priority: tuple[str, ...] | None = None
    sticky: bool = True
    casefold: bool = True


def tag_tokens(
    utts: list[TaggedUtterance],
    lexicons: list[Lexicon],
    policy: TagPolicy = TagPolicy(),
) -> list[TaggedUtterance]:
    """Assign a language to every token by lexicon membership.

    Deterministic: the result depends only on the inputs and the policy.
    Words found in no lexicon stay unknown.
    """
    if not lexicons:
        raise DataError("tag_tokens requires at least one lexicon")
    priority = policy.priority or tuple(lex.language.code for lex in lexicons)
    rank = {code: i for i, code in enumerate(priority)}

    def _rank(lang: LanguageId) -> tuple[int, str]:
        return (rank.get(lang.code, len(priority)), lang.code)

    tagged: list[TaggedUtterance] = []
    for u in utts:
        prev: LanguageId | None = None
        tokens: list[Token] = []
        for tok in u.tokens:
            probe = tok.surface.lower() if policy.casefold else tok.surface
            candidates = [lex.language for lex in lexicons if probe in lex.words]
            if not candidates:
                lang = None
            elif len(candidates) == 1:
                lang = candidates[0]
            elif policy.sticky and prev is not None and prev in candidates:
                lang = prev
            else:
                lang = min(candidates, key=_rank)
            tokens.append(Token(tok.surface, lang))
            if lang is not None:
                prev = lang
        tagged.append(replace(u, tokens=tokens))
    return tagged


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

class UttKind(Enum):
    MONOLINGUAL = "monolingual"
    CODE_SWITCHED = "code-switched"
    UNTAGGED = "untagged"


@dataclass(frozen=True)
class UttClass:
    """Utterance-level language class: monolingual, code-switched or untagged."""

    kind: UttKind
    languages: frozenset[LanguageId] = frozenset()

    def label(self) -> str:
        if self.kind is UttKind.MONOLINGUAL:
            return next(iter(self.languages)).code
        if self.kind is UttKind.CODE_SWITCHED:
            return "cs:" + "+".join(sorted(l.code for l in self.languages))
        return "untagged"


def classify_tokens(tokens: list[Token]) -> UttClass:
    langs = frozenset(t.lang for t in tokens if t.lang is not None)
    if not langs:
        return UttClass(UttKind.UNTAGGED)
    if len(langs) == 1:
        return UttClass(UttKind.MONOLINGUAL, langs)
    return UttClass(UttKind.CODE_SWITCHED, langs)


def classify_utterance(u: TaggedUtterance) -> UttClass:
    """Classify by the set of known tags; unknown tokens are ignored.

    Utterances whose known tags span more than two languages are still a
    single code-switched class carrying the full language set.
    """
    return classify_tokens(u.tokens)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

@dataclass
class LanguageStats:
    mono_dur_s: float = 0.0
    cs_dur_s: float = 0.0
    token_count: int = 0
    type_count: int = 0

    @property
    def total_dur_s(self) -> float:
        return self.mono_dur_s + self.cs_dur_s


@dataclass
class CorpusStats:
    """Per-language durations, token/type counts, switch and class counts."""

    per_language: dict[str, LanguageStats]
    unknown: LanguageStats
    switch_count: int
    class_counts: Counter
    tagged_duration_s: float
    n_utterances: int
    total_types: int

    @property
    def total_tokens(self) -> int:
        return self.unknown.token_count + sum(s.token_count for s in self.per_language.values())

    def _ordered_codes(self) -> list[str]:
        return sorted(self.per_language, key=lambda c: (-self.per_language[c].total_dur_s, c))

    def to_dict(self) -> dict:
        return {
            "languages": {
                code: {
                    "mono_dur_s": s.mono_dur_s,
                    "cs_dur_s": s.cs_dur_s,
                    "mono_min": s.mono_dur_s / 60.0,
                    "cs_min": s.cs_dur_s / 60.0,
                    "total_h": s.total_dur_s / 3600.0,
                    "token_count": s.token_count,
                    "type_count": s.type_count,
                }
                for code, s in self.per_language.items()
            },
            "unknown": {
                "token_count": self.unknown.token_count,
                "type_count": self.unknown.type_count,
            },
            "switch_count": self.switch_count,
            "class_counts": dict(self.class_counts),
            "tagged_duration_s": self.tagged_duration_s,
            "n_utterances": self.n_utterances,
            "total_tokens": self.total_tokens,
            "total_types": self.total_types,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_tsv(self) -> str:
        """One language per row: mono/CS minutes, total hours and share, tokens, types."""
        header = ["language", "mono_min", "cs_min", "total_h", "total_pct", "tokens", "types"]
        lines = ["\t".join(header)]
        grand_dur = sum(s.total_dur_s for s in self.per_language.values())
        for code in self._ordered_codes():
            s = self.per_language[code]
            pct = 100.0 * s.total_dur_s / grand_dur if grand_dur else 0.0
            lines.append(
                f"{code}\t{s.mono_dur_s / 60.0:.2f}\t{s.cs_dur_s / 60.0:.2f}"
                f"\t{s.total_dur_s / 3600.0:.2f}\t{pct:.2f}\t{s.token_count}\t{s.type_count}"
            )
        if self.unknown.token_count:
            lines.append(
                f"unknown\t0.00\t0.00\t0.00\t0.00"
                f"\t{self.unknown.token_count}\t{self.unknown.type_count}"
            )
        mono_min = sum(s.mono_dur_s for s in self.per_language.values()) / 60.0
        cs_min = sum(s.cs_dur_s for s in self.per_language.values()) / 60.0
        lines.append(
            f"total\t{mono_min:.2f}\t{cs_min:.2f}\t{grand_dur / 3600.0:.2f}\t100.00"
            f"\t{self.total_tokens}\t{self.total_types}"
        )
        return "\n".join(lines) + "\n"


def corpus_stats(utts: list[TaggedUtterance]) -> CorpusStats:
    """Compute corpus statistics over tagged utterances.

    Monolingual utterances accrue their full duration to the language's
    monolingual time; code-switched utterances split their duration across
    participating languages proportionally to known-token counts. Unknown
    tokens never contribute to switch counts or per-language durations.
    """
    stats: dict[str, LanguageStats] = {}
    types: dict[str, set] = {}
    unknown = LanguageStats()
    unknown_types: set[str] = set()
    all_types: set[str] = set()
    class_counts: Counter = Counter()
    switch_count = 0
    tagged_duration = 0.0

    def _lang_stats(code: str) -> LanguageStats:
        if code not in stats:
            stats[code] = LanguageStats()
            types[code] = set()
        return stats[code]

    for u in utts:
        cls = classify_utterance(u)
        if cls.kind is UttKind.MONOLINGUAL:
            class_counts[f"mono:{cls.label()}"] += 1
        elif cls.kind is UttKind.CODE_SWITCHED:
            class_counts["cs"] += 1
        else:
            class_counts["untagged"] += 1

        for tok in u.tokens:
            all_types.add(tok.surface)
            if tok.lang is None:
                unknown.token_count += 1
                unknown_types.add(tok.surface)
            else:
                s = _lang_stats(tok.lang.code)
                s.token_count += 1
                types[tok.lang.code].add(tok.surface)

        for prev, cur in zip(u.tokens, u.tokens[1:]):
            if prev.lang is not None and cur.lang is not None and prev.lang != cur.lang:
                switch_count += 1

        dur = u.duration_s
        if cls.kind is UttKind.MONOLINGUAL:
            _lang_stats(cls.label()).mono_dur_s += dur
            tagged_duration += dur
        elif cls.kind is UttKind.CODE_SWITCHED:
            known = u.known_tags()
            weights = Counter(lang.code for lang in known)
            for code, count in weights.items():
                _lang_stats(code).cs_dur_s += dur * count / len(known)
            tagged_duration += dur

    for code, s in stats.items():
        s.type_count = len(types[code])
    unknown.type_count = len(unknown_types)

    return CorpusStats(
        per_language=stats,
        unknown=unknown,
        switch_count=switch_count,
        class_counts=class_counts,
        tagged_duration_s=tagged_duration,
        n_utterances=len(utts),
        total_types=len(all_types),
    )

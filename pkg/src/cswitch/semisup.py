"""Confidence-based selection of automatic transcriptions and assembly of
retraining manifests."""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import ParseConfig, TaggedUtterance, Token, UttKind, classify_tokens, parse_token
from .errors import DataError

log = logging.getLogger(__name__)

NO_CANDIDATES = "no-candidates"
BELOW_THRESHOLD = "below-threshold"


@dataclass
class CandidateTranscription:
    """One system's transcription of one utterance, with its confidence."""

    utt_id: str
    system_id: str
    tokens: list[Token]
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise DataError(
                f"candidate {self.utt_id}/{self.system_id}: "
                f"confidence {self.confidence} outside [0, 1]"
            )


@dataclass
class SelectionResult:
    utt_id: str
    system: str
    confidence: float
    label: str
    tokens: list[Token]


@dataclass
class Manifest:
    """Winning transcriptions plus rejection and count records."""

    rows: list[SelectionResult] = field(default_factory=list)
    rejected: list[tuple[str, str]] = field(default_factory=list)  # (utt_id, reason)
    counts: dict = field(default_factory=dict)

    def recount(self) -> dict:
        by_label = Counter(r.label for r in self.rows)
        by_system = Counter(r.system for r in self.rows)
        by_class = Counter()
        for r in self.rows:
            cls = classify_tokens(r.tokens)
            if cls.kind is UttKind.MONOLINGUAL:
                by_class[cls.label()] += 1
            elif cls.kind is UttKind.CODE_SWITCHED:
                by_class["cs"] += 1
            else:
                by_class["untagged"] += 1
        rejected = Counter(reason for _, reason in self.rejected)
        return {
            "rows": len(self.rows),
            "rejected": dict(rejected),
            "by_label": dict(by_label),
            "by_system": dict(by_system),
            "by_class": dict(by_class),
        }


def select_best(
    candidates: Iterable[CandidateTranscription],
    min_conf: float = 0.0,
    pair_labels: Mapping[str, str] | None = None,
    utt_ids: Iterable[str] | None = None,
) -> Manifest:
    """Pick the highest-confidence candidate per utterance.

    Ties break on the lexicographically smallest system id. Winners below
    ``min_conf`` are rejected. Systems listed in ``pair_labels`` label their
    winners with the given language-pair tag; any other system's winner is
    labelled by classifying its tokens (monolingual language or code-switched
    set). ``utt_ids``, when given, is the expected utterance universe; ids
    with no candidate at all are rejected with reason "no-candidates".
    """
    pair_labels = pair_labels or {}
    grouped: dict[str, list[CandidateTranscription]] = defaultdict(list)
    seen_pairs: set[tuple[str, str]] = set()
    for cand in candidates:
        key = (cand.utt_id, cand.system_id)
        if key in seen_pairs:
            raise DataError(f"duplicate candidate for utterance {key[0]!r} from system {key[1]!r}")
        seen_pairs.add(key)
        grouped[cand.utt_id].append(cand)

    manifest = Manifest()
    if utt_ids is not None:
        for utt_id in utt_ids:
            if utt_id not in grouped:
                manifest.rejected.append((utt_id, NO_CANDIDATES))

    for utt_id in sorted(grouped):
        best = min(grouped[utt_id], key=lambda c: (-c.confidence, c.system_id))
        if best.confidence < min_conf:
            manifest.rejected.append((utt_id, BELOW_THRESHOLD))
            continue
        if best.system_id in pair_labels:
            label = pair_labels[best.system_id]
        else:
            label = classify_tokens(best.tokens).label()
        manifest.rows.append(
            SelectionResult(utt_id, best.system_id, best.confidence, label, best.tokens)
        )

    manifest.counts = manifest.recount()
    return manifest


def read_candidates(
    path: str | Path,
    system_id: str,
    config: ParseConfig = ParseConfig(),
) -> list[CandidateTranscription]:
    """Read one system's candidate file: ``utt_id<TAB>confidence<TAB>tokens``."""
    out: list[CandidateTranscription] = []
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise DataError(f"{path}:{lineno}: expected at least 2 tab-separated fields")
            try:
                confidence = float(fields[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed confidence {fields[1]!r}") from None
            raw_tokens = fields[2].split() if len(fields) > 2 else []
            tokens = [parse_token(raw, config) for raw in raw_tokens]
            out.append(CandidateTranscription(fields[0], system_id, tokens, confidence))
    return out


def emit_manifest(manifest: Manifest, out_dir: str | Path) -> None:
    """Write ``text`` (winning transcriptions), ``labels`` TSV and ``counts.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "text", "w", encoding="utf-8", newline="\n") as fp:
        for row in manifest.rows:
            fp.write(" ".join([row.utt_id] + [t.surface for t in row.tokens]) + "\n")
    with open(out_dir / "labels", "w", encoding="utf-8", newline="\n") as fp:
        fp.write("utt_id\tsystem\tconfidence\tlabel\n")
        for row in manifest.rows:
            fp.write(f"{row.utt_id}\t{row.system}\t{row.confidence:.4f}\t{row.label}\n")
    with open(out_dir / "counts.json", "w", encoding="utf-8", newline="\n") as fp:
        json.dump(manifest.counts, fp, indent=2, sort_keys=True)
        fp.write("\n")


@dataclass
class TrainingRow:
    utt: TaggedUtterance
    provenance: str  # "ManT" | "AutoT"


@dataclass
class TrainingSet:
    rows: list[TrainingRow]

    def counts(self) -> dict[str, int]:
        out = Counter(r.provenance for r in self.rows)
        return dict(out)

    def duration_s(self) -> dict[str, float]:
        out: dict[str, float] = defaultdict(float)
        for r in self.rows:
            out[r.provenance] += r.utt.duration_s
        return dict(out)


def merge_training_sets(
    manual: Sequence[TaggedUtterance],
    auto: Manifest,
    pool: Sequence[TaggedUtterance] | None = None,
    auto_prefix: str = "",
) -> TrainingSet:
    """Concatenate manual and automatically transcribed data with provenance.

    ``pool`` supplies timing metadata for automatic rows (matched by the
    unprefixed utterance id); ``auto_prefix`` is prepended to automatic ids.
    """
    timing = {u.id: u for u in pool} if pool else {}
    rows = [TrainingRow(u, "ManT") for u in manual]
    ids = {u.id for u in manual}
    for sel in auto.rows:
        new_id = auto_prefix + sel.utt_id
        if new_id in ids:
            raise DataError(f"utterance id collision in merged training set: {new_id!r}")
        ids.add(new_id)
        source = timing.get(sel.utt_id)
        utt = TaggedUtterance(
            id=new_id,
            speaker=source.speaker if source else "",
            start_s=source.start_s if source else 0.0,
            end_s=source.end_s if source else 0.0,
            tokens=list(sel.tokens),
        )
        rows.append(TrainingRow(utt, "AutoT"))
    return TrainingSet(rows)

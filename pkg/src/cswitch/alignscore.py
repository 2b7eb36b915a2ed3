"""Minimum-edit alignment, mixed and language-specific WER, and code-switched
bigram accuracy (CBA)."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .corpus import TaggedUtterance, Token
from .errors import DataError

log = logging.getLogger(__name__)

MATCH = "match"
SUB = "sub"
INS = "ins"
DEL = "del"

# An edit op is (kind, ref_index, hyp_index); indices are None when the op
# does not consume that side.
EditOp = tuple


@dataclass
class Alignment:
    ops: list[EditOp]

    @property
    def cost(self) -> int:
        return sum(1 for op in self.ops if op[0] != MATCH)

    def kinds(self) -> list[str]:
        return [op[0] for op in self.ops]


def align(ref, hyp) -> Alignment:
    """Minimal unit-cost edit alignment of hypothesis against reference.

    Tie-breaking is deterministic: on equal cost the backtrace from the end
    prefers Match over Sub over Ins over Del.
    """
    r = [getattr(t, "surface", t) for t in ref]
    h = [getattr(t, "surface", t) for t in hyp]
    n, m = len(r), len(h)

    rows = [list(range(m + 1))]
    for i in range(1, n + 1):
        prev = rows[i - 1]
        cur = [i] + [0] * m
        ri = r[i - 1]
        for j in range(1, m + 1):
            d = prev[j - 1] + (ri != h[j - 1])
            u = prev[j] + 1
            left = cur[j - 1] + 1
            if u < d:
                d = u
            if left < d:
                d = left
            cur[j] = d
        rows.append(cur)

    ops: list[EditOp] = []
    i, j = n, m
    while i or j:
        c = rows[i][j]
        if i and j and rows[i - 1][j - 1] == c and r[i - 1] == h[j - 1]:
            ops.append((MATCH, i - 1, j - 1))
            i -= 1
            j -= 1
        elif i and j and rows[i - 1][j - 1] + 1 == c and r[i - 1] != h[j - 1]:
            ops.append((SUB, i - 1, j - 1))
            i -= 1
            j -= 1
        elif j and rows[i][j - 1] + 1 == c:
            ops.append((INS, None, j - 1))
            j -= 1
        else:
            ops.append((DEL, i - 1, None))
            i -= 1
    ops.reverse()
    return Alignment(ops)


def cba(ref: TaggedUtterance | list[Token], alignment: Alignment, strict: bool = False) -> tuple[int, int]:
    """Count reference switch bigrams and how many were recognized.

    A switch bigram is an adjacent reference pair with known, differing tags;
    it counts as correct when both tokens are Match ops. In strict mode any
    insertion between the two invalidates the bigram.
    """
    tokens = ref.tokens if isinstance(ref, TaggedUtterance) else ref
    where: dict[int, tuple[int, str]] = {}
    for pos, op in enumerate(alignment.ops):
        if op[1] is not None:
            where[op[1]] = (pos, op[0])

    n_bigrams = n_correct = 0
    for i in range(1, len(tokens)):
        a, b = tokens[i - 1], tokens[i]
        if a.lang is None or b.lang is None or a.lang == b.lang:
            continue
        n_bigrams += 1
        pos_a, kind_a = where[i - 1]
        pos_b, kind_b = where[i]
        if kind_a == MATCH and kind_b == MATCH:
            # only insertions can sit between consecutive reference tokens
            if not strict or pos_b == pos_a + 1:
                n_correct += 1
    return n_bigrams, n_correct


@dataclass
class ErrorCounts:
    n_ref: int = 0
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float | None:
        return self.errors / self.n_ref if self.n_ref else None

    def add(self, other: "ErrorCounts") -> None:
        self.n_ref += other.n_ref
        self.substitutions += other.substitutions
        self.deletions += other.deletions
        self.insertions += other.insertions


@dataclass
class ScoreReport:
    """Pooled error counts: overall, per reference language, plus CBA.

    The ``None`` key of ``per_language`` collects errors attributed to tokens
    of unknown language.
    """

    overall: ErrorCounts = field(default_factory=ErrorCounts)
    per_language: dict[str | None, ErrorCounts] = field(default_factory=dict)
    cba_bigrams: int = 0
    cba_correct: int = 0
    n_utterances: int = 0

    def lang(self, code: str | None) -> ErrorCounts:
        if code not in self.per_language:
            self.per_language[code] = ErrorCounts()
        return self.per_language[code]

    @property
    def wer(self) -> float | None:
        return self.overall.wer

    @property
    def cba_accuracy(self) -> float | None:
        return self.cba_correct / self.cba_bigrams if self.cba_bigrams else None

    def add(self, other: "ScoreReport") -> None:
        self.overall.add(other.overall)
        for code, counts in other.per_language.items():
            self.lang(code).add(counts)
        self.cba_bigrams += other.cba_bigrams
        self.cba_correct += other.cba_correct
        self.n_utterances += other.n_utterances

    def to_dict(self) -> dict:
        def counts_dict(c: ErrorCounts) -> dict:
            return {
                "n_ref": c.n_ref,
                "sub": c.substitutions,
                "del": c.deletions,
                "ins": c.insertions,
                "wer": c.wer,
            }

        return {
            "overall": counts_dict(self.overall),
            "per_language": {
                (code if code is not None else "unknown"): counts_dict(c)
                for code, c in self.per_language.items()
            },
            "cba": {
                "switch_bigrams": self.cba_bigrams,
                "correct": self.cba_correct,
                "accuracy": self.cba_accuracy,
            },
            "n_utterances": self.n_utterances,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_tsv(self) -> str:
        lines = ["scope\tn_ref\tsub\tdel\tins\twer_pct"]

        def row(name: str, c: ErrorCounts) -> str:
            wer = f"{100.0 * c.wer:.2f}" if c.wer is not None else "—"
            return f"{name}\t{c.n_ref}\t{c.substitutions}\t{c.deletions}\t{c.insertions}\t{wer}"

        lines.append(row("overall", self.overall))
        for code in sorted(self.per_language, key=lambda c: (c is None, c or "")):
            lines.append(row(code if code is not None else "unknown", self.per_language[code]))
        acc = f"{100.0 * self.cba_accuracy:.2f}" if self.cba_accuracy is not None else "—"
        lines.append(f"cba\t{self.cba_bigrams}\t{self.cba_correct}\t-\t-\t{acc}")
        return "\n".join(lines) + "\n"


def score_utterance(ref: TaggedUtterance, hyp: TaggedUtterance, cba_strict: bool = False) -> ScoreReport:
    """Score one hypothesis against its tagged reference.

    Substitutions and deletions accrue to the reference token's language;
    insertions accrue to the hypothesis token's tag when known, otherwise to
    the language of the nearest preceding (else following) reference token.
    """
    alignment = align(ref.tokens, hyp.tokens)
    report = ScoreReport(n_utterances=1)
    report.overall.n_ref = len(ref.tokens)
    for tok in ref.tokens:
        report.lang(tok.lang.code if tok.lang else None).n_ref += 1

    ref_lang_at: list[str | None] = []  # language of the last ref token up to each op
    last: str | None = None
    have_ref = False
    pending_ins: list[int] = []
    for pos, op in enumerate(alignment.ops):
        kind, ref_i, hyp_i = op
        if ref_i is not None:
            tok = ref.tokens[ref_i]
            last = tok.lang.code if tok.lang else None
            have_ref = True
        ref_lang_at.append(last if have_ref else None)
        if kind == SUB:
            report.overall.substitutions += 1
            report.lang(ref_lang_at[pos] if ref_i is not None else None).substitutions += 1
        elif kind == DEL:
            report.overall.deletions += 1
            report.lang(ref_lang_at[pos]).deletions += 1
        elif kind == INS:
            report.overall.insertions += 1
            hyp_tok = hyp.tokens[hyp_i]
            if hyp_tok.lang is not None:
                report.lang(hyp_tok.lang.code).insertions += 1
            elif have_ref:
                report.lang(ref_lang_at[pos]).insertions += 1
            else:
                pending_ins.append(pos)

    # insertions before any reference token: attribute to the following one
    for pos in pending_ins:
        following = next((l for l in ref_lang_at[pos:] if l is not None), None)
        report.lang(following).insertions += 1

    report.cba_bigrams, report.cba_correct = cba(ref, alignment, strict=cba_strict)
    return report


def aggregate_scores(partials: list[ScoreReport]) -> ScoreReport:
    """Pool per-utterance counts into a set-level report (never averages WERs)."""
    total = ScoreReport()
    for partial in partials:
        total.add(partial)
    if total.overall.n_ref == 0:
        raise DataError("evaluation set has zero reference tokens")
    return total


def score_corpus(
    refs: list[TaggedUtterance],
    hyps: list[TaggedUtterance],
    cba_strict: bool = False,
    missing_ref_policy: str = "delete",
) -> ScoreReport:
    """Score a hypothesis set against a reference set, matched by utterance id.

    Hypotheses without a reference are skipped with a warning. References
    without a hypothesis are scored as all-deletions (``missing_ref_policy=
    "delete"``) or skipped (``"skip"``).
    """
    if missing_ref_policy not in ("delete", "skip"):
        raise DataError(f"unknown missing-ref policy: {missing_ref_policy!r}")
    ref_ids = {u.id for u in refs}
    by_hyp = {}
    for h in hyps:
        if h.id not in ref_ids:
            log.warning("hypothesis %s has no reference; skipped", h.id)
            continue
        by_hyp[h.id] = h

    partials = []
    for ref in refs:
        hyp = by_hyp.get(ref.id)
        if hyp is None:
            if missing_ref_policy == "skip":
                continue
            hyp = TaggedUtterance(id=ref.id)
        partials.append(score_utterance(ref, hyp, cba_strict=cba_strict))
    return aggregate_scores(partials)

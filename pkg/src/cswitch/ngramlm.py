"""Backoff n-gram language models: training, ARPA I/O, linear interpolation
with EM-optimised weights, and perplexity with its code-switch/monolingual
decomposition.

All probabilities are stored as log10 (ARPA convention); perplexity is
10 ** (-mean log10 prob). Models are immutable after construction and safe
for concurrent readers.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .corpus import BANTU_FAMILIES, Family, TaggedUtterance
from .errors import DataError, OOVWordError

log = logging.getLogger(__name__)

BOS = "<s>"
EOS = "</s>"

# log10 floor for zero-probability events (standard ARPA practice for <s>)
LOG10_FLOOR = -99.0

# when the backoff-weight denominator 1 - sum P_lower(seen) falls below this,
# the history's explicit probabilities are renormalised instead (degenerate
# histories in tiny corpora where the lower order has no mass left to give)
_BOW_DENOM_MIN = 1e-9


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------

class NGramCounts:
    """Raw n-gram counts, organised per history length.

    ``by_history[L][hist][word]`` is the count of the (L+1)-gram hist+word
    over the corpus padded with sentence markers. The begin marker is never
    counted as a predicted unigram event.
    """

    def __init__(self, order: int):
        if order < 1:
            raise DataError(f"n-gram order must be >= 1, got {order}")
        self.order = order
        self.by_history: list[dict[tuple, Counter]] = [
            defaultdict(Counter) for _ in range(order)
        ]
        self.predicted_tokens = 0

    def add_utterance(self, words: Sequence[str]) -> None:
        padded = [BOS] + list(words) + [EOS]
        self.predicted_tokens += len(padded) - 1
        order = self.order
        length = len(padded)
        for i in range(length):
            limit = min(order, length - i)
            for n in range(1, limit + 1):
                if n == 1 and i == 0:
                    continue
                self.by_history[n - 1][tuple(padded[i:i + n - 1])][padded[i + n - 1]] += 1

    def ngrams(self, n: int) -> Iterator[tuple[tuple, int]]:
        for hist, words in self.by_history[n - 1].items():
            for w, c in words.items():
                yield hist + (w,), c


def count_ngrams(utts: Iterable[TaggedUtterance | Sequence[str]], order: int) -> NGramCounts:
    """Count all n-grams of lengths 1..order, with begin/end padding."""
    counts = NGramCounts(order)
    for u in utts:
        words = [t.surface for t in u.tokens] if isinstance(u, TaggedUtterance) else list(u)
        counts.add_utterance(words)
    return counts


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

class Entry(NamedTuple):
    logp: float
    bow: float | None  # log10 backoff weight; None when the n-gram is never a context


@dataclass
class NGramModel:
    """Standard backoff model: P(w|h) is the stored probability when h+w is an
    entry, otherwise backoff(h) * P(w|h minus oldest word)."""

    order: int
    entries: dict[tuple, Entry]
    vocab: frozenset[str]  # includes sentence markers
    smoothing: str = ""
    train_tokens: int = 0

    @property
    def prediction_vocab(self) -> frozenset[str]:
        return self.vocab - {BOS}

    def logprob(self, history: Sequence[str], word: str) -> float:
        """log10 P(word | history); backoff chain with implicit unit weights."""
        entries = self.entries
        h = tuple(history[-(self.order - 1):]) if self.order > 1 else ()
        acc = 0.0
        while True:
            entry = entries.get(h + (word,))
            if entry is not None:
                return acc + entry.logp
            if not h:
                raise OOVWordError(word)
            ctx = entries.get(h)
            if ctx is not None and ctx.bow is not None:
                acc += ctx.bow
            h = h[1:]

    def validate(self) -> None:
        for gram, entry in self.entries.items():
            if entry.bow is not None and len(gram) >= self.order:
                raise DataError(f"backoff weight on a top-order n-gram: {' '.join(gram)}")
            if len(gram) > 1 and gram[:-1] not in self.entries:
                raise DataError(f"entry {' '.join(gram)} lacks its context entry")


@dataclass
class InterpolatedModel:
    """Linear mixture of backoff models, queried at the probability level."""

    components: list[NGramModel]
    weights: list[float]

    def __post_init__(self):
        if not self.components:
            raise DataError("interpolated model needs at least one component")
        if len(self.components) != len(self.weights):
            raise DataError("component count and weight count differ")
        if any(w < 0 for w in self.weights):
            raise DataError("mixture weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise DataError(f"mixture weights sum to {sum(self.weights)!r}, not 1")

    @property
    def order(self) -> int:
        return max(m.order for m in self.components)

    @property
    def vocab(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for m in self.components:
            out |= m.vocab
        return out

    def logprob(self, history: Sequence[str], word: str) -> float:
        total = 0.0
        known = False
        for model, weight in zip(self.components, self.weights):
            try:
                lp = model.logprob(history, word)
            except OOVWordError:
                continue
            known = True
            total += weight * 10.0 ** lp
        if not known or total <= 0.0:
            raise OOVWordError(word)
        return math.log10(total)


Model = NGramModel | InterpolatedModel


def prob(model: Model, history: Sequence[str], word: str) -> float:
    """log10 P(word | history) under a single or interpolated model."""
    return model.logprob(history, word)


# ---------------------------------------------------------------------------
# Smoothing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AddK:
    k: float = 1.0

    def __post_init__(self):
        if self.k < 0:
            raise DataError(f"add-k constant must be >= 0, got {self.k}")


@dataclass(frozen=True)
class WittenBell:
    pass


@dataclass(frozen=True)
class ModifiedKneserNey:
    pass


Smoothing = AddK | WittenBell | ModifiedKneserNey


def parse_smoothing(text: str) -> Smoothing:
    name = text.strip().lower()
    if name in ("mkn", "kn", "kneser-ney", "modified-kneser-ney"):
        return ModifiedKneserNey()
    if name in ("wb", "witten-bell"):
        return WittenBell()
    if name == "addk":
        return AddK()
    if name.startswith("addk:"):
        return AddK(float(name.split(":", 1)[1]))
    raise DataError(f"unknown smoothing {text!r}")


class _MKNDiscounts(NamedTuple):
    d1: float
    d2: float
    d3: float

    def for_count(self, c: int) -> float:
        if c == 1:
            return self.d1
        if c == 2:
            return self.d2
        return self.d3


def _mkn_discounts(count_values: Iterable[int]) -> _MKNDiscounts | None:
    """Chen-Goodman discounts from counts-of-counts; None when degenerate."""
    cc = Counter()
    for c in count_values:
        if c <= 4:
            cc[c] += 1
    n1, n2, n3, n4 = cc[1], cc[2], cc[3], cc[4]
    if not (n1 and n2 and n3 and n4):
        return None
    y = n1 / (n1 + 2.0 * n2)
    d1 = 1.0 - 2.0 * y * n2 / n1
    d2 = 2.0 - 3.0 * y * n3 / n2
    d3 = 3.0 - 4.0 * y * n4 / n3
    if d1 < 0 or d2 < 0 or d3 < 0:
        return None
    return _MKNDiscounts(d1, d2, d3)


def _discounted(
    counts: Counter,
    smoothing: Smoothing,
    vocab_size: int,
    mkn: _MKNDiscounts | None,
) -> tuple[dict[str, float], float]:
    """Discounted probabilities f(w|h) for seen words plus the leftover mass.

    AddK:        f = (c + k) / (ctot + k * V)
    Witten-Bell: f = c / (ctot + T),          T = distinct follower types
    Kneser-Ney:  f = (c - D(c)) / ctot        with the three-way discount
    """
    total = sum(counts.values())
    if isinstance(smoothing, AddK):
        denom = total + smoothing.k * vocab_size
        f = {w: (c + smoothing.k) / denom for w, c in counts.items()}
        leftover = smoothing.k * (vocab_size - len(counts)) / denom
        return f, leftover
    if isinstance(smoothing, ModifiedKneserNey) and mkn is not None:
        f = {}
        discounted_mass = 0.0
        for w, c in counts.items():
            d = mkn.for_count(c)
            f[w] = max(c - d, 0.0) / total
            discounted_mass += min(d, c)
        return f, discounted_mass / total
    # Witten-Bell, also the fallback for degenerate Kneser-Ney levels
    t = len(counts)
    denom = total + t
    return {w: c / denom for w, c in counts.items()}, t / denom


def train_lm(
    counts: NGramCounts,
    smoothing: Smoothing = ModifiedKneserNey(),
    vocab: Iterable[str] | None = None,
) -> NGramModel:
    """Estimate a backoff model from counts.

    When ``vocab`` is given the model vocabulary is closed to it (plus the end
    marker) and any training token outside it is a hard error. Unigram
    leftover mass is spread uniformly over vocabulary words unseen in
    training; with none, the unigram distribution is renormalised.
    """
    order = counts.order
    unigram_raw = counts.by_history[0].get((), Counter())
    if not unigram_raw:
        raise DataError("cannot train a model from empty counts")
    train_words = set(unigram_raw)
    if vocab is not None:
        closed = set(vocab) | {EOS}
        offenders = sorted(train_words - closed)
        if offenders:
            raise DataError(
                "vocabulary closure violated by training tokens: " + " ".join(offenders)
            )
        words = closed
    else:
        words = train_words | {EOS}
    pred_vocab = sorted(words)  # prediction events; excludes the begin marker
    v_size = len(pred_vocab)

    use_kn = isinstance(smoothing, ModifiedKneserNey)

    # continuation counts: cont[L][hist][w] = #distinct predecessors v with
    # count(v + hist + w) > 0; used by Kneser-Ney below the top order
    cont: list[dict[tuple, Counter]] = [defaultdict(Counter) for _ in range(order)]
    if use_kn and order > 1:
        for level in range(order - 1):
            table = cont[level]
            for hist, word_counts in counts.by_history[level + 1].items():
                sub = table[hist[1:]]
                for w in word_counts:
                    sub[w] += 1

    def effective(level: int, hist: tuple, raw: Counter) -> Counter:
        if use_kn and level + 1 < order:
            c = cont[level].get(hist)
            if c:
                return c
        return raw

    # per-level discounts from the counts-of-counts of the effective counts
    mkn_by_level: list[_MKNDiscounts | None] = [None] * order
    if use_kn:
        for level in range(order):
            values = [
                c
                for hist, raw in counts.by_history[level].items()
                for c in effective(level, hist, raw).values()
            ]
            mkn_by_level[level] = _mkn_discounts(values)
            if mkn_by_level[level] is None:
                log.warning(
                    "Kneser-Ney counts-of-counts degenerate at order %d; "
                    "falling back to Witten-Bell for that order",
                    level + 1,
                )

    entries: dict[tuple, list] = {}  # gram -> [logp, bow or None]
    # linear P(w|hist) per level for backoff-weight denominators
    plevel: list[dict[tuple, dict[str, float]]] = [dict() for _ in range(order)]

    def _store(gram: tuple, p: float) -> None:
        logp = math.log10(p) if p > 0 else LOG10_FLOOR
        entries[gram] = [max(logp, LOG10_FLOOR), None]

    # unigram distribution, complete over the prediction vocabulary
    eff0 = effective(0, (), unigram_raw)
    f0, leftover0 = _discounted(eff0, smoothing, v_size, mkn_by_level[0])
    unseen = [w for w in pred_vocab if w not in f0]
    probs0: dict[str, float] = {}
    if unseen:
        share = leftover0 / len(unseen)
        probs0.update(f0)
        for w in unseen:
            probs0[w] = share
    else:
        scale = 1.0 / sum(f0.values()) if leftover0 > 0 else 1.0
        probs0 = {w: p * scale for w, p in f0.items()}
    for w in pred_vocab:
        _store((w,), probs0[w])
    if order > 1:
        entries[(BOS,)] = [LOG10_FLOOR, None]
    plevel[0][()] = probs0

    for level in range(1, order):
        lower = plevel[level - 1]
        store_level = plevel[level]
        for hist, raw in counts.by_history[level].items():
            eff = effective(level, hist, raw)
            f, leftover = _discounted(eff, smoothing, v_size, mkn_by_level[level])
            lower_probs = lower[hist[1:]]
            sum_lower_seen = sum(lower_probs[w] for w in f)
            denom = 1.0 - sum_lower_seen
            if denom < _BOW_DENOM_MIN:
                total_f = sum(f.values())
                f = {w: p / total_f for w, p in f.items()}
                bow = 0.0
            else:
                bow_lin = max(leftover, 0.0) / denom
                bow = math.log10(bow_lin) if bow_lin > 0 else LOG10_FLOOR
            for w, p in f.items():
                _store(hist + (w,), p)
            entries[hist][1] = max(bow, LOG10_FLOOR)
            if level < order - 1:
                store_level[hist] = f

    model = NGramModel(
        order=order,
        entries={gram: Entry(lp, bow) for gram, (lp, bow) in entries.items()},
        vocab=frozenset(words | {BOS}),
        smoothing=_smoothing_name(smoothing),
        train_tokens=counts.predicted_tokens,
    )
    model.validate()
    return model


def _smoothing_name(smoothing: Smoothing) -> str:
    if isinstance(smoothing, AddK):
        return f"addk:{smoothing.k:g}"
    if isinstance(smoothing, WittenBell):
        return "witten-bell"
    return "modified-kneser-ney"


# ---------------------------------------------------------------------------
# ARPA I/O
# ---------------------------------------------------------------------------

def write_arpa(model: NGramModel, path) -> None:
    """Write the standard textual ARPA backoff format (tab separators, LF,
    log10 values with 7-digit precision)."""
    by_order: list[list[tuple]] = [[] for _ in range(model.order)]
    for gram in model.entries:
        by_order[len(gram) - 1].append(gram)
    for grams in by_order:
        grams.sort()

    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        fp.write("\\data\\\n")
        for n, grams in enumerate(by_order, 1):
            fp.write(f"ngram {n}={len(grams)}\n")
        fp.write("\n")
        for n, grams in enumerate(by_order, 1):
            fp.write(f"\\{n}-grams:\n")
            for gram in grams:
                entry = model.entries[gram]
                line = f"{entry.logp:.7f}\t{' '.join(gram)}"
                if entry.bow is not None:
                    line += f"\t{entry.bow:.7f}"
                fp.write(line + "\n")
            fp.write("\n")
        fp.write("\\end\\\n")


def read_arpa(path) -> NGramModel:
    """Read an ARPA file back into a model.

    The count header must agree with each section's length; a missing backoff
    weight on a non-final order is treated as 0.0 per the ARPA convention.
    """
    declared: dict[int, int] = {}
    sections: dict[int, dict[tuple, tuple[float, float | None]]] = {}
    current: int | None = None
    in_data = False

    with open(path, encoding="utf-8") as fp:
        for lineno, raw in enumerate(fp, 1):
            line = raw.strip()
            if not line:
                continue
            if line == "\\data\\":
                in_data = True
                continue
            if line == "\\end\\":
                break
            if line.startswith("\\") and line.endswith("-grams:"):
                current = int(line[1:-7])
                sections[current] = {}
                continue
            if in_data and line.startswith("ngram "):
                try:
                    n_text, count_text = line[6:].split("=")
                    declared[int(n_text)] = int(count_text)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: malformed count header") from None
                continue
            if current is None:
                continue
            fields = line.split("\t")
            if len(fields) == 1:
                fields = line.split()
                if len(fields) < current + 1:
                    raise DataError(f"{path}:{lineno}: malformed n-gram line")
                fields = [fields[0], " ".join(fields[1:current + 1])] + fields[current + 1:]
            try:
                logp = float(fields[0])
                gram = tuple(fields[1].split())
                bow = float(fields[2]) if len(fields) > 2 else None
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: malformed n-gram line") from None
            if len(gram) != current:
                raise DataError(f"{path}:{lineno}: {len(gram)}-gram in the {current}-gram section")
            sections[current][gram] = (logp, bow)

    if not sections:
        raise DataError(f"{path}: no n-gram sections found")
    order = max(sections)
    for n, grams in sections.items():
        if n in declared and declared[n] != len(grams):
            raise DataError(
                f"{path}: header declares {declared[n]} {n}-grams, section has {len(grams)}"
            )

    entries: dict[tuple, Entry] = {}
    for n in sorted(sections):
        for gram, (logp, bow) in sections[n].items():
            if n < order:
                bow = 0.0 if bow is None else bow
            elif bow is not None:
                raise DataError(f"{path}: backoff weight on top-order n-gram {' '.join(gram)}")
            entries[gram] = Entry(logp, bow if n < order else None)

    vocab = frozenset(w for (w,) in sections.get(1, {}))
    model = NGramModel(order=order, entries=entries, vocab=vocab, smoothing="arpa")
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Interpolation weights via EM
# ---------------------------------------------------------------------------

def _scored_events(utts: Iterable[TaggedUtterance]) -> Iterator[tuple[str, list[str], str]]:
    """(utt_id, history, word) for every predicted position incl. end markers."""
    for u in utts:
        history = [BOS]
        for tok in u.tokens:
            yield u.id, list(history), tok.surface
            history.append(tok.surface)
        yield u.id, history, EOS


def em_iterations(
    components: Sequence[NGramModel],
    dev: Sequence[TaggedUtterance],
    init: Sequence[float],
) -> Iterator[tuple[np.ndarray, float]]:
    """Yield (weights, dev log-likelihood) per EM iteration, indefinitely.

    E-step responsibilities r_k(i) = w_k p_k(i) / sum_j w_j p_j(i);
    M-step sets each weight to the mean responsibility.
    """
    if not dev:
        raise DataError("EM weight optimisation needs a non-empty dev set")
    events = list(_scored_events(dev))
    probs = np.zeros((len(components), len(events)))
    for k, model in enumerate(components):
        row = probs[k]
        for i, (_, history, word) in enumerate(events):
            try:
                row[i] = 10.0 ** model.logprob(history, word)
            except OOVWordError:
                row[i] = 0.0
    dead = np.flatnonzero(probs.max(axis=0) <= 0.0)
    if dead.size:
        utt_id, _, word = events[int(dead[0])]
        raise DataError(
            f"every component assigns zero probability to dev event "
            f"{word!r} in utterance {utt_id}"
        )

    weights = np.asarray(init, dtype=float)
    while True:
        mixture = weights @ probs
        if not np.all(mixture > 0.0):
            i = int(np.flatnonzero(mixture <= 0.0)[0])
            utt_id, _, word = events[i]
            raise DataError(
                f"dev event {word!r} in utterance {utt_id} has zero probability "
                f"under the current mixture weights"
            )
        ll = float(np.log(mixture).sum())
        yield weights.copy(), ll
        resp = weights[:, None] * probs / mixture
        weights = resp.mean(axis=1)
        weights = weights / weights.sum()


def interpolate_em(
    components: Sequence[NGramModel],
    dev: Sequence[TaggedUtterance],
    init: Sequence[float] | None = None,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> InterpolatedModel:
    """Optimise mixture weights on dev transcriptions by EM.

    Stops when the dev log-likelihood improves by less than ``tol`` or after
    ``max_iter`` iterations; the log-likelihood never decreases.
    """
    if not components:
        raise DataError("interpolation needs at least one component")
    if init is None:
        init = [1.0 / len(components)] * len(components)
    if len(init) != len(components):
        raise DataError("initial weight count and component count differ")
    if any(w < 0 for w in init) or abs(sum(init) - 1.0) > 1e-9:
        raise DataError("initial weights must lie on the simplex")
    if len(components) == 1:
        return InterpolatedModel(list(components), [1.0])

    best = np.asarray(init, dtype=float)
    prev_ll = -math.inf
    for iteration, (weights, ll) in enumerate(em_iterations(components, dev, init)):
        best = weights
        if iteration >= max_iter or ll - prev_ll < tol:
            break
        prev_ll = ll
    return InterpolatedModel(list(components), [float(w) for w in best])


# ---------------------------------------------------------------------------
# Perplexity with code-switch decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalConfig:
    """Evaluation options; OOV words map to ``unk_symbol`` when the model has
    it, otherwise the position is excluded from all pools and counted."""

    unk_symbol: str = "<unk>"


@dataclass
class EvalPool:
    token_count: int = 0
    sum_log10_prob: float = 0.0

    def add(self, logp: float) -> None:
        self.token_count += 1
        self.sum_log10_prob += logp

    @property
    def ppl(self) -> float | None:
        if self.token_count == 0:
            return None
        return 10.0 ** (-self.sum_log10_prob / self.token_count)

    def to_dict(self) -> dict:
        return {
            "tokens": self.token_count,
            "sum_log10_prob": self.sum_log10_prob,
            "ppl": self.ppl,
        }


@dataclass
class PerplexityReport:
    """Overall perplexity plus its decomposition.

    Every scored position belongs to exactly one of the code-switch (CS) and
    monolingual pools: a position is CS when its word and the preceding word
    carry known, differing language tags. CS splits further by switch
    direction (English-to-Bantu, Bantu-to-English, everything else); the
    monolingual pool splits by the language of the predicted word, with
    first-word and end-marker positions attributed to the adjacent word.
    """

    all: EvalPool = field(default_factory=EvalPool)
    cs_all: EvalPool = field(default_factory=EvalPool)
    cs_eb: EvalPool = field(default_factory=EvalPool)
    cs_be: EvalPool = field(default_factory=EvalPool)
    cs_other: EvalPool = field(default_factory=EvalPool)
    mono_all: EvalPool = field(default_factory=EvalPool)
    mono_by_language: dict[str, EvalPool] = field(default_factory=dict)
    oov_count: int = 0

    def mono_lang(self, code: str) -> EvalPool:
        if code not in self.mono_by_language:
            self.mono_by_language[code] = EvalPool()
        return self.mono_by_language[code]

    def to_dict(self) -> dict:
        return {
            "all": self.all.to_dict(),
            "cs": {
                "all": self.cs_all.to_dict(),
                "eng_to_bantu": self.cs_eb.to_dict(),
                "bantu_to_eng": self.cs_be.to_dict(),
                "other": self.cs_other.to_dict(),
            },
            "mono": {
                "all": self.mono_all.to_dict(),
                "by_language": {c: p.to_dict() for c, p in self.mono_by_language.items()},
            },
            "oov_count": self.oov_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt_ppl(pool: EvalPool) -> str:
    return f"{pool.ppl:.4f}" if pool.token_count else "—"


def reports_to_tsv(reports: dict[str, PerplexityReport]) -> str:
    """One row per evaluation set: overall PPL, CPP pools, MPP pools, OOVs."""
    langs = sorted({c for r in reports.values() for c in r.mono_by_language})
    header = ["set", "ppl", "cpp_all", "cpp_eb", "cpp_be", "cpp_other", "mpp_all"]
    header += [f"mpp_{c}" for c in langs]
    header += ["tokens", "oov"]
    lines = ["\t".join(header)]
    for name, r in reports.items():
        row = [
            name,
            _fmt_ppl(r.all),
            _fmt_ppl(r.cs_all),
            _fmt_ppl(r.cs_eb),
            _fmt_ppl(r.cs_be),
            _fmt_ppl(r.cs_other),
            _fmt_ppl(r.mono_all),
        ]
        for c in langs:
            pool = r.mono_by_language.get(c)
            row.append(_fmt_ppl(pool) if pool is not None else "—")
        row += [str(r.all.token_count), str(r.oov_count)]
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


UNKNOWN_LANG = "unk"


def perplexity(
    model: Model,
    utts: Iterable[TaggedUtterance],
    cfg: EvalConfig = EvalConfig(),
) -> PerplexityReport:
    """Score every predicted position (words and end markers) and pool the
    log-probability mass into the code-switch/monolingual decomposition."""
    vocab = model.vocab
    unk = cfg.unk_symbol if cfg.unk_symbol in vocab else None
    report = PerplexityReport()

    for u in utts:
        history: list[str] = [BOS]
        tokens = u.tokens
        for i, tok in enumerate(tokens):
            word = tok.surface
            if word not in vocab:
                if unk is None:
                    report.oov_count += 1
                    history.append(word)
                    continue
                word = unk
            logp = model.logprob(history, word)
            history.append(word)
            report.all.add(logp)

            prev_lang = tokens[i - 1].lang if i else None
            cur_lang = tok.lang
            if i and prev_lang is not None and cur_lang is not None and prev_lang != cur_lang:
                report.cs_all.add(logp)
                from_fam, to_fam = prev_lang.family, cur_lang.family
                if from_fam is Family.ENGLISH and to_fam in BANTU_FAMILIES:
                    report.cs_eb.add(logp)
                elif from_fam in BANTU_FAMILIES and to_fam is Family.ENGLISH:
                    report.cs_be.add(logp)
                else:
                    report.cs_other.add(logp)
            else:
                report.mono_all.add(logp)
                report.mono_lang(cur_lang.code if cur_lang else UNKNOWN_LANG).add(logp)

        # end marker: always a monolingual position, attributed to the
        # language of the final word
        if EOS in vocab:
            logp = model.logprob(history, EOS)
            report.all.add(logp)
            report.mono_all.add(logp)
            last_lang = tokens[-1].lang if tokens else None
            report.mono_lang(last_lang.code if last_lang else UNKNOWN_LANG).add(logp)
        else:
            report.oov_count += 1

    return report

"""Synthetic recognizer and closed-loop simulator.

Lets the full pipeline (transcribe, select, retrain, evaluate) run at desk
scale without audio or neural models. All randomness flows through explicitly
seeded PCG64 generators with per-utterance derived seeds, so serial and
parallel runs produce bit-identical results.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .alignscore import ScoreReport, score_corpus
from .corpus import Lexicon, TaggedUtterance, Token, language
from .errors import CswitchError, DataError
from .semisup import CandidateTranscription, Manifest, merge_training_sets, select_best

log = logging.getLogger(__name__)


def derive_seed(master_seed: int, name: str) -> int:
    """Stable 64-bit seed for a named substream (hash of master seed and name)."""
    digest = hashlib.blake2b(f"{master_seed}:{name}".encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# ---------------------------------------------------------------------------
# Corruption model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseRates:
    p_sub: float = 0.0
    p_del: float = 0.0
    p_ins: float = 0.0

    def __post_init__(self):
        for name in ("p_sub", "p_del", "p_ins"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise DataError(f"noise rate {name}={p} outside [0, 1]")
        if self.p_sub + self.p_del > 1.0:
            raise DataError(f"p_sub + p_del = {self.p_sub + self.p_del} exceeds 1")


@dataclass(frozen=True)
class NoiseProfile:
    """Per-language corruption rates; substitutions replace uniformly within
    the word's own lexicon."""

    rates: dict[str, NoiseRates] = field(default_factory=dict)
    default: NoiseRates = NoiseRates()

    def for_code(self, code: str) -> NoiseRates:
        return self.rates.get(code, self.default)

    @staticmethod
    def from_dict(data: dict) -> "NoiseProfile":
        rates = {}
        default = NoiseRates()
        for code, entry in data.items():
            nr = NoiseRates(**entry)
            if code == "default":
                default = nr
            else:
                rates[code] = nr
        return NoiseProfile(rates, default)


def _word_index(lexicons: list[Lexicon]) -> dict[str, tuple[list[str], dict[str, int]]]:
    out = {}
    for lex in lexicons:
        words = sorted(lex.words)
        out[lex.language.code] = (words, {w: i for i, w in enumerate(words)})
    return out


def _draw_other(rng: np.random.Generator, words: list[str], positions: dict[str, int], word: str) -> str:
    """Uniform draw from the lexicon excluding ``word`` (kept if alone)."""
    own = positions.get(word)
    if own is None:
        return words[int(rng.integers(0, len(words)))]
    if len(words) == 1:
        return word
    idx = int(rng.integers(0, len(words) - 1))
    if idx >= own:
        idx += 1
    return words[idx]


def corrupt(
    u: TaggedUtterance,
    profile: NoiseProfile,
    lexicons: list[Lexicon],
    rng_seed: int,
    system_id: str = "corrupt",
) -> CandidateTranscription:
    """Corrupt a tagged utterance with per-language sub/del/ins noise.

    Confidence is the geometric mean over input tokens of the keep probability
    actually applied: 1 for kept tokens, the (1 - p_sub - p_del) prior for
    substituted or deleted ones.
    """
    rng = _rng(rng_seed)
    index = _word_index(lexicons)
    out: list[Token] = []
    log_factors = 0.0
    zero_factor = False

    for tok in u.tokens:
        if tok.lang is None:
            raise DataError(f"utterance {u.id}: cannot corrupt untagged token {tok.surface!r}")
        code = tok.lang.code
        if code not in index:
            raise DataError(f"utterance {u.id}: no lexicon for language {code!r}")
        rates = profile.for_code(code)
        words, positions = index[code]

        r = rng.random()
        if r < rates.p_sub:
            out.append(Token(_draw_other(rng, words, positions, tok.surface), tok.lang))
            kept = False
        elif r < rates.p_sub + rates.p_del:
            kept = False
        else:
            out.append(tok)
            kept = True
        if not kept:
            # kept tokens contribute factor 1, i.e. nothing, to the log sum
            prior = 1.0 - rates.p_sub - rates.p_del
            if prior <= 0.0:
                zero_factor = True
            else:
                log_factors += math.log(prior)
        if rng.random() < rates.p_ins:
            out.append(Token(words[int(rng.integers(0, len(words)))], tok.lang))

    if zero_factor:
        confidence = 0.0
    elif u.tokens:
        confidence = math.exp(log_factors / len(u.tokens))
    else:
        confidence = 1.0
    confidence = min(max(confidence, 0.0), 1.0)
    return CandidateTranscription(u.id, system_id, out, confidence)


# ---------------------------------------------------------------------------
# Proxy recognizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProxyRecognizer:
    """Word recognizer whose accuracy saturates with training exposure.

    Per-word accuracy is base_acc + (1 - base_acc) * (1 - exp(-n_w / tau)),
    monotone non-decreasing in the exposure count n_w.
    """

    base_acc: float
    tau: float
    lexicons: dict[str, tuple[str, ...]]
    exposure: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.base_acc < 1.0:
            raise DataError(f"base_acc must lie in (0, 1), got {self.base_acc}")
        if self.tau <= 0.0:
            raise DataError(f"tau must be positive, got {self.tau}")

    @staticmethod
    def create(base_acc: float, tau: float, lexicons: list[Lexicon]) -> "ProxyRecognizer":
        prepared = {lex.language.code: tuple(sorted(lex.words)) for lex in lexicons}
        return ProxyRecognizer(base_acc, tau, prepared)

    def accuracy(self, word: str) -> float:
        n = self.exposure.get(word, 0)
        return self.base_acc + (1.0 - self.base_acc) * (1.0 - math.exp(-n / self.tau))

    def with_exposure(self, token_seqs) -> "ProxyRecognizer":
        """Functional update: add one exposure per token occurrence."""
        counts = dict(self.exposure)
        for seq in token_seqs:
            for tok in seq:
                surface = getattr(tok, "surface", tok)
                counts[surface] = counts.get(surface, 0) + 1
        return replace(self, exposure=counts)


def recognize(
    proxy: ProxyRecognizer,
    u: TaggedUtterance,
    rng_seed: int,
    system_id: str = "proxy",
) -> CandidateTranscription:
    """Emit each token correctly with its exposure-dependent accuracy, else
    substitute uniformly within the token's language lexicon. Confidence is
    the mean per-token accuracy."""
    rng = _rng(rng_seed)
    out: list[Token] = []
    acc_sum = 0.0
    for tok in u.tokens:
        if tok.lang is None or tok.lang.code not in proxy.lexicons:
            code = tok.lang.code if tok.lang else None
            raise DataError(f"utterance {u.id}: no lexicon for language {code!r}")
        words = proxy.lexicons[tok.lang.code]
        a = proxy.accuracy(tok.surface)
        acc_sum += a
        if rng.random() < a:
            out.append(tok)
        else:
            # uniform over the language's other words; kept as-is when the
            # lexicon has no alternative
            if len(words) == 1:
                out.append(tok)
            else:
                idx = int(rng.integers(0, len(words) - 1))
                try:
                    own = words.index(tok.surface)
                except ValueError:
                    own = None
                if own is not None and idx >= own:
                    idx += 1
                out.append(Token(words[idx], tok.lang))
    confidence = acc_sum / len(u.tokens) if u.tokens else 0.0
    return CandidateTranscription(u.id, system_id, out, min(max(confidence, 0.0), 1.0))


def retrain(proxy: ProxyRecognizer, manifest: Manifest) -> ProxyRecognizer:
    """Return a new proxy with exposure counts incremented by the manifest's
    token occurrences; the original proxy is unmodified."""
    return proxy.with_exposure(row.tokens for row in manifest.rows)


# ---------------------------------------------------------------------------
# Closed loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LoopConfig:
    """Configuration of the simulated semi-supervised loop (JSON or TOML)."""

    seed: int = 42
    languages: dict[str, int] = field(default_factory=lambda: {"eng": 120, "zul": 120})
    n_seed: int = 500
    n_pool: int = 2000
    n_heldout: int = 500
    min_len: int = 4
    max_len: int = 12
    switch_prob: float = 0.3
    seconds_per_token: float = 0.4
    base_acc: float = 0.6
    tau: float = 500.0
    min_conf: float = 0.0
    noise: NoiseProfile | None = None
    jobs: int = 1

    @staticmethod
    def from_dict(data: dict) -> "LoopConfig":
        data = dict(data)
        if "noise" in data and data["noise"] is not None:
            data["noise"] = NoiseProfile.from_dict(data["noise"])
        unknown = set(data) - {f.name for f in LoopConfig.__dataclass_fields__.values()}
        if unknown:
            raise DataError(f"unknown loop config keys: {sorted(unknown)}")
        return LoopConfig(**data)

    @staticmethod
    def from_file(path: str | Path) -> "LoopConfig":
        path = Path(path)
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            with open(path, "rb") as fp:
                data = tomllib.load(fp)
        else:
            with open(path, encoding="utf-8") as fp:
                data = json.load(fp)
        return LoopConfig.from_dict(data)

    def to_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "languages": dict(self.languages),
            "n_seed": self.n_seed,
            "n_pool": self.n_pool,
            "n_heldout": self.n_heldout,
            "min_len": self.min_len,
            "max_len": self.max_len,
            "switch_prob": self.switch_prob,
            "seconds_per_token": self.seconds_per_token,
            "base_acc": self.base_acc,
            "tau": self.tau,
            "min_conf": self.min_conf,
            "noise": None,
            "jobs": self.jobs,
        }
        if self.noise is not None:
            noise = {
                code: {"p_sub": r.p_sub, "p_del": r.p_del, "p_ins": r.p_ins}
                for code, r in self.noise.rates.items()
            }
            d = self.noise.default
            noise["default"] = {"p_sub": d.p_sub, "p_del": d.p_del, "p_ins": d.p_ins}
            out["noise"] = noise
        return out


def generate_lexicons(languages: dict[str, int]) -> list[Lexicon]:
    """Deterministic synthetic lexicons: per-language numbered word stems."""
    out = []
    for code in sorted(languages):
        size = languages[code]
        if size < 1:
            raise DataError(f"lexicon size for {code!r} must be >= 1")
        out.append(Lexicon(language(code), {f"{code}{i:03d}" for i in range(size)}))
    return out


def generate_utterances(
    prefix: str,
    n: int,
    lexicons: list[Lexicon],
    config: LoopConfig,
    seed: int,
) -> list[TaggedUtterance]:
    """Generate tagged utterances with language runs and occasional switches."""
    rng = _rng(seed)
    words = {lex.language.code: sorted(lex.words) for lex in lexicons}
    codes = sorted(words)
    out = []
    for i in range(n):
        length = int(rng.integers(config.min_len, config.max_len + 1))
        lang_idx = int(rng.integers(0, len(codes)))
        tokens = []
        for _ in range(length):
            if len(codes) > 1 and rng.random() < config.switch_prob:
                step = int(rng.integers(1, len(codes)))
                lang_idx = (lang_idx + step) % len(codes)
            code = codes[lang_idx]
            pool = words[code]
            tokens.append(Token(pool[int(rng.integers(0, len(pool)))], language(code)))
        out.append(
            TaggedUtterance(
                id=f"{prefix}{i:05d}",
                speaker=f"spk{i % 10}",
                start_s=0.0,
                end_s=length * config.seconds_per_token,
                tokens=tokens,
            )
        )
    return out


def _recognize_batch(args) -> list[CandidateTranscription]:
    proxy, utts, master_seed, namespace = args
    return [recognize(proxy, u, derive_seed(master_seed, f"{namespace}:{u.id}")) for u in utts]


def recognize_pool(
    proxy: ProxyRecognizer,
    utts: list[TaggedUtterance],
    master_seed: int,
    namespace: str,
    jobs: int = 1,
) -> list[CandidateTranscription]:
    """Recognize a pool of utterances, optionally sharded across processes.

    Seeds derive from (master seed, utterance id), so parallel and serial
    runs agree bit-for-bit.
    """
    if jobs <= 1 or len(utts) < 2 * jobs:
        return _recognize_batch((proxy, utts, master_seed, namespace))
    chunk = (len(utts) + jobs - 1) // jobs
    batches = [
        (proxy, utts[i:i + chunk], master_seed, namespace)
        for i in range(0, len(utts), chunk)
    ]
    out: list[CandidateTranscription] = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for batch in pool.map(_recognize_batch, batches):
            out.extend(batch)
    return out


@dataclass
class LoopReport:
    """Before/after scoring of the simulated loop on the same held-out set."""

    baseline: ScoreReport
    retrained: ScoreReport
    manifest_counts: dict
    seed: int
    config: dict

    @property
    def wer_reduction_pp(self) -> float:
        return 100.0 * (self.baseline.wer - self.retrained.wer)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config": self.config,
            "baseline": self.baseline.to_dict(),
            "retrained": self.retrained.to_dict(),
            "manifest_counts": self.manifest_counts,
            "wer_reduction_pp": self.wer_reduction_pp,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_tsv(self) -> str:
        lines = ["scope\tbaseline_wer_pct\tretrained_wer_pct\treduction_pp"]
        base, post = self.baseline, self.retrained

        def row(name, b, p):
            if b is None or p is None:
                return f"{name}\t—\t—\t—"
            return f"{name}\t{100 * b:.2f}\t{100 * p:.2f}\t{100 * (b - p):.2f}"

        lines.append(row("overall", base.wer, post.wer))
        for code in sorted(c for c in base.per_language if c is not None):
            b = base.per_language[code].wer
            p = post.per_language.get(code)
            lines.append(row(code, b, p.wer if p else None))
        lines.append(row("cba", base.cba_accuracy, post.cba_accuracy))
        return "\n".join(lines) + "\n"


def run_loop(config: LoopConfig) -> LoopReport:
    """Run one semi-supervised round: train the proxy on the seed set,
    transcribe the pool, select by confidence, retrain, and score baseline
    and retrained proxies on the same held-out set."""

    def stage(name: str, fn):
        try:
            return fn()
        except CswitchError as exc:
            raise DataError(f"simulation stage {name!r} failed: {exc}") from exc

    seed = config.seed
    lexicons = stage("generate", lambda: generate_lexicons(config.languages))
    seed_set = stage(
        "generate", lambda: generate_utterances("seed", config.n_seed, lexicons, config, derive_seed(seed, "seed-set"))
    )
    pool_set = stage(
        "generate", lambda: generate_utterances("pool", config.n_pool, lexicons, config, derive_seed(seed, "pool-set"))
    )
    heldout = stage(
        "generate", lambda: generate_utterances("held", config.n_heldout, lexicons, config, derive_seed(seed, "heldout-set"))
    )

    base_proxy = stage(
        "train",
        lambda: ProxyRecognizer.create(config.base_acc, config.tau, lexicons).with_exposure(
            u.tokens for u in seed_set
        ),
    )

    def _transcribe():
        candidates = recognize_pool(base_proxy, pool_set, seed, "pool", config.jobs)
        if config.noise is not None:
            candidates += [
                corrupt(u, config.noise, lexicons, derive_seed(seed, f"noise:{u.id}"))
                for u in pool_set
            ]
        return candidates

    candidates = stage("transcribe", _transcribe)
    manifest = stage(
        "select",
        lambda: select_best(candidates, config.min_conf, utt_ids=[u.id for u in pool_set]),
    )
    stage("merge", lambda: merge_training_sets(seed_set, manifest, pool=pool_set, auto_prefix="auto-"))
    retrained_proxy = stage("retrain", lambda: retrain(base_proxy, manifest))

    def _score(proxy: ProxyRecognizer) -> ScoreReport:
        hyps = [
            TaggedUtterance(id=c.utt_id, tokens=c.tokens)
            for c in recognize_pool(proxy, heldout, seed, "eval", config.jobs)
        ]
        return score_corpus(heldout, hyps)

    baseline_report = stage("score", lambda: _score(base_proxy))
    retrained_report = stage("score", lambda: _score(retrained_proxy))

    # jobs is an execution parameter, not part of the experiment: parallel
    # and serial runs must produce identical reports
    config_echo = {k: v for k, v in config.to_dict().items() if k != "jobs"}
    return LoopReport(
        baseline=baseline_report,
        retrained=retrained_report,
        manifest_counts=manifest.counts,
        seed=seed,
        config=config_echo,
    )

"""Single entry-point command exposing every pipeline stage as a subcommand.

Exit codes: 0 success, 1 usage error, 2 data error. The ``CSWITCH_LOG``
environment variable sets log verbosity (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import alignscore, corpus, ngramlm, semisup, simrec
from .errors import CswitchError, DataError


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the CLI contract is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_config(args) -> corpus.ParseConfig:
    return corpus.ParseConfig(
        inline_tags=args.inline_tags,
        casefold=not args.no_casefold,
    )


def _tag_policy(args) -> corpus.TagPolicy:
    priority = tuple(args.priority.split(",")) if args.priority else None
    return corpus.TagPolicy(
        priority=priority,
        sticky=not args.no_sticky,
        casefold=not args.no_casefold,
    )


def _load_utterances(path: str, config: corpus.ParseConfig) -> list[corpus.TaggedUtterance]:
    p = Path(path)
    if p.is_dir():
        return corpus.parse_data_dir(p, config)
    if p.is_file():
        return corpus.parse_text_file(p, config)
    raise DataError(f"no such file or directory: {path}")


def _load_and_tag(path: str, args) -> list[corpus.TaggedUtterance]:
    utts = _load_utterances(path, _parse_config(args))
    if args.lexicons:
        lexicons = corpus.load_lexicons(args.lexicons, casefold=not args.no_casefold)
        utts = corpus.tag_tokens(utts, lexicons, _tag_policy(args))
    return utts


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _add_common_input_flags(p: argparse.ArgumentParser, lexicons_required: bool = False) -> None:
    p.add_argument("--lexicons", required=lexicons_required,
                   help="directory of lexicon files (filename stem = language code)")
    p.add_argument("--inline-tags", action="store_true",
                   help="parse word_<code> suffixes as language tags")
    p.add_argument("--no-casefold", action="store_true", help="keep the original letter case")
    p.add_argument("--priority", help="comma-separated language priority for ambiguous words")
    p.add_argument("--no-sticky", action="store_true",
                   help="disable previous-token stickiness for ambiguous words")


def _add_report_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_stats(args) -> int:
    utts = _load_and_tag(args.data, args)
    stats = corpus.corpus_stats(utts)
    _emit(stats.to_json() if args.format == "json" else stats.to_tsv(), args.out)
    return 0


def _cmd_tag(args) -> int:
    utts = _load_and_tag(args.data, args)
    corpus.write_data_dir(utts, args.out_dir)
    return 0


def _smoothing(args) -> ngramlm.Smoothing:
    return ngramlm.parse_smoothing(args.smoothing)


def _cmd_lm_train(args) -> int:
    utts = _load_utterances(args.data, _parse_config(args))
    counts = ngramlm.count_ngrams(utts, args.order)
    vocab = None
    if args.vocab:
        vocab = set()
        for lex in corpus.load_lexicons(args.vocab, casefold=not args.no_casefold):
            vocab |= lex.words
    model = ngramlm.train_lm(counts, _smoothing(args), vocab)
    ngramlm.write_arpa(model, args.out)
    return 0


def _load_model(args) -> ngramlm.Model:
    models = [ngramlm.read_arpa(p) for p in args.model]
    if len(models) == 1 and not args.weights:
        return models[0]
    if args.weights:
        weights = [float(w) for w in args.weights.split(",")]
    else:
        weights = [1.0 / len(models)] * len(models)
    return ngramlm.InterpolatedModel(models, weights)


def _cmd_lm_ppl(args) -> int:
    model = _load_model(args)
    cfg = ngramlm.EvalConfig(unk_symbol=args.unk)
    reports = {}
    for item in args.eval:
        name, _, path = item.rpartition("=")
        if not name:
            name, path = Path(path).stem, item
        utts = _load_and_tag(path, args)
        reports[name] = ngramlm.perplexity(model, utts, cfg)
    if args.format == "json":
        payload = {name: r.to_dict() for name, r in reports.items()}
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit(ngramlm.reports_to_tsv(reports), args.out)
    return 0


def _cmd_lm_interp(args) -> int:
    models = [ngramlm.read_arpa(p) for p in args.model]
    dev = _load_utterances(args.dev, _parse_config(args))
    init = [float(w) for w in args.init.split(",")] if args.init else None
    mixture = ngramlm.interpolate_em(models, dev, init=init, tol=args.tol, max_iter=args.max_iter)
    report = ngramlm.perplexity(mixture, dev)
    payload = {
        "components": list(args.model),
        "weights": mixture.weights,
        "dev_ppl": report.all.ppl,
        "dev_tokens": report.all.token_count,
    }
    if args.format == "json":
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        lines = ["component\tweight"]
        lines += [f"{m}\t{w:.6f}" for m, w in zip(args.model, mixture.weights)]
        lines.append(f"dev_ppl\t{report.all.ppl:.4f}")
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_score(args) -> int:
    refs = _load_and_tag(args.ref, args)
    hyps = _load_and_tag(args.hyp, args)
    report = alignscore.score_corpus(
        refs, hyps, cba_strict=args.cba_strict, missing_ref_policy=args.missing_ref
    )
    _emit(report.to_json() if args.format == "json" else report.to_tsv(), args.out)
    return 0


def _cmd_select(args) -> int:
    candidates = []
    config = _parse_config(args)
    for item in args.candidates:
        system_id, sep, path = item.partition("=")
        if not sep or not system_id or not path:
            raise DataError(f"--candidates expects SYSTEM=PATH, got {item!r}")
        candidates.extend(semisup.read_candidates(path, system_id, config))
    if args.lexicons:
        lexicons = corpus.load_lexicons(args.lexicons, casefold=not args.no_casefold)
        policy = _tag_policy(args)
        for cand in candidates:
            holder = corpus.TaggedUtterance(id=cand.utt_id, tokens=cand.tokens)
            cand.tokens = corpus.tag_tokens([holder], lexicons, policy)[0].tokens

    pair_labels = {}
    for item in args.pair_label or []:
        system_id, sep, label = item.partition("=")
        if not sep:
            raise DataError(f"--pair-label expects SYSTEM=LABEL, got {item!r}")
        pair_labels[system_id] = label

    utt_ids = None
    if args.utt_list:
        with open(args.utt_list, encoding="utf-8") as fp:
            utt_ids = [line.split()[0] for line in fp if line.strip()]

    manifest = semisup.select_best(
        candidates, args.min_conf, pair_labels=pair_labels, utt_ids=utt_ids
    )
    semisup.emit_manifest(manifest, args.out_dir)
    sys.stdout.write(json.dumps(manifest.counts, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_simulate(args) -> int:
    if args.config:
        config = simrec.LoopConfig.from_file(args.config)
    else:
        config = simrec.LoopConfig()
    if args.seed is not None:
        config = simrec.LoopConfig.from_dict({**config.to_dict(), "seed": args.seed})
    if args.jobs is not None:
        config = simrec.LoopConfig.from_dict({**config.to_dict(), "jobs": args.jobs})
    report = simrec.run_loop(config)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        (out / "summary.tsv").write_text(report.to_tsv(), encoding="utf-8")
    else:
        sys.stdout.write(report.to_json() if args.format == "json" else report.to_tsv())
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cswitch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", help="corpus duration/token/type/switch statistics")
    p.add_argument("--data", required=True, help="Kaldi-style data directory or text file")
    _add_common_input_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("tag", help="tag tokens by lexicon lookup and dump the tagged corpus")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True, help="directory for the tagged data dump")
    _add_common_input_flags(p, lexicons_required=True)
    p.set_defaults(func=_cmd_tag)

    p = sub.add_parser("lm-train", help="train a backoff n-gram model and write ARPA")
    p.add_argument("--data", required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--smoothing", default="mkn",
                   help="mkn | wb | addk[:K] (default mkn)")
    p.add_argument("--vocab", help="lexicon directory closing the vocabulary")
    p.add_argument("--inline-tags", action="store_true")
    p.add_argument("--no-casefold", action="store_true")
    p.add_argument("--out", required=True, help="output ARPA path")
    p.set_defaults(func=_cmd_lm_train)

    p = sub.add_parser("lm-ppl", help="perplexity with code-switch decomposition")
    p.add_argument("--model", action="append", required=True,
                   help="ARPA model; repeat for a linear mixture")
    p.add_argument("--weights", help="comma-separated mixture weights")
    p.add_argument("--eval", action="append", required=True, metavar="[NAME=]PATH",
                   help="evaluation set; repeat for several rows")
    p.add_argument("--unk", default="<unk>", help="unk symbol used when the model has one")
    _add_common_input_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=_cmd_lm_ppl)

    p = sub.add_parser("lm-interp", help="optimise mixture weights by EM on a dev set")
    p.add_argument("--model", action="append", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--init", help="comma-separated initial weights (default uniform)")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--inline-tags", action="store_true")
    p.add_argument("--no-casefold", action="store_true")
    _add_report_flags(p)
    p.set_defaults(func=_cmd_lm_interp)

    p = sub.add_parser("score", help="WER, per-language WER and CBA")
    p.add_argument("--ref", required=True, help="reference data dir or text file")
    p.add_argument("--hyp", required=True, help="hypothesis data dir or text file")
    p.add_argument("--cba-strict", action="store_true",
                   help="insertions inside a switch bigram invalidate it")
    p.add_argument("--missing-ref", choices=("delete", "skip"), default="delete",
                   help="how to score references with no hypothesis")
    _add_common_input_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("select", help="pick best transcriptions and emit a manifest")
    p.add_argument("--candidates", action="append", required=True, metavar="SYSTEM=PATH",
                   help="candidate TSV for one system; repeatable")
    p.add_argument("--min-conf", type=float, default=0.0)
    p.add_argument("--pair-label", action="append", metavar="SYSTEM=LABEL",
                   help="fixed language-pair label for a bilingual system")
    p.add_argument("--utt-list", help="expected utterance ids (for no-candidate rejects)")
    p.add_argument("--out-dir", required=True)
    _add_common_input_flags(p)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("simulate", help="run the closed-loop simulation")
    p.add_argument("--config", help="LoopConfig JSON or TOML file (defaults when omitted)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--jobs", type=int, help="parallel workers for recognition")
    p.add_argument("--out-dir", help="write report.json and summary.tsv here")
    p.add_argument("--format", choices=("tsv", "json"), default="json")
    p.set_defaults(func=_cmd_simulate)

    return parser


def run_cli(argv=None) -> int:
    level = os.environ.get("CSWITCH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"cswitch: data error: {exc}", file=sys.stderr)
        return 2
    except CswitchError as exc:
        print(f"cswitch: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cswitch: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

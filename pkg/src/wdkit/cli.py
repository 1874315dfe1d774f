"""Command-line surface: ingest, cast, eval, run.

Exit codes: 0 success, 1 validation failure, 2 I/O error, 3 backend error.
"""

from __future__ import annotations

import argparse
import json
import sys

from wdkit.corpus import (
    Corpus,
    Diagnostic,
    domain_to_dict,
    dump_dialogues,
    load_abcd,
    load_multiwoz,
)
from wdkit.domains import builtin_domain, builtin_domain_tags
from wdkit.errors import (
    BackendTimeout,
    MalformedResponse,
    ProviderUnavailable,
    WdkitError,
)
from wdkit.experiments import run_experiment
from wdkit.inference import read_predictions_jsonl
from wdkit.metrics import build_report, evaluate, write_per_sample, write_report
from wdkit.stepmatch import MatchConfig, MatchMode, remote_provider
from wdkit.taskcast import CastConfig, Task, cast_corpus, read_cast_jsonl, write_cast_jsonl

_BACKEND_ERRORS = (BackendTimeout, ProviderUnavailable, MalformedResponse)


def _add_corpus_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", required=True, choices=["abcd", "multiwoz"])
    parser.add_argument("--path", required=True, help="corpus file or directory")
    parser.add_argument("--split", default="train", help="train, dev, or test")
    parser.add_argument(
        "--domain-tag",
        choices=builtin_domain_tags(),
        help="override the dataset's default step domain",
    )
    parser.add_argument(
        "--include-values",
        action="store_true",
        help="attach slot values to travel-booking workflow steps",
    )


def _load_corpus(args: argparse.Namespace) -> Corpus:
    domain = builtin_domain(args.domain_tag) if args.domain_tag else None
    if args.dataset == "abcd":
        return load_abcd(args.path, args.split, domain)
    return load_multiwoz(
        args.path, args.split, domain, include_values=args.include_values
    )


def _cmd_ingest(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    if args.strict and corpus.diagnostics:
        for diagnostic in corpus.diagnostics:
            print(f"violation [{diagnostic.code}] {diagnostic.detail}", file=sys.stderr)
        print(
            f"error: {len(corpus.diagnostics)} violation(s) under --strict",
            file=sys.stderr,
        )
        return 1
    count = dump_dialogues(corpus, args.out)
    domain_out = args.domain_out or f"{args.out}.domain.json"
    with open(domain_out, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(domain_to_dict(corpus.domain), indent=2) + "\n")
    print(f"wrote {count} dialogues to {args.out}")
    print(f"wrote domain {corpus.domain.dataset_tag} to {domain_out}")
    if corpus.diagnostics:
        print(f"{len(corpus.diagnostics)} diagnostic(s); rerun with --strict to list")
    return 0


def _cmd_cast(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    cfg = CastConfig(
        include_domain=args.domain == "on",
        shuffle_seed=args.shuffle_seed,
        shuffle=not args.no_shuffle,
        use_names_not_descriptions=args.names,
        include_values=args.values == "on",
    )
    task = Task(args.task)
    diagnostics: list[Diagnostic] = []
    samples = list(cast_corpus(corpus, task, cfg, diagnostics))
    if not samples:
        print(f"error: no {task.value} samples in {args.path} [{args.split}]", file=sys.stderr)
        return 1
    count = write_cast_jsonl(samples, args.out)
    print(f"wrote {count} {task.value} samples to {args.out}")
    if diagnostics:
        print(f"{len(diagnostics)} cast diagnostic(s)")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    task = Task(args.task)
    samples = read_cast_jsonl(args.cast)
    off_task = [s.id for s in samples if s.task is not task]
    if off_task:
        print(
            f"error: {args.cast} holds non-{task.value} samples (first: {off_task[0]!r})",
            file=sys.stderr,
        )
        return 1
    if not samples:
        print(f"error: {args.cast} holds no samples", file=sys.stderr)
        return 1

    mode = MatchMode(args.match)
    provider = None
    if mode is MatchMode.SIMILARITY:
        if not args.provider_endpoint:
            print(
                "error: --match sim requires --provider-endpoint", file=sys.stderr
            )
            return 1
        provider = remote_provider(args.provider_endpoint)
    compare_values = args.compare_values
    if compare_values is None:
        # value-aware matching is the workflow default; per-turn tasks
        # always compare values inside their own scorers
        compare_values = "on" if task is Task.WD else "off"
    cfg = MatchConfig(
        mode=mode,
        threshold=args.threshold,
        compare_values=compare_values == "on",
        provider=provider,
    )

    predictions = read_predictions_jsonl(args.pred)
    score, rows = evaluate(task, samples, predictions, cfg)
    config_echo = {
        "cast": str(args.cast),
        "pred": str(args.pred),
        "match": {
            "mode": mode.value,
            "threshold": args.threshold,
            "compare_values": cfg.compare_values,
        },
    }
    doc = build_report(task, score, config_echo)
    write_report(doc, args.report)
    if args.per_sample:
        write_per_sample(rows, args.per_sample)
    for name, value in doc["metrics"].items():
        print(f"{name} {value:.4f}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            print(f"error: {args.manifest}: invalid JSON ({exc})", file=sys.stderr)
            return 1
    if not isinstance(manifest, dict):
        print(f"error: {args.manifest}: manifest is not an object", file=sys.stderr)
        return 1
    doc, run_dir = run_experiment(manifest, args.out_root)
    print(run_dir)
    for name, value in doc["metrics"].items():
        print(f"{name} {value:.4f}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wdkit",
        description="Cast task-oriented dialogues to text pairs and score generations.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", help="load and normalize a corpus")
    _add_corpus_args(ingest)
    ingest.add_argument("--out", required=True, help="dialogues JSONL path")
    ingest.add_argument("--domain-out", help="domain JSON path (default: <out>.domain.json)")
    ingest.add_argument(
        "--strict", action="store_true", help="fail on any tolerated irregularity"
    )
    ingest.set_defaults(func=_cmd_ingest)

    cast = commands.add_parser("cast", help="serialize a corpus into input/target pairs")
    _add_corpus_args(cast)
    cast.add_argument("--task", required=True, choices=[t.value for t in Task])
    cast.add_argument("--out", required=True, help="cast JSONL path")
    cast.add_argument("--domain", choices=["on", "off"], default="on")
    names = cast.add_mutually_exclusive_group()
    names.add_argument(
        "--names", action="store_true", help="emit step names instead of descriptions"
    )
    names.add_argument(
        "--descriptions", action="store_false", dest="names", help="emit descriptions (default)"
    )
    cast.add_argument("--shuffle-seed", type=int, default=0)
    cast.add_argument(
        "--no-shuffle", action="store_true", help="keep the domain segment in table order"
    )
    cast.add_argument("--values", choices=["on", "off"], default="on")
    cast.set_defaults(func=_cmd_cast)

    evaluate_ = commands.add_parser("eval", help="score a predictions file")
    evaluate_.add_argument("--task", required=True, choices=[t.value for t in Task])
    evaluate_.add_argument("--cast", required=True, help="cast JSONL with gold targets")
    evaluate_.add_argument("--pred", required=True, help="predictions JSONL")
    evaluate_.add_argument("--report", default="report.json")
    evaluate_.add_argument("--per-sample", help="optional per-sample JSONL path")
    evaluate_.add_argument(
        "--match", choices=[m.value for m in MatchMode], default="stem"
    )
    evaluate_.add_argument("--threshold", type=float, default=0.95)
    evaluate_.add_argument("--compare-values", choices=["on", "off"], default=None)
    evaluate_.add_argument("--provider-endpoint", help="similarity service URL")
    evaluate_.set_defaults(func=_cmd_eval)

    run = commands.add_parser("run", help="execute a manifest end to end")
    run.add_argument("--manifest", required=True)
    run.add_argument("--out-root", default="runs")
    run.set_defaults(func=_cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _BACKEND_ERRORS as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except (WdkitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

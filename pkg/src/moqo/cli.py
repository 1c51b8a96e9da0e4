"""Command-line surface: one verb per capability.

    moqo optimize <spec.json>            run the spec's algorithm, print the plan
    moqo frontier <spec.json> --out F    export the (approximate) Pareto frontier
    moqo bench --profile P --seeds A..B --out M    run a seeded benchmark suite
    moqo verify <spec.json>              run, then check against the oracle
    moqo count --tables N --ops J        closed-form bushy plan count

Exit codes: 0 success, 1 invalid input, 2 guarantee violation detected by
``verify``, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import Profile, generate_testcase, run_benchmark
from .errors import (
    EnumerationLimitError,
    IterationLimitError,
    MoqoError,
    QuerySpecError,
)
from .oracle import check_guarantee, count_bushy
from .optimizer import (
    OptimizerReport,
    exa_optimize,
    ira_optimize,
    rta_optimize,
)
from .plans import CostModelConfig
from .specio import (
    QuerySpecDocument,
    export_frontier,
    export_metrics,
    parse_spec_document,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_GUARANTEE_VIOLATION = 2
EXIT_INTERNAL_ERROR = 3


class _InputError(Exception):
    """Anything the user can fix: bad files, bad values, refused scales."""


def _load_document(path: str) -> tuple[QuerySpecDocument, CostModelConfig | None]:
    spec_path = Path(path)
    try:
        text = spec_path.read_text()
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from None
    try:
        doc = parse_spec_document(text)
    except QuerySpecError as exc:
        raise _InputError(f"{path}: {exc}") from None
    config = None
    if doc.cost_config is not None:
        config_path = Path(doc.cost_config)
        if not config_path.is_absolute():
            config_path = spec_path.parent / config_path
        try:
            config = CostModelConfig.from_text(config_path.read_text())
        except OSError as exc:
            raise _InputError(f"cannot read cost config: {exc}") from None
        except ValueError as exc:
            raise _InputError(f"{config_path}: {exc}") from None
    return doc, config


def _run_document(doc: QuerySpecDocument, config: CostModelConfig | None) -> OptimizerReport:
    instance = doc.instance
    kwargs = dict(deadline=doc.deadline, config=config)
    if doc.algorithm == "exa":
        return exa_optimize(instance, **kwargs)
    if doc.algorithm == "rta":
        return rta_optimize(instance, **kwargs)
    return ira_optimize(instance, **kwargs)


def _print_report(report: OptimizerReport) -> None:
    chosen = report.chosen
    print(f"algorithm: {report.algorithm} (alpha {report.alpha:g})")
    print(f"plan: {chosen.plan}")
    for objective, value in zip(report.objectives, chosen.cost):
        print(f"  {objective.value}: {value!r}")
    print(f"weighted cost: {chosen.weighted_cost!r}")
    print(f"within bounds: {'yes' if chosen.within_bounds else 'no'}")
    print(
        f"frontier size: {len(report.frontier)}  stored plans: {report.plans_total}"
        f"  iterations: {len(report.iterations)}"
    )
    if report.timed_out:
        print("note: deadline expired; result is the degraded best effort")


def _parse_seeds(text: str) -> range:
    first, sep, last = text.partition("..")
    try:
        a = int(first)
        b = int(last) if sep else a
    except ValueError:
        raise _InputError(f"cannot parse seed range {text!r}; expected A..B or a single seed") from None
    if b < a:
        raise _InputError(f"empty seed range {text!r}")
    return range(a, b + 1)


def _cmd_optimize(args) -> int:
    doc, config = _load_document(args.spec)
    _print_report(_run_document(doc, config))
    return EXIT_OK


def _cmd_frontier(args) -> int:
    doc, config = _load_document(args.spec)
    report = _run_document(doc, config)
    try:
        export_frontier(report, args.out)
    except OSError as exc:
        raise _InputError(f"cannot write {args.out}: {exc}") from None
    print(f"wrote {len(report.frontier)} frontier rows to {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        data = json.loads(Path(args.profile).read_text())
    except OSError as exc:
        raise _InputError(f"cannot read {args.profile}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise _InputError(f"{args.profile}: not valid JSON: {exc}") from None
    try:
        profile = Profile.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise _InputError(f"{args.profile}: {exc}") from None
    seeds = _parse_seeds(args.seeds)
    try:
        suite = [generate_testcase(seed, profile) for seed in seeds]
    except EnumerationLimitError as exc:
        raise _InputError(str(exc)) from None
    rows = run_benchmark(
        suite,
        profile.algorithms,
        deadline=profile.deadline,
        jobs=args.jobs,
    )
    try:
        export_metrics(rows, args.out, timing=not args.no_timing)
    except OSError as exc:
        raise _InputError(f"cannot write {args.out}: {exc}") from None
    failures = sum(1 for r in rows if r.error is not None)
    print(f"wrote {len(rows)} metric rows to {args.out}")
    if failures:
        print(f"note: {failures} runs recorded an error")
    return EXIT_OK


def _cmd_verify(args) -> int:
    doc, config = _load_document(args.spec)
    report = _run_document(doc, config)
    try:
        rho, passed = check_guarantee(report, doc.instance, config=config)
    except EnumerationLimitError as exc:
        raise _InputError(str(exc)) from None
    promised = report.alpha
    print(f"algorithm: {report.algorithm} (alpha {promised:g})")
    print(f"plan: {report.chosen.plan}")
    print(f"relative cost: {rho!r}")
    if not passed:
        print(f"GUARANTEE VIOLATION: relative cost exceeds alpha {promised:g}")
        return EXIT_GUARANTEE_VIOLATION
    print(f"guarantee holds: relative cost within alpha {promised:g}")
    return EXIT_OK


def _cmd_count(args) -> int:
    try:
        print(count_bushy(args.ops, args.tables))
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moqo",
        description="Multi-objective join-order optimization: exact search, "
        "guaranteed approximations, and a seeded benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="run a query spec and print the chosen plan")
    p.add_argument("spec", help="path to a JSON query spec")
    p.set_defaults(handler=_cmd_optimize)

    p = sub.add_parser("frontier", help="run a query spec and export its Pareto frontier")
    p.add_argument("spec", help="path to a JSON query spec")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(handler=_cmd_frontier)

    p = sub.add_parser("bench", help="run a seeded benchmark suite")
    p.add_argument("--profile", required=True, help="path to a JSON suite profile")
    p.add_argument("--seeds", required=True, help="inclusive seed range A..B (or one seed)")
    p.add_argument("--out", required=True, help="metrics CSV output path")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument(
        "--no-timing",
        action="store_true",
        help="leave wall_ms empty so reruns are byte-identical",
    )
    p.set_defaults(handler=_cmd_bench)

    p = sub.add_parser("verify", help="run a spec and check it against the brute-force oracle")
    p.add_argument("spec", help="path to a JSON query spec")
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("count", help="print the bushy plan count for a search space")
    p.add_argument("--tables", type=int, required=True, help="number of joined tables")
    p.add_argument("--ops", type=int, required=True, help="operator configurations per node")
    p.set_defaults(handler=_cmd_count)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except IterationLimitError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR
    except (_InputError, MoqoError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except Exception as exc:  # pragma: no cover - defensive catch-all
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())

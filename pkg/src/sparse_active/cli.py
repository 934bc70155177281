"""Command-line entry point: ``sparse-active {run,sweep,properties,tune}``.

Exit codes: 0 success, 1 parameter error, 2 sweep finished with failed runs,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ParameterError
from .harness import ExperimentConfig, summarize, sweep

EXIT_OK = 0
EXIT_PARAM = 1
EXIT_SWEEP_FAILURES = 2
EXIT_INTERNAL = 3


def load_document(path) -> dict:
    """Read a JSON or TOML config file into a dict."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: {exc}") from exc


def split_document(doc: dict) -> tuple[ExperimentConfig, dict, dict]:
    """Separate the ``grid`` and ``tune`` tables from the experiment fields."""
    doc = dict(doc)
    grid = doc.pop("grid", {}) or {}
    tune = doc.pop("tune", {}) or {}
    return ExperimentConfig.from_dict(doc), grid, tune


def _seeds(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi)))
    return [int(s) for s in text.split(",") if s]


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    raw = config.to_dict()
    if getattr(args, "seeds", None):
        raw["seeds"] = _seeds(args.seeds)
    if getattr(args, "out", None):
        raw["output"] = args.out
    if getattr(args, "workers", None):
        raw["workers"] = args.workers
    return ExperimentConfig.from_dict(raw)


def _report(records, args) -> int:
    if args.summary:
        print(summarize(records))
    failed = [r for r in records if not r.ok]
    for r in failed:
        print(f"seed {r.seed} ({r.algorithm}): {r.status}", file=sys.stderr)
    return EXIT_SWEEP_FAILURES if failed else EXIT_OK


def cmd_run(args) -> int:
    config = ExperimentConfig() if args.config is None else split_document(load_document(args.config))[0]
    config = _apply_overrides(config, args)
    records = sweep(config, None)
    if not args.summary and config.output is None:
        for r in records:
            print(f"seed={r.seed} algo={r.algorithm} labels={r.labels_total} err={r.err_estimate:.5f} status={r.status}")
    return _report(records, args)


def cmd_sweep(args) -> int:
    config, grid, _ = split_document(load_document(args.config))
    config = _apply_overrides(config, args)
    if not grid:
        raise ParameterError("sweep config needs a nonempty [grid] table")
    records = sweep(config, grid)
    return _report(records, args)


def cmd_properties(args) -> int:
    from .properties import run_all

    results = run_all(cases=args.cases, seed=args.seed)
    for res in results:
        print(res.line())
        if res.failures and args.dump_dir:
            Path(args.dump_dir).mkdir(parents=True, exist_ok=True)
            name = "".join(ch if ch.isalnum() else "_" for ch in res.name)[:60]
            with open(Path(args.dump_dir) / f"{name}.json", "w") as fh:
                json.dump(res.failures, fh, indent=1)
    return EXIT_OK if all(r.passed for r in results) else EXIT_SWEEP_FAILURES


def cmd_tune(args) -> int:
    from .tuning import tune

    config, _, tune_grid = (ExperimentConfig(), {}, {}) if args.config is None else split_document(load_document(args.config))
    config = _apply_overrides(config, args)
    result = tune(config, tune_grid or None)
    print(result.table())
    print()
    print("recommended constants:", json.dumps(result.recommended))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-active", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration over its seeds")
    p.add_argument("--config", help="JSON or TOML experiment config")
    p.add_argument("--seeds", help="comma list or lo:hi range, overrides the config")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--workers", type=int)
    p.add_argument("--summary", action="store_true", help="print median/IQR table")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the Cartesian grid in the config's [grid] table")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds")
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--summary", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("properties", help="randomized invariant suites")
    p.add_argument("--cases", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-dir", help="write failing cases here as JSON")
    p.set_defaults(func=cmd_properties)

    p = sub.add_parser("tune", help="grid search over the algorithm constants")
    p.add_argument("--config")
    p.add_argument("--seeds")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except Exception as exc:
        logging.getLogger(__name__).exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""Head-to-head runs of the active learner against its two baselines.

    python scripts/compare_baselines.py passive [--seeds 0:20] [--d 500]
    python scripts/compare_baselines.py fulldim [--seeds 0:5] [--d 1000]

``passive`` gives the passive learner the active run's label total and compares
median errors. ``fulldim`` compares label totals of the sparse and the
full-dimensional learner; the full-dimensional run needs about d * polylog
labels per epoch, so at d=1000 expect a long run and several GB of memory.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from sparse_active.harness import ExperimentConfig, summarize, sweep, write_csv


def _seeds(text):
    lo, hi = text.split(":")
    return tuple(range(int(lo), int(hi)))


def passive(args):
    cfg = ExperimentConfig(d=args.d, t=5, epsilon=0.02, delta=0.1, seeds=_seeds(args.seeds), passive=True)
    return sweep(cfg, workers=args.workers)


def fulldim(args):
    cfg = ExperimentConfig(d=args.d, t=10, epsilon=0.05, delta=0.1, seeds=_seeds(args.seeds), fulldim=True)
    return sweep(cfg, workers=args.workers)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("which", choices=["passive", "fulldim"])
    parser.add_argument("--seeds", default=None)
    parser.add_argument("--d", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    args.seeds = args.seeds or ("0:20" if args.which == "passive" else "0:5")
    args.d = args.d or (500 if args.which == "passive" else 1000)

    start = time.time()
    records = passive(args) if args.which == "passive" else fulldim(args)
    Path("results").mkdir(exist_ok=True)
    out = Path("results") / f"baseline_{args.which}_d{args.d}.csv"
    write_csv(records, out)
    print(summarize(records))

    by_algo = {}
    for r in records:
        if r.ok:
            by_algo.setdefault(r.algorithm, []).append(r)
    err = {a: float(np.median([r.err_estimate for r in rs])) for a, rs in by_algo.items()}
    labels = {a: float(np.median([r.labels_total for r in rs])) for a, rs in by_algo.items()}
    print()
    for a in sorted(by_algo):
        print(f"{a:<8} median labels {labels[a]:>10.0f}  median err {err[a]:.5f}")
    if args.which == "passive" and {"active", "passive"} <= set(err):
        print(f"passive err >= active err: {err['passive'] >= err['active']}")
    if args.which == "fulldim" and {"active", "fulldim"} <= set(labels):
        print(f"fulldim labels / active labels: {labels['fulldim'] / labels['active']:.2f}")
    print(f"wrote {out} in {time.time() - start:.0f}s")


if __name__ == "__main__":
    main()

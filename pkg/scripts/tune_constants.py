"""Reproduce the shipped default constants.

    python scripts/tune_constants.py [configs/tune.toml]

Runs the c1/c2/c3 grid on the tuning seeds and writes the table to
results/tune.txt.
"""

import sys
import time
from pathlib import Path

from sparse_active.cli import load_document, split_document
from sparse_active.tuning import tune


def main(path="configs/tune.toml"):
    config, _, grid = split_document(load_document(path))
    start = time.time()
    result = tune(config, grid)
    text = result.table() + f"\n\nrecommended: {result.recommended}\nelapsed: {time.time() - start:.0f}s\n"
    print(text)
    Path("results").mkdir(exist_ok=True)
    Path("results/tune.txt").write_text(text)


if __name__ == "__main__":
    main(*sys.argv[1:])

#!/usr/bin/env python3
"""Rank loss of all four methods on benchmark train/test pairs.

Expects ``<dir>/<name>-train.txt`` and ``<dir>/<name>-test.txt`` in the
native format (see ``convert_libsvm.py``).  Each method picks its
hyperparameter on a held-out 25% of the training file, refits, and is
scored on the test file with the pairwise-normalized weight.

    python3 scripts/benchmark_table.py --dir data emotions scene yeast
"""

import argparse
import csv
import sys
from pathlib import Path

from mlrank.dataio import read_sparse
from mlrank.experiments import METHODS, fit_with_selection
from mlrank.losses import WeightSpec
from mlrank.wbr import evaluate

# reference values for context only: different implementations and tuning
REFERENCE = {
    "emotions": {"wbr-logreg": 0.1657},
    "scene": {"wbr-logreg": 0.0793},
    "yeast": {"wbr-ada": 0.1820},
}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("names", nargs="+")
    p.add_argument("--dir", required=True)
    p.add_argument("--method", action="append", choices=METHODS)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    spec = WeightSpec.normalized()
    methods = args.method or list(METHODS)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["dataset", "method", "selected", "rank_loss", "reference"])
    for name in args.names:
        train = read_sparse(Path(args.dir) / f"{name}-train.txt")
        test = read_sparse(Path(args.dir) / f"{name}-test.txt")
        for meth in methods:
            sel = fit_with_selection(meth, train, spec, seed=args.seed)
            loss = evaluate(sel.model, test, spec).mean
            w.writerow([name, meth, sel.value, f"{loss:.6f}", REFERENCE.get(name, {}).get(meth, "")])
            sys.stdout.flush()


if __name__ == "__main__":
    main()

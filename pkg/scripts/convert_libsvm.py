#!/usr/bin/env python3
"""Convert a LibSVM-style multilabel file to the native sparse format.

LibSVM multilabel files (for example the emotions and scene sets) look like
``2,5 1:0.03 2:-0.7 ...``: comma-separated label ids, then feature ids that
usually start at 1.  The native format wants 0-based features and a
``#m= #d=`` header.  Pass ``--m``/``--d`` when a split may miss the largest
index, so train and test files agree.

    python3 scripts/convert_libsvm.py emotions_train.svm emotions-train.txt --m 6 --d 72
"""

import argparse

import numpy as np

from mlrank.dataio import MultilabelDataset, write_sparse


def parse_libsvm(text, feature_base=1, label_base=0):
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if ":" in tokens[0]:
            labels, feats = [], tokens
        else:
            labels, feats = [int(t) - label_base for t in tokens[0].split(",") if t], tokens[1:]
        x = {}
        for tok in feats:
            j, _, v = tok.partition(":")
            x[int(j) - feature_base] = float(v)
        if any(k < 0 for k in labels) or any(j < 0 for j in x):
            raise ValueError(f"line {lineno}: negative index after rebasing")
        rows.append((labels, x))
    return rows


def to_dataset(rows, m=None, d=None, header=()):
    m = m or 1 + max((k for labels, _ in rows for k in labels), default=-1)
    d = d or 1 + max((j for _, x in rows for j in x), default=-1)
    X = np.zeros((len(rows), d))
    Y = np.zeros((len(rows), m), dtype=np.int8)
    for r, (labels, x) in enumerate(rows):
        Y[r, labels] = 1
        for j, v in x.items():
            X[r, j] = v
    return MultilabelDataset(X, Y, header=list(header))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("src")
    p.add_argument("dst")
    p.add_argument("--m", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--feature-base", type=int, default=1)
    p.add_argument("--label-base", type=int, default=0)
    args = p.parse_args(argv)
    with open(args.src, encoding="utf-8") as fh:
        rows = parse_libsvm(fh.read(), args.feature_base, args.label_base)
    data = to_dataset(rows, args.m, args.d, [f"# converted from {args.src}"])
    write_sparse(data, args.dst)
    print(f"{args.dst}: n={data.n} m={data.m} d={data.d}")


if __name__ == "__main__":
    main()

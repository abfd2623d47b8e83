"""Multilabel datasets and their sparse text format.

One instance per line::

    0,2 1:0.5 3:-1.0

A comma-separated list of 0-based relevant label indices, then
``feature:value`` tokens with 0-based feature indices.  An instance with no
relevant labels starts with a single space.  Absent features are 0.  Lines
starting with ``#`` are comments; one of them must declare ``#m=<int>`` and
``#d=<int>``.  Files are UTF-8 with LF line endings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass
class MultilabelDataset:
    X: np.ndarray  # (n, d) float
    Y: np.ndarray  # (n, m) 0/1
    name: str = ""
    header: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.Y = np.asarray(self.Y, dtype=np.int8)
        if self.X.ndim != 2 or self.Y.ndim != 2 or self.X.shape[0] != self.Y.shape[0]:
            raise ValueError(f"incompatible shapes X{self.X.shape} Y{self.Y.shape}")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("features must be finite")
        if not np.all((self.Y == 0) | (self.Y == 1)):
            raise ValueError("labels must be 0 or 1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def m(self) -> int:
        return self.Y.shape[1]

    def __len__(self) -> int:
        return self.n

    def subset(self, idx) -> "MultilabelDataset":
        return MultilabelDataset(self.X[idx], self.Y[idx], self.name, list(self.header))

    def equals(self, other: "MultilabelDataset") -> bool:
        """Exact equality of shapes, labels and feature bit patterns."""
        return (
            self.X.shape == other.X.shape
            and self.Y.shape == other.Y.shape
            and np.array_equal(self.Y, other.Y)
            and self.X.tobytes() == other.X.tobytes()
        )


_DIM_RE = re.compile(r"#([md])=(\d+)")


def format_float(v: float) -> str:
    """Shortest text that parses back to the same double."""
    return repr(float(v))


def parse_sparse(text: str, name: str = "") -> MultilabelDataset:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    dims: dict[str, int] = {}
    header: list[str] = []
    rows = []
    for lineno, line in enumerate(lines, 1):
        if line.endswith("\r"):
            raise DataFormatError("CR line ending", lineno)
        if line.startswith("#"):
            found = _DIM_RE.findall(line)
            for key, val in found:
                dims[key] = int(val)
            if not found:
                header.append(line)
            continue
        rows.append((lineno, line))
    if "m" not in dims or "d" not in dims:
        raise DataFormatError("missing '#m=<int> #d=<int>' header")
    m, d = dims["m"], dims["d"]
    X = np.zeros((len(rows), d))
    Y = np.zeros((len(rows), m), dtype=np.int8)
    for r, (lineno, line) in enumerate(rows):
        label_field, _, rest = line.partition(" ")
        if label_field:
            for tok in label_field.split(","):
                if not tok.isdigit():
                    raise DataFormatError(f"bad label index {tok!r}", lineno)
                k = int(tok)
                if k >= m:
                    raise DataFormatError(f"label index {k} >= m={m}", lineno)
                Y[r, k] = 1
        for tok in rest.split():
            idx, sep, val = tok.partition(":")
            if not sep or not idx.isdigit():
                raise DataFormatError(f"bad feature token {tok!r}", lineno)
            j = int(idx)
            if j >= d:
                raise DataFormatError(f"feature index {j} >= d={d}", lineno)
            try:
                x = float(val)
            except ValueError:
                raise DataFormatError(f"bad feature value {val!r}", lineno) from None
            if not np.isfinite(x):
                raise DataFormatError(f"non-finite feature value {val!r}", lineno)
            X[r, j] = x
    return MultilabelDataset(X, Y, name, header)


def read_sparse(path) -> MultilabelDataset:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_sparse(fh.read(), name=path.stem)


def format_sparse(data: MultilabelDataset) -> str:
    out = [f"#m={data.m} #d={data.d}"]
    out.extend(data.header)
    for x, y in zip(data.X, data.Y):
        labels = ",".join(str(k) for k in np.flatnonzero(y))
        # -0.0 is written so that its sign bit survives the round trip
        nz = np.flatnonzero((x != 0) | np.signbit(x))
        feats = " ".join(f"{j}:{format_float(x[j])}" for j in nz)
        out.append(f"{labels} {feats}" if feats else (labels if labels else " "))
    return "\n".join(out) + "\n"


def write_sparse(data: MultilabelDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_sparse(data))


def split(data: MultilabelDataset, fraction: float, seed: int) -> tuple[MultilabelDataset, MultilabelDataset]:
    """Seeded shuffle, then the first ``round(fraction * n)`` instances go to the first part."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must be strictly between 0 and 1")
    n = data.n
    k = int(round(fraction * n))
    if k == 0 or k == n:
        raise ValueError(f"split of {n} instances at {fraction} leaves one side empty")
    perm = np.random.default_rng(seed).permutation(n)
    return data.subset(perm[:k]), data.subset(perm[k:])

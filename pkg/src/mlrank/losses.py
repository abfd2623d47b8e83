"""Rank loss, weight functions and the surrogate losses that upper-bound it.

Labels live in {0, 1} at this layer.  Surrogates map them to {-1, +1}
internally.  Every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

EXP_MARGIN_CAP = 700.0


class UnknownLabelingError(KeyError):
    """A table weight function was asked for a labeling it does not define."""


class SurrogateOverflowError(OverflowError):
    pass


@dataclass(frozen=True)
class WeightSpec:
    """Per-instance weight ``w(y)`` multiplying every pair error.

    Use the constructors :meth:`constant`, :meth:`normalized` and
    :meth:`table` rather than building one by hand.
    """

    kind: str
    value: float = 1.0
    entries: Mapping[tuple[int, ...], float] = field(default_factory=dict)
    w_max: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "normalized", "table"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.w_max < 0:
            raise ValueError("w_max must be nonnegative")
        if self.kind == "constant" and not 0 <= self.value <= self.w_max:
            raise ValueError("constant weight outside [0, w_max]")
        if self.kind == "table":
            for y, w in self.entries.items():
                if not 0 <= w <= self.w_max:
                    raise ValueError(f"table weight {w} for {y} outside [0, w_max]")

    @classmethod
    def constant(cls, c: float = 1.0) -> "WeightSpec":
        return cls("constant", value=float(c), w_max=float(c))

    @classmethod
    def normalized(cls) -> "WeightSpec":
        # 1 / (s (m - s)) never exceeds 1 / (m - 1) <= 1
        return cls("normalized", w_max=1.0)

    @classmethod
    def table(cls, entries: Mapping, w_max: float | None = None) -> "WeightSpec":
        entries = {tuple(int(b) for b in y): float(w) for y, w in entries.items()}
        if w_max is None:
            w_max = max(entries.values(), default=0.0)
        return cls("table", entries=entries, w_max=float(w_max))

    def scaled(self, c: float, m: int | None = None) -> "WeightSpec":
        """The weight function ``c * w``.

        Normalized weights have no scaled kind of their own, so they are
        tabulated over all ``2**m`` labelings, which needs ``m``.
        """
        if self.kind == "constant":
            return WeightSpec.constant(self.value * c)
        if self.kind == "table":
            return WeightSpec.table({y: w * c for y, w in self.entries.items()}, self.w_max * c)
        if m is None:
            raise ValueError("rescaling a normalized weight needs the label count m")
        Y = all_labelings(m)
        return WeightSpec.table(
            {tuple(row): c * w for row, w in zip(Y.tolist(), self.batch(Y))}, self.w_max * c
        )

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "w_max": self.w_max}
        if self.kind == "constant":
            d["value"] = self.value
        elif self.kind == "table":
            d["entries"] = [[list(y), w] for y, w in sorted(self.entries.items())]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WeightSpec":
        if d["kind"] == "constant":
            return cls.constant(d["value"])
        if d["kind"] == "normalized":
            return cls.normalized()
        return cls.table({tuple(y): w for y, w in d["entries"]}, d["w_max"])

    def __call__(self, y) -> float:
        return weight(self, y)

    def batch(self, Y: np.ndarray) -> np.ndarray:
        """Weights for each row of a 0/1 label matrix."""
        Y = np.asarray(Y)
        n, m = Y.shape
        if self.kind == "constant":
            return np.full(n, self.value)
        if self.kind == "normalized":
            s = Y.sum(axis=1).astype(float)
            denom = s * (m - s)
            out = np.zeros(n)
            np.divide(1.0, denom, out=out, where=denom > 0)
            return out
        return np.array([weight(self, row) for row in Y], dtype=float)


def all_labelings(m: int) -> np.ndarray:
    """All ``2**m`` label vectors; row ``k`` holds the bits of ``k``, label 0 most significant."""
    k = np.arange(2**m)
    return ((k[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.int8)


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or y.size < 1:
        raise ValueError("label vector must be one-dimensional and nonempty")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError(f"labels must be 0 or 1, got {y}")
    return y.astype(np.int8)


def _check_pair(y, h) -> tuple[np.ndarray, np.ndarray]:
    y = _check_labels(y)
    h = np.asarray(h, dtype=float)
    if h.shape != y.shape:
        raise ValueError(f"length mismatch: {y.size} labels, {h.size} scores")
    if not np.all(np.isfinite(h)):
        raise ValueError("scores must be finite")
    return y, h


def weight(spec: WeightSpec, y) -> float:
    y = _check_labels(y)
    if spec.kind == "constant":
        return spec.value
    if spec.kind == "normalized":
        m = y.size
        s = int(y.sum())
        # no mixed pairs when s is 0 or m, so the loss sum is empty anyway
        if s == 0 or s == m:
            return 0.0
        return 1.0 / (s * (m - s))
    key = tuple(int(b) for b in y)
    try:
        return spec.entries[key]
    except KeyError:
        raise UnknownLabelingError(f"unknown labeling {key}") from None


def mixed_pairs(y) -> int:
    """Number of (relevant, irrelevant) pairs in ``y``."""
    y = _check_labels(y)
    s = int(y.sum())
    return s * (y.size - s)


def rank_loss(y, h, spec: WeightSpec) -> float:
    """Weighted count of misordered (relevant, irrelevant) pairs, ties cost 1/2."""
    y, h = _check_pair(y, h)
    pos = h[y == 1]
    neg = h[y == 0]
    diff = pos[:, None] - neg[None, :]
    errors = np.count_nonzero(diff < 0) + 0.5 * np.count_nonzero(diff == 0)
    return weight(spec, y) * float(errors)


def rank_loss_batch(Y, S, spec: WeightSpec) -> np.ndarray:
    """:func:`rank_loss` for every row of a label matrix and a score matrix."""
    Y = np.asarray(Y)
    S = np.asarray(S, dtype=float)
    if Y.shape != S.shape:
        raise ValueError(f"shape mismatch: labels {Y.shape}, scores {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError("scores must be finite")
    n, m = Y.shape
    errors = np.empty(n)
    step = max(1, 2_000_000 // max(1, m * m))
    for a in range(0, n, step):
        y, s = Y[a : a + step], S[a : a + step]
        mixed = (y[:, :, None] == 1) & (y[:, None, :] == 0)
        D = s[:, :, None] - s[:, None, :]
        errors[a : a + step] = np.sum(mixed & (D < 0), axis=(1, 2)) + 0.5 * np.sum(mixed & (D == 0), axis=(1, 2))
    return spec.batch(Y) * errors


def bipartite_rank_loss(y: int, y2: int, h: float, h2: float) -> float:
    """Non-normalized bipartite rank loss on one pair of signed examples."""
    if y not in (-1, 1) or y2 not in (-1, 1):
        raise ValueError("signed labels must be -1 or +1")
    if y > y2:
        return float(h < h2) + 0.5 * float(h == h2)
    if y < y2:
        return float(h > h2) + 0.5 * float(h == h2)
    return 0.0


def signed(y) -> np.ndarray:
    return 2.0 * np.asarray(y, dtype=float) - 1.0


def logistic(t):
    """``log(1 + exp(-t))`` without overflow."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = np.log1p(np.exp(-t[pos]))
    out[~pos] = -t[~pos] + np.log1p(np.exp(t[~pos]))
    return out if out.ndim else float(out)


def logistic_deriv(t):
    """Derivative of :func:`logistic`, ``-1 / (1 + exp(t))``."""
    t = np.asarray(t, dtype=float)
    return -0.5 * (1.0 - np.tanh(0.5 * t))


def logistic_deriv2(t):
    t = np.asarray(t, dtype=float)
    s = 0.5 * (1.0 - np.tanh(0.5 * t))
    return s * (1.0 - s)


def exponential(t, cap: float = EXP_MARGIN_CAP):
    """``exp(-t)``; raises instead of overflowing when ``-t`` exceeds ``cap``."""
    t = np.asarray(t, dtype=float)
    if np.any(-t > cap):
        raise SurrogateOverflowError(f"exponential loss at margin {t.min():g} exceeds cap {cap:g}")
    out = np.exp(-t)
    return out if out.ndim else float(out)


def exponential_deriv(t, cap: float = EXP_MARGIN_CAP):
    return -exponential(t, cap)


def exponential_deriv2(t, cap: float = EXP_MARGIN_CAP):
    return exponential(t, cap)


@dataclass(frozen=True)
class Phi:
    """A convex non-increasing margin loss and its first two derivatives."""

    name: str

    def __post_init__(self):
        if self.name not in ("exp", "log"):
            raise ValueError(f"unknown surrogate {self.name!r}")

    def __call__(self, t):
        return exponential(t) if self.name == "exp" else logistic(t)

    def d1(self, t):
        return exponential_deriv(t) if self.name == "exp" else logistic_deriv(t)

    def d2(self, t):
        return exponential_deriv2(t) if self.name == "exp" else logistic_deriv2(t)


EXPONENTIAL = Phi("exp")
LOGISTIC = Phi("log")


def get_phi(kind) -> Phi:
    if isinstance(kind, Phi):
        return kind
    aliases = {"exp": "exp", "exponential": "exp", "log": "log", "logistic": "log"}
    try:
        return Phi(aliases[str(kind).lower()])
    except KeyError:
        raise ValueError(f"unknown surrogate {kind!r}") from None


def univariate_surrogate_loss(kind, y, h, spec: WeightSpec) -> float:
    """``w(y) * sum_i loss(y_i * h_i)`` with labels mapped to -1/+1."""
    y, h = _check_pair(y, h)
    phi = get_phi(kind)
    return weight(spec, y) * float(np.sum(phi(signed(y) * h)))


def univariate_surrogate_grad(kind, y, h, spec: WeightSpec) -> np.ndarray:
    y, h = _check_pair(y, h)
    phi = get_phi(kind)
    ys = signed(y)
    return weight(spec, y) * ys * phi.d1(ys * h)


def _mixed_index(y):
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    return np.repeat(pos, neg.size), np.tile(neg, pos.size)


def pairwise_surrogate_loss(kind, y, h, spec: WeightSpec) -> float:
    """``w(y) * sum over relevant i, irrelevant j of phi(h_i - h_j)``."""
    y, h = _check_pair(y, h)
    phi = get_phi(kind)
    i, j = _mixed_index(y)
    if i.size == 0:
        return 0.0
    return weight(spec, y) * float(np.sum(phi(h[i] - h[j])))


def pairwise_surrogate_grad(kind, y, h, spec: WeightSpec) -> np.ndarray:
    y, h = _check_pair(y, h)
    phi = get_phi(kind)
    i, j = _mixed_index(y)
    g = np.zeros_like(h)
    if i.size:
        d = np.atleast_1d(phi.d1(h[i] - h[j]))
        np.add.at(g, i, d)
        np.add.at(g, j, -d)
    return weight(spec, y) * g

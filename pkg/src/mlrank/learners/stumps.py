"""Decision stumps and confidence-rated boosting on the weighted exponential loss."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import BinaryProblem, check_features


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    left: float
    right: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.where(X[:, self.feature] <= self.threshold, self.left, self.right)


@dataclass
class StumpEnsemble:
    """Sum of stumps: ``sum_t (left_t if x[f_t] <= theta_t else right_t)``."""

    d: int
    stumps: list[Stump] = field(default_factory=list)
    loss_trace: list[float] = field(default_factory=list, compare=False, repr=False)

    @property
    def T(self) -> int:
        return len(self.stumps)

    def decision_function(self, X) -> np.ndarray:
        X = check_features(X, self.d)
        out = np.zeros(X.shape[0])
        for s in self.stumps:
            out += s.predict(X)
        return out

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"expected {self.d} features, got shape {x.shape}")
        return float(self.decision_function(x[None, :])[0])

    def truncate(self, T: int) -> "StumpEnsemble":
        return StumpEnsemble(self.d, self.stumps[:T], self.loss_trace[: T + 1])

    def to_dict(self) -> dict:
        return {
            "type": "stumps",
            "d": self.d,
            "stumps": [[s.feature, s.threshold, s.left, s.right] for s in self.stumps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StumpEnsemble":
        return cls(d["d"], [Stump(int(f), float(t), float(a), float(b)) for f, t, a, b in d["stumps"]])


class SortedFeatures:
    """Per-feature sort order and midpoint thresholds, computed once per dataset."""

    def __init__(self, X: np.ndarray):
        self.X = X
        self.order = np.argsort(X, axis=0, kind="stable")
        self.xs = np.take_along_axis(X, self.order, axis=0)
        lo, hi = self.xs[:-1], self.xs[1:]
        self.valid = lo < hi
        mid = lo + 0.5 * (hi - lo)
        # rounding may land the midpoint on the upper value
        self.thresholds = np.where(mid < hi, mid, lo)

    def cumsums(self, v: np.ndarray) -> np.ndarray:
        """Cumulative sums of ``v`` in each feature's sorted order, shape (n, d)."""
        return np.cumsum(v[self.order], axis=0)


def _constant_stump(X: np.ndarray, value: float) -> Stump:
    return Stump(0, float(X[:, 0].max()), value, value)


def _leaf_value(wp: float, wn: float, eps: float) -> float:
    return 0.5 * float(np.log((wp + eps) / (wn + eps)))


def best_exp_stump(sf: SortedFeatures, y: np.ndarray, D: np.ndarray, eps: float) -> Stump | None:
    """Stump minimizing ``sqrt(W+_L W-_L) + sqrt(W+_R W-_R)`` under distribution ``D``."""
    dp = np.where(y > 0, D, 0.0)
    dn = np.where(y > 0, 0.0, D)
    P, N = dp.sum(), dn.sum()
    cp = sf.cumsums(dp)[:-1]
    cn = sf.cumsums(dn)[:-1]
    rp = np.maximum(P - cp, 0.0)
    rn = np.maximum(N - cn, 0.0)
    Z = np.sqrt(cp * cn) + np.sqrt(rp * rn)
    Z = np.where(sf.valid, Z, np.inf)
    if not np.isfinite(Z).any():
        return None
    # feature-major scan so ties go to the lowest feature, then lowest threshold
    f, k = np.unravel_index(np.argmin(Z.T), Z.T.shape)
    theta = float(sf.thresholds[k, f])
    left = sf.X[:, f] <= theta
    return Stump(
        int(f),
        theta,
        _leaf_value(dp[left].sum(), dn[left].sum(), eps),
        _leaf_value(dp[~left].sum(), dn[~left].sum(), eps),
    )


def weighted_exp_loss(problem: BinaryProblem, scores: np.ndarray) -> float:
    return float(np.sum(problem.weight * np.exp(-problem.y * scores)))


def train_ada_stumps(problem: BinaryProblem, T: int, eps: float | None = None) -> StumpEnsemble:
    """Real AdaBoost with domain-partitioning stumps.

    Leaf outputs are ``0.5 * log((W+ + eps) / (W- + eps))`` on the normalized
    sample distribution with ``eps = 1 / (2n)`` unless given.  The smoothed
    value lies between 0 and the unsmoothed optimum, so the weighted
    exponential loss never increases.  ``loss_trace[t]`` is that loss after ``t`` rounds.
    """
    if T < 1:
        raise ValueError("number of boosting rounds must be at least 1")
    X, y, w = problem.X, problem.y, problem.weight
    n = X.shape[0]
    if eps is None:
        eps = 1.0 / (2 * n)
    elif not eps > 0:
        raise ValueError("smoothing eps must be positive")
    ens = StumpEnsemble(X.shape[1])
    total = w.sum()
    ens.loss_trace.append(float(total))
    if total <= 0:
        ens.stumps.append(_constant_stump(X, 0.0))
        ens.loss_trace.append(float(total))
        return ens
    D = w / total
    has_pos = bool(np.any(w[y > 0] > 0))
    has_neg = bool(np.any(w[y < 0] > 0))
    if not (has_pos and has_neg):
        P = 1.0 if has_pos else 0.0
        ens.stumps.append(_constant_stump(X, _leaf_value(P, 1.0 - P, eps)))
        ens.loss_trace.append(weighted_exp_loss(problem, ens.decision_function(X)))
        return ens

    sf = SortedFeatures(X)
    F = np.zeros(n)
    for _ in range(T):
        stump = best_exp_stump(sf, y, D, eps)
        if stump is None:
            stump = _constant_stump(X, _leaf_value(D[y > 0].sum(), D[y < 0].sum(), eps))
        s = stump.predict(X)
        ens.stumps.append(stump)
        F += s
        D = D * np.exp(-y * s)
        D /= D.sum()
        ens.loss_trace.append(weighted_exp_loss(problem, F))
    return ens


def best_regression_stump(sf: SortedFeatures, g: np.ndarray) -> Stump:
    """Least-squares stump fit to targets ``g``; constant fit when no split exists."""
    n = g.size
    cs = sf.cumsums(g)[:-1]
    nl = np.arange(1, n)[:, None].astype(float)
    total = g.sum()
    gain = cs**2 / nl + (total - cs) ** 2 / (n - nl)
    gain = np.where(sf.valid, gain, -np.inf)
    if not np.isfinite(gain).any():
        return _constant_stump(sf.X, float(total / n))
    f, k = np.unravel_index(np.argmax(gain.T), gain.T.shape)
    theta = float(sf.thresholds[k, f])
    left = sf.X[:, f] <= theta
    return Stump(int(f), theta, float(g[left].mean()), float(g[~left].mean()))

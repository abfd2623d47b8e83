"""Baselines that minimize the pairwise surrogate over all (relevant, irrelevant) label pairs.

Two scorers: one linear model per label trained by full-batch descent, and
per-label stump ensembles grown by functional-gradient boosting on the
exponential pairwise loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..losses import SurrogateOverflowError, WeightSpec, get_phi
from .base import Standardizer, check_features
from .linear import ConvergenceError, LinearModel
from .stumps import SortedFeatures, StumpEnsemble, best_regression_stump


@dataclass(frozen=True)
class LabelPairs:
    """Flat index of every mixed label pair in a dataset."""

    n: int
    m: int
    row: np.ndarray
    pos: np.ndarray
    neg: np.ndarray
    weight: np.ndarray

    @classmethod
    def build(cls, Y: np.ndarray, spec: WeightSpec) -> "LabelPairs":
        Y = np.asarray(Y)
        n, m = Y.shape
        w = spec.batch(Y)
        mask = (Y[:, :, None] == 1) & (Y[:, None, :] == 0)
        row, pos, neg = np.nonzero(mask)
        return cls(n, m, row, pos, neg, w[row])

    def loss(self, S: np.ndarray, phi) -> float:
        phi = get_phi(phi)
        if self.row.size == 0:
            return 0.0
        D = S[self.row, self.pos] - S[self.row, self.neg]
        return float(self.weight @ phi(D))

    def grad(self, S: np.ndarray, phi) -> np.ndarray:
        """Gradient of :meth:`loss` with respect to the score matrix."""
        phi = get_phi(phi)
        if self.row.size == 0:
            return np.zeros((self.n, self.m))
        D = S[self.row, self.pos] - S[self.row, self.neg]
        t = self.weight * phi.d1(D)
        size = self.n * self.m
        g = np.bincount(self.row * self.m + self.pos, weights=t, minlength=size)
        g -= np.bincount(self.row * self.m + self.neg, weights=t, minlength=size)
        return g.reshape(self.n, self.m)


def _safe_loss(pairs: LabelPairs, S, phi) -> float:
    try:
        return pairs.loss(S, phi)
    except SurrogateOverflowError:
        return np.inf


@dataclass
class PairwiseLinearModel:
    per_label: list[LinearModel]
    preprocessing: Standardizer
    phi: str = "log"
    spec: WeightSpec = field(default_factory=WeightSpec.normalized)
    iterations: int = 0
    converged: bool = False
    loss_trace: list[float] = field(default_factory=list, repr=False, compare=False)

    @property
    def m(self) -> int:
        return len(self.per_label)

    @property
    def d(self) -> int:
        return self.per_label[0].d

    def scores(self, X) -> np.ndarray:
        Z = self.preprocessing.transform(check_features(X, self.d))
        return np.column_stack([lm.decision_function(Z) for lm in self.per_label])

    def to_dict(self) -> dict:
        return {
            "type": "pairwise-linear",
            "phi": self.phi,
            "weight": self.spec.to_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "preprocessing": self.preprocessing.to_dict(),
            "per_label": [lm.to_dict() for lm in self.per_label],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PairwiseLinearModel":
        return cls(
            [LinearModel.from_dict(p) for p in d["per_label"]],
            Standardizer.from_dict(d["preprocessing"]),
            d["phi"],
            WeightSpec.from_dict(d["weight"]),
            d["iterations"],
            d["converged"],
        )


def _unpack(theta: np.ndarray, pre: Standardizer, phi, spec, it, conv, trace) -> PairwiseLinearModel:
    models = [LinearModel(theta[i, :-1].copy(), float(theta[i, -1])) for i in range(theta.shape[0])]
    return PairwiseLinearModel(models, pre, get_phi(phi).name, spec, it, conv, list(trace))


def pairwise_linear_objective(theta: np.ndarray, Z: np.ndarray, pairs: LabelPairs, phi, l2: float = 0.0) -> float:
    S = Z @ theta[:, :-1].T + theta[:, -1]
    return pairs.loss(S, phi) + l2 * float(np.sum(theta[:, :-1] ** 2))


def pairwise_linear_gradient(theta: np.ndarray, Z: np.ndarray, pairs: LabelPairs, phi, l2: float = 0.0) -> np.ndarray:
    S = Z @ theta[:, :-1].T + theta[:, -1]
    G = pairs.grad(S, phi)
    return np.hstack([G.T @ Z + 2.0 * l2 * theta[:, :-1], G.sum(axis=0)[:, None]])


def train_pairwise_linear(
    X,
    Y,
    phi="log",
    spec: WeightSpec | None = None,
    max_iter: int = 1000,
    tol: float = 1e-8,
    l2: float = 0.0,
    standardize: bool = True,
    checkpoints=(),
    strict: bool = False,
):
    """Full-batch gradient descent on the weighted pairwise surrogate of linear scorers.

    Each iteration is one accepted Armijo step; the trial step starts at twice
    the previous accepted step.  The iteration count doubles as the
    regularizer (early stopping), so hitting ``max_iter`` is normal; with
    ``strict=True`` it raises :class:`ConvergenceError` instead.

    Returns the model, or ``(model, {iterations: model})`` when ``checkpoints``
    is nonempty.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y)
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    spec = spec or WeightSpec.normalized()
    pre = Standardizer.fit(X) if standardize else Standardizer.identity(X.shape[1])
    Z = pre.transform(X)
    pairs = LabelPairs.build(Y, spec)
    m, d = Y.shape[1], X.shape[1]
    theta = np.zeros((m, d + 1))
    f = pairwise_linear_objective(theta, Z, pairs, phi, l2)
    g = pairwise_linear_gradient(theta, Z, pairs, phi, l2)
    trace = [f]
    step = 1.0 / max(1.0, float(pairs.weight.sum()))
    wanted = sorted(set(int(c) for c in checkpoints))
    saved = {}
    if 0 in wanted:
        saved[0] = _unpack(theta, pre, phi, spec, 0, False, trace)
    it = 0
    converged = False
    while True:
        gn = float(np.max(np.abs(g)))
        if gn < tol:
            converged = True
            break
        if it >= max_iter:
            break
        t = 2.0 * step
        g2 = float(np.sum(g * g))
        while True:
            cand = theta - t * g
            fc = pairwise_linear_objective(cand, Z, pairs, phi, l2) if np.isfinite(t) else np.inf
            if fc <= f - 1e-4 * t * g2:
                break
            t *= 0.5
            if t < 1e-30:
                break
        if t < 1e-30:
            break
        step = t
        theta, f = cand, fc
        g = pairwise_linear_gradient(theta, Z, pairs, phi, l2)
        it += 1
        trace.append(f)
        if it in wanted:
            saved[it] = _unpack(theta, pre, phi, spec, it, False, trace)
    model = _unpack(theta, pre, phi, spec, it, converged, trace)
    for c in wanted:
        saved.setdefault(c, model)
    if strict and not converged:
        raise ConvergenceError("pairwise descent did not converge", model, gn, trace)
    return (model, saved) if wanted else model


@dataclass
class PairwiseStumpModel:
    """Per-label stump ensembles; stump ``t`` was added to label ``t mod m``."""

    per_label: list[StumpEnsemble]
    spec: WeightSpec = field(default_factory=WeightSpec.normalized)
    loss_trace: list[float] = field(default_factory=list, repr=False, compare=False)

    @property
    def m(self) -> int:
        return len(self.per_label)

    @property
    def d(self) -> int:
        return self.per_label[0].d

    @property
    def total_stumps(self) -> int:
        return sum(e.T for e in self.per_label)

    def scores(self, X) -> np.ndarray:
        X = check_features(X, self.d)
        return np.column_stack([e.decision_function(X) for e in self.per_label])

    def truncate(self, total: int) -> "PairwiseStumpModel":
        """Model after the first ``total`` stumps (round-robin order)."""
        m = self.m
        keep = [max(0, -(-(total - i) // m)) for i in range(m)]
        return PairwiseStumpModel(
            [e.truncate(k) for e, k in zip(self.per_label, keep)], self.spec, self.loss_trace[: total + 1]
        )

    def to_dict(self) -> dict:
        return {
            "type": "pairwise-stumps",
            "weight": self.spec.to_dict(),
            "per_label": [e.to_dict() for e in self.per_label],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PairwiseStumpModel":
        return cls([StumpEnsemble.from_dict(e) for e in d["per_label"]], WeightSpec.from_dict(d["weight"]))


def _line_search(f0: float, slope: float, loss_at) -> tuple[float, float]:
    """Step along a descent direction of a convex 1-d loss; returns (step, loss)."""
    if slope >= 0:
        return 0.0, f0
    t, ft = 1.0, loss_at(1.0)
    if ft <= f0 + 1e-4 * t * slope:
        # expand while it keeps paying off
        for _ in range(30):
            t2 = 2.0 * t
            f2 = loss_at(t2)
            if not f2 < ft:
                break
            t, ft = t2, f2
        return t, ft
    while t > 1e-12:
        t *= 0.5
        ft = loss_at(t)
        if ft <= f0 + 1e-4 * t * slope:
            return t, ft
    return 0.0, f0


def train_pairwise_stumps(X, Y, spec: WeightSpec | None = None, T_total: int = 100) -> PairwiseStumpModel:
    """Functional-gradient boosting of per-label stumps on the exponential pairwise loss.

    Labels take turns: stump ``t`` is a least-squares fit to the negative
    gradient of the loss with respect to label ``t mod m``'s scores, scaled
    by a line search.  A step that cannot decrease the loss gets scale 0,
    so the training loss trace never increases.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y)
    n, m = Y.shape
    if T_total < m:
        raise ValueError(f"need at least one stump per label: T_total={T_total} < m={m}")
    spec = spec or WeightSpec.normalized()
    pairs = LabelPairs.build(Y, spec)
    sf = SortedFeatures(X)
    ensembles = [StumpEnsemble(X.shape[1]) for _ in range(m)]
    S = np.zeros((n, m))
    f = pairs.loss(S, "exp")
    trace = [f]
    for t in range(T_total):
        i = t % m
        G = pairs.grad(S, "exp")[:, i]
        stump = best_regression_stump(sf, -G)
        s = stump.predict(X)

        def loss_at(eta, i=i, s=s):
            S2 = S.copy()
            S2[:, i] += eta * s
            return _safe_loss(pairs, S2, "exp")

        eta, f_new = _line_search(f, float(G @ s), loss_at)
        scaled = type(stump)(stump.feature, stump.threshold, eta * stump.left, eta * stump.right)
        ensembles[i].stumps.append(scaled)
        S[:, i] += scaled.predict(X)
        f = pairs.loss(S, "exp")
        trace.append(f)
    for e in ensembles:
        e.loss_trace = []
    return PairwiseStumpModel(ensembles, spec, trace)

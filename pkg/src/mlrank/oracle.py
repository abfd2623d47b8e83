"""Exact distribution-level quantities for multilabel rank loss.

Given an explicit conditional distribution ``P(y | x)`` over all ``2**m``
labelings, this module computes the weighted pair and single-label masses,
Bayes risks and regrets for the rank loss and the univariate surrogates, the
reduction to bipartite ranking, and the pairwise-surrogate minimizer used to
hunt for inconsistency witnesses.

Index convention: ``pair[i, j, u, v]`` is the weighted mass of
``{y_i = u, y_j = v}``; ``pair[i, j, 1, 0]`` is "label i relevant, label j
irrelevant".  Labelings are enumerated by :func:`mlrank.losses.all_labelings`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .losses import WeightSpec, all_labelings, get_phi, Phi

MAX_LABELS = 20
PROB_TOL = 1e-12


class DegenerateWeightError(ValueError):
    """Expected weight ``W`` is zero, so the bipartite reduction is undefined."""


@lru_cache(maxsize=None)
def _labelings(m: int) -> np.ndarray:
    Y = all_labelings(m)
    Y.setflags(write=False)
    return Y


@dataclass(frozen=True)
class ConditionalLabelDistribution:
    m: int
    probs: np.ndarray

    def __post_init__(self):
        if not 1 <= self.m <= MAX_LABELS:
            raise ValueError(f"label count must be in [1, {MAX_LABELS}], got {self.m}")
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (2**self.m,):
            raise ValueError(f"expected {2**self.m} probabilities, got shape {p.shape}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError("probabilities must be nonnegative and sum to one")
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_mapping(cls, m: int, mapping: dict) -> "ConditionalLabelDistribution":
        p = np.zeros(2**m)
        for y, prob in mapping.items():
            y = tuple(int(b) for b in y)
            if len(y) != m:
                raise ValueError(f"labeling {y} has wrong length")
            p[int("".join(map(str, y)), 2)] += prob
        return cls(m, p)

    @classmethod
    def point_mass(cls, y) -> "ConditionalLabelDistribution":
        return cls.from_mapping(len(y), {tuple(y): 1.0})

    @classmethod
    def uniform(cls, m: int) -> "ConditionalLabelDistribution":
        return cls(m, np.full(2**m, 2.0**-m))

    @classmethod
    def product(cls, marginals) -> "ConditionalLabelDistribution":
        q = np.asarray(marginals, dtype=float)
        Y = _labelings(q.size)
        p = np.prod(np.where(Y == 1, q, 1.0 - q), axis=1)
        return cls(q.size, p / p.sum())

    @property
    def labelings(self) -> np.ndarray:
        return _labelings(self.m)

    def marginals(self) -> np.ndarray:
        return self.probs @ self.labelings


@dataclass(frozen=True)
class DeltaTable:
    """Weighted label-pair masses ``pair``, single-label masses ``single`` and ``W``."""

    m: int
    pair: np.ndarray  # (m, m, 2, 2)
    single: np.ndarray  # (m, 2)
    W: float

    @property
    def d1(self) -> np.ndarray:
        """Weighted relevance mass of each label."""
        return self.single[:, 1]

    def scaled(self, c: float) -> "DeltaTable":
        return DeltaTable(self.m, c * self.pair, c * self.single, c * self.W)


@dataclass(frozen=True)
class BipartiteReduction:
    m: int
    eta: np.ndarray
    instance_prob: np.ndarray


def compute_deltas(dist: ConditionalLabelDistribution, spec: WeightSpec) -> DeltaTable:
    """Exact weighted masses by enumeration of every labeling."""
    Y = dist.labelings
    m = dist.m
    wp = spec.batch(Y) * dist.probs
    Z = np.concatenate([1 - Y, Y], axis=1).astype(float)  # column u*m + i is [y_i = u]
    G = (Z * wp[:, None]).T @ Z
    pair = G.reshape(2, m, 2, m).transpose(1, 3, 0, 2).copy()
    single = (wp @ Z).reshape(2, m).T.copy()
    return DeltaTable(m, pair, single, float(wp.sum()))


def _scores(table_m: int, h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (table_m,):
        raise ValueError(f"expected {table_m} scores, got shape {h.shape}")
    return h


def _lower(m: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.tril_indices(m, k=-1)
    return i, j


def conditional_rank_risk(table: DeltaTable, h) -> float:
    """Expected rank loss of ``h`` from the pair masses."""
    h = _scores(table.m, h)
    i, j = _lower(table.m)
    d10 = table.pair[i, j, 1, 0]
    d01 = table.pair[i, j, 0, 1]
    lt = h[i] < h[j]
    gt = h[i] > h[j]
    eq = h[i] == h[j]
    return float(np.sum(d10 * lt + d01 * gt + 0.5 * (d10 + d01) * eq))


def bayes_rank_risk(table: DeltaTable) -> float:
    i, j = _lower(table.m)
    return float(np.sum(np.minimum(table.pair[i, j, 1, 0], table.pair[i, j, 0, 1])))


def bayes_ranker(table: DeltaTable) -> np.ndarray:
    return table.d1.copy()


def regret_conditional(table: DeltaTable, h) -> float:
    """Rank regret of ``h`` computed from the single-label masses alone."""
    h = _scores(table.m, h)
    i, j = _lower(table.m)
    a, b = table.d1[i], table.d1[j]
    lt = h[i] < h[j]
    gt = h[i] > h[j]
    eq = h[i] == h[j]
    return float(np.sum(a * lt + b * gt + 0.5 * (a + b) * eq - np.minimum(a, b)))


def _surrogate_terms(kind: str, d1, d0, h):
    phi = get_phi(kind)
    return d1 * phi(h) + d0 * phi(-h)


def surrogate_infimum(kind, d1, d0) -> np.ndarray:
    """Pointwise ``inf_h [d1 loss(h) + d0 loss(-h)]`` in closed form."""
    d1 = np.asarray(d1, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    phi = get_phi(kind)
    if phi.name == "exp":
        return 2.0 * np.sqrt(d1 * d0)
    tot = d1 + d0
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -(np.where(d1 > 0, d1 * np.log(d1 / tot), 0.0) + np.where(d0 > 0, d0 * np.log(d0 / tot), 0.0))
    return np.where(tot > 0, ent, 0.0)


def univariate_minimizer(kind, table: DeltaTable) -> np.ndarray:
    """Pointwise surrogate minimizers; infinite where a label is deterministic."""
    phi = get_phi(kind)
    d1, d0 = table.single[:, 1], table.single[:, 0]
    with np.errstate(divide="ignore"):
        r = np.log(d1) - np.log(d0)
    return 0.5 * r if phi.name == "exp" else r


def univariate_surrogate_risk(kind, table: DeltaTable, h) -> float:
    h = _scores(table.m, h)
    return float(np.sum(_surrogate_terms(kind, table.single[:, 1], table.single[:, 0], h)))


def univariate_surrogate_regret(kind, table: DeltaTable, h) -> float:
    if table.W <= 0:
        raise DegenerateWeightError("surrogate regret needs W > 0")
    risk = univariate_surrogate_risk(kind, table, h)
    best = float(np.sum(surrogate_infimum(kind, table.single[:, 1], table.single[:, 0])))
    return max(risk - best, 0.0)


def reduce_to_bipartite(table: DeltaTable) -> BipartiteReduction:
    if table.W <= 0:
        raise DegenerateWeightError("degenerate weight: W = 0")
    eta = np.clip(table.d1 / table.W, 0.0, 1.0)
    return BipartiteReduction(table.m, eta, np.full(table.m, 1.0 / table.m))


def bipartite_regret(red: BipartiteReduction, h) -> float:
    """Bipartite rank regret of ``h`` over the ``m`` pseudo-instances, all ordered pairs."""
    h = _scores(red.m, h)
    eta = red.eta
    a = eta[:, None] * (1.0 - eta[None, :])  # i positive, j negative
    b = a.T
    lt = h[:, None] < h[None, :]
    gt = h[:, None] > h[None, :]
    eq = h[:, None] == h[None, :]
    B = a * lt + b * gt + 0.5 * (a + b) * eq - np.minimum(a, b)
    return float(B.sum()) / red.m**2


BOUND_CONSTANT = {"exp": math.sqrt(6) / 4, "log": math.sqrt(2) / 2}


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    C: float
    surrogate_regret: float
    C_wmax: float | None = None
    holds: bool = True

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def check_regret_bound(kind, table: DeltaTable, h, w_max: float | None = None, slack: float = 1e-9) -> BoundReport:
    """Rank regret against the square-root surrogate-regret bound at one ``x``.

    Uses the per-instance constant ``C = m sqrt(m W)``; ``C_wmax`` reports the
    looser ``m sqrt(m w_max)`` when ``w_max`` is given.
    """
    phi = get_phi(kind)
    m = table.m
    lhs = regret_conditional(table, h)
    sreg = univariate_surrogate_regret(phi, table, h)
    C = m * math.sqrt(m * table.W)
    rhs = BOUND_CONSTANT[phi.name] * C * math.sqrt(sreg)
    C_wmax = None if w_max is None else m * math.sqrt(m * w_max)
    return BoundReport(lhs, rhs, C, sreg, C_wmax, lhs <= rhs + slack)


def _pair_weights(table: DeltaTable) -> np.ndarray:
    """``A[i, j]`` = mass of (i relevant, j irrelevant); diagonal zero."""
    A = table.pair[:, :, 1, 0].copy()
    np.fill_diagonal(A, 0.0)
    return A


def pairwise_conditional_risk(phi, table: DeltaTable, h) -> float:
    """Expected pairwise surrogate loss of ``h``."""
    phi = get_phi(phi)
    h = _scores(table.m, h)
    A = _pair_weights(table)
    D = h[:, None] - h[None, :]
    mask = A > 0
    return float(np.sum(A[mask] * phi(D[mask])))


def _pairwise_grad_hess(phi: Phi, A: np.ndarray, h: np.ndarray):
    D = h[:, None] - h[None, :]
    G1 = A * phi.d1(D)
    G2 = A * phi.d2(D)
    grad = G1.sum(axis=1) - G1.sum(axis=0)
    S = G2 + G2.T
    hess = np.diag(S.sum(axis=1)) - S
    return grad, hess


@dataclass
class MinimizeResult:
    h: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    at_cap: bool


def minimize_pairwise_risk(
    phi, table: DeltaTable, tol: float = 1e-10, max_iter: int = 100_000, cap: float = 50.0
) -> MinimizeResult:
    """Minimize the expected pairwise surrogate loss with the last score fixed at 0.

    Damped Newton with Armijo halving, falling back to the gradient direction
    when the reduced Hessian is not positive definite.  Coordinates are clipped
    to ``[-cap, cap]``; a clipped coordinate marks a minimum at infinity.
    """
    phi = get_phi(phi)
    A = _pair_weights(table)
    m = table.m
    h = np.zeros(m)

    def f(z):
        D = z[:, None] - z[None, :]
        mask = A > 0
        return float(np.sum(A[mask] * phi(D[mask])))

    fx = f(h)
    g = np.zeros(m - 1)
    for it in range(1, max_iter + 1):
        grad, hess = _pairwise_grad_hess(phi, A, h)
        g = grad[:-1]
        free = np.abs(h[:-1]) < cap
        # at the cap, a gradient pushing further out is not an optimality failure
        pushing_out = ~free & (np.sign(-g) == np.sign(h[:-1]))
        gn = float(np.max(np.abs(np.where(pushing_out, 0.0, g)), initial=0.0))
        if gn < tol:
            return MinimizeResult(h, True, it, gn, bool(np.any(~free)))
        H = hess[:-1, :-1]
        try:
            L = np.linalg.cholesky(H)
            step = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        except np.linalg.LinAlgError:
            step = -g
        if step @ g >= 0:
            step = -g
        t = 1.0
        noise = 1e-13 * max(1.0, abs(fx))
        while True:
            z = h.copy()
            z[:-1] = np.clip(h[:-1] + t * step, -cap, cap)
            fz = f(z)
            if fz <= fx + 1e-4 * (g @ (z[:-1] - h[:-1])):
                break
            # f differences below rounding: judge the step by the gradient instead
            if abs(fz - fx) <= noise:
                gz = _pairwise_grad_hess(phi, A, z)[0][:-1]
                if np.max(np.abs(gz)) < np.max(np.abs(g)):
                    break
            if t < 1e-16:
                return MinimizeResult(h, False, it, gn, bool(np.any(~free)))
            t *= 0.5
        h, fx = z, fz
    return MinimizeResult(h, False, max_iter, float(np.max(np.abs(g), initial=0.0)), bool(np.any(np.abs(h[:-1]) >= cap)))


def ordering_violations(table: DeltaTable, h, h_tie: float = 1e-7, delta_tol: float = 1e-4) -> list[tuple[int, int]]:
    """Pairs ``i < j`` where ``sign(h_i - h_j)`` disagrees with ``sign(d1_i - d1_j)``.

    Only pairs whose mass gap exceeds ``delta_tol`` count; score gaps below
    ``h_tie`` are ties.
    """
    h = np.asarray(h, dtype=float)
    out = []
    for i in range(table.m):
        for j in range(i + 1, table.m):
            dd = table.pair[i, j, 1, 0] - table.pair[i, j, 0, 1]
            if abs(dd) <= delta_tol:
                continue
            dh = h[i] - h[j]
            if abs(dh) < h_tie or np.sign(dh) != np.sign(dd):
                out.append((i, j))
    return out


@dataclass
class Witness:
    dist: ConditionalLabelDistribution
    table: DeltaTable
    h_star: np.ndarray
    h_univariate: np.ndarray
    violated_pair: tuple[int, int]
    delta_gap: float
    sample_index: int

    def to_dict(self) -> dict:
        i, j = self.violated_pair
        return {
            "m": self.dist.m,
            "probs": self.dist.probs.tolist(),
            "h_star": self.h_star.tolist(),
            "h_univariate": self.h_univariate.tolist(),
            "violated_pair": [i, j],
            "delta_10_minus_01": self.delta_gap,
            "sign_delta": int(np.sign(self.delta_gap)),
            "sign_h": int(np.sign(self.h_star[i] - self.h_star[j])),
            "sample_index": self.sample_index,
        }


@dataclass
class WitnessSearch:
    witness: Witness | None
    tried: int
    skipped: int
    univariate_violations: int = 0
    witnesses_found: int = 0


def find_inconsistency_witness(
    phi,
    m: int = 3,
    budget: int = 10_000,
    seed: int = 0,
    spec: WeightSpec | None = None,
    sampler=None,
    stop_at_first: bool = True,
) -> WitnessSearch:
    """Search random distributions for one where the pairwise minimizer misranks a pair.

    Every sample also checks that the univariate minimizers order the labels
    correctly; ``univariate_violations`` counts failures of that (should be 0).
    ``sampler(rng, m)`` overrides the flat Dirichlet.
    """
    phi = get_phi(phi)
    spec = spec or WeightSpec.constant(1.0)
    rng = np.random.default_rng(seed)
    sampler = sampler or random_distribution
    found = None
    n_found = skipped = uni_bad = 0
    tried = 0
    for k in range(budget):
        tried += 1
        dist = sampler(rng, m)
        table = compute_deltas(dist, spec)
        if table.W <= 0:
            skipped += 1
            continue
        h_uni = univariate_minimizer(phi, table)
        if ordering_violations(table, h_uni):
            uni_bad += 1
        res = minimize_pairwise_risk(phi, table)
        if not res.converged:
            skipped += 1
            continue
        bad = ordering_violations(table, res.h)
        if bad:
            n_found += 1
            if found is None:
                i, j = bad[0]
                found = Witness(dist, table, res.h, h_uni, (i, j), float(table.pair[i, j, 1, 0] - table.pair[i, j, 0, 1]), k)
            if stop_at_first:
                break
    return WitnessSearch(found, tried, skipped, uni_bad, n_found)


# random instances for verification sweeps


def random_distribution(rng: np.random.Generator, m: int) -> ConditionalLabelDistribution:
    """Flat Dirichlet over the ``2**m`` labelings."""
    e = rng.standard_exponential(2**m)
    return ConditionalLabelDistribution(m, e / e.sum())


def random_weight_spec(rng: np.random.Generator, m: int) -> WeightSpec:
    kind = rng.integers(3)
    if kind == 0:
        return WeightSpec.constant(float(rng.uniform(0.1, 3.0)))
    if kind == 1:
        return WeightSpec.normalized()
    w = rng.uniform(0.0, 2.0, size=2**m)
    Y = _labelings(m)
    return WeightSpec.table({tuple(y): float(v) for y, v in zip(Y.tolist(), w)}, w_max=2.0)


def random_scores(rng: np.random.Generator, m: int) -> np.ndarray:
    """Gaussian scores, or small integers (so ties occur) a third of the time."""
    if rng.random() < 1 / 3:
        return rng.integers(0, 3, size=m).astype(float)
    return rng.normal(size=m)

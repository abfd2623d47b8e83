"""Latent linear model for synthetic multilabel data.

``f = A x + eps`` with ``x`` uniform on the unit disk, rows of ``A`` on the
unit circle and ``eps ~ N(0, noise_sd^2)`` per coordinate; labels are
``y = [M f > 0]``.  ``M = I`` gives conditionally independent labels, a
random ``M`` with entries in ``[-1, 1]`` makes them dependent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import MultilabelDataset
from .losses import WeightSpec
from .oracle import ConditionalLabelDistribution, bayes_rank_risk, compute_deltas

MAX_MC_LABELS = 12


@dataclass(frozen=True)
class SyntheticModel:
    A: np.ndarray  # (m, 2)
    M: np.ndarray  # (m, m)
    noise_sd: float = 0.5
    seed: int | None = None

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def dependent(self) -> bool:
        return not np.array_equal(self.M, np.eye(self.m))

    def labels(self, X: np.ndarray, eps: np.ndarray) -> np.ndarray:
        F = X @ self.A.T + eps
        return (F @ self.M.T > 0).astype(np.int8)

    def with_noise(self, noise_sd: float) -> "SyntheticModel":
        return SyntheticModel(self.A, self.M, noise_sd, self.seed)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "A": self.A.tolist(),
            "M": self.M.tolist(),
            "M_mode": "random" if self.dependent else "identity",
            "noise_sd": self.noise_sd,
            "seed": self.seed,
        }


def sample_model(m: int, dependent: bool, seed: int, noise_sd: float = 0.5) -> SyntheticModel:
    if m < 2:
        raise ValueError("need at least two labels")
    rng = np.random.default_rng(seed)
    angle = rng.uniform(0.0, 2.0 * np.pi, size=m)
    A = np.column_stack([np.cos(angle), np.sin(angle)])
    M = rng.uniform(-1.0, 1.0, size=(m, m)) if dependent else np.eye(m)
    return SyntheticModel(A, M, noise_sd, seed)


def sample_disk(rng: np.random.Generator, n: int) -> np.ndarray:
    r = np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def sample_dataset(model: SyntheticModel, n: int, seed: int) -> MultilabelDataset:
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    X = sample_disk(rng, n)
    eps = rng.normal(0.0, model.noise_sd, size=(n, model.m))
    header = [
        f"# model_seed={model.seed} M={'random' if model.dependent else 'identity'} "
        f"noise_sd={model.noise_sd!r} data_seed={seed} n={n}"
    ]
    return MultilabelDataset(X, model.labels(X, eps), header=header)


@dataclass
class MonteCarloConditional:
    dist: ConditionalLabelDistribution
    d1: np.ndarray  # estimated weighted relevance mass per label
    d1_se: np.ndarray
    reps: int


def _encode(Y: np.ndarray) -> np.ndarray:
    m = Y.shape[1]
    return Y.astype(np.int64) @ (1 << np.arange(m - 1, -1, -1))


def mc_conditional(model: SyntheticModel, x, reps: int, seed: int, spec: WeightSpec | None = None) -> MonteCarloConditional:
    """Empirical ``P(y | x)`` from ``reps`` noise draws at a fixed ``x``."""
    if reps < 1:
        raise ValueError("reps must be positive")
    if model.m > MAX_MC_LABELS:
        raise ValueError(f"Monte-Carlo tables are limited to m <= {MAX_MC_LABELS}")
    spec = spec or WeightSpec.constant(1.0)
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=float).reshape(1, 2)
    eps = rng.normal(0.0, model.noise_sd, size=(reps, model.m))
    Y = model.labels(np.repeat(x, reps, axis=0), eps)
    counts = np.bincount(_encode(Y), minlength=2**model.m)
    dist = ConditionalLabelDistribution(model.m, counts / reps)
    contrib = spec.batch(Y)[:, None] * Y
    se = contrib.std(axis=0, ddof=1) / np.sqrt(reps) if reps > 1 else np.full(model.m, np.inf)
    return MonteCarloConditional(dist, contrib.mean(axis=0), se, reps)


@dataclass
class BayesRiskEstimate:
    mean: float
    se: float
    per_x: np.ndarray


def mc_bayes_risk(
    model: SyntheticModel, spec: WeightSpec, n_test: int, reps_per_x: int, seed: int, n_boot: int = 1000
) -> BayesRiskEstimate:
    """Average exact Bayes rank risk of Monte-Carlo conditional tables at sampled ``x``.

    The standard error is a bootstrap over the sampled points.
    """
    rng = np.random.default_rng(seed)
    X = sample_disk(rng, n_test)
    seeds = rng.integers(0, 2**63, size=n_test)
    risks = np.empty(n_test)
    for k in range(n_test):
        mc = mc_conditional(model, X[k], reps_per_x, int(seeds[k]))
        risks[k] = bayes_rank_risk(compute_deltas(mc.dist, spec))
    boot = rng.integers(0, n_test, size=(n_boot, n_test))
    se = float(risks[boot].mean(axis=1).std(ddof=1)) if n_test > 1 else float("nan")
    return BayesRiskEstimate(float(risks.mean()), se, risks)

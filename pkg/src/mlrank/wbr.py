"""Weighted Binary Relevance: one weighted binary problem per label.

Instance ``n`` enters every label's problem with weight ``w(y^n)`` and
signed label ``2 y_i^n - 1``.  Minimizing the univariate exponential or
logistic loss per label then minimizes the multilabel surrogates whose
regret bounds the rank regret.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataio import MultilabelDataset
from .learners import BinaryProblem, LinearModel, Standardizer, StumpEnsemble, train_ada_stumps, train_logreg
from .learners.base import check_features
from .losses import WeightSpec, rank_loss_batch

LEARNERS = ("ada", "logreg")


class LabelTrainingError(RuntimeError):
    def __init__(self, label: int, cause: Exception):
        super().__init__(f"training label {label} failed: {cause}")
        self.label = label
        self.cause = cause


@dataclass
class WbrModel:
    per_label: list
    weight_spec: WeightSpec
    learner: str
    preprocessing: Standardizer | None = None
    hyper: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.per_label)

    @property
    def d(self) -> int:
        return self.per_label[0].d

    def scores(self, X) -> np.ndarray:
        X = check_features(X, self.d)
        if self.preprocessing is not None:
            X = self.preprocessing.transform(X)
        return np.column_stack([p.decision_function(X) for p in self.per_label])

    def truncate(self, T: int) -> "WbrModel":
        """Boosted model restricted to its first ``T`` rounds per label."""
        if self.learner != "ada":
            raise ValueError("only boosted models can be truncated")
        return WbrModel([p.truncate(T) for p in self.per_label], self.weight_spec, "ada", None, {**self.hyper, "T": T})

    def to_dict(self) -> dict:
        return {
            "type": "wbr",
            "learner": self.learner,
            "weight": self.weight_spec.to_dict(),
            "hyper": self.hyper,
            "preprocessing": None if self.preprocessing is None else self.preprocessing.to_dict(),
            "per_label": [p.to_dict() for p in self.per_label],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WbrModel":
        load = StumpEnsemble.from_dict if d["learner"] == "ada" else LinearModel.from_dict
        pre = d.get("preprocessing")
        return cls(
            [load(p) for p in d["per_label"]],
            WeightSpec.from_dict(d["weight"]),
            d["learner"],
            None if pre is None else Standardizer.from_dict(pre),
            d.get("hyper", {}),
        )


def decompose(data: MultilabelDataset, spec: WeightSpec, X: np.ndarray | None = None) -> list[BinaryProblem]:
    """The ``m`` weighted binary problems; zero-weight instances stay in."""
    w = spec.batch(data.Y)
    X = data.X if X is None else X
    return [BinaryProblem(X, 2.0 * data.Y[:, i] - 1.0, w) for i in range(data.m)]


def _fit_one(problem: BinaryProblem, learner: str, hyper: dict):
    if learner == "ada":
        return train_ada_stumps(problem, int(hyper["T"]), hyper.get("eps"))
    return train_logreg(problem, float(hyper["lam"]))


def train_wbr(
    data: MultilabelDataset,
    spec: WeightSpec,
    learner: str = "logreg",
    hyper: dict | None = None,
    standardize: bool | None = None,
    workers: int = 1,
) -> WbrModel:
    """Train one model per label on the decomposed problems.

    ``hyper`` is ``{"T": rounds}`` for ``ada``, optionally with ``"eps"``
    for the leaf smoothing, and ``{"lam": penalty}`` for ``logreg``.
    Features are standardized for ``logreg`` unless ``standardize`` says
    otherwise; stumps never need it.  All training is
    deterministic, so ``workers > 1`` gives the same model.
    """
    if learner not in LEARNERS:
        raise ValueError(f"unknown learner {learner!r}; expected one of {LEARNERS}")
    hyper = dict(hyper or ({"T": 100} if learner == "ada" else {"lam": 1.0}))
    if standardize is None:
        standardize = learner == "logreg"
    pre = Standardizer.fit(data.X) if standardize else None
    X = pre.transform(data.X) if pre is not None else data.X
    problems = decompose(data, spec, X)

    def fit(i):
        try:
            return _fit_one(problems[i], learner, hyper)
        except Exception as exc:
            raise LabelTrainingError(i, exc) from exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            models = list(pool.map(fit, range(data.m)))
    else:
        models = [fit(i) for i in range(data.m)]
    return WbrModel(models, spec, learner, pre, hyper)


def predict_scores(model, x) -> np.ndarray:
    """Score vector for one instance; label ``i``'s score comes from model ``i``."""
    return model.scores(np.asarray(x, dtype=float)[None, :])[0]


def ranking(scores, tie_break: bool = True) -> tuple[list[int], bool]:
    """Labels in decreasing-score order; ties broken by ascending label index.

    Returns the order and whether any tie had to be broken.
    """
    s = np.asarray(scores, dtype=float)
    order = sorted(range(s.size), key=lambda i: (-s[i], i))
    tied = bool(np.any(np.diff(s[order]) == 0))
    return order, tied


@dataclass
class Evaluation:
    mean: float
    per_instance: np.ndarray


def evaluate(model, data: MultilabelDataset, spec: WeightSpec) -> Evaluation:
    """Mean weighted rank loss of ``model.scores`` over ``data``."""
    if data.n == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    S = model.scores(data.X) if hasattr(model, "scores") else np.asarray(model(data.X))
    losses = rank_loss_batch(data.Y, S, spec)
    return Evaluation(float(losses.mean()), losses)

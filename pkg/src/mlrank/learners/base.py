from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np


class WeightedBinarySample(NamedTuple):
    features: np.ndarray
    label: int  # -1 or +1
    weight: float


@dataclass
class BinaryProblem:
    """A weighted binary classification problem stored column-wise.

    ``y`` holds -1/+1 labels and ``weight`` nonnegative instance weights.
    """

    X: np.ndarray
    y: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.weight = np.asarray(self.weight, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("features must be a 2-d array")
        n = self.X.shape[0]
        if self.y.shape != (n,) or self.weight.shape != (n,):
            raise ValueError("labels and weights must have one entry per row")
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("binary labels must be -1 or +1")
        if np.any(self.weight < 0):
            raise ValueError("sample weights must be nonnegative")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("features must be finite")

    @classmethod
    def from_samples(cls, samples: Sequence[WeightedBinarySample]) -> "BinaryProblem":
        return cls(
            np.array([s.features for s in samples], dtype=float),
            np.array([s.label for s in samples], dtype=float),
            np.array([s.weight for s in samples], dtype=float),
        )

    def samples(self) -> list[WeightedBinarySample]:
        return [WeightedBinarySample(x, int(t), float(w)) for x, t, w in zip(self.X, self.y, self.weight)]

    def __len__(self) -> int:
        return self.X.shape[0]


def check_features(X, d: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != d:
        raise ValueError(f"dimension mismatch: model has {d} features, input has {X.shape[1]}")
    return X


@dataclass
class Standardizer:
    """Per-feature centering and scaling fitted on training data only."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        sd = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(sd > 0, sd, 1.0))

    @classmethod
    def identity(cls, d: int) -> "Standardizer":
        return cls(np.zeros(d), np.ones(d))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.array(d["mean"], dtype=float), np.array(d["scale"], dtype=float))

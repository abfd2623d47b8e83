from .base import BinaryProblem, Standardizer, WeightedBinarySample
from .linear import ConvergenceError, LinearModel, logreg_gradient, logreg_objective, train_logreg
from .pairwise import (
    LabelPairs,
    PairwiseLinearModel,
    PairwiseStumpModel,
    pairwise_linear_gradient,
    pairwise_linear_objective,
    train_pairwise_linear,
    train_pairwise_stumps,
)
from .stumps import Stump, StumpEnsemble, train_ada_stumps


def predict(model, x) -> float:
    """Score of a single binary model on one feature vector."""
    return model.predict(x)


__all__ = [
    "BinaryProblem",
    "ConvergenceError",
    "LabelPairs",
    "LinearModel",
    "PairwiseLinearModel",
    "PairwiseStumpModel",
    "Standardizer",
    "Stump",
    "StumpEnsemble",
    "WeightedBinarySample",
    "logreg_gradient",
    "logreg_objective",
    "pairwise_linear_gradient",
    "pairwise_linear_objective",
    "predict",
    "train_ada_stumps",
    "train_logreg",
    "train_pairwise_linear",
    "train_pairwise_stumps",
]

"""Multilabel rank-loss minimization through weighted binary relevance."""

from .dataio import MultilabelDataset, read_sparse, split, write_sparse
from .losses import (
    WeightSpec,
    bipartite_rank_loss,
    pairwise_surrogate_loss,
    rank_loss,
    univariate_surrogate_loss,
    weight,
)
from .wbr import WbrModel, decompose, evaluate, predict_scores, train_wbr

__version__ = "0.1.0"

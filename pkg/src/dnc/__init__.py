"""Deep nearest centroids: nonparametric sub-centroid classification on a
learned embedding, trained with online Sinkhorn clustering."""

from .centroids import MomentumConfig, SubCentroidBank, anchor_to_observations, init_bank, momentum_update
from .head import LossConfig, class_scores, dnc_loss, predict
from .sinkhorn import SinkhornConfig, cluster_class, harden, sinkhorn_soft_assign
from .trainer import TrainConfig, evaluate, knn_induction_eval, train

__all__ = [
    "MomentumConfig",
    "SubCentroidBank",
    "anchor_to_observations",
    "init_bank",
    "momentum_update",
    "LossConfig",
    "class_scores",
    "dnc_loss",
    "predict",
    "SinkhornConfig",
    "cluster_class",
    "harden",
    "sinkhorn_soft_assign",
    "TrainConfig",
    "evaluate",
    "knn_induction_eval",
    "train",
]
__version__ = "0.1.0"

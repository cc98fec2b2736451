"""Multi-view information bottleneck with matrix-based Renyi entropy."""

from meib._backend import BACKEND
from meib.entropy import (
    KernelConfig,
    NormalizedGram,
    entropy_gradient_wrt_gram,
    estimate_sigma,
    joint_entropy,
    mi_gradient_wrt_batch,
    mutual_information,
    normalized_gram,
    renyi_entropy,
)
from meib.model import (
    MeibModel,
    MultiViewBatch,
    TrainConfig,
    build_model,
    evaluate,
    forward_joint,
    input_weight_norms,
    meib_loss,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "KernelConfig",
    "MeibModel",
    "MultiViewBatch",
    "NormalizedGram",
    "TrainConfig",
    "build_model",
    "entropy_gradient_wrt_gram",
    "estimate_sigma",
    "evaluate",
    "forward_joint",
    "input_weight_norms",
    "joint_entropy",
    "meib_loss",
    "mi_gradient_wrt_batch",
    "mutual_information",
    "normalized_gram",
    "renyi_entropy",
    "train",
]

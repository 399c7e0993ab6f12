"""From-scratch convolutional classifier with a reconstruction penalty.

The network is a strided 1-D conv encoder, a fully-connected classifier
head, and a mirrored transposed-conv decoder.  Training minimizes

    class_loss + penalty_weight * recon_loss

with analytic gradients (no autograd); the decoder acts as an
autoencoder-style regularizer.  Fine-tuning can freeze the encoder and
decoder and update only the classifier head.
"""

from .network import (
    ConvSpec,
    Gradients,
    LossBreakdown,
    Network,
    NetworkConfig,
    NetworkParams,
    init_params,
    set_debug_finite,
)
from .training import TrainConfig, TrainResult, evaluate, fine_tune, predict, train
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "ConvSpec",
    "Gradients",
    "LossBreakdown",
    "Network",
    "NetworkConfig",
    "NetworkParams",
    "TrainConfig",
    "TrainResult",
    "evaluate",
    "fine_tune",
    "init_params",
    "load_checkpoint",
    "predict",
    "save_checkpoint",
    "set_debug_finite",
    "train",
]

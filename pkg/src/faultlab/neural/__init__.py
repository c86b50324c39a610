"""Minimal differentiable building blocks for the 1-D denoiser."""

from .tensor import Tensor, no_grad
from .layers import (
    Attention,
    Conv1d,
    Dense,
    Embedding,
    GroupNorm,
    ResidualBlock,
    avg_pool1d,
    sinusoidal_embedding,
    upsample_nearest,
)
from .denoiser import Denoiser, PASS_CLASS, FAIL_CLASS, NULL_CLASS
from .optim import AdamW
from .gradcheck import grad_check

__all__ = [
    "Tensor", "no_grad",
    "Dense", "Conv1d", "GroupNorm", "Attention", "Embedding", "ResidualBlock",
    "avg_pool1d", "upsample_nearest", "sinusoidal_embedding",
    "Denoiser", "PASS_CLASS", "FAIL_CLASS", "NULL_CLASS",
    "AdamW", "grad_check",
]

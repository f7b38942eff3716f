"""Minimal differentiable-layer toolkit with analytic gradients."""

from drumweave.nn.core import (
    Prng,
    Tensor,
    bce_loss,
    glorot_uniform,
    logistic,
)
from drumweave.nn.layers import BiLstmLayer, DenseLayer, LayerStack, LstmDirection
from drumweave.nn.optim import AdamState, GradCheckReport, adam_step, gradient_check
from drumweave.nn.checkpoint import (
    CheckpointError,
    load_checkpoint,
    read_tensors,
    save_checkpoint,
    write_tensors,
)

__all__ = [
    "Prng",
    "Tensor",
    "bce_loss",
    "glorot_uniform",
    "logistic",
    "BiLstmLayer",
    "DenseLayer",
    "LayerStack",
    "LstmDirection",
    "AdamState",
    "GradCheckReport",
    "adam_step",
    "gradient_check",
    "CheckpointError",
    "load_checkpoint",
    "read_tensors",
    "save_checkpoint",
    "write_tensors",
]

"""Neural network substrate: layer primitives, losses, optimizers, gradient checking."""

from . import gradcheck, layers, losses, ops, optim
from .ops import DegenerateBatchError, ParameterError, ShapeError

__all__ = [
    "ops",
    "layers",
    "losses",
    "optim",
    "gradcheck",
    "ShapeError",
    "DegenerateBatchError",
    "ParameterError",
]

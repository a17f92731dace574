"""Quantized convolution primitives (standard, grouped, depthwise separable, shift, add)
with scalar reference kernels, im2col packed-MAC fast kernels, a cost model,
operation counters and a benchmark harness."""

from .errors import (
    BoundsError,
    ConfigurationError,
    ContractError,
    DimensionError,
    DomainError,
    InsufficientDataError,
    UnsupportedPathError,
)
from .layer import ADD, DWSEP, GROUPED, KINDS, SHIFT, STANDARD, LayerSpec, ShiftTable
from .qtensor import QTensor, QWeights, index, new_qtensor

__all__ = [
    "ADD", "DWSEP", "GROUPED", "KINDS", "SHIFT", "STANDARD",
    "BoundsError", "ConfigurationError", "ContractError", "DimensionError", "DomainError",
    "InsufficientDataError", "UnsupportedPathError",
    "LayerSpec", "ShiftTable", "QTensor", "QWeights", "index", "new_qtensor",
]

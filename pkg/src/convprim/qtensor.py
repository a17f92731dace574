"""8-bit tensors in HWC layout with a power-of-two scale exponent.

A stored integer ``e`` represents the real value ``e * 2**(dec - 7)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BoundsError, DimensionError

INT8_MIN, INT8_MAX = -128, 127


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QTensor:
    height: int
    width: int
    channels: int
    data: np.ndarray  # flat int8, row-major h -> w -> c
    dec: int

    def __post_init__(self):
        for name in ("height", "width", "channels"):
            if int(getattr(self, name)) < 1:
                raise DimensionError(f"{name} must be positive, got {getattr(self, name)}")
        data = np.asarray(self.data)
        if data.size != self.height * self.width * self.channels:
            raise DimensionError(
                f"data length {data.size} != {self.height}*{self.width}*{self.channels}"
            )
        if data.dtype != np.int8:
            if data.size and (data.min() < INT8_MIN or data.max() > INT8_MAX):
                raise DimensionError("elements must lie in [-128, 127]")
            data = data.astype(np.int8)
        object.__setattr__(self, "data", _readonly(data.reshape(-1)))
        object.__setattr__(self, "dec", int(self.dec))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    @property
    def array(self) -> np.ndarray:
        """Read-only (H, W, C) view of the data."""
        return self.data.reshape(self.shape)

    def __eq__(self, other):
        if not isinstance(other, QTensor):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.dec == other.dec
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return f"QTensor(shape={self.shape}, dec={self.dec})"


def new_qtensor(height: int, width: int, channels: int, dec: int, data) -> QTensor:
    return QTensor(height, width, channels, np.asarray(data).reshape(-1), dec)


def from_array(a: np.ndarray, dec: int) -> QTensor:
    """Wrap an (H, W, C) integer array."""
    a = np.asarray(a)
    if a.ndim != 3:
        raise DimensionError(f"expected an (H, W, C) array, got shape {a.shape}")
    return QTensor(a.shape[0], a.shape[1], a.shape[2], a.reshape(-1), dec)


def flat_offset(t: QTensor, h: int, w: int, c: int) -> int:
    return (h * t.width + w) * t.channels + c


def index(t: QTensor, h: int, w: int, c: int) -> int:
    if not (0 <= h < t.height and 0 <= w < t.width and 0 <= c < t.channels):
        raise BoundsError(f"index ({h}, {w}, {c}) outside shape {t.shape}")
    return int(t.data[flat_offset(t, h, w, c)])


@dataclass(frozen=True, eq=False)
class QWeights:
    """Kernel weights in (kernel_h, kernel_w, in_channels_per_group, out_channels) order.

    ``bias`` is int32 at accumulator scale ``dec + dec_input``.
    """

    kernel_h: int
    kernel_w: int
    in_channels_per_group: int
    out_channels: int
    data: np.ndarray
    dec: int
    bias: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        dims = (self.kernel_h, self.kernel_w, self.in_channels_per_group, self.out_channels)
        if min(dims) < 1:
            raise DimensionError(f"weight dimensions must be positive, got {dims}")
        data = np.asarray(self.data)
        if data.size != int(np.prod(dims)):
            raise DimensionError(f"weight data length {data.size} != product of {dims}")
        if data.dtype != np.int8:
            if data.size and (data.min() < INT8_MIN or data.max() > INT8_MAX):
                raise DimensionError("weights must lie in [-128, 127]")
            data = data.astype(np.int8)
        object.__setattr__(self, "data", _readonly(data.reshape(-1)))
        object.__setattr__(self, "dec", int(self.dec))
        if self.bias is not None:
            bias = np.asarray(self.bias)
            if bias.shape != (self.out_channels,):
                raise DimensionError(
                    f"bias must have length {self.out_channels}, got shape {bias.shape}"
                )
            if bias.min() < np.iinfo(np.int32).min or bias.max() > np.iinfo(np.int32).max:
                raise DimensionError("bias must fit in int32")
            object.__setattr__(self, "bias", _readonly(bias.astype(np.int32)))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.kernel_h, self.kernel_w, self.in_channels_per_group, self.out_channels)

    @property
    def array(self) -> np.ndarray:
        return self.data.reshape(self.shape)


def weights_from_array(a: np.ndarray, dec: int, bias=None) -> QWeights:
    a = np.asarray(a)
    if a.ndim != 4:
        raise DimensionError(f"expected a 4-d (Hk, Hk, Cin, Cout) array, got {a.shape}")
    return QWeights(*a.shape, data=a.reshape(-1), dec=dec, bias=bias)

"""Seeded random operands for a layer: uniform int8 over [-128, 127]."""
from __future__ import annotations

import numpy as np

from .layer import DWSEP, SHIFT, LayerSpec
from .qtensor import QTensor, QWeights


def _int8(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(-128, 128, size=n, dtype=np.int16).astype(np.int8)


def _bias(rng, n, with_bias):
    if not with_bias:
        return None
    return rng.integers(-(2**12), 2**12, size=n, dtype=np.int32)


def random_input(spec: LayerSpec, rng: np.random.Generator) -> QTensor:
    h, c = spec.input_width, spec.in_channels
    return QTensor(h, h, c, _int8(rng, h * h * c), spec.dec_input)


def random_weights(spec: LayerSpec, rng: np.random.Generator, with_bias: bool = False):
    """QWeights for the layer, or ``(depthwise, pointwise)`` for depthwise separable."""
    k, cin, cout = spec.kernel, spec.in_channels, spec.out_channels
    if spec.kind == DWSEP:
        dw = QWeights(k, k, 1, cin, _int8(rng, k * k * cin), spec.dec_weight,
                      _bias(rng, cin, with_bias))
        pw = QWeights(1, 1, cin, cout, _int8(rng, cin * cout), spec.pointwise_dec_weight,
                      _bias(rng, cout, with_bias))
        return dw, pw
    if spec.kind == SHIFT:
        return QWeights(1, 1, cin, cout, _int8(rng, cin * cout), spec.dec_weight,
                        _bias(rng, cout, with_bias))
    cin_g = cin // spec.effective_groups
    return QWeights(k, k, cin_g, cout, _int8(rng, k * k * cin_g * cout), spec.dec_weight,
                    _bias(rng, cout, with_bias))


def random_case(spec: LayerSpec, seed: int, with_bias: bool = False):
    rng = np.random.default_rng(seed)
    return random_input(spec, rng), random_weights(spec, rng, with_bias)

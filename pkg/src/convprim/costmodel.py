"""Analytical parameter and MAC counts per primitive, with exact gain ratios."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigurationError
from .layer import ADD, DWSEP, GROUPED, SHIFT, STANDARD, LayerSpec


@dataclass(frozen=True)
class CostReport:
    kind: str
    params: int
    macs: int
    param_gain: Fraction  # params / params of the standard layer with the same shape
    complexity_gain: Fraction

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "macs": self.macs,
            "param_gain": str(self.param_gain),
            "complexity_gain": str(self.complexity_gain),
        }


def _counts(spec: LayerSpec) -> tuple[int, int]:
    k2 = spec.kernel**2
    cx, cy, hy2 = spec.in_channels, spec.out_channels, spec.output_width**2
    if spec.kind in (STANDARD, ADD):
        return k2 * cx * cy, k2 * cx * hy2 * cy
    if spec.kind == GROUPED:
        g = spec.groups
        return k2 * (cx // g) * cy, k2 * (cx // g) * hy2 * cy
    if spec.kind == DWSEP:
        return cx * (k2 + cy), cx * hy2 * (k2 + cy)
    if spec.kind == SHIFT:
        # two shift components per channel count as parameters
        return cx * (2 + cy), cx * cy * hy2
    raise ConfigurationError(f"unknown kind {spec.kind}")


def cost(spec: LayerSpec) -> CostReport:
    if not isinstance(spec, LayerSpec):
        raise ConfigurationError("cost() needs a LayerSpec")
    params, macs = _counts(spec)
    base_params, base_macs = _counts(spec.standard_equivalent())
    return CostReport(
        spec.kind, params, macs, Fraction(params, base_params), Fraction(macs, base_macs)
    )


def executed_macs(spec: LayerSpec) -> int:
    """Multiplies performed by the reference kernel (padded taps included)."""
    if spec.kind == ADD:
        return 0
    return _counts(spec)[1]


def executed_abs_ops(spec: LayerSpec) -> int:
    """Absolute-difference terms of an add convolution; zero for the others."""
    if spec.kind != ADD:
        return 0
    return _counts(spec)[1]

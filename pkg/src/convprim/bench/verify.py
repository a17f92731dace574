"""Randomized fast-vs-reference bit-exactness check."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ..cases import random_case
from ..fastpath import run_fast
from ..layer import DWSEP, GROUPED, SHIFT, STANDARD, LayerSpec
from ..reference import run_reference

FAST_KINDS = (STANDARD, GROUPED, DWSEP, SHIFT)
KERNELS = (1, 3, 5, 7)
GROUPS = (1, 2, 4)


def random_spec(rng: np.random.Generator, kind: str) -> LayerSpec:
    """Kernel in {1,3,5,7}, width 4..32, channels 1..32, groups in {1,2,4}; decs and shift random."""
    kernel = int(rng.choice(KERNELS))
    width = int(rng.integers(4, 33))
    groups = int(rng.choice(GROUPS)) if kind == GROUPED else 1
    cin = groups * int(rng.integers(1, 32 // groups + 1))
    cout = groups * int(rng.integers(1, 32 // groups + 1))
    dec_in = int(rng.integers(-3, 4))
    dec_w = int(rng.integers(-3, 4))
    shift = int(rng.integers(0, 13))
    return LayerSpec(kind, width, cin, cout, kernel, groups=groups, dec_input=dec_in,
                     dec_weight=dec_w, dec_output=dec_in + dec_w - shift)


def random_specs(n: int, seed: int = 0) -> Iterator[LayerSpec]:
    rng = np.random.default_rng(seed)
    for i in range(n):
        yield random_spec(rng, FAST_KINDS[i % len(FAST_KINDS)])


@dataclass
class CaseResult:
    spec: LayerSpec
    seed: int
    mismatches: int

    @property
    def ok(self) -> bool:
        return self.mismatches == 0


def check_case(spec: LayerSpec, seed: int, with_bias: bool = False) -> CaseResult:
    x, w = random_case(spec, seed, with_bias)
    ref = run_reference(spec, x, w)
    fast = run_fast(spec, x, w)
    mismatches = int(np.count_nonzero(ref.data != fast.data))
    if ref.shape != fast.shape or ref.dec != fast.dec:
        mismatches = max(mismatches, 1)
    return CaseResult(spec, seed, mismatches)


def verify(cases: int = 500, seed: int = 0) -> Iterator[CaseResult]:
    for i, spec in enumerate(random_specs(cases, seed)):
        yield check_case(spec, seed * 100003 + i, with_bias=bool(i % 2))

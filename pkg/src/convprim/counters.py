"""Operation counters filled in by the kernels."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

# slot layout of the int64 array the jitted kernels write into
MUL, ADD_SUB, ABS, LOADS, STORES, COLUMN_PEAK = range(6)
N_SLOTS = 6


def new_counter_array() -> np.ndarray:
    return np.zeros(N_SLOTS, dtype=np.int64)


@dataclass
class OpCounters:
    mul: int = 0
    add_sub: int = 0
    abs_ops: int = 0
    loads: int = 0
    stores: int = 0
    # largest number of widened elements resident in the im2col column buffer
    column_peak: int = 0

    @classmethod
    def from_array(cls, a: np.ndarray) -> "OpCounters":
        return cls(*(int(v) for v in a[:N_SLOTS]))

    @property
    def accesses(self) -> int:
        return self.loads + self.stores

    def reset(self) -> None:
        for name in asdict(self):
            setattr(self, name, 0)

    def __add__(self, other: "OpCounters") -> "OpCounters":
        return OpCounters(
            self.mul + other.mul,
            self.add_sub + other.add_sub,
            self.abs_ops + other.abs_ops,
            self.loads + other.loads,
            self.stores + other.stores,
            max(self.column_peak, other.column_peak),
        )

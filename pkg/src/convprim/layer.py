"""Layer configuration shared by the kernels, the cost model and the bench."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import ConfigurationError

STANDARD = "standard"
GROUPED = "grouped"
DWSEP = "depthwise_separable"
SHIFT = "shift"
ADD = "add"
KINDS = (STANDARD, GROUPED, DWSEP, SHIFT, ADD)

# short names used on the command line
KIND_ALIASES = {"dwsep": DWSEP, **{k: k for k in KINDS}}

# 32-bit accumulation of int8 products stays exact up to this many terms
MAX_ACCUMULATED_TERMS = 2**15


@dataclass(frozen=True)
class ShiftTable:
    """Per-channel (alpha, beta) displacement; alpha moves along height, beta along width."""

    shifts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "shifts", tuple((int(a), int(b)) for a, b in self.shifts)
        )

    def __len__(self):
        return len(self.shifts)

    @property
    def alphas(self) -> list[int]:
        return [a for a, _ in self.shifts]

    @property
    def betas(self) -> list[int]:
        return [b for _, b in self.shifts]

    def validate(self, channels: int, kernel: int) -> None:
        if len(self.shifts) != channels:
            raise ConfigurationError(
                f"shift table has {len(self.shifts)} entries, expected {channels}"
            )
        radius = (kernel - 1) // 2
        for m, (a, b) in enumerate(self.shifts):
            if abs(a) > radius or abs(b) > radius:
                raise ConfigurationError(
                    f"shift ({a}, {b}) of channel {m} exceeds kernel radius {radius}"
                )


def default_shift_table(channels: int, kernel: int) -> ShiftTable:
    """Round-robin over the centred kernel offsets, row-major: channel m gets offset m mod kernel**2."""
    radius = (kernel - 1) // 2
    grid = [(a, b) for a in range(-radius, radius + 1) for b in range(-radius, radius + 1)]
    return ShiftTable(tuple(grid[m % len(grid)] for m in range(channels)))


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    input_width: int
    in_channels: int
    out_channels: int
    kernel: int
    groups: int = 1
    shift_table: Optional[ShiftTable] = field(default=None, compare=True)
    dec_input: int = 0
    dec_weight: int = 0
    dec_output: int = 0
    # depthwise separable only: dec_output above is the intermediate (depthwise) exponent
    pointwise_dec_weight: Optional[int] = None
    pointwise_dec_output: Optional[int] = None

    def __post_init__(self):
        kind = KIND_ALIASES.get(self.kind)
        if kind is None:
            raise ConfigurationError(f"unknown primitive kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        for name in ("input_width", "in_channels", "out_channels", "kernel", "groups"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.kernel % 2 == 0:
            raise ConfigurationError(f"kernel must be odd for same padding, got {self.kernel}")

        if kind == GROUPED:
            if self.in_channels % self.groups or self.out_channels % self.groups:
                raise ConfigurationError(
                    f"groups={self.groups} must divide in_channels={self.in_channels} "
                    f"and out_channels={self.out_channels}"
                )
        elif kind == DWSEP:
            if self.groups not in (1, self.in_channels):
                raise ConfigurationError("depthwise separable groups must be 1 or in_channels")
        elif self.groups != 1:
            raise ConfigurationError(f"{kind} convolution takes groups=1, got {self.groups}")

        if kind == SHIFT:
            table = self.shift_table or default_shift_table(self.in_channels, self.kernel)
            table.validate(self.in_channels, self.kernel)
            object.__setattr__(self, "shift_table", table)
        elif self.shift_table is not None:
            raise ConfigurationError("only shift convolution takes a shift table")

        if kind == DWSEP:
            if self.pointwise_dec_weight is None:
                object.__setattr__(self, "pointwise_dec_weight", self.dec_weight)
            if self.pointwise_dec_output is None:
                # same output shift as the depthwise stage
                object.__setattr__(
                    self,
                    "pointwise_dec_output",
                    self.pointwise_dec_weight + 2 * self.dec_output - self.dec_input - self.dec_weight,
                )

        terms = max(self.kernel**2 * self.in_channels_per_group, self.pointwise_terms)
        if terms > MAX_ACCUMULATED_TERMS:
            raise ConfigurationError(
                f"{terms} accumulated terms per output exceeds {MAX_ACCUMULATED_TERMS}"
            )
        self.output_shift()  # rejects negative shifts early

    @property
    def output_width(self) -> int:
        return self.input_width

    @property
    def effective_groups(self) -> int:
        return self.groups if self.kind == GROUPED else 1

    @property
    def in_channels_per_group(self) -> int:
        if self.kind == DWSEP:
            return 1
        if self.kind == SHIFT:
            return 1  # shift stage is per channel; pointwise stage counted separately
        return self.in_channels // self.effective_groups

    @property
    def pointwise_terms(self) -> int:
        return self.in_channels if self.kind in (DWSEP, SHIFT) else 0

    def output_shift(self) -> int:
        """Right shift applied after accumulation (first stage for depthwise separable)."""
        if self.kind == ADD:
            shift = max(self.dec_input, self.dec_weight) - self.dec_output
        else:
            shift = self.dec_weight + self.dec_input - self.dec_output
        if shift < 0:
            raise ConfigurationError(
                f"output shift {shift} < 0: dec_output={self.dec_output} too large for "
                f"dec_input={self.dec_input}, dec_weight={self.dec_weight}"
            )
        if self.kind == DWSEP:
            pw = self.pointwise_dec_weight + self.dec_output - self.pointwise_dec_output
            if pw < 0:
                raise ConfigurationError(f"pointwise output shift {pw} < 0")
        return shift

    def pointwise_spec(self) -> "LayerSpec":
        """The 1x1 standard convolution that follows the spatial stage."""
        if self.kind == DWSEP:
            return LayerSpec(
                STANDARD, self.input_width, self.in_channels, self.out_channels, 1,
                dec_input=self.dec_output,
                dec_weight=self.pointwise_dec_weight,
                dec_output=self.pointwise_dec_output,
            )
        if self.kind == SHIFT:
            return LayerSpec(
                STANDARD, self.input_width, self.in_channels, self.out_channels, 1,
                dec_input=self.dec_input,
                dec_weight=self.dec_weight,
                dec_output=self.dec_output,
            )
        raise ConfigurationError(f"{self.kind} has no pointwise stage")

    def depthwise_spec(self) -> "LayerSpec":
        """The depthwise stage of a depthwise separable layer, as a grouped convolution."""
        if self.kind != DWSEP:
            raise ConfigurationError(f"{self.kind} has no depthwise stage")
        return LayerSpec(
            GROUPED, self.input_width, self.in_channels, self.in_channels, self.kernel,
            groups=self.in_channels,
            dec_input=self.dec_input, dec_weight=self.dec_weight, dec_output=self.dec_output,
        )

    def standard_equivalent(self) -> "LayerSpec":
        return LayerSpec(
            STANDARD, self.input_width, self.in_channels, self.out_channels, self.kernel,
            dec_input=self.dec_input, dec_weight=self.dec_weight,
            dec_output=self.dec_input + self.dec_weight,
        )

    def with_(self, **changes) -> "LayerSpec":
        return replace(self, **changes)

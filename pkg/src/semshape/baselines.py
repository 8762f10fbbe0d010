"""Reference constellations: BPSK and QPSK mapped over N channel uses.

Message index i is written as b*N bits (MSB first, b bits per channel use),
each b-bit group selects a unit PSK point, and every vector is scaled by
1/sqrt(N) so each message has power exactly 1 (average power constraint met
with equality).  The index-to-point assignment is fixed so that baseline
numbers are reproducible; assignment optimization is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .formats import Constellation

_BITS_PER_USE = {"bpsk": 1, "qpsk": 2}

# Unit-circle points per b-bit group value.
_BPSK_POINTS = np.array([1.0 + 0.0j, -1.0 + 0.0j])
_QPSK_POINTS = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))


@dataclass(frozen=True)
class BaselineSpec:
    family: str  # "bpsk" | "qpsk"
    m: int
    n: int

    def __post_init__(self):
        if self.family not in _BITS_PER_USE:
            raise ValidationError(f"unknown baseline family {self.family!r}")
        if self.m < 2 or self.n < 1:
            raise ValidationError(f"need M >= 2 and N >= 1, got M = {self.m}, N = {self.n}")
        b = _BITS_PER_USE[self.family]
        if self.m > 2 ** (b * self.n):
            raise ValidationError(
                f"{self.family} over {self.n} channel uses carries only "
                f"{2 ** (b * self.n)} messages, requested {self.m}"
            )

    @property
    def bits_per_use(self) -> int:
        return _BITS_PER_USE[self.family]


def build_baseline(spec: BaselineSpec) -> Constellation:
    """Construct the baseline constellation for ``spec`` with unit per-message power."""
    b = spec.bits_per_use
    symbols = _BPSK_POINTS if spec.family == "bpsk" else _QPSK_POINTS
    scale = 1.0 / np.sqrt(spec.n)

    points = np.empty((spec.m, spec.n), dtype=complex)
    total_bits = b * spec.n
    for i in range(spec.m):
        for use in range(spec.n):
            shift = total_bits - b * (use + 1)
            group = (i >> shift) & ((1 << b) - 1)
            points[i, use] = symbols[group] * scale
    return Constellation(points)

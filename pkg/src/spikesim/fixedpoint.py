"""Integer formats and the graded-spike event type.

Everything inside the simulator is integer. Real values only appear at
ingestion (:func:`quantize`) and when reporting (:func:`dequantize`).
Accumulators are 64-bit wide and saturated only where a format boundary
is crossed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PAYLOAD_BITS = 24
PAYLOAD_MIN = -(1 << (PAYLOAD_BITS - 1))
PAYLOAD_MAX = (1 << (PAYLOAD_BITS - 1)) - 1

ACT_BITS = 16
ACT_MIN = -(1 << (ACT_BITS - 1))
ACT_MAX = (1 << (ACT_BITS - 1)) - 1

WEIGHT_BITS = 8
WEIGHT_MIN = -(1 << (WEIGHT_BITS - 1))
WEIGHT_MAX = (1 << (WEIGHT_BITS - 1)) - 1

SCALE_EXP_LIMIT = 31

_VALID_BITS = (8, 16, 24)


def signed_range(bits: int) -> tuple[int, int]:
    """Inclusive ``(lo, hi)`` of a two's complement integer of ``bits`` width."""
    return -(1 << (bits - 1)), (1 << (bits - 1)) - 1


def saturate(x, bits: int):
    """Clamp ``x`` (int or integer array) into the signed ``bits`` range."""
    lo, hi = signed_range(bits)
    if isinstance(x, np.ndarray):
        return np.clip(x, lo, hi).astype(np.int64, copy=False)
    return min(max(int(x), lo), hi)


def saturate24(x):
    return saturate(x, PAYLOAD_BITS)


def saturate16(x):
    return saturate(x, ACT_BITS)


def quantize(x, bits: int, scale_exp: int):
    """Round ``x * 2**scale_exp`` to nearest (ties to even), saturated to ``bits``.

    Works on scalars and arrays. Scalars come back as ``int``.
    """
    if bits not in _VALID_BITS:
        raise ValueError(f"bits must be one of {_VALID_BITS}, got {bits}")
    scaled = np.ldexp(np.asarray(x, dtype=np.float64), scale_exp)
    # np.rint rounds half to even
    lo, hi = signed_range(bits)
    q = np.clip(np.rint(scaled), lo, hi).astype(np.int64)
    if q.ndim == 0:
        return int(q)
    return q


def dequantize(v, scale_exp: int):
    out = np.ldexp(np.asarray(v, dtype=np.float64), -scale_exp)
    if out.ndim == 0:
        return float(out)
    return out


def shift_round(acc, shift: int):
    """Divide an integer accumulator by ``2**shift``, rounding half to even.

    Negative ``shift`` multiplies. Exact integer arithmetic; accepts ints or
    int64 arrays.
    """
    if shift <= 0:
        return acc * (1 << -shift) if not isinstance(acc, np.ndarray) else acc << -shift
    half = 1 << (shift - 1)
    mask = (1 << shift) - 1
    q = acc >> shift  # floor division
    r = acc & mask
    if isinstance(acc, np.ndarray):
        up = (r > half) | ((r == half) & ((q & 1) == 1))
        return q + up.astype(np.int64)
    if r > half or (r == half and q & 1):
        q += 1
    return q


def isqrt_array(n: np.ndarray) -> np.ndarray:
    """Exact floor square root of a non-negative int64 array (values < 2**62)."""
    n = np.asarray(n, dtype=np.int64)
    m = np.floor(np.sqrt(n.astype(np.float64))).astype(np.int64)
    # float sqrt can be off by one near perfect squares
    m = np.where(m * m > n, m - 1, m)
    m = np.where((m + 1) * (m + 1) <= n, m + 1, m)
    return m


def magnitude24(re, im):
    """``saturate24(isqrt(re**2 + im**2))`` without overflowing int64.

    Components are clipped to 2**24 first; anything that large saturates the
    payload anyway, so the clip never changes the result.
    """
    cap = 1 << PAYLOAD_BITS
    if isinstance(re, np.ndarray) or isinstance(im, np.ndarray):
        r = np.minimum(np.abs(np.asarray(re, dtype=np.int64)), cap)
        i = np.minimum(np.abs(np.asarray(im, dtype=np.int64)), cap)
        return np.minimum(isqrt_array(r * r + i * i), PAYLOAD_MAX)
    return saturate24(math.isqrt(int(re) ** 2 + int(im) ** 2))


@dataclass(frozen=True, order=True)
class SpikePayload:
    """24-bit graded spike magnitude. Construction saturates."""

    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", saturate24(self.value))

    def __int__(self):
        return self.value


@dataclass(frozen=True)
class Activation16:
    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", saturate16(self.value))

    def __int__(self):
        return self.value


@dataclass(frozen=True)
class Weight8:
    """An int8 weight with a per-layer power-of-two scale exponent.

    Unlike the activation types this one rejects out-of-range values: weights
    come from quantized files, and a silently clamped weight hides a bug.
    """

    value: int
    scale: int = 0

    def __post_init__(self):
        if not WEIGHT_MIN <= self.value <= WEIGHT_MAX:
            raise ValueError(f"weight {self.value} outside int8 range")
        if not -SCALE_EXP_LIMIT <= self.scale <= SCALE_EXP_LIMIT:
            raise ValueError(f"scale exponent {self.scale} outside [-31, 31]")

    def real(self) -> float:
        return dequantize(self.value, self.scale)


@dataclass(frozen=True, order=True)
class GradedSpike:
    """A timestamped event carrying a nonzero 24-bit payload."""

    timestep: int
    source_unit: int
    payload: SpikePayload

    def __post_init__(self):
        if not isinstance(self.payload, SpikePayload):
            object.__setattr__(self, "payload", SpikePayload(int(self.payload)))
        if self.timestep < 0:
            raise ValueError("timestep must be non-negative")
        if self.source_unit < 0:
            raise ValueError("source_unit must be non-negative")
        if self.payload.value == 0:
            raise ValueError("zero-valued spikes are never emitted")

    @property
    def value(self) -> int:
        return self.payload.value

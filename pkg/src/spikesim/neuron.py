"""Neuron dynamics: sigma-delta codec, sigma-delta ReLU, LIF and resonate-and-fire.

Each family has a scalar form (frozen state dataclass plus a pure step
function returning ``(new_state, output)``) and an array form used by the
network and spectral runtimes. Both forms share the same integer helpers so
they agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .fixedpoint import (
    ACT_MAX,
    ACT_MIN,
    magnitude24,
    saturate16,
    shift_round,
)

#: fractional bits of the LIF decay factor (4096 == 1.0)
DECAY_FRAC = 12
DECAY_ONE = 1 << DECAY_FRAC

#: fractional bits of RF rotation/decay constants
COEF_FRAC = 24
COEF_ONE = 1 << COEF_FRAC

#: default guard bits carried by the RF state below one activation unit
RF_FRAC_BITS = 8

# |state component| bound; keeps coef * state + coef * state inside int64
RF_STATE_LIMIT = (1 << 37) - 1

Mechanism = Literal["im-half-plane", "re-threshold"]
RfReset = Literal["none", "zero-on-spike"]
LifReset = Literal["to-zero", "subtract-threshold"]


# ---------------------------------------------------------------------------
# sigma-delta codec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaState:
    x_ref: int = 0
    threshold: int = 0

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("delta threshold must be non-negative")


@dataclass(frozen=True)
class SigmaState:
    x_rec: int = 0


def delta_encode(state: DeltaState, x: int) -> tuple[DeltaState, int]:
    """Send ``x - x_ref`` only when its magnitude strictly exceeds the threshold."""
    d = int(x) - state.x_ref
    if abs(d) > state.threshold:
        return replace(state, x_ref=state.x_ref + d), d
    return state, 0


def sigma_decode(state: SigmaState, s: int) -> tuple[SigmaState, int]:
    x_rec = state.x_rec + int(s)
    return SigmaState(x_rec), x_rec


def delta_encode_array(x_ref: np.ndarray, x: np.ndarray, threshold) -> tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`delta_encode`. Returns ``(new_x_ref, spikes)``."""
    d = x - x_ref
    s = np.where(np.abs(d) > threshold, d, 0)
    return x_ref + s, s


def delta_stream(x, threshold: int = 0) -> np.ndarray:
    """Delta-encode a stream along axis 0, starting from a zero reference."""
    x = np.asarray(x, dtype=np.int64)
    out = np.zeros_like(x)
    ref = np.zeros(x.shape[1:], dtype=np.int64)
    for t in range(x.shape[0]):
        ref, out[t] = delta_encode_array(ref, x[t], threshold)
    return out


def sigma_stream(s) -> np.ndarray:
    return np.cumsum(np.asarray(s, dtype=np.int64), axis=0)


# ---------------------------------------------------------------------------
# sigma-delta ReLU
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SdReluUnit:
    """Sigma decoder -> bias + ReLU -> delta encoder.

    ``shift`` is the power-of-two scale of the incoming weights; the decoded
    accumulator is divided by ``2**shift`` before the bias is added. With
    ``relu=False`` the unit is a linear sigma-delta passthrough.
    """

    sigma: SigmaState = SigmaState()
    bias: int = 0
    delta: DeltaState = DeltaState()
    shift: int = 0
    relu: bool = True


def sdrelu_activation(x_rec, bias, shift: int, relu: bool = True):
    y = shift_round(x_rec, shift) + bias
    if isinstance(y, np.ndarray):
        if relu:
            y = np.maximum(y, 0)
        return np.clip(y, ACT_MIN, ACT_MAX)
    if relu:
        y = max(y, 0)
    return saturate16(y)


def sdrelu_step(unit: SdReluUnit, input_sum: int) -> tuple[SdReluUnit, int]:
    sigma, x_rec = sigma_decode(unit.sigma, input_sum)
    act = sdrelu_activation(x_rec, unit.bias, unit.shift, unit.relu)
    delta, s = delta_encode(unit.delta, act)
    return replace(unit, sigma=sigma, delta=delta), s


# ---------------------------------------------------------------------------
# leaky integrate-and-fire
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LifState:
    """LIF membrane with a 12-bit fixed-point decay (``DECAY_ONE`` == 1.0)."""

    v: int = 0
    decay: int = DECAY_ONE
    threshold: int = 1
    reset: LifReset = "to-zero"

    def __post_init__(self):
        if not 0 <= self.decay <= DECAY_ONE:
            raise ValueError(f"decay must lie in [0, {DECAY_ONE}]")
        if self.threshold <= 0:
            raise ValueError("LIF threshold must be positive")
        if self.reset not in ("to-zero", "subtract-threshold"):
            raise ValueError(f"unknown LIF reset {self.reset!r}")


def decay_fixed(decay: float) -> int:
    """Convert a real decay factor in [0, 1] to the LIF fixed-point format."""
    if not 0.0 <= decay <= 1.0:
        raise ValueError("decay must lie in [0, 1]")
    return int(round(decay * DECAY_ONE))


def lif_decay(v, decay):
    # truncate toward zero so |v| shrinks for any nonzero v when decay < 1
    if isinstance(v, np.ndarray):
        return np.sign(v) * ((np.abs(v) * decay) >> DECAY_FRAC)
    mag = (abs(v) * decay) >> DECAY_FRAC
    return mag if v >= 0 else -mag


def lif_step(state: LifState, current: int) -> tuple[LifState, int]:
    v = lif_decay(state.v, state.decay) + int(current)
    spike = int(v > state.threshold)
    if spike:
        v = 0 if state.reset == "to-zero" else v - state.threshold
    return replace(state, v=v), spike


def lif_step_array(v, current, decay, threshold, subtract: bool):
    v = lif_decay(v, decay) + current
    spikes = (v > threshold).astype(np.int64)
    if subtract:
        v = v - spikes * threshold
    else:
        v = np.where(spikes > 0, 0, v)
    return v, spikes


# ---------------------------------------------------------------------------
# resonate-and-fire
# ---------------------------------------------------------------------------


def _clip_state(x):
    if isinstance(x, np.ndarray):
        return np.clip(x, -RF_STATE_LIMIT, RF_STATE_LIMIT)
    return min(max(x, -RF_STATE_LIMIT), RF_STATE_LIMIT)


def rf_coefficients(lam_fx: int, cos_fx: int, sin_fx: int) -> tuple[int, int]:
    """Combined ``lambda * e^{i omega}`` multiplier in COEF_FRAC fixed point."""
    return shift_round(lam_fx * cos_fx, COEF_FRAC), shift_round(lam_fx * sin_fx, COEF_FRAC)


def rf_advance(re, im, coef_re, coef_im, a_re, a_im, frac_bits: int):
    """One RF update on internal (guard-bit) state; inputs in activation units.

    Works on Python ints or int64 arrays.
    """
    new_re = shift_round(coef_re * re - coef_im * im, COEF_FRAC) + (a_re << frac_bits)
    new_im = shift_round(coef_im * re + coef_re * im, COEF_FRAC) + (a_im << frac_bits)
    return _clip_state(new_re), _clip_state(new_im)


@dataclass(frozen=True)
class RfState:
    """Complex RF neuron state in fixed point.

    ``z_re``/``z_im`` hold the state with ``frac_bits`` guard bits below one
    activation unit; :attr:`z` reports it in activation units. Build with
    :meth:`create` from real ``lam`` and ``omega``.
    """

    z_re: int
    z_im: int
    lam_fx: int
    cos_fx: int
    sin_fx: int
    threshold: int
    mechanism: Mechanism = "im-half-plane"
    reset: RfReset = "none"
    frac_bits: int = RF_FRAC_BITS

    def __post_init__(self):
        if self.lam_fx > COEF_ONE:
            raise ValueError("RF decay lambda must be <= 1")
        if self.lam_fx < 0:
            raise ValueError("RF decay lambda must be non-negative")
        if self.threshold <= 0:
            raise ValueError("RF threshold must be positive")
        if self.mechanism not in ("im-half-plane", "re-threshold"):
            raise ValueError(f"unknown RF spike mechanism {self.mechanism!r}")
        if self.reset not in ("none", "zero-on-spike"):
            raise ValueError(f"unknown RF reset {self.reset!r}")

    @classmethod
    def create(
        cls,
        lam: float,
        omega: float,
        threshold: int,
        mechanism: Mechanism = "im-half-plane",
        reset: RfReset = "none",
        frac_bits: int = RF_FRAC_BITS,
    ) -> "RfState":
        if lam > 1.0:
            raise ValueError(f"RF decay lambda must be <= 1, got {lam}")
        return cls(
            0,
            0,
            lam_fx=int(round(lam * COEF_ONE)),
            cos_fx=int(round(math.cos(omega) * COEF_ONE)),
            sin_fx=int(round(math.sin(omega) * COEF_ONE)),
            threshold=int(threshold),
            mechanism=mechanism,
            reset=reset,
            frac_bits=frac_bits,
        )

    @property
    def coefficients(self) -> tuple[int, int]:
        return rf_coefficients(self.lam_fx, self.cos_fx, self.sin_fx)

    @property
    def z(self) -> complex:
        return complex(self.z_re, self.z_im) / (1 << self.frac_bits)

    def with_z(self, re: int, im: int) -> "RfState":
        """Copy with the state set from activation-unit components."""
        return replace(self, z_re=int(re) << self.frac_bits, z_im=int(im) << self.frac_bits)


def rf_fires(prev_im, re, im, threshold_int, mechanism: Mechanism):
    """Spike condition on internal state; works on scalars and arrays."""
    if mechanism == "im-half-plane":
        return (prev_im <= threshold_int) & (im > threshold_int)
    return re > threshold_int


def rf_step(state: RfState, a_re: int, a_im: int = 0) -> tuple[RfState, int | None]:
    """Advance one timestep; returns the graded payload (``None`` when silent)."""
    cr, ci = state.coefficients
    re, im = rf_advance(state.z_re, state.z_im, cr, ci, int(a_re), int(a_im), state.frac_bits)
    thr = state.threshold << state.frac_bits
    payload = None
    if rf_fires(state.z_im, re, im, thr, state.mechanism):
        payload = magnitude24(shift_round(re, state.frac_bits), shift_round(im, state.frac_bits))
        if state.reset == "zero-on-spike":
            re, im = 0, 0
    return replace(state, z_re=re, z_im=im), payload


def rf_resonance_gain(
    lam: float,
    omega: float,
    drive_omega: float,
    duration: int,
    amplitude: int = 1024,
    frac_bits: int = RF_FRAC_BITS,
) -> np.ndarray:
    """Drive one RF neuron with ``amplitude * e^{i drive_omega t}``.

    Returns ``|z[t]| / amplitude`` for ``t = 0 .. duration-1``, i.e. the gain
    relative to the drive amplitude. The neuron never fires (threshold is
    set out of reach) so the trace is the pure linear response.
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must lie in (0, 1]")
    if duration < 1:
        raise ValueError("duration must be >= 1")
    st = RfState.create(lam, omega, threshold=1 << 40, frac_bits=frac_bits)
    cr, ci = st.coefficients
    t = np.arange(duration)
    drive_re = np.rint(amplitude * np.cos(drive_omega * t)).astype(np.int64)
    drive_im = np.rint(amplitude * np.sin(drive_omega * t)).astype(np.int64)
    re = im = 0
    out = np.empty(duration)
    for k in range(duration):
        re, im = rf_advance(re, im, cr, ci, int(drive_re[k]), int(drive_im[k]), frac_bits)
        out[k] = math.hypot(re, im) / (1 << frac_bits)
    return out / amplitude

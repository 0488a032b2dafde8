"""Short-time spectra from a bank of resonate-and-fire neurons.

The bank runs every neuron on the same real input, one timestep per
sample. Column ``t`` of the resulting spectrogram is the complex state of
each neuron after sample ``t``: an exponentially windowed DFT evaluated at
the neuron's frequency and referenced to the window end.

:func:`reference_stft` is the direct-summation oracle with a rectangular
window, using the same end-referenced phase convention, so the two
spectrograms compare bin for bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .fixedpoint import ACT_BITS, magnitude24, quantize, shift_round
from .neuron import (
    COEF_ONE,
    RF_FRAC_BITS,
    RfState,
    rf_advance,
    rf_coefficients,
    rf_fires,
)


class UndefinedCorrelationError(ValueError):
    """Raised when a Pearson correlation has a zero-variance input."""


class NoEventError(LookupError):
    """No spike event of the neuron lies within one period of the query time."""


@dataclass
class RfBank:
    freqs_hz: np.ndarray
    sample_rate: float
    lam: float
    window: int
    threshold: int
    mechanism: str = "im-half-plane"
    frac_bits: int = RF_FRAC_BITS
    lam_fx: int = field(init=False)
    cos_fx: np.ndarray = field(init=False, repr=False)
    sin_fx: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.freqs_hz = np.asarray(self.freqs_hz, dtype=np.float64)
        if self.lam > 1.0:
            raise ValueError("RF decay lambda must be <= 1")
        self.lam_fx = int(round(self.lam * COEF_ONE))
        self.cos_fx = np.rint(np.cos(self.omegas) * COEF_ONE).astype(np.int64)
        self.sin_fx = np.rint(np.sin(self.omegas) * COEF_ONE).astype(np.int64)

    @property
    def omegas(self) -> np.ndarray:
        return 2.0 * np.pi * self.freqs_hz / self.sample_rate

    @property
    def periods(self) -> np.ndarray:
        """Oscillation period of each neuron in whole timesteps."""
        return np.rint(2.0 * np.pi / self.omegas).astype(np.int64)

    @property
    def coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        return rf_coefficients(self.lam_fx, self.cos_fx, self.sin_fx)

    @property
    def neurons(self) -> list[RfState]:
        return [
            RfState(
                0,
                0,
                self.lam_fx,
                int(c),
                int(s),
                self.threshold,
                self.mechanism,
                frac_bits=self.frac_bits,
            )
            for c, s in zip(self.cos_fx, self.sin_fx)
        ]

    def __len__(self):
        return len(self.freqs_hz)


@dataclass
class Spectrogram:
    """Complex coefficients indexed ``[time, frequency]``.

    ``offset`` is the signal index of the last sample feeding column 0, so
    column ``m`` ends at sample ``offset + m * hop``.
    """

    coeffs: np.ndarray
    freqs_hz: np.ndarray
    hop: int
    window: int
    offset: int
    lam: float = 1.0

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.coeffs)

    @property
    def window_gain(self) -> float:
        # sum of window weights: rectangular for lam == 1, geometric otherwise
        if self.lam >= 1.0:
            return float(self.window)
        return 1.0 / (1.0 - self.lam)


@dataclass
class SpikeTimingCode:
    """Sparse view of the bank: one row per event ``(neuron, timestep, magnitude)``."""

    neuron: np.ndarray
    timestep: np.ndarray
    magnitude: np.ndarray
    periods: np.ndarray
    threshold: int

    def __len__(self):
        return len(self.neuron)

    def events_for(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        sel = self.neuron == k
        return self.timestep[sel], self.magnitude[sel]


def make_bank(
    f_min: float,
    f_max: float,
    n: int,
    sample_rate: float,
    window: int,
    threshold: int = 1 << 17,
    mechanism: str = "im-half-plane",
    frac_bits: int = RF_FRAC_BITS,
) -> RfBank:
    """Evenly spaced bank from ``f_min`` to ``f_max`` inclusive, ``lam = exp(-1/window)``."""
    if n < 1:
        raise ValueError("bank needs at least one neuron")
    if window < 1:
        raise ValueError("window must be >= 1")
    nyquist = sample_rate / 2.0
    if not 0.0 < f_min < nyquist or not 0.0 < f_max < nyquist:
        raise ValueError(f"bank frequencies must lie in (0, {nyquist}) Hz (Nyquist)")
    if n > 1 and not f_min < f_max:
        raise ValueError("f_min must be below f_max")
    freqs = np.linspace(f_min, f_max, n) if n > 1 else np.array([float(f_min)])
    return RfBank(
        freqs,
        float(sample_rate),
        math.exp(-1.0 / window),
        int(window),
        int(threshold),
        mechanism,
        frac_bits,
    )


def load_signal(path) -> np.ndarray:
    """Read a real signal at full scale 1.0.

    ``.csv`` and ``.txt`` files hold one real value per line (a non-numeric
    header line is skipped); anything else is raw 16-bit signed
    little-endian PCM.
    """
    path = Path(path)
    if path.suffix.lower() in (".csv", ".txt"):
        lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
        if lines:
            try:
                float(lines[0].split(",")[0])
            except ValueError:
                lines = lines[1:]
        try:
            values = [float(ln.split(",")[0]) for ln in lines]
        except ValueError as exc:
            raise ValueError(f"{path}: expected one real value per line ({exc})") from None
        x = np.asarray(values, dtype=np.float64)
    else:
        raw = path.read_bytes()
        if len(raw) % 2:
            raise ValueError(f"{path}: odd byte count for 16-bit PCM")
        x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / (1 << 15)
    if len(x) == 0:
        raise ValueError(f"{path}: signal is empty")
    return x


def ingest(signal, scale_exp: int = ACT_BITS - 1) -> np.ndarray:
    """Quantize a real signal (full scale 1.0) to 16-bit activation units."""
    return quantize(np.asarray(signal, dtype=np.float64), ACT_BITS, scale_exp)


def rf_stft(
    bank: RfBank,
    signal,
    scale_exp: int = ACT_BITS - 1,
    mode: Literal["fixed", "float"] = "fixed",
) -> tuple[Spectrogram, SpikeTimingCode]:
    """Run the bank over ``signal`` (real, full scale 1.0).

    ``mode="float"`` evaluates the same recurrence in double precision
    without rounding or spikes; tests use it as an independent reference.
    """
    x = ingest(signal, scale_exp)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("signal must be a non-empty 1-D sequence")
    if mode == "float":
        return _rf_stft_float(bank, x), _empty_code(bank)
    if mode != "fixed":
        raise ValueError(f"unknown mode {mode!r}")

    cr, ci = bank.coefficients
    frac = bank.frac_bits
    thr = bank.threshold << frac
    k = len(bank)
    re = np.zeros(k, dtype=np.int64)
    im = np.zeros(k, dtype=np.int64)
    zero = np.zeros(k, dtype=np.int64)
    coeffs = np.empty((len(x), k), dtype=np.complex128)
    ev_n, ev_t, ev_m = [], [], []
    scale = 1.0 / (1 << frac)
    for t, sample in enumerate(x):
        prev_im = im
        re, im = rf_advance(re, im, cr, ci, np.full(k, sample), zero, frac)
        fired = rf_fires(prev_im, re, im, thr, bank.mechanism)
        if fired.any():
            idx = np.flatnonzero(fired)
            ev_n.append(idx)
            ev_t.append(np.full(len(idx), t))
            ev_m.append(magnitude24(shift_round(re[idx], frac), shift_round(im[idx], frac)))
        coeffs[t].real = re * scale
        coeffs[t].imag = im * scale

    spec = Spectrogram(coeffs, bank.freqs_hz.copy(), hop=1, window=bank.window, offset=0, lam=bank.lam)
    code = SpikeTimingCode(
        np.concatenate(ev_n) if ev_n else np.zeros(0, np.int64),
        np.concatenate(ev_t) if ev_t else np.zeros(0, np.int64),
        np.concatenate(ev_m) if ev_m else np.zeros(0, np.int64),
        bank.periods,
        bank.threshold,
    )
    return spec, code


def _empty_code(bank: RfBank) -> SpikeTimingCode:
    empty = np.zeros(0, np.int64)
    return SpikeTimingCode(empty, empty.copy(), empty.copy(), bank.periods, bank.threshold)


def _rf_stft_float(bank: RfBank, x: np.ndarray) -> Spectrogram:
    mult = bank.lam * np.exp(1j * bank.omegas)
    z = np.zeros(len(bank), dtype=np.complex128)
    coeffs = np.empty((len(x), len(bank)), dtype=np.complex128)
    for t, sample in enumerate(x.astype(np.float64)):
        z = mult * z + sample
        coeffs[t] = z
    return Spectrogram(coeffs, bank.freqs_hz.copy(), hop=1, window=bank.window, offset=0, lam=bank.lam)


def reference_stft(signal, window: int, hop: int, freqs_hz, sample_rate: float) -> Spectrogram:
    """Rectangular-window DFT by direct summation at the given frequencies.

    Column ``m`` is ``sum_n x[m*hop + n] * exp(i w (window - 1 - n))``: the
    textbook DFT multiplied by ``exp(i w (m*hop + window - 1))`` so its phase
    is referenced to the window end, like the RF state.
    """
    x = np.asarray(signal, dtype=np.float64)
    if window < 1 or hop < 1:
        raise ValueError("window and hop must be >= 1")
    if x.ndim != 1 or len(x) < window:
        raise ValueError(f"signal of length {len(x)} is shorter than the window ({window})")
    freqs = np.asarray(freqs_hz, dtype=np.float64)
    omegas = 2.0 * np.pi * freqs / sample_rate
    lags = np.arange(window - 1, -1, -1)
    kernel = np.exp(1j * np.outer(lags, omegas))  # (window, K)
    frames = sliding_window_view(x, window)[::hop]
    coeffs = frames @ kernel
    return Spectrogram(coeffs, freqs, hop=hop, window=window, offset=window - 1, lam=1.0)


def reconstruction_lag(spec: Spectrogram) -> int:
    """Lag behind the window end at which :func:`reconstruct` estimates the signal."""
    return (spec.window - 1) // 2


def reconstruct(spec: Spectrogram, bank: RfBank) -> np.ndarray:
    """Filter-bank summation: ``x[t - L] ~ w * sum_k Re(X[t, k] * exp(-i w_k L))``.

    ``L`` is the window centre (:func:`reconstruction_lag`). Referencing every
    band's phase to the centre makes the summed kernel symmetric about ``L``,
    so the band edges add no phase error. ``w = 2 / (n * window_gain)``.
    Sample ``j`` of the output lines up with ``aligned_input(spec, x)[j]``.
    """
    if spec.coeffs.ndim != 2 or spec.coeffs.shape[1] != len(bank):
        raise ValueError(
            f"spectrogram has {spec.coeffs.shape[-1]} bands but the bank has {len(bank)}"
        )
    if not np.allclose(spec.freqs_hz, bank.freqs_hz):
        raise ValueError("spectrogram frequencies do not match the bank")
    lag = reconstruction_lag(spec)
    w = 2.0 / (len(bank) * spec.window_gain)
    rot = np.exp(-1j * bank.omegas * lag)
    out = w * (spec.coeffs * rot).real.sum(axis=1)
    # the first columns would refer to samples before the signal start
    skip = max(0, lag - spec.offset)
    return out[skip:]


def aligned_input(spec: Spectrogram, signal) -> np.ndarray:
    """Slice of ``signal`` lined up with :func:`reconstruct` output."""
    x = np.asarray(signal, dtype=np.float64)
    n = spec.coeffs.shape[0]
    start = spec.offset - reconstruction_lag(spec)
    skip = max(0, -start)
    idx = start + np.arange(skip, n) * spec.hop
    return x[idx]


def correlation(a, b) -> float:
    """Pearson correlation coefficient."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("correlation needs two 1-D sequences of equal length")
    if len(a) < 2:
        raise ValueError("correlation needs at least two samples")
    da = a - a.mean()
    db = b - b.mean()
    na = math.sqrt(float(da @ da))
    nb = math.sqrt(float(db @ db))
    if na == 0.0 or nb == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a zero-variance input")
    return float(np.clip((da @ db) / (na * nb), -1.0, 1.0))


def reconstruction_correlation(spec: Spectrogram, bank: RfBank, signal) -> float:
    return correlation(reconstruct(spec, bank), aligned_input(spec, signal))


def magnitude_correlation(rf: Spectrogram, ref: Spectrogram) -> float:
    """Mean over bins of the time-series correlation of ``|rf|`` against ``|ref|``.

    Columns are matched on the signal sample at which each window ends. Bins
    where either magnitude series is constant are skipped.
    """
    if ref.hop != 1 or rf.hop != 1:
        raise ValueError("magnitude correlation expects hop-1 spectrograms")
    start = max(rf.offset, ref.offset)
    end = min(rf.offset + rf.coeffs.shape[0], ref.offset + ref.coeffs.shape[0])
    a = np.abs(rf.coeffs[start - rf.offset : end - rf.offset])
    b = np.abs(ref.coeffs[start - ref.offset : end - ref.offset])
    scores = []
    for k in range(a.shape[1]):
        try:
            scores.append(correlation(a[:, k], b[:, k]))
        except UndefinedCorrelationError:
            continue
    if not scores:
        raise UndefinedCorrelationError("no bin has nonzero variance")
    return float(np.mean(scores))


def decode_phase(code: SpikeTimingCode, neuron: int, around_timestep: int) -> float:
    """Recover ``arg(z)`` of one neuron at a timestep from spike timing alone.

    The latest event at or before ``around_timestep`` marks an upward crossing
    of ``Im(z) = threshold``, which happens at ``arg(z) = asin(threshold/|z|)``
    with ``|z|`` taken from the event payload. The phase then advances by one
    period per ``2*pi``.
    """
    period = int(code.periods[neuron])
    times, mags = code.events_for(neuron)
    sel = (times <= around_timestep) & (times > around_timestep - period)
    if not sel.any():
        raise NoEventError(f"neuron {neuron} has no event within one period of t={around_timestep}")
    i = np.flatnonzero(sel)[-1]
    t_spike = int(times[i])
    mag = int(mags[i])
    crossing = math.asin(min(1.0, code.threshold / mag)) if mag > 0 else 0.0
    elapsed = (around_timestep - t_spike) % period
    return (crossing + 2.0 * math.pi * elapsed / period) % (2.0 * math.pi)


def spike_rate(code: SpikeTimingCode, n_samples: int, sample_rate: float) -> float:
    """Aggregate events per second of signal across the whole bank."""
    return len(code) * sample_rate / n_samples


def spike_spectrogram(code: SpikeTimingCode, bank: RfBank, n_samples: int) -> Spectrogram:
    """Rebuild an RF spectrogram from the sparse event view alone.

    Each neuron's coefficient holds the magnitude of its latest event and
    the phase from :func:`decode_phase`; it is zero when the neuron has not
    fired within the last period. This is what a receiver of the spikes can
    recover, as opposed to the full state returned by :func:`rf_stft`.
    """
    k_count = len(bank)
    coeffs = np.zeros((n_samples, k_count), dtype=np.complex128)
    t = np.arange(n_samples)
    for k in range(k_count):
        times, mags = code.events_for(k)
        if len(times) == 0:
            continue
        period = int(code.periods[k])
        last = np.searchsorted(times, t, side="right") - 1
        idx = np.maximum(last, 0)
        elapsed = t - times[idx]
        live = (last >= 0) & (elapsed < period)
        mag = mags[idx].astype(np.float64)
        crossing = np.arcsin(np.minimum(1.0, code.threshold / np.maximum(mag, 1.0)))
        phase = crossing + 2.0 * np.pi * (elapsed % period) / period
        coeffs[live, k] = mag[live] * np.exp(1j * phase[live])
    return Spectrogram(coeffs, bank.freqs_hz.copy(), hop=1, window=bank.window, offset=0, lam=bank.lam)

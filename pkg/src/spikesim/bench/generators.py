"""Seeded synthetic inputs: linear chirps and temporally correlated frame streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChirpSpec:
    f_start: float = 50.0
    f_end: float = 1000.0
    duration: float = 1.0
    sample_rate: float = 4096.0
    amplitude: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.f_start <= self.f_end < self.sample_rate / 2.0:
            raise ValueError(
                f"chirp needs 0 < f_start <= f_end < {self.sample_rate / 2} Hz, "
                f"got {self.f_start}..{self.f_end}"
            )
        if self.duration <= 0:
            raise ValueError("chirp duration must be positive")
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValueError("chirp amplitude is a fraction of full scale in [0, 1]")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))


def gen_chirp(spec: ChirpSpec, full_scale: float = 1.0) -> np.ndarray:
    """Linear sweep from ``f_start`` to ``f_end`` over ``duration`` seconds."""
    t = np.arange(spec.n_samples, dtype=np.float64)
    fs = spec.sample_rate
    sweep = (spec.f_end - spec.f_start) / (2.0 * spec.duration * fs * fs)
    phase = 2.0 * np.pi * (spec.f_start * t / fs + sweep * t * t)
    return spec.amplitude * np.sin(phase) * full_scale


@dataclass(frozen=True)
class CorrelatedStreamSpec:
    shape: tuple = (64, 64, 3)
    frames: int = 100
    step_scale: float = 0.02
    seed: int = 0
    value_range: int = 1 << 15

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if self.frames < 1:
            raise ValueError("stream needs at least one frame")
        if self.step_scale < 0:
            raise ValueError("step_scale must be non-negative")


def gen_correlated_stream(spec: CorrelatedStreamSpec) -> np.ndarray:
    """Per-pixel clamped random walk over ``[0, value_range)``.

    Frame 0 is uniform over the range; every later frame adds an independent
    uniform step in ``+-step_scale * value_range``. Returns int64 frames of
    shape ``(frames, *shape)``.
    """
    rng = np.random.default_rng(spec.seed)
    hi = spec.value_range - 1
    out = np.empty((spec.frames, *spec.shape), dtype=np.int64)
    cur = rng.uniform(0, hi, size=spec.shape)
    out[0] = np.rint(cur)
    step = spec.step_scale * spec.value_range
    for t in range(1, spec.frames):
        cur = np.clip(cur + rng.uniform(-step, step, size=spec.shape), 0, hi)
        out[t] = np.rint(cur)
    return out


def gen_uncorrelated_stream(shape, frames: int, seed: int = 0, value_range: int = 1 << 15) -> np.ndarray:
    """Independent frames in which every pixel differs from the previous frame.

    Each pixel moves by a uniform nonzero offset modulo the range, so every
    delta is nonzero (frame 0 is drawn from ``[1, range)``).
    """
    rng = np.random.default_rng(seed)
    shape = tuple(int(s) for s in shape)
    out = np.empty((frames, *shape), dtype=np.int64)
    cur = rng.integers(1, value_range, size=shape)
    out[0] = cur
    for t in range(1, frames):
        cur = (cur + rng.integers(1, value_range, size=shape)) % value_range
        out[t] = cur
    return out

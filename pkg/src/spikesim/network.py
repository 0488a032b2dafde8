"""Layered event-driven runtime with exact operation counting.

A network is an ordered list of layers. Each layer owns a synapse group
(dense, sparse or 2-D convolution, with an optional axonal delay) and a
population of neurons. Every global timestep walks the layers in order.
A layer only does synaptic work for nonzero incoming spikes, and every
multiply-accumulate a spike triggers is counted.

Tensor layout is channel-last, ``(height, width, channels)``; flattening a
conv output for a dense layer uses numpy's row-major order over that shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from numpy.lib.stride_tricks import sliding_window_view

from .fixedpoint import (
    ACT_MAX,
    ACT_MIN,
    SCALE_EXP_LIMIT,
    WEIGHT_MAX,
    WEIGHT_MIN,
    GradedSpike,
    magnitude24,
    shift_round,
)
from .neuron import (
    COEF_ONE,
    DECAY_ONE,
    RF_FRAC_BITS,
    decay_fixed,
    delta_encode_array,
    lif_step_array,
    rf_advance,
    rf_coefficients,
    rf_fires,
    sdrelu_activation,
)

LAYER_KINDS = ("dense", "sparse", "conv2d")
NEURON_KINDS = ("sdrelu", "passthrough-sigma", "lif", "rf")


class NetworkError(ValueError):
    pass


class ShapeMismatchError(NetworkError):
    pass


class InvalidParameterError(NetworkError):
    pass


def conv_out_size(n: int, k: int, stride: int, pad: int) -> int:
    return (n + 2 * pad - k) // stride + 1


@dataclass
class LayerSpec:
    """Static description of one layer.

    ``weights`` holds int8 values: ``(out, in)`` for dense,
    ``(out_ch, in_ch, kh, kw)`` for conv2d and a flat ``(nnz,)`` vector for
    sparse, whose ``(row, col)`` coordinates live in ``sparse_index``
    (shape ``(2, nnz)``). The accumulated weighted input is divided by
    ``2**weight_scale_exp`` before the bias is added.
    """

    kind: str
    in_shape: tuple
    out_shape: tuple
    weights: np.ndarray
    biases: np.ndarray | None = None
    weight_scale_exp: int = 0
    neuron_kind: str = "sdrelu"
    neuron_params: dict = field(default_factory=dict)
    delay: int = 0
    stride: int = 1
    padding: int = 0
    sparse_index: np.ndarray | None = None

    def __post_init__(self):
        self.in_shape = tuple(int(s) for s in self.in_shape)
        self.out_shape = tuple(int(s) for s in self.out_shape)
        self.weights = np.asarray(self.weights, dtype=np.int64)
        if self.biases is None:
            self.biases = np.zeros(self.n_bias, dtype=np.int64)
        self.biases = np.asarray(self.biases, dtype=np.int64).reshape(-1)
        if self.sparse_index is not None:
            self.sparse_index = np.asarray(self.sparse_index, dtype=np.int64)

    @property
    def in_size(self) -> int:
        return math.prod(self.in_shape)

    @property
    def out_size(self) -> int:
        return math.prod(self.out_shape)

    @property
    def n_bias(self) -> int:
        # conv layers share one bias per output channel
        return self.out_shape[-1] if self.kind == "conv2d" else self.out_size

    @property
    def unit_biases(self) -> np.ndarray:
        if self.kind == "conv2d":
            return np.tile(self.biases, self.out_size // self.n_bias)
        return self.biases

    @property
    def n_params(self) -> int:
        return int(self.weights.size + self.biases.size)

    def dense_ops(self) -> int:
        """Multiply-accumulates of one dense (frame-based) evaluation."""
        if self.kind == "dense":
            return self.in_size * self.out_size
        if self.kind == "sparse":
            return int(self.weights.size)
        co, ci, kh, kw = self.weights.shape
        return self.out_shape[0] * self.out_shape[1] * co * ci * kh * kw

    def validate(self, index: int = 0) -> None:
        where = f"layer {index} ({self.kind})"
        if self.kind not in LAYER_KINDS:
            raise InvalidParameterError(f"{where}: unknown layer kind {self.kind!r}")
        if self.neuron_kind not in NEURON_KINDS:
            raise InvalidParameterError(f"{where}: unknown neuron kind {self.neuron_kind!r}")
        if self.delay < 0:
            raise InvalidParameterError(f"{where}: delay must be >= 0")
        if not -SCALE_EXP_LIMIT <= self.weight_scale_exp <= SCALE_EXP_LIMIT:
            raise InvalidParameterError(f"{where}: weight_scale_exp outside [-31, 31]")
        if self.weights.size and (self.weights.min() < WEIGHT_MIN or self.weights.max() > WEIGHT_MAX):
            raise InvalidParameterError(f"{where}: weights outside the int8 range")
        if self.biases.size != self.n_bias:
            raise ShapeMismatchError(f"{where}: {self.biases.size} biases, expected {self.n_bias}")
        if self.biases.size and (self.biases.min() < ACT_MIN or self.biases.max() > ACT_MAX):
            raise InvalidParameterError(f"{where}: biases outside the int16 range")
        if self.kind == "dense":
            if self.weights.shape != (self.out_size, self.in_size):
                raise ShapeMismatchError(
                    f"{where}: weight shape {self.weights.shape} != ({self.out_size}, {self.in_size})"
                )
        elif self.kind == "sparse":
            idx = self.sparse_index
            if idx is None or idx.shape != (2, self.weights.size):
                raise ShapeMismatchError(f"{where}: sparse_index must have shape (2, nnz)")
            if idx.size and (
                idx[0].min() < 0 or idx[0].max() >= self.out_size or idx[1].min() < 0 or idx[1].max() >= self.in_size
            ):
                raise ShapeMismatchError(f"{where}: sparse coordinates out of range")
        else:
            if self.weights.ndim != 4 or len(self.in_shape) != 3:
                raise ShapeMismatchError(f"{where}: conv2d needs 4-D weights and an (H, W, C) input")
            co, ci, kh, kw = self.weights.shape
            if self.stride < 1 or self.padding < 0:
                raise InvalidParameterError(f"{where}: stride must be >= 1 and padding >= 0")
            h, w, c = self.in_shape
            expect = (
                conv_out_size(h, kh, self.stride, self.padding),
                conv_out_size(w, kw, self.stride, self.padding),
                co,
            )
            if c != ci or self.out_shape != expect:
                raise ShapeMismatchError(
                    f"{where}: input {self.in_shape} and weights {self.weights.shape} give "
                    f"output {expect}, spec says {self.out_shape}"
                )
        _check_neuron_params(self.neuron_kind, self.neuron_params, where)


def _check_neuron_params(kind: str, params: dict, where: str) -> None:
    thr = params.get("threshold", 0 if kind in ("sdrelu", "passthrough-sigma") else 1)
    if kind in ("sdrelu", "passthrough-sigma"):
        if thr < 0:
            raise InvalidParameterError(f"{where}: negative delta threshold")
    elif kind == "lif":
        if thr <= 0:
            raise InvalidParameterError(f"{where}: LIF threshold must be positive")
        decay = params.get("decay", 1.0)
        if not 0.0 <= decay <= 1.0:
            raise InvalidParameterError(f"{where}: LIF decay must lie in [0, 1]")
        if params.get("reset", "to-zero") not in ("to-zero", "subtract-threshold"):
            raise InvalidParameterError(f"{where}: unknown LIF reset")
    else:
        if thr <= 0:
            raise InvalidParameterError(f"{where}: RF threshold must be positive")
        if params.get("lam", 1.0) > 1.0:
            raise InvalidParameterError(f"{where}: RF decay lambda must be <= 1")
        if params.get("mechanism", "im-half-plane") not in ("im-half-plane", "re-threshold"):
            raise InvalidParameterError(f"{where}: unknown RF spike mechanism")
        if params.get("reset", "none") not in ("none", "zero-on-spike"):
            raise InvalidParameterError(f"{where}: unknown RF reset")


# ---------------------------------------------------------------------------
# layer constructors
# ---------------------------------------------------------------------------


def dense_layer(weights, biases=None, weight_scale_exp=0, neuron_kind="sdrelu", delay=0, **neuron_params) -> LayerSpec:
    w = np.asarray(weights)
    return LayerSpec(
        "dense", (w.shape[1],), (w.shape[0],), w, biases, weight_scale_exp, neuron_kind, neuron_params, delay
    )


def sparse_layer(
    rows, cols, values, in_size, out_size, biases=None, weight_scale_exp=0, neuron_kind="sdrelu", delay=0, **neuron_params
) -> LayerSpec:
    idx = np.stack([np.asarray(rows), np.asarray(cols)])
    return LayerSpec(
        "sparse",
        (in_size,),
        (out_size,),
        np.asarray(values),
        biases,
        weight_scale_exp,
        neuron_kind,
        neuron_params,
        delay,
        sparse_index=idx,
    )


def conv2d_layer(
    in_shape, weights, stride=1, padding=0, biases=None, weight_scale_exp=0, neuron_kind="sdrelu", delay=0, **neuron_params
) -> LayerSpec:
    w = np.asarray(weights)
    h, wd, _ = in_shape
    co, _, kh, kw = w.shape
    out = (conv_out_size(h, kh, stride, padding), conv_out_size(wd, kw, stride, padding), co)
    return LayerSpec(
        "conv2d", tuple(in_shape), out, w, biases, weight_scale_exp, neuron_kind, neuron_params, delay, stride, padding
    )


# ---------------------------------------------------------------------------
# counters
# ---------------------------------------------------------------------------


@dataclass
class OpCounters:
    """Exact operation counts, in total and per layer."""

    synaptic_ops: int = 0
    neuron_updates: int = 0
    spikes_emitted: int = 0
    per_layer_synaptic_ops: list = field(default_factory=list)
    per_layer_neuron_updates: list = field(default_factory=list)
    per_layer_spikes: list = field(default_factory=list)

    @classmethod
    def zeros(cls, n_layers: int) -> "OpCounters":
        return cls(0, 0, 0, [0] * n_layers, [0] * n_layers, [0] * n_layers)

    def add_layer(self, i: int, ops: int, updates: int, spikes: int) -> None:
        self.synaptic_ops += ops
        self.neuron_updates += updates
        self.spikes_emitted += spikes
        self.per_layer_synaptic_ops[i] += ops
        self.per_layer_neuron_updates[i] += updates
        self.per_layer_spikes[i] += spikes

    def __add__(self, other: "OpCounters") -> "OpCounters":
        if len(self.per_layer_synaptic_ops) != len(other.per_layer_synaptic_ops):
            raise ValueError("counters cover different layer counts")

        def add(a, b):
            return [x + y for x, y in zip(a, b)]

        return OpCounters(
            self.synaptic_ops + other.synaptic_ops,
            self.neuron_updates + other.neuron_updates,
            self.spikes_emitted + other.spikes_emitted,
            add(self.per_layer_synaptic_ops, other.per_layer_synaptic_ops),
            add(self.per_layer_neuron_updates, other.per_layer_neuron_updates),
            add(self.per_layer_spikes, other.per_layer_spikes),
        )

    def to_dict(self) -> dict:
        return {
            "synaptic_ops": self.synaptic_ops,
            "neuron_updates": self.neuron_updates,
            "spikes_emitted": self.spikes_emitted,
            "per_layer_synaptic_ops": list(self.per_layer_synaptic_ops),
            "per_layer_neuron_updates": list(self.per_layer_neuron_updates),
            "per_layer_spikes": list(self.per_layer_spikes),
        }


# ---------------------------------------------------------------------------
# runtime layers
# ---------------------------------------------------------------------------


class _Synapses:
    """Weighted fan-out of one layer's input spikes, plus per-input fan-out counts."""

    def __init__(self, spec: LayerSpec):
        self.spec = spec
        if spec.kind == "dense":
            self.fanout = np.full(spec.in_size, spec.out_size, dtype=np.int64)
        elif spec.kind == "sparse":
            rows, cols = spec.sparse_index
            self.matrix = sp.csc_matrix(
                (spec.weights, (rows, cols)), shape=(spec.out_size, spec.in_size), dtype=np.int64
            )
            self.fanout = np.bincount(cols, minlength=spec.in_size).astype(np.int64)
        else:
            h, w, c = spec.in_shape
            co, _, kh, kw = spec.weights.shape
            oh, ow, _ = spec.out_shape
            ny = _taps_per_position(h, kh, spec.stride, spec.padding, oh)
            nx = _taps_per_position(w, kw, spec.stride, spec.padding, ow)
            per_pixel = np.outer(ny, nx) * co
            self.fanout = np.repeat(per_pixel[:, :, None], c, axis=2).reshape(-1)

    def propagate(self, s: np.ndarray) -> tuple[np.ndarray, int]:
        idx = np.flatnonzero(s)
        spec = self.spec
        if len(idx) == 0:
            return np.zeros(spec.out_size, dtype=np.int64), 0
        ops = int(self.fanout[idx].sum())
        if spec.kind == "dense":
            acc = spec.weights[:, idx] @ s[idx]
        elif spec.kind == "sparse":
            acc = self.matrix[:, idx] @ s[idx]
        else:
            # zero inputs contribute nothing, so a dense conv of the sparse
            # spike image equals the event-by-event scatter
            acc = conv2d_int(s.reshape(spec.in_shape), spec.weights, spec.stride, spec.padding).reshape(-1)
        return np.asarray(acc, dtype=np.int64), ops


def _taps_per_position(n: int, k: int, stride: int, pad: int, n_out: int) -> np.ndarray:
    """How many (output position, kernel tap) pairs read each input index."""
    counts = np.zeros(n, dtype=np.int64)
    for o in range(n_out):
        lo = o * stride - pad
        a, b = max(lo, 0), min(lo + k, n)
        if a < b:
            counts[a:b] += 1
    return counts


def conv2d_int(x: np.ndarray, weights: np.ndarray, stride: int, padding: int) -> np.ndarray:
    """Integer 2-D correlation, ``x`` as ``(H, W, C)``, weights ``(Co, Ci, kh, kw)``."""
    co, ci, kh, kw = weights.shape
    if padding:
        x = np.pad(x, ((padding, padding), (padding, padding), (0, 0)))
    win = sliding_window_view(x, (kh, kw), axis=(0, 1))[::stride, ::stride]
    # win: (oh, ow, C, kh, kw)
    return np.einsum("yxcij,ocij->yxo", win, weights, optimize=True)


class _Population:
    """Neuron state for one layer, advanced once per timestep."""

    def __init__(self, spec: LayerSpec):
        self.spec = spec
        self.kind = spec.neuron_kind
        p = spec.neuron_params
        n = spec.out_size
        self.shift = spec.weight_scale_exp
        self.bias = spec.unit_biases
        if self.kind in ("sdrelu", "passthrough-sigma"):
            self.threshold = int(p.get("threshold", 0))
            self.x_rec = np.zeros(n, dtype=np.int64)
            self.x_ref = np.zeros(n, dtype=np.int64)
        elif self.kind == "lif":
            self.threshold = int(p.get("threshold", 1))
            decay = p.get("decay", 1.0)
            self.decay = int(decay) if isinstance(decay, int) and decay > 1 else decay_fixed(float(decay))
            self.subtract = p.get("reset", "to-zero") == "subtract-threshold"
            self.v = np.zeros(n, dtype=np.int64)
        else:
            self.threshold = int(p["threshold"])
            self.frac = int(p.get("frac_bits", RF_FRAC_BITS))
            lam = float(p.get("lam", 1.0))
            omega = np.broadcast_to(np.asarray(p.get("omega", 0.0), dtype=np.float64), (n,))
            lam_fx = int(round(lam * COEF_ONE))
            cos_fx = np.rint(np.cos(omega) * COEF_ONE).astype(np.int64)
            sin_fx = np.rint(np.sin(omega) * COEF_ONE).astype(np.int64)
            self.cr, self.ci = rf_coefficients(lam_fx, cos_fx, sin_fx)
            self.mechanism = p.get("mechanism", "im-half-plane")
            self.zero_reset = p.get("reset", "none") == "zero-on-spike"
            self.re = np.zeros(n, dtype=np.int64)
            self.im = np.zeros(n, dtype=np.int64)

    def update(self, acc: np.ndarray) -> tuple[np.ndarray, int]:
        """Advance with delivered input ``acc``; return ``(spikes, neurons updated)``."""
        if self.kind in ("sdrelu", "passthrough-sigma"):
            received = acc != 0
            self.x_rec = self.x_rec + acc
            act = sdrelu_activation(self.x_rec, self.bias, self.shift, relu=self.kind == "sdrelu")
            self.x_ref, s = delta_encode_array(self.x_ref, act, self.threshold)
            return s, int(np.count_nonzero(received | (s != 0)))
        if self.kind == "lif":
            current = shift_round(acc, self.shift) + self.bias
            v, s = lif_step_array(self.v, current, self.decay, self.threshold, self.subtract)
            changed = (v != self.v) | (s != 0)
            self.v = v
            return s, int(np.count_nonzero(changed))
        a_re = shift_round(acc, self.shift) + self.bias
        re, im = rf_advance(self.re, self.im, self.cr, self.ci, a_re, np.zeros_like(a_re), self.frac)
        fired = rf_fires(self.im, re, im, self.threshold << self.frac, self.mechanism)
        s = np.zeros(len(re), dtype=np.int64)
        if fired.any():
            s[fired] = magnitude24(shift_round(re[fired], self.frac), shift_round(im[fired], self.frac))
            if self.zero_reset:
                re = np.where(fired, 0, re)
                im = np.where(fired, 0, im)
        changed = (re != self.re) | (im != self.im) | fired
        self.re, self.im = re, im
        return s, int(np.count_nonzero(changed))


class _Layer:
    def __init__(self, spec: LayerSpec):
        self.spec = spec
        self.synapses = _Synapses(spec)
        self.population = _Population(spec)
        self.ring = np.zeros((spec.delay + 1, spec.out_size), dtype=np.int64)

    def step(self, t: int, s_in: np.ndarray) -> tuple[np.ndarray, int, int]:
        acc, ops = self.synapses.propagate(s_in)
        d = self.spec.delay
        slots = d + 1
        self.ring[(t + d) % slots] += acc
        delivered = self.ring[t % slots].copy()
        self.ring[t % slots] = 0
        s_out, updates = self.population.update(delivered)
        return s_out, ops, updates


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------


@dataclass
class RunTrace:
    """Output spikes per timestep plus counters.

    ``records`` has one row per (timestep, layer):
    ``(t, layer, spikes_in, synaptic_ops, neuron_updates, spikes_out)``.
    """

    outputs: np.ndarray
    counters: OpCounters
    records: list
    layer_sizes: list
    frames: int
    #: with ``keep_spikes``: layer-0 input spikes, then each layer's output
    spikes: list | None = None

    def decoded_outputs(self) -> np.ndarray:
        """Sigma-decode the output spikes (running sum over time)."""
        return np.cumsum(self.outputs, axis=0)

    def to_csv(self) -> str:
        lines = ["timestep,layer,spikes_in,synaptic_ops,neuron_updates,spikes_out"]
        lines += [",".join(str(v) for v in row) for row in self.records]
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {"frames": self.frames, "layer_sizes": list(self.layer_sizes), **self.counters.to_dict()}


class Network:
    def __init__(self, specs: Sequence[LayerSpec]):
        specs = list(specs)
        if not specs:
            raise NetworkError("a network needs at least one layer")
        for i, spec in enumerate(specs):
            spec.validate(i)
        for i in range(len(specs) - 1):
            a, b = specs[i], specs[i + 1]
            same = a.out_shape == b.in_shape
            flattened = b.kind != "conv2d" and a.out_size == b.in_size
            if not (same or flattened):
                raise ShapeMismatchError(
                    f"layer {i} output {a.out_shape} does not feed layer {i + 1} input {b.in_shape}"
                )
        self.specs = specs
        self.reset()

    def reset(self) -> None:
        self.layers = [_Layer(s) for s in self.specs]
        self.timestep = 0

    @property
    def in_shape(self) -> tuple:
        return self.specs[0].in_shape

    @property
    def out_size(self) -> int:
        return self.specs[-1].out_size

    @property
    def n_params(self) -> int:
        return sum(s.n_params for s in self.specs)

    def step_vector(self, s_in: np.ndarray) -> tuple[np.ndarray, OpCounters]:
        """Advance one timestep with a flat layer-0 input spike vector."""
        s = np.asarray(s_in, dtype=np.int64).reshape(-1)
        if s.size != self.specs[0].in_size:
            raise ShapeMismatchError(f"input has {s.size} entries, layer 0 expects {self.specs[0].in_size}")
        delta = OpCounters.zeros(len(self.layers))
        self._last_records = []
        self._last_spikes = [s]
        for i, layer in enumerate(self.layers):
            n_in = int(np.count_nonzero(s))
            s, ops, updates = layer.step(self.timestep, s)
            self._last_spikes.append(s)
            n_out = int(np.count_nonzero(s))
            delta.add_layer(i, ops, updates, n_out)
            self._last_records.append((self.timestep, i, n_in, ops, updates, n_out))
        self.timestep += 1
        return s, delta


def build_network(specs: Sequence[LayerSpec]) -> Network:
    return Network(specs)


def step(net: Network, spikes: Iterable[GradedSpike]) -> tuple[list[GradedSpike], OpCounters]:
    """Advance ``net`` one timestep with a list of input events."""
    vec = np.zeros(net.specs[0].in_size, dtype=np.int64)
    for ev in spikes:
        if not 0 <= ev.source_unit < vec.size:
            raise ShapeMismatchError(f"input unit {ev.source_unit} outside layer 0 ({vec.size} units)")
        vec[ev.source_unit] += ev.value
    t = net.timestep
    out, delta = net.step_vector(vec)
    events = [GradedSpike(t, int(i), int(out[i])) for i in np.flatnonzero(out)]
    return events, delta


def run(net: Network, stream, encode: str = "delta", threshold: int = 0, keep_spikes: bool = False) -> RunTrace:
    """Feed one frame per timestep.

    ``encode="delta"`` sends each frame through a delta encoder (threshold
    ``threshold``) against the previously communicated frame;
    ``encode="raw-spikes"`` treats the nonzero entries of each frame as the
    input spikes themselves. ``keep_spikes`` stores every layer's spike
    vectors in ``trace.spikes`` (memory heavy for large inputs).
    """
    if encode not in ("delta", "raw-spikes"):
        raise ValueError(f"unknown encoding {encode!r}")
    frames = np.asarray(stream, dtype=np.int64)
    in_shape = net.in_shape
    if frames.ndim < 2 or len(frames) == 0:
        raise ShapeMismatchError("stream must be a non-empty sequence of frames")
    if frames.shape[1:] != in_shape and frames[0].size != math.prod(in_shape):
        raise ShapeMismatchError(f"frame shape {frames.shape[1:]} != network input {in_shape}")
    counters = OpCounters.zeros(len(net.layers))
    outputs = np.zeros((len(frames), net.out_size), dtype=np.int64)
    records = []
    kept = []
    if keep_spikes:
        sizes = [math.prod(in_shape)] + [spec.out_size for spec in net.specs]
        kept = [np.zeros((len(frames), n), dtype=np.int64) for n in sizes]
    ref = np.zeros(math.prod(in_shape), dtype=np.int64)
    for t, frame in enumerate(frames):
        flat = frame.reshape(-1)
        if flat.size != ref.size:
            raise ShapeMismatchError(f"frame {t} has {flat.size} entries, expected {ref.size}")
        if encode == "delta":
            ref, s = delta_encode_array(ref, flat, threshold)
        else:
            s = flat
        out, delta = net.step_vector(s)
        outputs[t] = out
        counters = counters + delta
        records.extend(net._last_records)
        if keep_spikes:
            for store, vec in zip(kept, net._last_spikes):
                store[t] = vec
    return RunTrace(
        outputs, counters, records, [s.out_size for s in net.specs], len(frames), kept if keep_spikes else None
    )


def dense_reference_ops(specs: Sequence[LayerSpec], num_frames: int) -> OpCounters:
    """Counts for evaluating the same topology densely on every frame."""
    c = OpCounters.zeros(len(specs))
    for i, spec in enumerate(specs):
        n = spec.out_size * num_frames
        c.add_layer(i, spec.dense_ops() * num_frames, n, n)
    return c


def dense_forward(specs: Sequence[LayerSpec], frame: np.ndarray) -> np.ndarray:
    """Frame-based evaluation of an sdrelu / passthrough-sigma network.

    Same integer arithmetic as the event-driven path, but every unit is
    computed from scratch on every frame.
    """
    x = np.asarray(frame, dtype=np.int64).reshape(-1)
    for spec in specs:
        if spec.neuron_kind not in ("sdrelu", "passthrough-sigma"):
            raise ValueError("dense_forward supports sdrelu and passthrough-sigma layers only")
        if spec.kind == "dense":
            acc = spec.weights @ x
        elif spec.kind == "sparse":
            rows, cols = spec.sparse_index
            acc = np.zeros(spec.out_size, dtype=np.int64)
            np.add.at(acc, rows, spec.weights * x[cols])
        else:
            acc = conv2d_int(x.reshape(spec.in_shape), spec.weights, spec.stride, spec.padding).reshape(-1)
        x = sdrelu_activation(acc, spec.unit_biases, spec.weight_scale_exp, relu=spec.neuron_kind == "sdrelu")
    return x


# ---------------------------------------------------------------------------
# reduction reporting
# ---------------------------------------------------------------------------

INF = float("inf")


def _ratio(ref: int, measured: int) -> float:
    if measured == 0:
        return INF
    return ref / measured


@dataclass
class ReductionReport:
    """``reference / measured`` ratios; ``inf`` marks a silent counter."""

    synaptic_ops: float
    neuron_updates: float
    activations: float
    per_layer_synaptic_ops: list
    per_layer_neuron_updates: list
    per_layer_activations: list
    per_layer_spike_rate: list

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, list):
                return [enc(x) for x in v]
            return "inf" if math.isinf(v) else v

        return {k: enc(v) for k, v in self.__dict__.items()}


def reduction_report(trace: RunTrace, reference: OpCounters) -> ReductionReport:
    """Compare a run against a dense reference.

    ``activations`` compares emitted spikes with the dense count of unit
    outputs, i.e. every unit on every frame.
    """
    if reference.synaptic_ops <= 0 or reference.neuron_updates <= 0:
        raise ValueError("reference counts must be nonzero")
    m = trace.counters
    return ReductionReport(
        synaptic_ops=_ratio(reference.synaptic_ops, m.synaptic_ops),
        neuron_updates=_ratio(reference.neuron_updates, m.neuron_updates),
        activations=_ratio(reference.spikes_emitted, m.spikes_emitted),
        per_layer_synaptic_ops=[
            _ratio(r, x) for r, x in zip(reference.per_layer_synaptic_ops, m.per_layer_synaptic_ops)
        ],
        per_layer_neuron_updates=[
            _ratio(r, x) for r, x in zip(reference.per_layer_neuron_updates, m.per_layer_neuron_updates)
        ],
        per_layer_activations=[_ratio(r, x) for r, x in zip(reference.per_layer_spikes, m.per_layer_spikes)],
        per_layer_spike_rate=[
            x / (n * trace.frames) for x, n in zip(m.per_layer_spikes, trace.layer_sizes)
        ],
    )


# ---------------------------------------------------------------------------
# PilotNet-shaped topology
# ---------------------------------------------------------------------------

#: (out_channels, kernel, stride) of the five conv layers
PILOTNET_CONV = ((24, 5, 2), (36, 5, 2), (48, 5, 2), (64, 3, 1), (64, 3, 1))
PILOTNET_DENSE = (100, 50, 10, 1)


def pilotnet_specs(
    input_shape=(66, 200, 3),
    seed: int = 0,
    threshold: int = 0,
    output_threshold: int = 0,
) -> list[LayerSpec]:
    """Five conv + four dense layers with seeded random int8 weights.

    Layer dims follow the usual PilotNet recipe (no padding, biases on every
    layer). Weights are uniform int8; each layer's scale exponent is picked so
    the accumulated sum lands back in the activation range. Hidden layers
    are sigma-delta ReLU; the last layer is a linear sigma-delta readout.
    """
    rng = np.random.default_rng(seed)
    specs = []
    shape = tuple(input_shape)
    for co, k, s in PILOTNET_CONV:
        ci = shape[2]
        w = rng.integers(-127, 128, size=(co, ci, k, k))
        b = rng.integers(0, 1 << 10, size=co)
        spec = conv2d_layer(
            shape, w, stride=s, biases=b, weight_scale_exp=_scale_for(ci * k * k), threshold=threshold
        )
        specs.append(spec)
        shape = spec.out_shape
    n_in = math.prod(shape)
    for j, n_out in enumerate(PILOTNET_DENSE):
        last = j == len(PILOTNET_DENSE) - 1
        w = rng.integers(-127, 128, size=(n_out, n_in))
        b = rng.integers(0, 1 << 10, size=n_out)
        specs.append(
            dense_layer(
                w,
                b,
                weight_scale_exp=_scale_for(n_in),
                neuron_kind="passthrough-sigma" if last else "sdrelu",
                threshold=output_threshold if last else threshold,
            )
        )
        n_in = n_out
    return specs


def _scale_for(fan_in: int) -> int:
    # uniform int8 weights have std ~73; a sum of fan_in terms grows ~sqrt(fan_in)
    return max(0, int(round(math.log2(73.0 * math.sqrt(fan_in)))) - 1)


def parameter_count(specs: Sequence[LayerSpec]) -> int:
    return sum(s.n_params for s in specs)

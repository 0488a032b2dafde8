"""JSON network description files.

Layout (``format_version`` 1)::

    {
      "format_version": 1,
      "layers": [
        {
          "kind": "conv2d" | "dense" | "sparse",
          "in_shape": [H, W, C] or [N],
          "out_shape": [...],
          "stride": 1, "padding": 0,             # conv2d only
          "weight_shape": [...],                 # (Co, Ci, kh, kw) / (out, in) / (nnz,)
          "weight_scale_exp": 7,
          "encoding": "base64" | "hex",
          "weights": "<int8 bytes>",
          "biases": "<int16 little-endian bytes>",
          "sparse_index": "<int32 little-endian (2, nnz) row-major>",  # sparse only
          "neuron_kind": "sdrelu" | "passthrough-sigma" | "lif" | "rf",
          "neuron_params": {"threshold": 327, ...},
          "delay": 0
        }
      ]
    }

Tensors are channel-last; a conv output feeding a dense layer is flattened
row-major over ``(H, W, C)``.
"""

from __future__ import annotations

import base64
import binascii
import json
from pathlib import Path

import numpy as np

from .network import LayerSpec, NetworkError

FORMAT_VERSION = 1


class NetworkFileError(NetworkError):
    pass


def _encode(arr: np.ndarray, dtype: str, encoding: str) -> str:
    raw = np.ascontiguousarray(arr, dtype=np.dtype(dtype)).tobytes()
    if encoding == "hex":
        return raw.hex()
    return base64.b64encode(raw).decode("ascii")


def _decode(text: str, dtype: str, encoding: str, where: str) -> np.ndarray:
    try:
        raw = bytes.fromhex(text) if encoding == "hex" else base64.b64decode(text, validate=True)
    except (ValueError, binascii.Error) as exc:
        raise NetworkFileError(f"{where}: cannot decode {encoding} blob ({exc})") from None
    dt = np.dtype(dtype)
    if len(raw) % dt.itemsize:
        raise NetworkFileError(f"{where}: blob length {len(raw)} is not a multiple of {dt.itemsize}")
    return np.frombuffer(raw, dtype=dt).astype(np.int64)


def layer_to_dict(spec: LayerSpec, encoding: str = "base64") -> dict:
    d = {
        "kind": spec.kind,
        "in_shape": list(spec.in_shape),
        "out_shape": list(spec.out_shape),
        "weight_shape": list(spec.weights.shape),
        "weight_scale_exp": int(spec.weight_scale_exp),
        "encoding": encoding,
        "weights": _encode(spec.weights, "i1", encoding),
        "biases": _encode(spec.biases, "<i2", encoding),
        "neuron_kind": spec.neuron_kind,
        "neuron_params": dict(spec.neuron_params),
        "delay": int(spec.delay),
    }
    if spec.kind == "conv2d":
        d["stride"] = int(spec.stride)
        d["padding"] = int(spec.padding)
    if spec.kind == "sparse":
        d["sparse_index"] = _encode(spec.sparse_index, "<i4", encoding)
    return d


def layer_from_dict(d: dict, index: int = 0) -> LayerSpec:
    where = f"layer {index}"
    try:
        encoding = d.get("encoding", "base64")
        if encoding not in ("base64", "hex"):
            raise NetworkFileError(f"{where}: encoding must be 'base64' or 'hex'")
        weights = _decode(d["weights"], "i1", encoding, where)
        shape = tuple(d["weight_shape"])
        if weights.size != int(np.prod(shape)):
            raise NetworkFileError(f"{where}: {weights.size} weights do not fill shape {shape}")
        weights = weights.reshape(shape)
        biases = _decode(d["biases"], "<i2", encoding, where) if "biases" in d else None
        sparse_index = None
        if d["kind"] == "sparse":
            sparse_index = _decode(d["sparse_index"], "<i4", encoding, where).reshape(2, -1)
        return LayerSpec(
            kind=d["kind"],
            in_shape=tuple(d["in_shape"]),
            out_shape=tuple(d["out_shape"]),
            weights=weights,
            biases=biases,
            weight_scale_exp=int(d.get("weight_scale_exp", 0)),
            neuron_kind=d.get("neuron_kind", "sdrelu"),
            neuron_params=dict(d.get("neuron_params", {})),
            delay=int(d.get("delay", 0)),
            stride=int(d.get("stride", 1)),
            padding=int(d.get("padding", 0)),
            sparse_index=sparse_index,
        )
    except KeyError as exc:
        raise NetworkFileError(f"{where}: missing field {exc.args[0]!r}") from None


def dumps(specs, encoding: str = "base64") -> str:
    doc = {"format_version": FORMAT_VERSION, "layers": [layer_to_dict(s, encoding) for s in specs]}
    return json.dumps(doc, indent=1, sort_keys=True)


def loads(text: str) -> list[LayerSpec]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFileError(f"network file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise NetworkFileError("network file must hold a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise NetworkFileError(f"unsupported format_version {version!r}, expected {FORMAT_VERSION}")
    layers = doc.get("layers")
    if not isinstance(layers, list) or not layers:
        raise NetworkFileError("network file needs a non-empty 'layers' list")
    specs = [layer_from_dict(d, i) for i, d in enumerate(layers)]
    for i, s in enumerate(specs):
        s.validate(i)
    return specs


def save(specs, path, encoding: str = "base64") -> None:
    Path(path).write_text(dumps(specs, encoding))


def load(path) -> list[LayerSpec]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise NetworkFileError(f"cannot read network file {path}: {exc.strerror}") from None
    return loads(text)

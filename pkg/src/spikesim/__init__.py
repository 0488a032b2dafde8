"""Event-driven simulator for graded-spike neurons with exact op counting."""

from .estimators import RfSpectrogram, SdnnTransformer, SigmaDeltaCodec
from .fixedpoint import (
    Activation16,
    GradedSpike,
    SpikePayload,
    Weight8,
    dequantize,
    quantize,
    saturate24,
)
from .network import (
    LayerSpec,
    Network,
    NetworkError,
    OpCounters,
    build_network,
    conv2d_layer,
    dense_layer,
    dense_reference_ops,
    reduction_report,
    run,
    sparse_layer,
    step,
)
from .spectral import (
    correlation,
    decode_phase,
    make_bank,
    reconstruct,
    reference_stft,
    rf_stft,
)

__version__ = "0.1.0"

__all__ = [
    "Activation16",
    "GradedSpike",
    "LayerSpec",
    "Network",
    "NetworkError",
    "OpCounters",
    "RfSpectrogram",
    "SdnnTransformer",
    "SigmaDeltaCodec",
    "SpikePayload",
    "Weight8",
    "build_network",
    "conv2d_layer",
    "correlation",
    "decode_phase",
    "dense_layer",
    "dense_reference_ops",
    "dequantize",
    "make_bank",
    "quantize",
    "reconstruct",
    "reduction_report",
    "reference_stft",
    "rf_stft",
    "run",
    "saturate24",
    "sparse_layer",
    "step",
]

"""scikit-learn style wrappers so the codecs and transforms compose with pipelines.

Rows of ``X`` are timesteps. Every estimator is stateless across calls to
``transform``: each call starts from a zeroed neuron state.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import netfile
from .network import build_network, dense_reference_ops, reduction_report, run
from .neuron import delta_stream, sigma_stream
from .spectral import (
    Spectrogram,
    make_bank,
    reconstruct,
    reconstruction_correlation,
    rf_stft,
    ingest,
)


def _integer_array(X, **kwargs) -> np.ndarray:
    X = check_array(X, dtype=None, **kwargs)
    if not np.issubdtype(X.dtype, np.integer):
        if not np.all(np.equal(np.mod(X, 1), 0)):
            raise ValueError("expected integer-valued input; quantize real data first")
    return X.astype(np.int64)


def _signal(X) -> np.ndarray:
    x = np.asarray(X, dtype=np.float64)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D signal or a single column, got shape {x.shape}")
    return check_array(x.reshape(-1, 1), dtype=np.float64)[:, 0]


class SigmaDeltaCodec(TransformerMixin, BaseEstimator):
    """Delta-encode integer streams column by column.

    ``transform`` returns the spike stream (zeros where nothing is sent);
    ``inverse_transform`` is the sigma decoder.
    """

    def __init__(self, threshold=0):
        self.threshold = threshold

    def fit(self, X, y=None):
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")
        X = _integer_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = _integer_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, codec was fitted with {self.n_features_in_}")
        return delta_stream(X, self.threshold)

    def inverse_transform(self, S):
        check_is_fitted(self, "n_features_in_")
        return sigma_stream(_integer_array(S))

    def sparsity(self, X) -> float:
        """Fraction of entries of the encoded stream that carry no spike."""
        S = self.transform(X)
        return 1.0 - np.count_nonzero(S) / S.size


class RfSpectrogram(TransformerMixin, BaseEstimator):
    """Resonate-and-fire filter bank as a transformer.

    ``transform`` maps a real signal (full scale 1.0) to the complex
    ``(n_samples, n_neurons)`` spectrogram; the sparse spike view of the last
    call is kept in ``code_``. ``inverse_transform`` reconstructs the signal
    in activation units, aligned to the window centre.
    """

    def __init__(
        self,
        f_min=1.0,
        f_max=1000.0,
        n_neurons=200,
        sample_rate=4096.0,
        window=200,
        threshold=1 << 17,
        scale_exp=15,
    ):
        self.f_min = f_min
        self.f_max = f_max
        self.n_neurons = n_neurons
        self.sample_rate = sample_rate
        self.window = window
        self.threshold = threshold
        self.scale_exp = scale_exp

    def fit(self, X=None, y=None):
        self.bank_ = make_bank(self.f_min, self.f_max, self.n_neurons, self.sample_rate, self.window, self.threshold)
        self.freqs_ = self.bank_.freqs_hz
        return self

    def transform(self, X):
        check_is_fitted(self, "bank_")
        spec, self.code_ = rf_stft(self.bank_, _signal(X), self.scale_exp)
        return spec.coeffs

    def _as_spec(self, coeffs) -> Spectrogram:
        coeffs = np.asarray(coeffs)
        return Spectrogram(coeffs, self.bank_.freqs_hz, 1, self.bank_.window, 0, self.bank_.lam)

    def inverse_transform(self, coeffs):
        check_is_fitted(self, "bank_")
        return reconstruct(self._as_spec(coeffs), self.bank_)

    def score(self, X, y=None) -> float:
        """Correlation between the reconstruction and the quantized input."""
        check_is_fitted(self, "bank_")
        x = _signal(X)
        spec, _ = rf_stft(self.bank_, x, self.scale_exp)
        return reconstruction_correlation(spec, self.bank_, ingest(x, self.scale_exp))


class SdnnTransformer(TransformerMixin, BaseEstimator):
    """Run a sigma-delta network over a stream of flattened frames.

    Give either ``layers`` (a list of :class:`~spikesim.network.LayerSpec`)
    or ``network_file``. ``transform`` returns the sigma-decoded output per
    frame and records ``counters_`` and ``reduction_`` for the last run.
    """

    def __init__(self, layers=None, network_file=None, input_threshold=0, encode="delta"):
        self.layers = layers
        self.network_file = network_file
        self.input_threshold = input_threshold
        self.encode = encode

    def fit(self, X, y=None):
        if (self.layers is None) == (self.network_file is None):
            raise ValueError("give exactly one of layers or network_file")
        specs = list(self.layers) if self.layers is not None else netfile.load(self.network_file)
        self.network_ = build_network(specs)
        X = _integer_array(X)
        if X.shape[1] != specs[0].in_size:
            raise ValueError(f"frames have {X.shape[1]} values, network expects {specs[0].in_size}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "network_")
        X = _integer_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"frames have {X.shape[1]} values, network expects {self.n_features_in_}")
        self.network_.reset()
        trace = run(self.network_, X, self.encode, self.input_threshold)
        self.trace_ = trace
        self.counters_ = trace.counters
        self.reduction_ = reduction_report(trace, dense_reference_ops(self.network_.specs, len(X)))
        return trace.decoded_outputs()

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikesim.bench.generators import ChirpSpec, gen_chirp
from spikesim.spectral import (
    NoEventError,
    SpikeTimingCode,
    UndefinedCorrelationError,
    aligned_input,
    correlation,
    decode_phase,
    ingest,
    load_signal,
    magnitude_correlation,
    make_bank,
    reconstruct,
    reconstruction_correlation,
    reference_stft,
    rf_stft,
    spike_rate,
    spike_spectrogram,
)

FS = 4096.0


def _dft_oracle(x, window, freq, fs):
    """Direct end-referenced windowed sums, one column per window position."""
    w = 2 * math.pi * freq / fs
    return [
        sum(x[m + n] * cmath.exp(1j * w * (window - 1 - n)) for n in range(window))
        for m in range(len(x) - window + 1)
    ]


def _tone(freq, n, amp=0.5, fs=FS):
    return amp * np.sin(2 * np.pi * freq * np.arange(n) / fs)


# -- bank ------------------------------------------------------------------


def test_default_bank_parameters():
    bank = make_bank(1, 1000, 200, FS, 200)
    assert len(bank) == 200
    assert np.diff(bank.freqs_hz) == pytest.approx(np.full(199, 999 / 199))
    assert bank.freqs_hz[1] - bank.freqs_hz[0] == pytest.approx(5.0201, abs=1e-4)
    assert bank.lam == pytest.approx(0.99501, abs=1e-5)
    assert bank.lam == pytest.approx(math.exp(-1 / 200), rel=1e-15)
    assert np.all((bank.omegas > 0) & (bank.omegas < math.pi))


def test_bank_includes_endpoints():
    assert list(make_bank(100, 200, 2, FS, 200).freqs_hz) == [100.0, 200.0]


@pytest.mark.parametrize("args", [(1, 3000, 10, FS, 200), (1, 1000, 0, FS, 200), (0, 100, 4, FS, 20)])
def test_bad_banks_rejected(args):
    with pytest.raises(ValueError):
        make_bank(*args)


# -- RF transform ----------------------------------------------------------


def test_zero_signal_gives_nothing():
    bank = make_bank(10, 1000, 20, FS, 200)
    spec, code = rf_stft(bank, np.zeros(300))
    assert not spec.coeffs.any() and len(code) == 0


def test_tone_peaks_at_its_neuron():
    bank = make_bank(1, 1000, 200, FS, 200)
    k = 120
    x = _tone(bank.freqs_hz[k], 1200)
    rf, _ = rf_stft(bank, x)
    ref = reference_stft(ingest(x), 200, 1, bank.freqs_hz, FS)
    assert int(np.argmax(np.abs(rf.coeffs[-1]))) == k
    assert int(np.argmax(np.abs(ref.coeffs[-1]))) == k


@pytest.mark.parametrize("f", [37.0, 333.3, 871.0])
def test_steady_state_peak_is_nearest_neuron(f):
    bank = make_bank(20, 1000, 50, FS, 200)
    rf, _ = rf_stft(bank, _tone(f, 2000), mode="float")
    nearest = int(np.argmin(np.abs(bank.freqs_hz - f)))
    assert int(np.argmax(np.abs(rf.coeffs[-1]))) == nearest


def test_linearity_in_integer_gain():
    bank = make_bank(50, 900, 12, FS, 64)
    rng = np.random.default_rng(0)
    x = rng.integers(-2000, 2000, size=400) / 2**15
    base, _ = rf_stft(bank, x, mode="float")
    scaled, _ = rf_stft(bank, 3 * x, mode="float")
    np.testing.assert_allclose(scaled.coeffs, 3 * base.coeffs, rtol=1e-9, atol=1e-6)
    fixed_base, _ = rf_stft(bank, x)
    fixed_scaled, _ = rf_stft(bank, 3 * x)
    # per-step rounding keeps the fixed-point path linear to within a unit
    np.testing.assert_allclose(fixed_scaled.coeffs, 3 * fixed_base.coeffs, atol=1.0)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(-(2**15), 2**15 - 1), min_size=1, max_size=32),
    st.floats(1.0, 2000.0),
)
def test_lossless_bank_matches_exact_complex_sum(samples, freq):
    bank = make_bank(freq, freq, 1, FS, 32)
    bank.lam = 1.0
    bank.__post_init__()
    x = np.array(samples) / 2**15
    spec, _ = rf_stft(bank, x)
    w = 2 * math.pi * freq / FS
    for t in range(len(samples)):
        exact = sum(samples[n] * cmath.exp(1j * w * (t - n)) for n in range(t + 1))
        # one ulp is one activation unit
        assert abs(spec.coeffs[t, 0] - exact) <= 4.0


def test_float_mode_is_exponentially_windowed_dft():
    bank = make_bank(100, 800, 8, FS, 100)
    x = gen_chirp(ChirpSpec(50, 1000, 0.25, FS, 0.5))
    xq = ingest(x).astype(float)
    spec, _ = rf_stft(bank, x, mode="float")
    fixed, _ = rf_stft(bank, x)
    T = len(x) - 1
    weights = bank.lam ** np.arange(T, -1, -1)
    for k, w in enumerate(bank.omegas):
        direct = np.sum(xq * weights * np.exp(1j * w * np.arange(T, -1, -1)))
        assert abs(spec.coeffs[T, k]) == pytest.approx(abs(direct), rel=0.01)
        assert abs(fixed.coeffs[T, k]) == pytest.approx(abs(direct), rel=0.01)


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        rf_stft(make_bank(10, 20, 2, FS, 10), np.ones(5), mode="double")


def test_free_oscillation_fires_once_per_period():
    bank = make_bank(100, 900, 9, FS, 200, threshold=2**13)
    bank.lam = 1.0
    bank.__post_init__()
    x = np.zeros(3000)
    x[0] = 0.9
    _, code = rf_stft(bank, x)
    for k, w in enumerate(bank.omegas):
        times, _ = code.events_for(k)
        assert len(times) > 10
        assert np.diff(times).min() >= math.floor(2 * math.pi / w)
        assert len(times) <= math.ceil(len(x) * w / (2 * math.pi)) + 1


# -- phase decoding --------------------------------------------------------


def _code(times, period=40, mag=1000, threshold=500):
    times = np.asarray(times)
    return SpikeTimingCode(
        np.zeros(len(times), dtype=np.int64), times, np.full(len(times), mag), np.array([period]), threshold
    )


def test_phase_at_spike_is_crossing_offset():
    assert decode_phase(_code([100]), 0, 100) == pytest.approx(math.asin(0.5))


def test_phase_half_a_period_later_is_pi_more():
    assert decode_phase(_code([80]), 0, 100) == pytest.approx(math.asin(0.5) + math.pi)


def test_phase_needs_a_recent_event():
    with pytest.raises(NoEventError):
        decode_phase(_code([10]), 0, 100)
    with pytest.raises(NoEventError):
        decode_phase(_code([150]), 0, 100)


def test_decoded_phase_tracks_tone():
    bank = make_bank(200, 400, 3, FS, 200)
    f = bank.freqs_hz[1]
    x = _tone(f, 2000)
    rf, code = rf_stft(bank, x)
    ref = reference_stft(ingest(x), 200, 1, bank.freqs_hz, FS)
    period = int(code.periods[1])
    w = 2 * math.pi * f / FS
    ts = np.arange(1200, 1900)
    decoded = np.unwrap([decode_phase(code, 1, int(t)) for t in ts])
    slope = np.polyfit(ts, decoded, 1)[0]
    ref_phase = np.unwrap(np.angle(ref.coeffs[ts - ref.offset, 1]))
    ref_slope = np.polyfit(ts, ref_phase, 1)[0]
    assert slope == pytest.approx(w, abs=2 * math.pi / period / len(ts))
    assert slope == pytest.approx(ref_slope, abs=2 * math.pi / period / len(ts))
    # the crossing is seen up to one step late, and the rounded period
    # drifts against the true rotation until the next event
    err = np.angle(np.exp(1j * (np.angle(rf.coeffs[ts, 1]) - decoded)))
    bound = w + (period - 1) * abs(w - 2 * math.pi / period) + 0.01
    assert np.max(np.abs(err)) <= bound


# -- reference transform ---------------------------------------------------


def test_reference_matches_direct_dft():
    rng = np.random.default_rng(3)
    x = rng.normal(size=60)
    freqs = [123.0, 456.0]
    spec = reference_stft(x, 16, 1, freqs, FS)
    assert spec.coeffs.shape == (45, 2)
    for k, f in enumerate(freqs):
        np.testing.assert_allclose(spec.coeffs[:, k], _dft_oracle(x, 16, f, FS), atol=1e-9)


def test_reference_hop_and_length():
    x = np.arange(50.0)
    spec = reference_stft(x, 10, 3, [100.0], FS)
    assert spec.coeffs.shape[0] == (50 - 10) // 3 + 1
    np.testing.assert_allclose(spec.coeffs[2, 0], _dft_oracle(x, 10, 100.0, FS)[6])


def test_reference_zero_and_short_signal():
    assert not reference_stft(np.zeros(30), 10, 1, [50.0], FS).coeffs.any()
    with pytest.raises(ValueError):
        reference_stft(np.zeros(5), 10, 1, [50.0], FS)


def test_on_bin_tone_magnitude():
    f = 10 * FS / 200  # ten whole cycles per window
    spec = reference_stft(_tone(f, 600, amp=1.0), 200, 1, [f], FS)
    np.testing.assert_allclose(np.abs(spec.coeffs[:, 0]), 100.0, rtol=1e-9)


def test_reference_superposition():
    freqs = [100.0, 300.0, 700.0]
    a, b = _tone(300, 500), _tone(700, 500, 0.2)
    sa, sb, sab = (reference_stft(v, 128, 1, freqs, FS).coeffs for v in (a, b, a + b))
    np.testing.assert_allclose(sab, sa + sb, atol=1e-9)


# -- reconstruction and scoring ---------------------------------------------


def test_zero_spectrogram_reconstructs_to_zero():
    bank = make_bank(1, 1000, 40, FS, 200)
    spec, _ = rf_stft(bank, np.zeros(400))
    assert not reconstruct(spec, bank).any()


def test_reference_round_trip_of_tone():
    bank = make_bank(1, 1000, 200, FS, 200)
    x = ingest(_tone(430.0, 2000)).astype(float)
    ref = reference_stft(x, 200, 1, bank.freqs_hz, FS)
    assert reconstruction_correlation(ref, bank, x) >= 0.99


def test_reconstruction_lines_up_with_input():
    bank = make_bank(1, 1000, 200, FS, 200)
    x = ingest(_tone(430.0, 1500)).astype(float)
    rf, _ = rf_stft(bank, x / 2**15)
    rec = reconstruct(rf, bank)
    assert len(rec) == len(aligned_input(rf, x))


def test_chirp_reconstruction_desk_scale():
    bank = make_bank(1, 1000, 200, FS, 200)
    x = gen_chirp(ChirpSpec())
    rf, code = rf_stft(bank, x)
    xq = ingest(x).astype(float)
    assert reconstruction_correlation(rf, bank, xq) >= 0.9
    assert reconstruction_correlation(spike_spectrogram(code, bank, len(x)), bank, xq) >= 0.9


def test_reconstruction_checks_bank():
    bank = make_bank(1, 1000, 20, FS, 200)
    spec, _ = rf_stft(make_bank(1, 1000, 10, FS, 200), np.ones(10))
    with pytest.raises(ValueError):
        reconstruct(spec, bank)


def test_reconstruction_correlation_ignores_amplitude():
    bank = make_bank(1, 1000, 100, FS, 200)
    x = gen_chirp(ChirpSpec(100, 900, 0.5, FS, 0.1))
    a = reconstruction_correlation(rf_stft(bank, x)[0], bank, ingest(x))
    b = reconstruction_correlation(rf_stft(bank, 4 * x)[0], bank, ingest(4 * x))
    assert a == pytest.approx(b, abs=2e-3)


def test_magnitude_correlation_with_reference():
    bank = make_bank(1, 1000, 200, FS, 200)
    x = gen_chirp(ChirpSpec())
    rf, _ = rf_stft(bank, x)
    ref = reference_stft(ingest(x), 200, 1, bank.freqs_hz, FS)
    assert magnitude_correlation(rf, ref) >= 0.95


def test_correlation_examples():
    x = np.sin(np.linspace(0, 20 * np.pi, 4000, endpoint=False))
    assert correlation(x, x) == pytest.approx(1.0)
    assert correlation(x, -x) == pytest.approx(-1.0)
    # ten cycles of 400 samples: a quarter period is orthogonal, half is inverted
    assert correlation(x, np.roll(x, 100)) == pytest.approx(0.0, abs=1e-9)
    assert correlation(x, np.roll(x, 200)) == pytest.approx(-1.0)


@pytest.mark.parametrize("a, b", [([1, 1, 1], [1, 2, 3]), ([0, 0], [0, 0])])
def test_zero_variance_is_undefined(a, b):
    with pytest.raises(UndefinedCorrelationError):
        correlation(a, b)


def test_correlation_shape_errors():
    with pytest.raises(ValueError):
        correlation([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        correlation([1], [2])


# -- events and files -------------------------------------------------------


def test_event_rate_is_aggregate():
    code = _code([1, 5, 9, 13])
    assert spike_rate(code, 4096, FS) == 4.0


def test_spike_spectrogram_holds_latest_event():
    bank = make_bank(FS / 40, FS / 40, 1, FS, 200)
    coeffs = spike_spectrogram(_code([10], period=40), bank, 60).coeffs[:, 0]
    assert not coeffs[:10].any() and not coeffs[50:].any()
    assert abs(coeffs[30]) == pytest.approx(1000)
    assert cmath.phase(coeffs[10]) == pytest.approx(math.asin(0.5))


def test_load_signal_formats(tmp_path):
    pcm = tmp_path / "x.pcm"
    np.array([0, 16384, -32768], dtype="<i2").tofile(pcm)
    np.testing.assert_array_equal(load_signal(pcm), [0.0, 0.5, -1.0])
    csv = tmp_path / "x.csv"
    csv.write_text("value\n0.25\n-0.5\n")
    np.testing.assert_array_equal(load_signal(csv), [0.25, -0.5])
    (tmp_path / "bad.csv").write_text("1\nabc\n")
    with pytest.raises(ValueError):
        load_signal(tmp_path / "bad.csv")

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spikesim.fixedpoint import (
    Activation16,
    GradedSpike,
    SpikePayload,
    Weight8,
    dequantize,
    magnitude24,
    quantize,
    saturate24,
    shift_round,
)


def _quantize_oracle(x, bits, scale_exp):
    # exact rational arithmetic, Python's round() is half-even
    v = round(Fraction(x) * Fraction(2) ** scale_exp)
    lo, hi = -(2 ** (bits - 1)), 2 ** (bits - 1) - 1
    return max(lo, min(hi, v))


@pytest.mark.parametrize("x, expected", [(0, 0), (2**23, 2**23 - 1), (-(2**30), -(2**23))])
def test_saturate24_examples(x, expected):
    assert saturate24(x) == expected
    assert SpikePayload(x).value == expected


@pytest.mark.parametrize("x, expected", [(0.0, 0), (1.0, 64), (3.7, 127)])
def test_quantize_examples(x, expected):
    assert quantize(x, 8, 6) == expected
    assert _quantize_oracle(x, 8, 6) == expected


@pytest.mark.parametrize("v, s, expected", [(64, 6, 1.0), (0, 3, 0.0), (0, -9, 0.0), (-128, 6, -2.0)])
def test_dequantize_examples(v, s, expected):
    assert dequantize(v, s) == expected


def test_quantize_rounds_half_to_even():
    assert quantize(0.5, 8, 0) == 0
    assert quantize(1.5, 8, 0) == 2
    assert quantize(-2.5, 16, 0) == -2
    np.testing.assert_array_equal(quantize(np.array([0.5, 1.5, 2.5]), 8, 0), [0, 2, 2])


def test_quantize_rejects_other_widths():
    with pytest.raises(ValueError):
        quantize(1.0, 12, 0)


@given(st.sampled_from([8, 16, 24]), st.integers(-31, 31), st.data())
def test_quantize_dequantize_round_trip(bits, s, data):
    v = data.draw(st.integers(-(2 ** (bits - 1)), 2 ** (bits - 1) - 1))
    assert quantize(dequantize(v, s), bits, s) == v


@given(st.floats(-1e6, 1e6, allow_nan=False), st.sampled_from([8, 16, 24]), st.integers(-8, 8))
def test_quantize_matches_rational_oracle(x, bits, s):
    assert quantize(x, bits, s) == _quantize_oracle(x, bits, s)


@given(st.integers(-(2**40), 2**40), st.integers(-(2**40), 2**40))
def test_saturate24_is_monotone(x, y):
    if x > y:
        x, y = y, x
    assert saturate24(x) <= saturate24(y)


@given(st.integers(-(2**62), 2**62))
def test_no_wraparound_beyond_range(x):
    assert -(2**23) <= saturate24(x) <= 2**23 - 1
    assert -(2**15) <= Activation16(x).value <= 2**15 - 1
    assert np.sign(saturate24(x)) == np.sign(x)


@given(st.integers(-(2**50), 2**50), st.integers(0, 20))
def test_shift_round_matches_half_even_division(acc, shift):
    expected = round(Fraction(acc, 2**shift))
    assert shift_round(acc, shift) == expected
    assert int(shift_round(np.array([acc], dtype=np.int64), shift)[0]) == expected


@given(st.integers(-(2**30), 2**30), st.integers(-(2**30), 2**30))
def test_magnitude24_is_integer_sqrt(re, im):
    expected = min(math.isqrt(re * re + im * im), 2**23 - 1)
    assert magnitude24(re, im) == expected
    assert int(magnitude24(np.array([re]), np.array([im]))[0]) == expected


def test_weight8_rejects_out_of_range():
    assert Weight8(-128, 6).real() == -2.0
    with pytest.raises(ValueError):
        Weight8(128)
    with pytest.raises(ValueError):
        Weight8(1, 32)


def test_graded_spike_never_zero():
    with pytest.raises(ValueError):
        GradedSpike(0, 0, 0)
    with pytest.raises(ValueError):
        GradedSpike(-1, 0, 5)
    ev = GradedSpike(3, 1, 2**30)
    assert ev.value == 2**23 - 1
    assert sorted([GradedSpike(2, 0, 1), GradedSpike(1, 5, 1)])[0].timestep == 1

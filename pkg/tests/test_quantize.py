import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from biochain import reference
from biochain.biometrics import dequantize, quantize
from biochain.errors import NonFiniteInput


def test_payload_sizes_match_table_encodings():
    rng = np.random.default_rng(0)
    assert len(quantize(rng.normal(size=30)).payload) == 60
    assert len(quantize(rng.normal(size=100), "float32").payload) == 400
    assert len(quantize(rng.normal(size=3087)).payload) == 6174
    for m in reference.TEMPLATE_SHAPES:
        assert reference.template_bytes(m) in (60, 400, 6174)


def test_constant_vector():
    q = quantize(np.full(5, 2.5))
    assert q.scale == 1.0 and q.offset == 2.5
    assert q.payload == b"\x00" * 10
    assert dequantize(q).tolist() == [2.5] * 5


def test_endpoints_use_full_range():
    q = quantize([-1.0, 0.0, 3.0])
    codes = np.frombuffer(q.payload, "<i2")
    assert codes[0] == -32767 and codes[-1] == 32767


def test_float32_is_ieee_single():
    v = np.array([0.1, 1 / 3, 1e30])
    assert dequantize(quantize(v, "float32")).tolist() == v.astype(np.float32).astype(float).tolist()


def test_errors():
    with pytest.raises(NonFiniteInput):
        quantize([1.0, np.inf])
    with pytest.raises(ValueError):
        quantize([1.0], "int8")
    assert quantize([], "int16_scaled").payload == b""


@settings(max_examples=200)
@given(arrays(float, st.integers(1, 200), elements=st.floats(-1e6, 1e6)))
def test_int16_error_bound(v):
    q = quantize(v)
    assert len(q.payload) == 2 * v.size and q.count == v.size
    err = np.abs(dequantize(q) - v)
    assert np.all(err <= q.scale / 2 * (1 + 1e-9) + 1e-9 * np.abs(v).max())


@settings(max_examples=100)
@given(arrays(np.float32, st.integers(1, 100), elements=st.floats(-1e6, 1e6, width=32)))
def test_float32_round_trip_exact(v):
    q = quantize(v.astype(float), "float32")
    assert len(q.payload) == 4 * v.size
    assert np.array_equal(dequantize(q), v.astype(float))

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stnet.errors import NumericInputError, OracleError, ShapeError
from stnet.tensor import (
    default_dtype,
    finite_difference_gradient,
    hadamard,
    linear_index,
    matmul,
    multi_index,
    precision,
    rng_stream,
    softmax,
    tensor,
)


def test_default_precision_is_32_bit_and_switchable():
    assert default_dtype() == np.float32
    with precision(np.float64):
        assert tensor([1.0]).dtype == np.float64
    assert tensor([1.0]).dtype == np.float32


def test_tensor_rejects_zero_dimension():
    with pytest.raises(ShapeError):
        tensor(np.zeros((2, 0)))


def test_linear_index_round_trip():
    shape = (3, 4, 5)
    for off in range(60):
        assert linear_index(shape, multi_index(shape, off)) == off
    assert linear_index(shape, (1, 2, 3)) == 1 * 20 + 2 * 5 + 3


def test_matmul_examples():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(matmul(np.eye(2), a), a)
    np.testing.assert_array_equal(matmul(a, np.array([[5.0], [6.0]])), [[17.0], [39.0]])
    np.testing.assert_array_equal(matmul(np.zeros((2, 2)), np.ones((2, 3))), np.zeros((2, 3)))


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_hadamard_examples():
    a = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(hadamard(a, np.ones(3)), a)
    np.testing.assert_array_equal(hadamard(a, np.zeros(3)), np.zeros(3))
    np.testing.assert_array_equal(hadamard(a, np.array([4.0, 5.0, 6.0])), [4.0, 10.0, 18.0])
    with pytest.raises(ShapeError):
        hadamard(a, np.ones((3, 1)))


def test_softmax_examples():
    np.testing.assert_allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])
    np.testing.assert_allclose(softmax(np.full(4, 7.3)), [0.25] * 4)
    np.testing.assert_allclose(softmax(np.array([0.0, math.log(3)])), [0.25, 0.75], atol=1e-12)
    with pytest.raises(NumericInputError):
        softmax(np.array([0.0, np.nan]))


def test_finite_difference_examples():
    x = np.random.default_rng(0).normal(size=(3, 2))
    np.testing.assert_allclose(finite_difference_gradient(lambda v: v.sum(), x), np.ones((3, 2)), atol=1e-9)
    g = finite_difference_gradient(lambda v: float(v[0] ** 2), np.array([3.0]))
    assert abs(g[0] - 6.0) < 1e-6
    g = finite_difference_gradient(lambda v: float(np.maximum(v, 0).sum()), np.array([-1.0]))
    assert g[0] == 0.0


def test_finite_difference_restores_input_and_flags_nonfinite():
    x = np.array([1.0, 2.0])
    finite_difference_gradient(lambda v: float(v @ v), x)
    np.testing.assert_array_equal(x, [1.0, 2.0])
    with pytest.raises(OracleError):
        finite_difference_gradient(lambda v: float("inf"), x)


def test_rng_streams_are_independent_and_reproducible():
    a = rng_stream(5, "init").normal(size=4)
    np.testing.assert_array_equal(a, rng_stream(5, "init").normal(size=4))
    assert not np.array_equal(a, rng_stream(5, "dropout").normal(size=4))


small = st.floats(-10, 10, allow_nan=False, width=64)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31))
def test_matmul_associativity(m, k, n, p, seed):
    r = np.random.default_rng(seed)
    A, B, C = r.normal(size=(m, k)), r.normal(size=(k, n)), r.normal(size=(n, p))
    left, right = matmul(matmul(A, B), C), matmul(A, matmul(B, C))
    np.testing.assert_allclose(left, right, rtol=1e-10, atol=1e-10)
    A32, B32, C32 = (t.astype(np.float32) for t in (A, B, C))
    left, right = matmul(matmul(A32, B32), C32), matmul(A32, matmul(B32, C32))
    np.testing.assert_allclose(left, right, rtol=1e-4, atol=1e-4)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-80, 80)), st.floats(-50, 50))
def test_softmax_distribution_and_shift_invariance(v, c):
    s = softmax(v)
    assert np.all(s > 0)
    assert abs(s.sum() - 1) < 1e-6
    np.testing.assert_allclose(softmax(v + c), s, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.integers(1, 6), elements=small))
def test_finite_difference_of_linear_functional_is_exact(coef):
    x = np.random.default_rng(0).normal(size=coef.shape)
    g = finite_difference_gradient(lambda v: float(coef @ v), x)
    np.testing.assert_allclose(g, coef, atol=1e-8)

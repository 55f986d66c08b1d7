"""Compiled and pure-Python kernels must agree bit for bit."""

import numpy as np
import pytest

from stnet import _kernels

pytestmark = pytest.mark.skipif(_kernels.compiled is None, reason="compiled extension not built")


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_im2col_col2im_parity(dtype):
    r = np.random.default_rng(0)
    xp = r.normal(size=(2, 4, 6, 5, 3)).astype(dtype)
    for k, s in [((1, 3, 3), (1, 1, 1)), ((2, 2, 2), (2, 1, 2)), ((3, 1, 2), (1, 2, 1))]:
        a = _kernels.python.im2col(xp, *k, *s)
        b = _kernels.compiled.im2col(xp, *k, *s)
        np.testing.assert_array_equal(a, b)
        cols = r.normal(size=a.shape).astype(dtype)
        np.testing.assert_array_equal(
            _kernels.python.col2im(cols, xp.shape, *k, *s), _kernels.compiled.col2im(cols, xp.shape, *k, *s)
        )


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_maxpool_parity(dtype):
    r = np.random.default_rng(1)
    x = r.normal(size=(2, 3, 7, 9, 4)).astype(dtype)
    x[0, 0, 0, 0, 0] = x[0, 0, 0, 1, 0]  # a tie inside one window
    for w in [(1, 2, 2), (2, 2, 2), (3, 3, 2)]:
        ya, ia = _kernels.python.maxpool_forward(x, *w)
        yb, ib = _kernels.compiled.maxpool_forward(x, *w)
        np.testing.assert_array_equal(ya, yb)
        np.testing.assert_array_equal(ia, ib)
        dy = r.normal(size=ya.shape).astype(dtype)
        np.testing.assert_array_equal(
            _kernels.python.maxpool_backward(dy, ia, x.shape, *w),
            _kernels.compiled.maxpool_backward(dy, ib, x.shape, *w),
        )


def test_backend_registry():
    assert set(_kernels.backends()) >= {"python"}
    assert _kernels.BACKEND in ("cython", "python")

"""Dense tensor helpers and the finite-difference gradient oracle.

Tensors are plain row-major :class:`numpy.ndarray` objects. Storage is
32-bit by default; :func:`precision` switches the default to 64-bit for
gradient checking. No operation here broadcasts: mismatched shapes raise
:class:`~stnet.errors.ShapeError`.
"""

from __future__ import annotations

import contextlib
import contextvars
import zlib
from typing import Callable, Iterator

import numpy as np

from .errors import NumericInputError, OracleError, ShapeError

_DTYPE: contextvars.ContextVar[np.dtype] = contextvars.ContextVar(
    "stnet_dtype", default=np.dtype(np.float32)
)


def default_dtype() -> np.dtype:
    return _DTYPE.get()


@contextlib.contextmanager
def precision(dtype) -> Iterator[np.dtype]:
    """Temporarily change the default storage dtype (float32 or float64)."""
    dtype = np.dtype(dtype)
    if dtype not in (np.float32, np.float64):
        raise ValueError(f"unsupported precision {dtype}")
    token = _DTYPE.set(dtype)
    try:
        yield dtype
    finally:
        _DTYPE.reset(token)


def tensor(data, dtype=None) -> np.ndarray:
    """Build a C-contiguous tensor in the current default precision."""
    arr = np.ascontiguousarray(data, dtype=dtype or default_dtype())
    if arr.ndim and 0 in arr.shape:
        raise ShapeError(f"tensor dimensions must be >= 1, got {arr.shape}")
    return arr


def zeros(shape, dtype=None) -> np.ndarray:
    return np.zeros(shape, dtype=dtype or default_dtype())


def ones(shape, dtype=None) -> np.ndarray:
    return np.ones(shape, dtype=dtype or default_dtype())


def linear_index(shape, index) -> int:
    """Row-major linear offset of a multi-index."""
    if len(index) != len(shape):
        raise ShapeError(f"index {tuple(index)} does not match rank of {tuple(shape)}")
    for i, d in zip(index, shape):
        if not 0 <= i < d:
            raise IndexError(f"index {tuple(index)} out of range for {tuple(shape)}")
    return int(np.ravel_multi_index(tuple(index), tuple(shape)))


def multi_index(shape, offset: int) -> tuple[int, ...]:
    return tuple(int(i) for i in np.unravel_index(offset, tuple(shape)))


def require_shape(x: np.ndarray, shape, what: str = "tensor") -> None:
    if tuple(x.shape) != tuple(shape):
        raise ShapeError(f"{what}: expected shape {tuple(shape)}, got {tuple(x.shape)}")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of an m x k and a k x n tensor."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    return a @ b


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ShapeError(f"hadamard: shapes differ {a.shape} vs {b.shape}")
    return a * b


def softmax(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-shifted softmax along ``axis``."""
    v = np.asarray(v)
    if v.shape[axis] < 1:
        raise ShapeError("softmax over an empty axis")
    if not np.all(np.isfinite(v)):
        raise NumericInputError("softmax: non-finite input")
    e = np.exp(v - v.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def finite_difference_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at a time.

    ``x`` is perturbed in place and restored, so ``f`` may close over it.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    grad = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    if not np.shares_memory(flat, x):
        raise ValueError("finite_difference_gradient needs a contiguous tensor")
    g = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = float(f(x))
        flat[i] = orig - eps
        fm = float(f(x))
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise OracleError(f"non-finite function value probing coordinate {i}")
        g[i] = (fp - fm) / (2.0 * eps)
    return grad.astype(x.dtype, copy=False)


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named purpose ("init", "dropout", ...)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))

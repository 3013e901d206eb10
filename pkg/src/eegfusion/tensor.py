"""Dense float64 array operations shared by every stage of the pipeline.

All functions are pure: they validate shapes, never mutate their inputs, and
return freshly allocated C-contiguous float64 arrays. ``Tensor`` is a plain
numpy array; the helpers here pin down dtype, layout, and the error behaviour
the rest of the pipeline relies on.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatchError

Tensor = np.ndarray


def tensor(values) -> Tensor:
    """Build a C-contiguous float64 array, rejecting empty dimensions."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if any(d < 1 for d in arr.shape):
        raise ShapeMismatchError(f"dimension sizes must be >= 1, got shape {arr.shape}")
    return arr


def zeros(shape) -> Tensor:
    shape = tuple(int(d) for d in (shape if np.iterable(shape) else (shape,)))
    if any(d < 1 for d in shape):
        raise ShapeMismatchError(f"dimension sizes must be >= 1, got shape {shape}")
    return np.zeros(shape, dtype=np.float64)


def zeros_like(x: Tensor) -> Tensor:
    return np.zeros_like(x, dtype=np.float64)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of two rank-2 tensors."""
    a = tensor(a)
    b = tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeMismatchError(f"matmul expects rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    return a @ b


def softmax_rows(x: Tensor) -> Tensor:
    """Row-wise softmax with max subtraction, safe for arbitrarily large inputs."""
    x = tensor(x)
    if x.ndim != 2:
        raise ShapeMismatchError(f"softmax_rows expects a rank-2 tensor, got shape {x.shape}")
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def transpose2d(x: Tensor) -> Tensor:
    x = tensor(x)
    if x.ndim != 2:
        raise ShapeMismatchError(f"transpose2d expects a rank-2 tensor, got shape {x.shape}")
    return np.ascontiguousarray(x.T)


def add(a: Tensor, b: Tensor) -> Tensor:
    a = tensor(a)
    b = tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"add requires equal shapes, got {a.shape} and {b.shape}")
    return a + b


def scale(x: Tensor, c: float) -> Tensor:
    return tensor(x) * float(c)


def reshape(x: Tensor, shape) -> Tensor:
    x = tensor(x)
    shape = tuple(int(d) for d in shape)
    if any(d < 1 for d in shape):
        raise ShapeMismatchError(f"dimension sizes must be >= 1, got shape {shape}")
    if int(np.prod(shape)) != x.size:
        raise ShapeMismatchError(f"cannot reshape {x.shape} ({x.size} elements) to {shape}")
    return x.reshape(shape).copy()


def slice_time(x: Tensor, t0: int, t1: int) -> Tensor:
    """Slice [t0, t1) along the last (time/frame) axis."""
    x = tensor(x)
    n = x.shape[-1]
    if not (0 <= t0 < t1 <= n):
        raise ShapeMismatchError(f"time slice [{t0}, {t1}) out of bounds for axis of length {n}")
    return np.ascontiguousarray(x[..., t0:t1])

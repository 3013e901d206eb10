import numpy as np
import pytest

from eegfusion.errors import ShapeMismatchError
from eegfusion.tensor import (
    add,
    matmul,
    reshape,
    scale,
    slice_time,
    softmax_rows,
    tensor,
    transpose2d,
    zeros_like,
)


def matmul_oracle(a, b):
    """Naive triple loop, independent of the library path."""
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def test_matmul_identity():
    eye = [[1.0, 0.0], [0.0, 1.0]]
    b = [[3.0, 4.0], [5.0, 6.0]]
    np.testing.assert_array_equal(matmul(eye, b), b)


def test_matmul_hand_case():
    np.testing.assert_array_equal(matmul([[1.0, 2.0]], [[3.0], [4.0]]), [[11.0]])


def test_matmul_against_triple_loop():
    rng = np.random.default_rng(12)
    a = rng.standard_normal((5, 7))
    b = rng.standard_normal((7, 3))
    np.testing.assert_allclose(matmul(a, b), matmul_oracle(a, b), atol=1e-12)


def test_matmul_random_sizes_against_oracle():
    rng = np.random.default_rng(99)
    for _ in range(5):
        m, k, n = rng.integers(1, 65, size=3)
        a = rng.standard_normal((m, k))
        b = rng.standard_normal((k, n))
        np.testing.assert_allclose(matmul(a, b), matmul_oracle(a, b), atol=1e-12)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeMismatchError, match=r"\(2, 3\).*\(2, 2\)"):
        matmul(np.ones((2, 3)), np.ones((2, 2)))


def test_softmax_uniform_on_equal_inputs():
    np.testing.assert_allclose(softmax_rows([[0.0, 0.0, 0.0]]), [[1 / 3] * 3], atol=1e-15)


def test_softmax_overflow_safe():
    np.testing.assert_allclose(softmax_rows([[1000.0, 1000.0]]), [[0.5, 0.5]], atol=1e-15)


def test_softmax_hand_oracle():
    out = softmax_rows([[0.0, np.log(3.0)]])
    np.testing.assert_allclose(out, [[0.25, 0.75]], atol=1e-12)


def test_softmax_rows_sum_to_one_property():
    rng = np.random.default_rng(7)
    for _ in range(200):
        x = rng.standard_normal((rng.integers(1, 9), rng.integers(1, 9))) * rng.uniform(1, 1e6)
        sums = softmax_rows(x).sum(axis=1)
        np.testing.assert_allclose(sums, 1.0, atol=1e-9)


def test_transpose2d():
    np.testing.assert_array_equal(transpose2d([[1.0, 2.0], [3.0, 4.0]]), [[1.0, 3.0], [2.0, 4.0]])


def test_add_identity_and_associativity():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((4, 5))
    np.testing.assert_array_equal(add(x, zeros_like(x)), x)
    a, b, c = rng.standard_normal((3, 4, 5))
    np.testing.assert_allclose(add(add(a, b), c), add(a, add(b, c)), atol=1e-12)


def test_add_shape_error():
    with pytest.raises(ShapeMismatchError):
        add(np.ones((2, 2)), np.ones((2, 3)))


def test_scale():
    np.testing.assert_array_equal(scale([[2.0, -4.0]], 0.5), [[1.0, -2.0]])


def test_reshape_round_trip_bit_exact():
    rng = np.random.default_rng(5)
    cube = rng.standard_normal((32, 5, 60))
    flat = reshape(cube, (9600,))
    back = reshape(flat, (32, 5, 60))
    assert np.array_equal(back, cube)


def test_reshape_count_mismatch():
    with pytest.raises(ShapeMismatchError):
        reshape(np.ones((2, 3)), (7,))


def test_slice_time():
    x = tensor(np.arange(24).reshape(2, 3, 4))
    np.testing.assert_array_equal(slice_time(x, 1, 3), x[:, :, 1:3])
    with pytest.raises(ShapeMismatchError):
        slice_time(x, 3, 2)
    with pytest.raises(ShapeMismatchError):
        slice_time(x, 0, 5)

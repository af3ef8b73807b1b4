import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mesokit.tensor import (
    Activation,
    Mlp,
    ShapeError,
    as_mat,
    matmul,
    mlp_forward,
    reduce_max_rows,
    sub_rowwise,
)


def triple_loop(a, b):
    out = [[0.0] * len(b[0]) for _ in a]
    for i in range(len(a)):
        for j in range(len(b[0])):
            s = 0.0
            for k in range(len(b)):
                s += float(a[i][k]) * float(b[k][j])
            out[i][j] = s
    return np.array(out)


def test_matmul_identity():
    got = matmul(as_mat([[1, 0], [0, 1]]), as_mat([[3, 4], [5, 6]]))
    np.testing.assert_array_equal(got, [[3, 4], [5, 6]])


def test_matmul_dot():
    assert matmul(as_mat([[1, 2]]), as_mat([[3], [4]])).tolist() == [[11.0]]


def test_matmul_matches_triple_loop(rng):
    a = rng.standard_normal((7, 5)).astype(np.float32)
    b = rng.standard_normal((5, 3)).astype(np.float32)
    got = matmul(a, b)
    want = triple_loop(a, b)
    np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-6 * np.abs(want).max())
    assert got.dtype == np.float32


def test_matmul_is_deterministic(rng):
    a = rng.standard_normal((64, 48)).astype(np.float32)
    b = rng.standard_normal((48, 32)).astype(np.float32)
    assert matmul(a, b).tobytes() == matmul(a.copy(), b.copy()).tobytes()


def test_matmul_shape_error():
    with pytest.raises(ShapeError):
        matmul(np.zeros((2, 3), np.float32), np.zeros((2, 3), np.float32))


def test_as_mat_rejects_nan():
    with pytest.raises(ValueError):
        as_mat([[1.0, float("nan")]])


def test_mlp_rectifier_zero():
    mlp = Mlp((np.array([[1.0], [1.0]]),), Activation.RECTIFIER)
    assert mlp_forward(as_mat([[1, -1]]), mlp).tolist() == [[0.0]]


def test_mlp_identity_weights():
    mlp = Mlp((np.eye(2),), Activation.IDENTITY)
    assert mlp_forward(as_mat([[2, 3]]), mlp).tolist() == [[2.0, 3.0]]


def test_mlp_matches_matmul_chain(rng):
    mlp = Mlp.random([3, 8, 16], "identity", seed=3)
    x = rng.standard_normal((10, 3)).astype(np.float32)
    want = triple_loop(triple_loop(x, mlp.layers[0]), mlp.layers[1])
    got = mlp_forward(x, mlp)
    np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-6 * np.abs(want).max())


def test_mlp_layers_must_chain():
    with pytest.raises(ShapeError):
        Mlp((np.zeros((3, 4)), np.zeros((5, 2))))
    with pytest.raises(ShapeError):
        Mlp(())


def test_mlp_input_width_checked():
    with pytest.raises(ShapeError):
        mlp_forward(np.zeros((2, 4), np.float32), Mlp.random([3, 2]))


def test_reduce_max_rows():
    assert reduce_max_rows(as_mat([[1, 5], [4, 2]])).tolist() == [[4, 5]]
    row = as_mat([[1, -2, 3]])
    np.testing.assert_array_equal(reduce_max_rows(row), row)
    with pytest.raises(ShapeError):
        reduce_max_rows(np.zeros((0, 3), np.float32))


def test_reduce_max_matches_scan(rng):
    x = rng.standard_normal((32, 128)).astype(np.float32)
    want = [max(x[r, j] for r in range(32)) for j in range(128)]
    assert reduce_max_rows(x)[0].tolist() == [float(v) for v in want]


def test_sub_rowwise():
    assert sub_rowwise(as_mat([[1, 2], [3, 4]]), as_mat([[1, 2]])).tolist() == [[0, 0], [2, 2]]
    x = as_mat([[1.5, -2]])
    np.testing.assert_array_equal(sub_rowwise(x, np.zeros((1, 2), np.float32)), x)
    with pytest.raises(ShapeError):
        sub_rowwise(x, as_mat([[1, 2, 3]]))


def test_sub_rowwise_matches_elementwise(rng):
    x = rng.standard_normal((9, 4)).astype(np.float32)
    v = rng.standard_normal((1, 4)).astype(np.float32)
    want = [[np.float32(x[i, j] - v[0, j]) for j in range(4)] for i in range(9)]
    np.testing.assert_array_equal(sub_rowwise(x, v), np.array(want, np.float32))


finite = st.floats(-10, 10, width=32, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_matmul_associative(m, k, n, p, seed):
    r = np.random.default_rng(seed)
    a, b, c = (r.standard_normal(s).astype(np.float32) for s in ((m, k), (k, n), (n, p)))
    left, right = matmul(matmul(a, b), c), matmul(a, matmul(b, c))
    scale = max(1.0, float(np.abs(left).max()))
    assert np.abs(left - right).max() <= 1e-5 * scale


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_identity_mlp_is_linear(rows, cols, seed):
    r = np.random.default_rng(seed)
    mlp = Mlp.random([cols, 6, 4], "identity", seed=seed)
    a = r.standard_normal((rows, cols)).astype(np.float32)
    b = r.standard_normal((1, cols)).astype(np.float32)
    lhs = mlp_forward(sub_rowwise(a, b), mlp)
    rhs = sub_rowwise(mlp_forward(a, mlp), mlp_forward(b, mlp))
    scale = max(np.abs(mlp_forward(a, mlp)).max(), np.abs(mlp_forward(b, mlp)).max(), 1e-30)
    assert np.abs(lhs - rhs).max() <= 1e-6 * scale


@settings(max_examples=100, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 8), st.integers(1, 6)), elements=finite), st.data())
def test_subtraction_distributes_over_max(x, data):
    v = data.draw(arrays(np.float32, (1, x.shape[1]), elements=finite))
    lhs = reduce_max_rows(sub_rowwise(x, v))
    rhs = sub_rowwise(reduce_max_rows(x), v)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-6)

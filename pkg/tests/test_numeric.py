import numpy as np
import pytest

from grownet.errors import ConfigError, NumericalError
from grownet.numeric import (as_matrix, as_vector, finite_diff_grad, matmul,
                             relu, relu_grad, require_finite, sigmoid, softmax)


# -- coercion helpers ---------------------------------------------------------

def test_as_matrix_accepts_lists_and_checks_shape():
    m = as_matrix([[1, 2], [3, 4]])
    assert m.dtype == np.float64
    assert m.shape == (2, 2)
    assert np.array_equal(as_matrix(m, 2, 2), m)


def test_as_matrix_rejects_wrong_ndim_and_shape():
    with pytest.raises(ConfigError):
        as_matrix([1.0, 2.0])
    with pytest.raises(ConfigError):
        as_matrix([[1.0, 2.0]], rows=2, cols=1)


def test_as_vector_accepts_and_checks_length():
    v = as_vector([1, 2, 3])
    assert v.shape == (3,)
    with pytest.raises(ConfigError):
        as_vector([[1.0]])
    with pytest.raises(ConfigError):
        as_vector([1.0, 2.0], length=3)


def test_require_finite():
    arr = np.array([1.0, 2.0])
    assert require_finite(arr) is arr
    with pytest.raises(NumericalError):
        require_finite(np.array([1.0, np.nan]))
    with pytest.raises(NumericalError):
        require_finite(np.array([np.inf]))


# -- matmul -------------------------------------------------------------------

def test_matmul_identity():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(matmul(np.eye(2), a), a)


def test_matmul_small_product():
    out = matmul([[1.0, 2.0]], [[3.0], [4.0]])
    assert out.shape == (1, 1)
    assert out[0, 0] == 11.0


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


def test_matmul_matches_triple_loop_oracle():
    rng = np.random.RandomState(0)
    for _ in range(10):
        r, inner, c = rng.randint(1, 17, size=3)
        a = rng.randn(r, inner)
        b = rng.randn(inner, c)
        assert np.max(np.abs(matmul(a, b) - naive_matmul(a, b))) < 1e-12


def test_matmul_dimension_mismatch():
    with pytest.raises(ConfigError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


# -- activations --------------------------------------------------------------

def test_relu_definition():
    assert np.array_equal(relu(np.array([-1.0, 2.0])), np.array([0.0, 2.0]))


def test_relu_grad_zero_at_kink():
    g = relu_grad(np.array([-1.0, 0.0, 2.0]))
    assert np.array_equal(g, np.array([0.0, 0.0, 1.0]))


def test_sigmoid_symmetry_point():
    assert sigmoid(np.array([0.0]))[0] == 0.5


def test_sigmoid_stable_at_extremes():
    out = sigmoid(np.array([-1000.0, 1000.0]))
    assert np.all(np.isfinite(out))
    assert out[0] == 0.0 and out[1] == 1.0


def test_sigmoid_complement_identity():
    x = np.linspace(-20, 20, 41)
    assert np.allclose(sigmoid(x) + sigmoid(-x), 1.0, atol=1e-15)


def test_softmax_equal_huge_logits():
    out = softmax(np.array([1000.0, 1000.0]))
    assert np.allclose(out, [0.5, 0.5], atol=1e-15)


def test_softmax_rows_sum_to_one_and_open_interval():
    rng = np.random.RandomState(1)
    x = rng.randn(20, 7) * 30.0
    out = softmax(x, axis=-1)
    assert np.all(np.abs(out.sum(axis=-1) - 1.0) < 1e-12)
    assert np.all(out > 0.0) and np.all(out < 1.0)


def test_softmax_shift_invariance():
    x = np.array([0.3, -1.2, 2.5])
    assert np.allclose(softmax(x), softmax(x + 100.0), atol=1e-12)


# -- finite differences -------------------------------------------------------

def test_finite_diff_quadratic():
    f = lambda p: float(p[0] ** 2)
    grad = finite_diff_grad(f, np.array([3.0]), h=1e-5)
    assert abs(grad[0] - 6.0) < 1e-6


def test_finite_diff_constant_is_zero():
    grad = finite_diff_grad(lambda p: 1.5, np.array([0.3, -2.0, 7.0]))
    assert np.array_equal(grad, np.zeros(3))


def test_finite_diff_matches_analytic_quadratic_form():
    rng = np.random.RandomState(2)
    a = rng.randn(4, 4)
    p = rng.randn(4)
    f = lambda v: float(v @ a @ v)
    grad = finite_diff_grad(f, p, h=1e-6)
    analytic = (a + a.T) @ p
    assert np.max(np.abs(grad - analytic)) < 1e-6


def test_finite_diff_preserves_parameter_shape():
    f = lambda p: float((p ** 2).sum())
    p = np.arange(6, dtype=np.float64).reshape(2, 3)
    grad = finite_diff_grad(f, p)
    assert grad.shape == (2, 3)
    assert np.allclose(grad, 2.0 * p, atol=1e-8)


def test_finite_diff_rejects_bad_step():
    with pytest.raises(ConfigError):
        finite_diff_grad(lambda p: 0.0, np.array([1.0]), h=0.0)


def test_finite_diff_flags_non_finite_values():
    with pytest.raises(NumericalError):
        finite_diff_grad(lambda p: float("nan"), np.array([1.0]))

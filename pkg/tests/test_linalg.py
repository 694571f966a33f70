import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from deeplda.errors import NotPositiveDefinite
from deeplda.linalg import cholesky, generalized_eigen, inf_norm, sym_eigen

from conftest import random_spd, random_sym


def test_cholesky_diagonal():
    np.testing.assert_allclose(cholesky([[4.0, 0.0], [0.0, 9.0]]), [[2, 0], [0, 3]], atol=1e-15)


def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky(np.eye(2)), np.eye(2))


def test_cholesky_full_2x2():
    low = cholesky([[4.0, 2.0], [2.0, 5.0]])
    np.testing.assert_allclose(low, [[2, 0], [1, 2]], atol=1e-15)
    np.testing.assert_allclose(low @ low.T, [[4, 2], [2, 5]], atol=1e-14)


@pytest.mark.parametrize("b", [[[1.0, 2.0], [2.0, 1.0]], [[0.0]], [[-1.0]]])
def test_cholesky_rejects_indefinite(b):
    with pytest.raises(NotPositiveDefinite):
        cholesky(b)


def test_cholesky_rejects_asymmetric():
    with pytest.raises(ValueError):
        cholesky([[2.0, 1.0], [0.0, 2.0]])


@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_cholesky_reconstructs(d, seed):
    b = random_spd(np.random.default_rng(seed), d)
    low = cholesky(b)
    assert np.allclose(np.triu(low, 1), 0.0)
    assert np.abs(low @ low.T - b).max() <= 1e-10 * (1 + inf_norm(b))


def test_sym_eigen_diagonal():
    sol = sym_eigen([[3.0, 0.0], [0.0, 7.0]])
    np.testing.assert_allclose(sol.values, [3, 7])
    np.testing.assert_allclose(sol.vectors, np.eye(2))


def test_sym_eigen_2x2_char_poly():
    # (2 - v)^2 - 1 = 0  ->  v = 1, 3
    sol = sym_eigen([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(sol.values, [1, 3], atol=1e-14)


def test_sym_eigen_rank_one():
    sol = sym_eigen(np.full((2, 2), 5.0))
    np.testing.assert_allclose(sol.values, [0, 10], atol=1e-13)


def test_sym_eigen_zero_matrix():
    sol = sym_eigen(np.zeros((3, 3)))
    np.testing.assert_array_equal(sol.values, np.zeros(3))


def test_sign_convention():
    sol = sym_eigen(random_sym(np.random.default_rng(3), 6))
    idx = np.abs(sol.vectors).argmax(axis=0)
    assert np.all(sol.vectors[idx, np.arange(6)] > 0)


@given(st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_sym_eigen_properties(d, seed):
    s = random_sym(np.random.default_rng(seed), d)
    sol = sym_eigen(s)
    e, v = sol.vectors, sol.values
    assert np.all(np.diff(v) >= 0)
    assert np.abs(e.T @ e - np.eye(d)).max() < 1e-12
    assert np.abs(s - e @ np.diag(v) @ e.T).max() <= 1e-8 * (1 + inf_norm(s))
    # independent LAPACK route
    np.testing.assert_allclose(v, np.linalg.eigvalsh(s), atol=1e-10 * (1 + inf_norm(s)))


def test_generalized_1d_running_example():
    sol = generalized_eigen([[98 / 3]], [[2.0]])
    assert sol.values[0] == pytest.approx(49 / 3, rel=1e-14)
    assert sol.vectors[0, 0] == pytest.approx(1 / np.sqrt(2), rel=1e-14)


def test_generalized_1d_regularized():
    sol = generalized_eigen([[98 / 3]], [[3.0]])
    assert sol.values[0] == pytest.approx(98 / 9, rel=1e-14)
    assert sol.vectors[0, 0] == pytest.approx(1 / np.sqrt(3), rel=1e-14)


def test_generalized_a_equals_b(rng):
    b = random_spd(rng, 5)
    np.testing.assert_allclose(generalized_eigen(b, b).values, np.ones(5), atol=1e-12)


@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_generalized_residual_and_b_orthonormality(d, seed):
    rng = np.random.default_rng(seed)
    a, b = random_sym(rng, d), random_spd(rng, d)
    sol = generalized_eigen(a, b)
    e, v = sol.vectors, sol.values
    assert np.all(np.diff(v) >= 0)
    assert np.abs(a @ e - (b @ e) * v).max() <= 1e-8 * (1 + inf_norm(a))
    assert np.abs(e.T @ b @ e - np.eye(d)).max() <= 1e-8
    np.testing.assert_allclose(v, scipy.linalg.eigh(a, b, eigvals_only=True),
                               atol=1e-9 * (1 + np.abs(v).max()))
    # trace(B^-1 A) equals the eigenvalue sum
    assert abs(v.sum() - np.trace(np.linalg.solve(b, a))) <= 1e-8 * (1 + np.abs(v).sum())


@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_generalized_with_identity_matches_standard(d, seed):
    a = random_sym(np.random.default_rng(seed), d)
    np.testing.assert_allclose(generalized_eigen(a, np.eye(d)).values, sym_eigen(a).values, atol=1e-10)


def test_stacked_matches_individual(rng):
    a = np.stack([random_sym(rng, 4) for _ in range(6)])
    b = np.stack([random_spd(rng, 4) for _ in range(6)])
    stacked = generalized_eigen(a, b)
    for i in range(6):
        single = generalized_eigen(a[i], b[i])
        np.testing.assert_allclose(stacked.values[i], single.values, atol=1e-12)
        np.testing.assert_allclose(stacked.vectors[i], single.vectors, atol=1e-10)


def test_top_keeps_largest():
    sol = sym_eigen(np.diag([5.0, 1.0, 3.0]))
    np.testing.assert_array_equal(sol.top(2).values, [3.0, 5.0])

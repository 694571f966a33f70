import numpy as np
import pytest
from hypothesis import given, strategies as st

from deeplda.errors import DegenerateClass
from deeplda.linalg import sym_eigen
from deeplda.scatter import (
    LabeledBatch,
    class_scatter,
    compute_scatter,
    total_scatter_grad_contract,
    within_scatter_grad_contract,
)


def running_example():
    return LabeledBatch(np.array([[0.0], [2.0], [10.0], [12.0]]), np.array([0, 0, 1, 1]), 2)


def random_batch(rng, n, d, c):
    labels = np.concatenate([np.repeat(np.arange(c), 2), rng.integers(0, c, n - 2 * c)])
    rng.shuffle(labels)
    h = rng.normal(size=(n, d)) + rng.normal(size=(c, d))[labels]
    return LabeledBatch(h, labels, c)


def naive_total_contract(h, e):
    """Sum over a, b of e_a e_b dS^t_ab/dH_ij, case by case."""
    n, d = h.shape
    mean = h.mean(axis=0)
    g = np.zeros_like(h)
    for i in range(n):
        for j in range(d):
            for a in range(d):
                for b in range(d):
                    if a == j and b == j:
                        ds = 2.0 / (n - 1) * (h[i, j] - mean[j])
                    elif a == j:
                        ds = 1.0 / (n - 1) * (h[i, b] - mean[b])
                    elif b == j:
                        ds = 1.0 / (n - 1) * (h[i, a] - mean[a])
                    else:
                        ds = 0.0
                    g[i, j] += e[a] * e[b] * ds
    return g


def naive_within_contract(h, labels, c, e):
    g = np.zeros_like(h)
    for cls in range(c):
        rows = np.flatnonzero(labels == cls)
        g[rows] += naive_total_contract(h[rows], e) / c
    return g


def test_class_scatter_1d():
    np.testing.assert_allclose(class_scatter(running_example(), 0), [[2.0]])


def test_class_scatter_constant_rows():
    b = LabeledBatch(np.ones((3, 2)), np.zeros(3, dtype=int), 1)
    np.testing.assert_array_equal(class_scatter(b, 0), np.zeros((2, 2)))


def test_class_scatter_2d():
    b = LabeledBatch(np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]]), np.zeros(3, dtype=int), 1)
    np.testing.assert_allclose(class_scatter(b, 0), [[1.0, 0.0], [0.0, 3.0]], atol=1e-15)


def test_degenerate_class():
    b = LabeledBatch(np.zeros((3, 1)), np.array([0, 0, 1]), 2)
    with pytest.raises(DegenerateClass):
        class_scatter(b, 1)
    with pytest.raises(DegenerateClass):
        compute_scatter(b)


def test_running_example_scatter():
    sc = compute_scatter(running_example())
    assert sc.s_w[0, 0] == pytest.approx(2.0, abs=1e-12)
    assert sc.s_t[0, 0] == pytest.approx(104 / 3, abs=1e-12)
    assert sc.s_b[0, 0] == pytest.approx(98 / 3, abs=1e-12)
    np.testing.assert_array_equal(sc.class_means, [[1.0], [11.0]])
    np.testing.assert_array_equal(sc.class_counts, [2, 2])


def test_identical_samples_give_zero():
    sc = compute_scatter(LabeledBatch(np.full((6, 3), 4.2), np.array([0, 1, 2, 0, 1, 2]), 3))
    for m in (sc.s_w, sc.s_t, sc.s_b):
        np.testing.assert_allclose(m, 0.0, atol=1e-14)


def test_duplicated_column_rank_one(rng):
    col = rng.normal(size=(12, 1))
    sc = compute_scatter(LabeledBatch(np.hstack([col, col]), np.arange(12) % 3, 3))
    for m in (sc.s_w, sc.s_t, sc.s_b):
        v = sym_eigen(m).values
        assert np.sum(np.abs(v) > 1e-8 * (1 + np.abs(v).max())) <= 1


def test_between_is_total_minus_within(rng):
    sc = compute_scatter(random_batch(rng, 30, 4, 3))
    assert np.array_equal(sc.s_b, sc.s_t - sc.s_w)


def test_unweighted_mean_of_class_covariances():
    # unbalanced classes: the pooled estimator would weight class 1 by 4/6
    h = np.array([[0.0], [1.0], [0.0], [2.0], [4.0], [6.0]])
    b = LabeledBatch(h, np.array([0, 0, 1, 1, 1, 1]), 2)
    expected = (class_scatter(b, 0) + class_scatter(b, 1)) / 2
    np.testing.assert_allclose(compute_scatter(b).s_w, expected)


def test_total_contract_zero_direction(rng):
    b = random_batch(rng, 10, 3, 2)
    np.testing.assert_array_equal(total_scatter_grad_contract(b, np.zeros(3)), 0.0)


def test_total_contract_hand_value():
    b = LabeledBatch(np.array([[0.0], [2.0]]), np.array([0, 1]), 2)
    np.testing.assert_allclose(total_scatter_grad_contract(b, np.array([1.0])), [[-2.0], [2.0]])


def test_within_contract_hand_value():
    g = within_scatter_grad_contract(running_example(), np.array([1.0]))
    np.testing.assert_allclose(g, [[-1.0], [1.0], [-1.0], [1.0]])


def test_within_contract_constant_classes():
    h = np.array([[1.0, 2.0], [1.0, 2.0], [5.0, -1.0], [5.0, -1.0]])
    b = LabeledBatch(h, np.array([0, 0, 1, 1]), 2)
    np.testing.assert_array_equal(within_scatter_grad_contract(b, np.array([0.3, -2.0])), 0.0)


@given(st.integers(0, 2**32 - 1))
def test_contracts_match_naive_case_formula(seed):
    rng = np.random.default_rng(seed)
    c = int(rng.integers(1, 4))
    n = int(rng.integers(2 * c, 11))
    d = int(rng.integers(1, 5))
    b = random_batch(rng, n, d, c)
    e = rng.normal(size=d)
    np.testing.assert_allclose(total_scatter_grad_contract(b, e), naive_total_contract(b.features, e),
                               rtol=0, atol=1e-10)
    np.testing.assert_allclose(within_scatter_grad_contract(b, e),
                               naive_within_contract(b.features, b.labels, c, e), rtol=0, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_contracts_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    b = random_batch(rng, 15, 3, 3)
    e = rng.normal(size=3)
    step = 1e-5
    for contract, which in ((total_scatter_grad_contract, "s_t"), (within_scatter_grad_contract, "s_w")):
        analytic = contract(b, e)
        numeric = np.zeros_like(analytic)
        for i in range(b.n):
            for j in range(b.dim):
                hp, hm = b.features.copy(), b.features.copy()
                hp[i, j] += step
                hm[i, j] -= step
                qp = e @ getattr(compute_scatter(LabeledBatch(hp, b.labels, 3)), which) @ e
                qm = e @ getattr(compute_scatter(LabeledBatch(hm, b.labels, 3)), which) @ e
                numeric[i, j] = (qp - qm) / (2 * step)
        assert np.abs(analytic - numeric).max() / np.abs(numeric).max() < 1e-6


@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    b = random_batch(rng, 20, 3, 3)
    perm = rng.permutation(20)
    a, p = compute_scatter(b), compute_scatter(LabeledBatch(b.features[perm], b.labels[perm], 3))
    for name in ("s_w", "s_t", "s_b"):
        np.testing.assert_allclose(getattr(a, name), getattr(p, name), atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(-100, 100))
def test_translation_invariance(seed, shift):
    rng = np.random.default_rng(seed)
    b = random_batch(rng, 20, 3, 3)
    moved = LabeledBatch(b.features + shift * rng.normal(size=3), b.labels, 3)
    a, m = compute_scatter(b), compute_scatter(moved)
    for name in ("s_w", "s_t", "s_b"):
        np.testing.assert_allclose(getattr(a, name), getattr(m, name), atol=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_scatter_set_invariants(seed):
    rng = np.random.default_rng(seed)
    c = int(rng.integers(2, 6))
    d = int(rng.integers(c, 9))
    per_class = int(rng.integers(2, 9))
    # balanced classes: s_b is a rank C-1 term minus a PSD multiple of s_w
    labels = np.repeat(np.arange(c), per_class)
    h = rng.normal(size=(labels.size, d)) + 3 * rng.normal(size=(c, d))[labels]
    sc = compute_scatter(LabeledBatch(h, labels, c))
    assert np.abs(sc.s_w - sc.s_w.T).max() <= 1e-10
    assert np.abs(sc.s_t - sc.s_t.T).max() <= 1e-10
    assert sym_eigen(sc.s_t).values.min() >= -1e-8
    assert np.sum(sym_eigen(sc.s_b).values > 1e-8) <= c - 1


def test_unbalanced_classes_can_exceed_between_rank():
    # with the unweighted mean of class covariances, a dominant class leaks
    # positive mass into s_b beyond the C-1 mean directions
    rng = np.random.default_rng(0)
    labels = np.array([0] * 40 + [1] * 2)
    h = rng.normal(size=(42, 4)) * [1, 2, 3, 4]
    sc = compute_scatter(LabeledBatch(h, labels, 2))
    assert np.sum(sym_eigen(sc.s_b).values > 1e-8) > 1

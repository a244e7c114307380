import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decorr.diagnostics import condition_number, irrepresentable_norm
from decorr.errors import NotPD, SingularGram
from decorr.orthonormalize import gram_schmidt


def test_orthonormal_design_has_zero_norm(rng):
    Q = gram_schmidt(rng.standard_normal((40, 8))).Q
    report = irrepresentable_norm(Q, [0, 3, 5])
    assert report.norm_value < 1e-10 and report.satisfied
    assert report.signal_set == (0, 3, 5)
    assert report.noise_set == (1, 2, 4, 6, 7)
    assert not set(report.signal_set) & set(report.noise_set)


def test_identical_columns_on_the_boundary(rng):
    x = rng.standard_normal(30)
    x /= np.linalg.norm(x)
    report = irrepresentable_norm(np.column_stack([x, x]), [0])
    assert report.norm_value == pytest.approx(1.0, abs=1e-12)
    assert not report.satisfied


def test_matches_dense_evaluation(rng):
    X = rng.standard_normal((50, 6))
    X[:, 2] += 0.7 * X[:, 0]
    S, N = [0, 1], [2, 3, 4, 5]
    dense = X[:, N].T @ X[:, S] @ np.linalg.inv(X[:, S].T @ X[:, S])
    expected = np.abs(dense).sum(axis=1).max()
    assert irrepresentable_norm(X, [1, 0]).norm_value == pytest.approx(expected, rel=1e-12)


def test_singular_gram(rng):
    x = rng.standard_normal(20)
    with pytest.raises(SingularGram):
        irrepresentable_norm(np.column_stack([x, 2 * x, rng.standard_normal(20)]), [0, 1])


def test_signal_set_validation(rng):
    X = rng.standard_normal((10, 3))
    with pytest.raises(ValueError):
        irrepresentable_norm(X, [])
    with pytest.raises(ValueError):
        irrepresentable_norm(X, [0, 1, 2])
    with pytest.raises(ValueError):
        irrepresentable_norm(X, [5])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 4))
def test_orthogonal_blocks_property(seed, k_s, k_n):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((20, k_s + k_n)))
    XS = Q[:, :k_s] @ rng.standard_normal((k_s, k_s))
    XN = Q[:, k_s:] * rng.uniform(0.5, 2, k_n)
    assert irrepresentable_norm(np.column_stack([XS, XN]), range(k_s)).norm_value < 1e-10


def test_condition_number_examples():
    assert condition_number(np.eye(3)) == pytest.approx(1.0)
    assert condition_number(np.diag([4.0, 1.0])) == pytest.approx(4.0)
    cs = np.array([[1.0, 0.9], [0.9, 1.0]])
    assert condition_number(cs) == pytest.approx(19.0, rel=1e-12)


def test_condition_number_not_pd():
    with pytest.raises(NotPD):
        condition_number(np.array([[1.0, 1.0], [1.0, 1.0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
def test_condition_number_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((5, 5))
    sigma = A @ A.T + 0.1 * np.eye(5)
    k = condition_number(sigma)
    assert k >= 1
    assert condition_number(c * sigma) == pytest.approx(k, rel=1e-8)

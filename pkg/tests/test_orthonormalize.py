import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decorr.data import permute_columns, standardize
from decorr.errors import DimensionMismatch, IndexOutOfRange, RankDeficient
from decorr.orthonormalize import gram_schmidt, project_rows

TOL = {"classical": 1e-6, "modified": 1e-8}


@pytest.mark.parametrize("mode", ["classical", "modified"])
def test_orthonormal_input_is_fixed_point(rng, mode):
    Q0, _ = np.linalg.qr(rng.standard_normal((30, 5)))
    f = gram_schmidt(Q0, mode)
    np.testing.assert_allclose(f.Q, Q0, atol=1e-10)
    np.testing.assert_allclose(f.R, np.eye(5), atol=1e-10)


@pytest.mark.parametrize("mode", ["classical", "modified"])
def test_correlated_pair_against_dense_qr(rng, mode):
    x1 = rng.standard_normal(100)
    x2 = 0.8 * x1 + rng.standard_normal(100)
    d = standardize(np.column_stack([x1, x2]), rng.standard_normal(100))
    f = gram_schmidt(d, mode)
    assert abs(f.Q[:, 0] @ f.Q[:, 1]) < 1e-10
    Qd, Rd = np.linalg.qr(d.X)
    signs = np.sign(np.diag(Rd))
    np.testing.assert_allclose(f.Q, Qd * signs, atol=1e-10)
    np.testing.assert_allclose(f.R, Rd * signs[:, None], atol=1e-10)


@pytest.mark.parametrize("mode", ["classical", "modified"])
def test_duplicate_column_is_rank_deficient(rng, mode):
    x = rng.standard_normal((20, 3))
    X = np.column_stack([x, x[:, 1]])
    with pytest.raises(RankDeficient) as info:
        gram_schmidt(X, mode)
    assert info.value.column == 3


def test_more_columns_than_rows_rejected(rng):
    with pytest.raises(DimensionMismatch):
        gram_schmidt(rng.standard_normal((4, 5)))


def test_unknown_mode(rng):
    with pytest.raises(ValueError):
        gram_schmidt(rng.standard_normal((5, 2)), "householder")


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 60), st.integers(1, 8), st.sampled_from(["classical", "modified"]), st.integers(0, 2**32 - 1))
def test_factor_invariants(n, p, mode, seed):
    p = min(p, n - 1)
    rng = np.random.default_rng(seed)
    d = standardize(rng.standard_normal((n, p)) + 0.5 * rng.standard_normal((n, 1)), rng.standard_normal(n))
    f = gram_schmidt(d, mode)
    assert np.abs(f.Q.T @ f.Q - np.eye(p)).max() < TOL[mode]
    assert np.abs(d.X - f.Q @ f.R).max() < 1e-8
    assert np.allclose(f.R, np.triu(f.R))
    assert (np.diag(f.R) > 0).all()
    # Column span: X_j is explained by Q_1..Q_j.
    for j in range(p):
        Qj = f.Q[:, : j + 1]
        resid = d.X[:, j] - Qj @ (Qj.T @ d.X[:, j])
        assert np.linalg.norm(resid) < 1e-8


def test_order_sensitivity(rng):
    x1 = rng.standard_normal(50)
    x2 = 0.8 * x1 + 0.6 * rng.standard_normal(50)
    d = standardize(np.column_stack([x1, x2]), rng.standard_normal(50))
    a = gram_schmidt(d).Q
    b = gram_schmidt(permute_columns(d, [1, 0])).Q
    assert np.abs(a - b).max() > 1e-3
    assert gram_schmidt(permute_columns(d, [1, 0])).ordering.tolist() == [1, 0]


def test_project_rows(rng):
    d = standardize(rng.standard_normal((30, 4)), rng.standard_normal(30))
    f = gram_schmidt(d)
    np.testing.assert_array_equal(project_rows(f, np.arange(30)), f.Q)
    np.testing.assert_array_equal(project_rows(f, [7])[0], f.Q[7])
    rows = np.sort(rng.choice(30, 15, replace=False))
    Qb = project_rows(f, rows)
    assert np.abs(Qb @ f.R - d.X[rows]).max() < 1e-8


def test_project_rows_errors(rng):
    f = gram_schmidt(rng.standard_normal((6, 2)))
    with pytest.raises(IndexOutOfRange):
        project_rows(f, [0, 6])
    with pytest.raises(IndexOutOfRange):
        project_rows(f, [1, 1])

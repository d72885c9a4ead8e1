import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cadmrg.tensor_core import (ConvergenceWarning, DegenerateTensorError, DimensionError,
                                contract, kept_rank, lowest_eigpair, orthonormalize, svd_truncate)
from conftest import random_hermitian


def test_contract_identity_and_norm(rng):
    v = rng.standard_normal(2)
    assert np.allclose(contract(np.eye(2), v, [(1, 0)]), v)
    u = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    u /= np.linalg.norm(u)
    assert abs(contract(u, u.conj(), [(0, 0)]) - 1.0) < 1e-14


def test_contract_matches_loops(rng):
    a, b = rng.standard_normal((2, 3)), rng.standard_normal((3, 2))
    ref = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(3):
                ref[i, j] += a[i, k] * b[k, j]
    assert np.max(np.abs(contract(a, b, [(1, 0)]) - ref)) < 1e-12


def test_contract_dimension_error():
    with pytest.raises(DimensionError):
        contract(np.ones((2, 3)), np.ones((2, 2)), [(1, 0)])


def test_svd_truncate_examples(rng):
    prod = np.outer(rng.standard_normal(3), rng.standard_normal(4))
    assert svd_truncate(prod, [0], max_rank=1)[3] < 1e-28
    bell = np.eye(2) / np.sqrt(2)
    assert svd_truncate(bell, [0], max_rank=1)[3] == pytest.approx(0.5, abs=1e-15)
    m = rng.standard_normal((8, 8))
    u, s, v, dw = svd_truncate(m, [0], max_rank=8)
    assert dw == 0.0
    assert np.max(np.abs(u * s @ v - m)) < 1e-12


def test_svd_truncate_axes_order(rng):
    t = rng.standard_normal((3, 2, 4, 2))
    u, s, v, _ = svd_truncate(t, [0, 2])
    assert u.shape[:2] == (3, 4) and v.shape[1:] == (2, 2)
    back = np.tensordot(u * s, v, axes=(2, 0)).transpose(0, 2, 1, 3)
    assert np.allclose(back, t)


def test_svd_truncate_rejects_zero():
    with pytest.raises(DegenerateTensorError):
        svd_truncate(np.zeros((2, 2)), [0])


def test_kept_rank_rules():
    w = np.array([0.7, 0.2, 0.1 - 1e-12, 1e-12])
    assert kept_rank(w, None, 0.0) == 4
    assert kept_rank(w, 2, 0.0) == 2
    assert kept_rank(w, None, 1e-6) == 3
    assert kept_rank(np.array([1.0]), None, 2.0) == 1


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_svd_discarded_weight_matches_frobenius(m, n, seed):
    a = np.random.default_rng(seed).standard_normal((m, n))
    r = max(1, min(m, n) - 1)
    u, s, v, dw = svd_truncate(a, [0], max_rank=r)
    err = np.linalg.norm(a - u * s @ v) ** 2 / np.linalg.norm(a) ** 2
    assert abs(err - dw) < 1e-10


def test_orthonormalize(rng):
    q, r = orthonormalize(rng.standard_normal((4, 4)), [0])
    assert np.max(np.abs(q.T @ q - np.eye(4))) < 1e-12
    iso = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    _, r = orthonormalize(iso, [0])
    assert abs(abs(np.linalg.det(r)) - 1) < 1e-10
    a = np.zeros((4, 4))
    a[:, :2] = rng.standard_normal((4, 2))
    q, r = orthonormalize(a, [0])
    assert np.max(np.abs(q @ r - a)) < 1e-12
    q, r = orthonormalize(a, [0], direction="right")
    assert np.max(np.abs(r @ q - a)) < 1e-12
    assert np.allclose(q @ q.T, np.eye(q.shape[0]))


def test_eig_diagonal_case():
    res = lowest_eigpair(lambda v: np.array([1.0, -2.0]) * v, np.ones(2) / np.sqrt(2))
    assert res.value == pytest.approx(-2.0, abs=1e-12)
    assert abs(abs(res.vector[1]) - 1) < 1e-9


@pytest.mark.parametrize("precondition", [False, True])
def test_eig_random_hermitian(rng, precondition):
    h = random_hermitian(rng, 64)
    guess = rng.standard_normal(64) + 0j
    res = lowest_eigpair(lambda v: h @ v, guess, tol=1e-11,
                         diagonal=np.diag(h).real if precondition else None)
    assert res.converged
    assert abs(res.value - np.linalg.eigvalsh(h)[0]) < 1e-9


def test_eig_fixed_point(rng):
    h = random_hermitian(rng, 32, complex_=False)
    w, v = np.linalg.eigh(h)
    res = lowest_eigpair(lambda x: h @ x, v[:, 0], tol=1e-9)
    assert res.iterations <= 1
    assert abs(res.value - w[0]) < 1e-9
    assert res.vector.dtype == np.float64


def test_eig_warns_when_not_converged(rng):
    h = random_hermitian(rng, 200, complex_=False)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        res = lowest_eigpair(lambda x: h @ x, rng.standard_normal(200), tol=1e-14, max_iter=3)
    assert not res.converged
    assert any(issubclass(w.category, ConvergenceWarning) for w in rec)

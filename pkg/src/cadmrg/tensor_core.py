"""Dense tensor kernels: contraction, truncated SVD, QR, lowest eigenpair.

All tensors are ``numpy.ndarray`` in C order, complex128 unless stated.
"""
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg


class DimensionError(ValueError):
    pass


class DegenerateTensorError(ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


def contract(a: np.ndarray, b: np.ndarray, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Sum over paired axes; result axes are the free axes of ``a`` then ``b``."""
    ax_a = [p[0] for p in pairs]
    ax_b = [p[1] for p in pairs]
    for i, j in pairs:
        if a.shape[i] != b.shape[j]:
            raise DimensionError(
                f"axis {i} of a has extent {a.shape[i]}, axis {j} of b has {b.shape[j]}")
    return np.tensordot(a, b, axes=(ax_a, ax_b))


def _split_axes(t, left_axes):
    left = list(left_axes)
    right = [k for k in range(t.ndim) if k not in left]
    mat = np.transpose(t, left + right)
    lshape = mat.shape[:len(left)]
    rshape = mat.shape[len(left):]
    return mat.reshape(int(np.prod(lshape)), int(np.prod(rshape))), lshape, rshape


def _svd(mat):
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")


def kept_rank(weights: np.ndarray, max_rank: int | None, rel_threshold: float) -> int:
    """Number of leading entries kept from normalized, descending ``weights``.

    Both rules apply: at most ``max_rank`` and only entries whose relative
    weight is at least ``rel_threshold``.  At least one entry is kept.
    """
    r = int(np.count_nonzero(weights >= rel_threshold)) if rel_threshold > 0 else len(weights)
    if max_rank is not None:
        r = min(r, max_rank)
    return max(r, 1)


def svd_truncate(t: np.ndarray, left_axes: Sequence[int], max_rank: int | None = None,
                 rel_threshold: float = 0.0):
    """Truncated SVD across the bipartition ``left_axes | rest``.

    Returns ``(U, S, V, discarded_weight)``.  ``U`` carries the left axes
    followed by the new bond, ``V`` the new bond followed by the remaining
    axes, both in their original order.  The discarded weight is the
    normalized sum of dropped squared singular values.
    """
    if max_rank is not None and max_rank < 1:
        raise ValueError("max_rank must be >= 1")
    if rel_threshold < 0:
        raise ValueError("rel_threshold must be >= 0")
    mat, lshape, rshape = _split_axes(t, left_axes)
    u, s, vh = _svd(mat)
    total = float(np.dot(s, s))
    if total == 0.0 or not np.isfinite(total):
        raise DegenerateTensorError("cannot truncate an all-zero tensor")
    w = s * s / total
    r = kept_rank(w, max_rank, rel_threshold)
    discarded = float(w[r:].sum())
    u = u[:, :r].reshape(*lshape, r)
    vh = vh[:r, :].reshape(r, *rshape)
    return u, s[:r], vh, discarded


def orthonormalize(t: np.ndarray, left_axes: Sequence[int], direction: str = "left"):
    """QR factorization across ``left_axes | rest``.

    ``direction='left'``: returns ``(Q, R)`` with ``Q`` isometric over the
    left axes, shape ``(*left, k)``, and ``R`` of shape ``(k, *right)``.
    ``direction='right'``: returns ``(Q, R)`` with ``Q`` of shape
    ``(k, *right)`` having orthonormal rows and ``R`` of shape ``(*left, k)``;
    ``t == R @ Q``.
    """
    mat, lshape, rshape = _split_axes(t, left_axes)
    if not np.any(mat):
        raise DegenerateTensorError("cannot orthonormalize a zero tensor")
    if direction == "left":
        q, r = np.linalg.qr(mat)
        k = q.shape[1]
        return q.reshape(*lshape, k), r.reshape(k, *rshape)
    if direction == "right":
        q, r = np.linalg.qr(mat.T)
        k = q.shape[1]
        return q.T.reshape(k, *rshape), r.T.reshape(*lshape, k)
    raise ValueError(f"unknown direction {direction!r}")


@dataclass
class EigResult:
    value: float
    vector: np.ndarray
    converged: bool
    iterations: int
    residual: float


def lowest_eigpair(apply: Callable[[np.ndarray], np.ndarray], guess: np.ndarray,
                   tol: float = 1e-9, max_iter: int = 200, max_subspace: int = 32,
                   diagonal: np.ndarray | None = None) -> EigResult:
    """Lowest eigenpair of a Hermitian linear map by Davidson subspace iteration.

    With ``diagonal`` (the operator's diagonal, same shape as ``guess``) the
    residual is preconditioned by ``(diagonal - lambda)**-1``; without it the
    search space is a restarted Krylov space seeded with ``guess``.
    Converged when
    ``||A v - lambda v|| <= tol * max(1, |lambda|)``.  On reaching
    ``max_iter`` a :class:`ConvergenceWarning` is issued and the best
    iterate is returned with ``converged=False``.
    """
    shape = guess.shape
    x = np.asarray(guess).ravel()
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise DegenerateTensorError("zero initial guess")
    x = x / nrm
    dim = x.size

    def op(v):
        return np.asarray(apply(np.ascontiguousarray(v).reshape(shape))).ravel()

    diag = None if diagonal is None else np.asarray(diagonal, dtype=float).ravel()
    ax = op(x)
    dtype = np.result_type(x.dtype, ax.dtype, np.float64)
    V = np.empty((dim, min(max_subspace, dim)), dtype=dtype)
    AV = np.empty_like(V)
    V[:, 0] = x
    AV[:, 0] = ax
    k = 1
    theta, y, res = 0.0, x, np.inf
    for it in range(1, max_iter + 1):
        h = V[:, :k].conj().T @ AV[:, :k]
        h = 0.5 * (h + h.conj().T)
        evals, evecs = np.linalg.eigh(h)
        theta = float(evals[0])
        c = evecs[:, 0]
        y = V[:, :k] @ c
        ay = AV[:, :k] @ c
        r = ay - theta * y
        res = float(np.linalg.norm(r))
        if res <= tol * max(1.0, abs(theta)) or k == dim:
            y /= np.linalg.norm(y)
            return EigResult(theta, y.reshape(shape), True, it, res)
        if k == V.shape[1]:
            # thick restart on the current Ritz vector and the newest residual direction
            V[:, 0] = y / np.linalg.norm(y)
            AV[:, 0] = ay / np.linalg.norm(y)
            k = 1
        if diag is not None:
            denom = diag - theta
            denom[np.abs(denom) < 1e-8] = 1e-8
            r = r / denom
        for _ in range(2):
            r = r - V[:, :k] @ (V[:, :k].conj().T @ r)
        rn = np.linalg.norm(r)
        if rn < 1e-14:
            y /= np.linalg.norm(y)
            return EigResult(theta, y.reshape(shape), True, it, res)
        V[:, k] = r / rn
        AV[:, k] = op(V[:, k])
        k += 1
    warnings.warn(f"eigensolver not converged after {max_iter} iterations "
                  f"(residual {res:.2e})", ConvergenceWarning, stacklevel=2)
    y /= np.linalg.norm(y)
    return EigResult(theta, y.reshape(shape), False, max_iter, res)

"""Dense state-vector helpers for validation at small qubit counts."""
import numpy as np


def apply_two_qubit(v: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    """Apply a 4x4 gate to qubits ``(q, q+1)`` of an ``n``-qubit state."""
    t = np.asarray(v).reshape(1 << q, 4, 1 << (n - q - 2))
    return np.einsum("ts,asc->atc", u, t).reshape(-1)


def mpo_apply(h, v: np.ndarray) -> np.ndarray:
    """``H v`` for an MPO ``h`` without forming the dense matrix."""
    n = h.n_sites
    t = np.asarray(v).reshape((1,) + (2,) * n)
    for k, w in enumerate(h.tensors):
        # t axes: (bond, out_0..out_k-1, in_k..in_n-1)
        t = np.tensordot(t, w, axes=([0, k + 1], [0, 2]))
        t = np.moveaxis(t, -2, k)
        t = np.moveaxis(t, -1, 0)
    return t.reshape(-1)

"""Builtin lattice models with exact reference energies."""
import numpy as np

from .pauli import PauliSum


def tfim(n: int, g: float = 1.0, j: float = 1.0) -> PauliSum:
    """Open transverse-field Ising chain ``j sum Z_i Z_i+1 + g sum X_i``."""
    if n < 2:
        raise ValueError("need at least two sites")
    xs, zs, cs = [], [], []
    for i in range(n - 1):
        xs.append(0)
        zs.append((1 << (n - 1 - i)) | (1 << (n - 2 - i)))
        cs.append(j)
    for i in range(n):
        xs.append(1 << (n - 1 - i))
        zs.append(0)
        cs.append(g)
    return PauliSum(n, xs, zs, cs)


def tfim_ground_energy(n: int, g: float = 1.0, j: float = 1.0) -> float:
    """Free-fermion ground energy of :func:`tfim`.

    With Majoranas ``a_i, b_i`` from a Jordan-Wigner string of X operators,
    ``X_i = i a_i b_i`` and ``Z_i Z_i+1 = i b_i a_i+1``, so the Hamiltonian
    is ``(i/4) sum A_jk gamma_j gamma_k`` with real antisymmetric ``A`` and
    the ground energy is ``-1/4 sum |eig(i A)|``.
    """
    A = np.zeros((2 * n, 2 * n))
    for i in range(n):
        A[2 * i, 2 * i + 1] += 2 * g
    for i in range(n - 1):
        A[2 * i + 1, 2 * i + 2] += 2 * j
    A = A - A.T
    ev = np.linalg.eigvalsh(1j * A)
    return float(-0.25 * np.abs(ev).sum())


MODELS = {"tfim": (tfim, tfim_ground_energy)}

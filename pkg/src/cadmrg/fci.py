"""Exact reference energies.

Determinant FCI in a fixed ``(n_alpha, n_beta)`` sector, with the sigma
vector generated on the fly from Slater-Condon rules, and a dense Pauli
diagonalizer for small qubit counts.  Both use the Lanczos solver below,
which shares no code with the DMRG eigensolver.

A determinant is a pair of bit strings ``(alpha, beta)`` over spatial
orbitals (bit ``p`` = orbital ``p``) and stands for
``prod_{alpha asc} a+_{p,alpha} prod_{beta asc} a+_{q,beta} |vac>``.
"""
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from . import kernels
from .fcidump import IntegralTable
from .pauli import DENSE_QUBIT_CAP, PauliSum, SizeError, pauli_matvec

SECTOR_CAP = 5_000_000


@dataclass
class DeterminantBasis:
    n_spatial: int
    n_alpha: int
    n_beta: int
    strs_a: np.ndarray
    strs_b: np.ndarray

    @classmethod
    def build(cls, n_spatial, n_alpha, n_beta):
        return cls(n_spatial, n_alpha, n_beta,
                   _strings(n_spatial, n_alpha), _strings(n_spatial, n_beta))

    @property
    def size(self):
        return len(self.strs_a) * len(self.strs_b)

    def determinants(self):
        return [(int(a), int(b)) for a in self.strs_a for b in self.strs_b]

    def address(self, which):
        strs = self.strs_a if which == "a" else self.strs_b
        addr = np.full(1 << self.n_spatial, -1, dtype=np.int64)
        addr[strs] = np.arange(len(strs))
        return addr


def _strings(n, k):
    # lexicographic in the sorted occupied-orbital tuples
    return np.array([sum(1 << p for p in occ) for occ in combinations(range(n), k)],
                    dtype=np.int64)


# --------------------------------------------------------------------------
# Slater-Condon rules over spin orbitals (alpha block first, then beta)

def _spin_orbitals(det, n):
    a, b = det
    return [p for p in range(n) if (a >> p) & 1] + [n + p for p in range(n) if (b >> p) & 1]


def _phys(t, p, q, r, s, n):
    """<pq|rs> over spin orbitals, = (pr|qs) with spin selection."""
    if (p >= n) != (r >= n) or (q >= n) != (s >= n):
        return 0.0
    return t.two_body[p % n, r % n, q % n, s % n]


def _anti(t, p, q, r, s, n):
    return _phys(t, p, q, r, s, n) - _phys(t, p, q, s, r, n)


def _h1(t, p, q, n):
    if (p >= n) != (q >= n):
        return 0.0
    return t.one_body[p % n, q % n]


def _apply_ops(occ, ops):
    """Apply ladder ops (right to left) to a sorted occupation list; (sign, occ) or None."""
    occ = list(occ)
    sign = 1
    for mode, dagger in reversed(ops):
        pos = sum(1 for o in occ if o < mode)
        if dagger:
            if mode in occ:
                return None
            occ.insert(pos, mode)
        else:
            if mode not in occ:
                return None
            occ.remove(mode)
        sign *= -1 if pos % 2 else 1
    return sign, occ


def slater_condon(t: IntegralTable, det_i, det_j) -> float:
    """``<D_i|H|D_j>`` including the core energy on the diagonal."""
    n = t.n_spatial
    oi = _spin_orbitals(det_i, n)
    oj = _spin_orbitals(det_j, n)
    si, sj = set(oi), set(oj)
    if len(oi) != len(oj):
        return 0.0
    holes = sorted(sj - si)      # occupied in j, empty in i
    parts = sorted(si - sj)      # occupied in i, empty in j
    if len(holes) > 2:
        return 0.0
    if not holes:
        e = t.core_energy + sum(_h1(t, k, k, n) for k in oj)
        e += 0.5 * sum(_anti(t, k, l, k, l, n) for k in oj for l in oj)
        return float(e)
    if len(holes) == 1:
        (i,), (a,) = holes, parts
        sign, occ = _apply_ops(oj, [(a, 1), (i, 0)])
        assert occ == oi
        val = _h1(t, a, i, n) + sum(_anti(t, a, k, i, k, n) for k in oj)
        return float(sign * val)
    (i, j), (a, b) = holes, parts
    sign, occ = _apply_ops(oj, [(a, 1), (b, 1), (j, 0), (i, 0)])
    assert occ == oi
    return float(sign * _anti(t, a, b, i, j, n))


def det_to_jw(det, n_spatial, ordering="interleaved"):
    """Map a determinant to ``(basis index, sign)`` of the JW qubit state.

    JW basis states are ``prod_{mode asc} a+_mode |vac>``; the sign is the
    parity of the reordering from alpha-then-beta to mode order.
    """
    a, b = det
    modes = []
    for p in range(n_spatial):
        if (a >> p) & 1:
            modes.append(2 * p if ordering == "interleaved" else p)
    for p in range(n_spatial):
        if (b >> p) & 1:
            modes.append(2 * p + 1 if ordering == "interleaved" else n_spatial + p)
    inversions = sum(1 for x in range(len(modes)) for y in range(x + 1, len(modes))
                     if modes[x] > modes[y])
    nq = 2 * n_spatial
    index = sum(1 << (nq - 1 - m) for m in modes)
    return index, (-1 if inversions % 2 else 1)


# --------------------------------------------------------------------------

class SectorHamiltonian:
    """Matrix-free sector Hamiltonian (never materialized)."""

    def __init__(self, t: IntegralTable, n_alpha: int, n_beta: int, cap: int = SECTOR_CAP):
        self.t = t
        self.basis = DeterminantBasis.build(t.n_spatial, n_alpha, n_beta)
        if self.basis.size > cap:
            raise SizeError(f"sector dimension {self.basis.size} exceeds cap {cap}")
        self.addr_a = self.basis.address("a")
        self.addr_b = self.basis.address("b")
        self.h1 = np.ascontiguousarray(t.one_body, dtype=float)
        self.eri = np.ascontiguousarray(t.two_body, dtype=float)
        self.diag = self._diagonal()
        n = t.n_spatial
        self.tables = (kernels.single_excitations(self.basis.strs_a, self.addr_a, n),
                       kernels.single_excitations(self.basis.strs_b, self.addr_b, n),
                       kernels.occupation_lists(self.basis.strs_a, n),
                       kernels.occupation_lists(self.basis.strs_b, n))

    @property
    def dim(self):
        return self.basis.size

    def _diagonal(self):
        n = self.t.n_spatial
        h = np.diag(self.h1)
        J = np.einsum("iijj->ij", self.eri)
        K = np.einsum("ijji->ij", self.eri)
        occ_a = ((self.basis.strs_a[:, None] >> np.arange(n)) & 1).astype(float)
        occ_b = ((self.basis.strs_b[:, None] >> np.arange(n)) & 1).astype(float)
        ea = occ_a @ h + 0.5 * np.einsum("ai,ij,aj->a", occ_a, J - K, occ_a)
        eb = occ_b @ h + 0.5 * np.einsum("bi,ij,bj->b", occ_b, J - K, occ_b)
        eab = occ_a @ J @ occ_b.T
        return (ea[:, None] + eb[None, :] + eab).ravel()

    def matvec(self, c):
        c = np.asarray(c)
        if np.iscomplexobj(c):
            return self.matvec(c.real) + 1j * self.matvec(c.imag)
        c = np.ascontiguousarray(c, dtype=float)
        s = kernels.fci_sigma(c, self.basis.strs_a, self.basis.strs_b, self.addr_a, self.addr_b,
                              self.h1, self.eri, self.diag, self.t.n_spatial, *self.tables)
        return s + self.t.core_energy * c


def lanczos_lowest(matvec, dim, v0=None, tol=1e-10, max_iter=500, seed=0):
    """Lowest eigenpair by Lanczos with full reorthogonalization.

    Returns ``(energy, vector, residual)``; the residual is
    ``||A x - E x||`` of the returned Ritz vector.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) if v0 is None else np.array(v0)
    v = v / np.linalg.norm(v)
    m = min(max_iter, dim)
    Q = np.zeros((m + 1, dim), dtype=v.dtype)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    Q[0] = v
    energy, x, res = None, v, np.inf
    for k in range(m):
        w = matvec(Q[k])
        if np.iscomplexobj(w) and not np.iscomplexobj(Q):
            Q = Q.astype(complex)
        alpha[k] = np.real(np.vdot(Q[k], w))
        w = w - alpha[k] * Q[k] - (beta[k - 1] * Q[k - 1] if k > 0 else 0)
        for _ in range(2):
            w -= Q[:k + 1].T @ (Q[:k + 1].conj() @ w)
        beta[k] = np.linalg.norm(w)
        T = np.diag(alpha[:k + 1]) + np.diag(beta[:k], 1) + np.diag(beta[:k], -1)
        evals, evecs = np.linalg.eigh(T)
        energy = evals[0]
        # residual norm of the Ritz pair is |beta_k * last component|
        res = abs(beta[k] * evecs[-1, 0])
        if res < tol or beta[k] < 1e-14 or k == m - 1:
            x = Q[:k + 1].T @ evecs[:, 0]
            break
        Q[k + 1] = w / beta[k]
    x = x / np.linalg.norm(x)
    res = float(np.linalg.norm(matvec(x) - energy * x))
    return float(energy), x, res


def fci_ground_energy(t: IntegralTable, n_alpha: int | None = None, n_beta: int | None = None,
                      tol: float = 1e-6, cap: int = SECTOR_CAP, seed: int = 0):
    """Sector FCI ground energy (Hartree, core energy included) and residual."""
    if n_alpha is None:
        n_alpha = t.n_alpha
    if n_beta is None:
        n_beta = t.n_beta
    H = SectorHamiltonian(t, n_alpha, n_beta, cap=cap)
    # lowest-diagonal determinant plus a small random admixture
    v0 = 1e-2 * np.random.default_rng(seed).standard_normal(H.dim)
    v0[np.argmin(H.diag)] += 1.0
    e, _, res = lanczos_lowest(H.matvec, H.dim, v0=v0, tol=tol)
    return e, res


def dense_ground_energy(p: PauliSum, tol: float = 1e-10, cap: int = DENSE_QUBIT_CAP, seed: int = 0):
    """Lowest eigenvalue of a PauliSum over the full ``2**n`` space."""
    if p.n_qubits > cap:
        raise SizeError(f"{p.n_qubits} qubits exceeds the dense cap of {cap}")
    dim = 1 << p.n_qubits
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    e, _, _ = lanczos_lowest(lambda v: pauli_matvec(p, v, cap=cap), dim, v0=v0, tol=tol)
    return e


def sector_dimension(n_spatial, n_alpha, n_beta):
    return comb(n_spatial, n_alpha) * comb(n_spatial, n_beta)

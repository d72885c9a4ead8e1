"""Hot loops, each with a numba-compiled and a pure-NumPy implementation.

The public names dispatch on :data:`cadmrg._accel.HAVE_NUMBA`.  The
``*_numba`` / ``*_numpy`` twins are importable directly so tests and
``benchmarks/bench_kernels.py`` can compare them.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit


# --------------------------------------------------------------------------
# Pauli strings acting on state vectors
#
# A term (x, z, c) is c * P where P is the Hermitian Pauli word with X-part x
# and Z-part z (Y where both bits are set).  P|i> = i^|x&z| (-1)^|i&z| |i^x>.

def popcount(a):
    """Vectorized bit count as int64 (``np.bitwise_count`` yields uint8)."""
    return np.bitwise_count(a).astype(np.int64)


@njit
def _popcount(v):
    c = 0
    while v:
        v &= v - 1
        c += 1
    return c


@njit
def pauli_apply_numba(xs, zs, coeffs, v):
    dim = v.shape[0]
    out = np.zeros(dim, dtype=np.complex128)
    ipow = np.array([1.0 + 0j, 1j, -1.0 + 0j, -1j])
    for t in range(xs.shape[0]):
        x = xs[t]
        z = zs[t]
        c = coeffs[t] * ipow[_popcount(x & z) % 4]
        for i in range(dim):
            if _popcount(i & z) & 1:
                out[i ^ x] -= c * v[i]
            else:
                out[i ^ x] += c * v[i]
    return out


def pauli_apply_numpy(xs, zs, coeffs, v):
    dim = v.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    out = np.zeros(dim, dtype=np.complex128)
    phase = (1j) ** (popcount(xs & zs) % 4)
    c_all = coeffs * phase
    for x in np.unique(xs):
        sel = xs == x
        diag = np.zeros(dim, dtype=np.complex128)
        for z, c in zip(zs[sel], c_all[sel]):
            sign = 1 - 2 * (popcount(idx & z) & 1)
            diag += c * sign
        out[idx ^ x] += diag * v
    return out


pauli_apply = pauli_apply_numba if HAVE_NUMBA else pauli_apply_numpy


# --------------------------------------------------------------------------
# Slater-Condon sigma vector in a fixed (n_alpha, n_beta) sector
#
# Determinants are (alpha string, beta string) bit masks; bit p is spatial
# orbital p.  Index = ia * n_beta_strings + ib.  ``addr_a[mask]`` gives the
# position of an alpha string (or -1).  ``eri`` is chemist (pq|rs).  Both
# twins return H_elec @ c without the diagonal's core-energy shift; the numba
# version takes the electronic diagonal precomputed, the NumPy version
# ignores it and goes through spin-summed excitation operators instead.

def single_excitations(strs, addr, norb):
    """Per string: rows ``(target, sign, i, a)`` for ``a+_a a_i``, i occupied, a empty."""
    nocc = _popcount_py(int(strs[0])) if len(strs) else 0
    nexc = nocc * (norb - nocc)
    out = np.zeros((len(strs), max(nexc, 1), 4), dtype=np.int64)
    for k, m in enumerate(strs):
        m = int(m)
        row = 0
        for i in range(norb):
            if not (m >> i) & 1:
                continue
            for a in range(norb):
                if (m >> a) & 1:
                    continue
                lo, hi = min(i, a), max(i, a)
                between = m & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))
                sign = -1 if bin(between).count("1") & 1 else 1
                out[k, row] = (addr[m ^ (1 << i) ^ (1 << a)], sign, i, a)
                row += 1
    return out[:, :nexc]


def _popcount_py(v):
    return bin(v).count("1")


def occupation_lists(strs, norb):
    occ = np.array([[p for p in range(norb) if (int(m) >> p) & 1] for m in strs], dtype=np.int64)
    return occ.reshape(len(strs), -1)


@njit
def _double_sign(mask, i, j, a, b):
    # a+_a a+_b a_j a_i |mask>, i<j, a<b
    s = 1.0
    m = mask
    for mode in (i, j, b, a):
        s *= -1.0 if _popcount(m & ((1 << mode) - 1)) & 1 else 1.0
        m ^= 1 << mode
    return s, m


@njit
def _same_spin_doubles(m, occ, norb, eri, addr, cvec, stride, other, is_alpha):
    acc = 0.0
    k = occ.shape[0]
    for x in range(k):
        i = occ[x]
        for y in range(x + 1, k):
            j = occ[y]
            for a in range(norb):
                if (m >> a) & 1:
                    continue
                for b in range(a + 1, norb):
                    if (m >> b) & 1:
                        continue
                    s, m2 = _double_sign(m, i, j, a, b)
                    v = eri[a, i, b, j] - eri[a, j, b, i]
                    if is_alpha:
                        acc += s * v * cvec[addr[m2] * stride + other]
                    else:
                        acc += s * v * cvec[other * stride + addr[m2]]
    return acc


@njit
def fci_sigma_numba(c, strs_a, strs_b, addr_a, addr_b, h1, eri, diag, norb,
                    exc_a, exc_b, occ_a, occ_b):
    na = strs_a.shape[0]
    nb = strs_b.shape[0]
    sigma = diag * c
    for ia in range(na):
        ma = strs_a[ia]
        for ib in range(nb):
            mb = strs_b[ib]
            acc = 0.0
            for e in range(exc_a.shape[1]):
                ja, sa, i, a = exc_a[ia, e, 0], exc_a[ia, e, 1], exc_a[ia, e, 2], exc_a[ia, e, 3]
                # <a k||i k> summed over occupied spin orbitals k
                f = h1[a, i]
                for x in range(occ_a.shape[1]):
                    j = occ_a[ia, x]
                    f += eri[a, i, j, j] - eri[a, j, j, i]
                for x in range(occ_b.shape[1]):
                    j = occ_b[ib, x]
                    f += eri[a, i, j, j]
                acc += sa * f * c[ja * nb + ib]
                for e2 in range(exc_b.shape[1]):
                    jb, sb, j, b = exc_b[ib, e2, 0], exc_b[ib, e2, 1], exc_b[ib, e2, 2], exc_b[ib, e2, 3]
                    acc += sa * sb * eri[a, i, b, j] * c[ja * nb + jb]
            for e in range(exc_b.shape[1]):
                jb, sb, i, a = exc_b[ib, e, 0], exc_b[ib, e, 1], exc_b[ib, e, 2], exc_b[ib, e, 3]
                f = h1[a, i]
                for x in range(occ_b.shape[1]):
                    j = occ_b[ib, x]
                    f += eri[a, i, j, j] - eri[a, j, j, i]
                for x in range(occ_a.shape[1]):
                    j = occ_a[ia, x]
                    f += eri[a, i, j, j]
                acc += sb * f * c[ia * nb + jb]
            acc += _same_spin_doubles(ma, occ_a[ia], norb, eri, addr_a, c, nb, ib, True)
            acc += _same_spin_doubles(mb, occ_b[ib], norb, eri, addr_b, c, nb, ia, False)
            sigma[ia * nb + ib] += acc
    return sigma


def _excitation_matrices(strs, addr, norb):
    """Sparse E_pq = a^+_p a_q on one spin's strings, indexed [p, q]."""
    import scipy.sparse as sp
    n = len(strs)
    mats = [[None] * norb for _ in range(norb)]
    for p in range(norb):
        for q in range(norb):
            rows, cols, vals = [], [], []
            for J, m in enumerate(strs):
                m = int(m)
                if not (m >> q) & 1:
                    continue
                if p != q and (m >> p) & 1:
                    continue
                lo, hi = min(p, q), max(p, q)
                between = m & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1)) if p != q else 0
                sign = -1.0 if bin(between).count("1") & 1 else 1.0
                rows.append(addr[m ^ (1 << q) ^ (1 << p)] if p != q else J)
                cols.append(J)
                vals.append(sign)
            mats[p][q] = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return mats


def fci_sigma_numpy(c, strs_a, strs_b, addr_a, addr_b, h1, eri, diag, norb, *tables):
    na, nb = len(strs_a), len(strs_b)
    C = c.reshape(na, nb)
    A = _excitation_matrices(strs_a, addr_a, norb)
    B = _excitation_matrices(strs_b, addr_b, norb)
    k = h1 - 0.5 * np.einsum("prrq->pq", eri)
    T = np.empty((norb, norb, na, nb), dtype=np.result_type(c, h1))
    for r in range(norb):
        for s in range(norb):
            T[r, s] = A[r][s] @ C + (B[r][s] @ C.T).T
    D = np.einsum("pqrs,rsij->pqij", eri, T)
    sigma = np.einsum("pq,pqij->ij", k, T)
    for p in range(norb):
        for q in range(norb):
            sigma += 0.5 * (A[p][q] @ D[p, q] + (B[p][q] @ D[p, q].T).T)
    return sigma.ravel()


fci_sigma = fci_sigma_numba if HAVE_NUMBA else fci_sigma_numpy

"""Second-quantized Hamiltonians and their Jordan-Wigner Pauli form.

Bit conventions: qubit ``q`` of an ``n``-qubit register is bit ``n-1-q`` of
a basis-state index, so qubit 0 is the most significant bit and dense
vectors line up with C-order reshapes of MPS tensors.  Pauli words are
stored as ``(x, z)`` masks in the same convention; a set ``x`` and ``z`` bit
on one qubit means ``Y``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import popcount
from .fcidump import IntegralTable

CREATE, ANNIHILATE = 1, 0

DENSE_QUBIT_CAP = 14


class SizeError(ValueError):
    pass


@dataclass
class FermionOpSum:
    """Sum of coefficient * product of ladder operators.

    ``terms`` holds ``(coeff, ((mode, CREATE|ANNIHILATE), ...))``; the
    operators act right to left as written.  An empty operator tuple is a
    constant.
    """
    n_modes: int
    terms: list = field(default_factory=list)

    def add(self, coeff, *ops):
        for mode, _ in ops:
            if not 0 <= mode < self.n_modes:
                raise ValueError(f"mode {mode} outside 0..{self.n_modes - 1}")
        self.terms.append((coeff, tuple(ops)))
        return self

    def adjoint(self):
        out = FermionOpSum(self.n_modes)
        for c, ops in self.terms:
            out.terms.append((np.conj(c), tuple((m, 1 - d) for m, d in reversed(ops))))
        return out

    def is_hermitian(self, tol=1e-10):
        diff = jordan_wigner(self) - jordan_wigner(self.adjoint())
        return diff.simplify(tol).n_terms == 0


def _mode(i, sigma, n_spatial, ordering):
    if ordering == "interleaved":
        return 2 * i + sigma
    if ordering == "blocked":
        return sigma * n_spatial + i
    raise ValueError(f"unknown ordering {ordering!r}")


def spin_orbital_hamiltonian(t: IntegralTable, ordering: str = "interleaved",
                             prune: float = 1e-12) -> FermionOpSum:
    """``sum t_pq a+_p a_q + 1/2 sum g_pqrs a+_p a+_q a_r a_s + core``.

    ``g_pqrs = <pq|sr> = (ps|qr)`` in terms of the stored chemist integrals,
    nonzero only when the spins of ``p, s`` and of ``q, r`` agree.
    """
    n = t.n_spatial
    f = FermionOpSum(2 * n)
    if t.core_energy != 0.0:
        f.terms.append((float(t.core_energy), ()))
    for p in range(n):
        for q in range(n):
            h = t.one_body[p, q]
            if abs(h) < prune:
                continue
            for s in (0, 1):
                f.terms.append((float(h), ((_mode(p, s, n, ordering), CREATE),
                                           (_mode(q, s, n, ordering), ANNIHILATE))))
    g = t.two_body
    idx = np.argwhere(np.abs(g) >= prune)
    for p, s_, q, r in idx:
        # chemist (ps|qr) -> a+_p a+_q a_r a_s
        val = 0.5 * float(g[p, s_, q, r])
        for sa in (0, 1):
            for sb in (0, 1):
                mp, mq = _mode(p, sa, n, ordering), _mode(q, sb, n, ordering)
                mr, ms = _mode(r, sb, n, ordering), _mode(s_, sa, n, ordering)
                if mp == mq or mr == ms:
                    continue
                f.terms.append((val, ((mp, CREATE), (mq, CREATE),
                                      (mr, ANNIHILATE), (ms, ANNIHILATE))))
    return f


# ---------------------------------------------------------------------------

_WORD_CHARS = "IXZY"   # index = x + 2 z


class PauliSum:
    """Weighted sum of Pauli words on ``n_qubits`` qubits.

    Stored as parallel arrays ``xs``, ``zs`` (int64 masks) and ``coeffs``.
    Terms are not merged until :meth:`simplify` is called.
    """

    def __init__(self, n_qubits, xs=(), zs=(), coeffs=()):
        if n_qubits > 62:
            raise SizeError("at most 62 qubits")
        self.n_qubits = int(n_qubits)
        self.xs = np.asarray(xs, dtype=np.int64).ravel()
        self.zs = np.asarray(zs, dtype=np.int64).ravel()
        self.coeffs = np.asarray(coeffs, dtype=np.complex128).ravel()

    @classmethod
    def from_terms(cls, n_qubits, terms):
        """From ``{word: coeff}`` or an iterable of ``(word, coeff)``."""
        items = terms.items() if isinstance(terms, dict) else terms
        xs, zs, cs = [], [], []
        for word, c in items:
            x, z = word_to_masks(word)
            if len(word) != n_qubits:
                raise ValueError(f"word {word!r} has length {len(word)} != {n_qubits}")
            xs.append(x)
            zs.append(z)
            cs.append(c)
        return cls(n_qubits, xs, zs, cs)

    @property
    def n_terms(self):
        return len(self.coeffs)

    @property
    def terms(self):
        """``{word: coeff}`` after merging like terms."""
        s = self.simplify(0.0)
        return {masks_to_word(int(x), int(z), self.n_qubits): complex(c)
                for x, z, c in zip(s.xs, s.zs, s.coeffs)}

    def simplify(self, tol=1e-12):
        """Merge like words and drop terms with ``|coeff| < tol`` (and exact zeros)."""
        if self.n_terms == 0:
            return PauliSum(self.n_qubits)
        key = (self.xs << self.n_qubits) | self.zs
        uniq, inv = np.unique(key, return_inverse=True)
        c = np.zeros(len(uniq), dtype=np.complex128)
        np.add.at(c, inv, self.coeffs)
        keep = (np.abs(c) >= tol) & (c != 0)
        uniq = uniq[keep]
        mask = (1 << self.n_qubits) - 1
        return PauliSum(self.n_qubits, uniq >> self.n_qubits, uniq & mask, c[keep])

    def __add__(self, other):
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        return PauliSum(self.n_qubits, np.concatenate([self.xs, other.xs]),
                        np.concatenate([self.zs, other.zs]),
                        np.concatenate([self.coeffs, other.coeffs]))

    def __neg__(self):
        return PauliSum(self.n_qubits, self.xs, self.zs, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return PauliSum(self.n_qubits, self.xs, self.zs, self.coeffs * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={self.n_terms})"

    def identity_coefficient(self):
        return complex(self.coeffs[(self.xs == 0) & (self.zs == 0)].sum())

    def to_dense(self, cap=DENSE_QUBIT_CAP):
        n = self.n_qubits
        if n > min(cap, 12):
            raise SizeError(f"dense matrix of {n} qubits exceeds cap")
        dim = 1 << n
        idx = np.arange(dim, dtype=np.int64)
        m = np.zeros((dim, dim), dtype=np.complex128)
        for x, z, c in zip(self.xs, self.zs, self.coeffs):
            ph = (1j) ** (int(popcount(x & z)) % 4)
            sign = 1 - 2 * (popcount(idx & z) & 1)
            m[idx ^ x, idx] += c * ph * sign
        return m


def word_to_masks(word: str):
    n = len(word)
    x = z = 0
    for q, ch in enumerate(word.upper()):
        bit = 1 << (n - 1 - q)
        if ch == "X":
            x |= bit
        elif ch == "Z":
            z |= bit
        elif ch == "Y":
            x |= bit
            z |= bit
        elif ch != "I":
            raise ValueError(f"bad Pauli letter {ch!r}")
    return x, z


def masks_to_word(x: int, z: int, n: int) -> str:
    return "".join(_WORD_CHARS[((x >> (n - 1 - q)) & 1) + 2 * ((z >> (n - 1 - q)) & 1)]
                   for q in range(n))


def jordan_wigner(f: FermionOpSum) -> PauliSum:
    """Map ``a+_p -> Z_0..Z_{p-1} (X_p - iY_p)/2`` and merge like words."""
    n = f.n_modes
    groups = {}
    for c, ops in f.terms:
        pattern = tuple(d for _, d in ops)
        groups.setdefault(pattern, ([], []))
        groups[pattern][0].append(c)
        groups[pattern][1].append([m for m, _ in ops])
    xs_all, zs_all, cs_all = [], [], []
    for pattern, (coeffs, modes) in groups.items():
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        modes = np.asarray(modes, dtype=np.int64).reshape(len(coeffs), len(pattern))
        L = len(pattern)
        if L == 0:
            xs_all.append(np.zeros(len(coeffs), np.int64))
            zs_all.append(np.zeros(len(coeffs), np.int64))
            cs_all.append(coeffs)
            continue
        e = np.left_shift(np.int64(1), (n - 1 - modes))
        below = ((np.int64(1) << n) - 1) ^ ((e << 1) - 1)
        for variant in range(1 << L):
            x = np.zeros(len(coeffs), np.int64)
            z = np.zeros(len(coeffs), np.int64)
            c = coeffs.copy()
            for k in range(L):
                use_z = (variant >> k) & 1
                xk = e[:, k]
                zk = below[:, k] | (e[:, k] if use_z else 0)
                # (X^x Z^z)(X^xk Z^zk) = (-1)^|z & xk| X^(x^xk) Z^(z^zk)
                sign = 1 - 2 * (popcount(z & xk) & 1)
                c = c * sign * (0.5 if (not use_z or pattern[k] == CREATE) else -0.5)
                x ^= xk
                z ^= zk
            # X^x Z^z = (-i)^|x&z| * word
            c = c * (-1j) ** (popcount(x & z) % 4)
            xs_all.append(x)
            zs_all.append(z)
            cs_all.append(c)
    if not xs_all:
        return PauliSum(n)
    p = PauliSum(n, np.concatenate(xs_all), np.concatenate(zs_all), np.concatenate(cs_all))
    return p.simplify(0.0)


def simplify(p: PauliSum, tol: float = 1e-12) -> PauliSum:
    return p.simplify(tol)


def pauli_matvec(p: PauliSum, v: np.ndarray, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
    """``sum_t c_t P_t v`` on a dense state vector of length ``2**n_qubits``."""
    if p.n_qubits > cap:
        raise SizeError(f"{p.n_qubits} qubits exceeds the dense cap of {cap}")
    v = np.asarray(v, dtype=np.complex128)
    if v.shape != (1 << p.n_qubits,):
        raise ValueError(f"state has shape {v.shape}, expected ({1 << p.n_qubits},)")
    return kernels.pauli_apply(p.xs, p.zs, p.coeffs, v)


def qubit_hamiltonian(t: IntegralTable, ordering: str = "interleaved", tol: float = 1e-12) -> PauliSum:
    """FCIDUMP integrals -> simplified Jordan-Wigner PauliSum."""
    p = jordan_wigner(spin_orbital_hamiltonian(t, ordering))
    p = p.simplify(tol)
    if np.max(np.abs(p.coeffs.imag), initial=0.0) < 1e-12:
        p.coeffs = p.coeffs.real.astype(complex)
    return p

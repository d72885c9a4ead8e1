"""Two-qubit Clifford gates modulo Paulis (the 720 elements of Sp(4, 2)).

A Pauli with phase is a triple ``(k, x, z)`` meaning ``i**k * P`` where
``P`` is the Hermitian Pauli word with X-bits ``x`` and Z-bits ``z``
(2-bit ints, qubit 0 is the high bit, Y where both are set).  A gate acts
on the 4-dim space indexed ``2*s0 + s1``.

Gates are enumerated by breadth-first search over words in the generators
``H0, H1, S0, S1, CNOT01``, multiplying new generators on the left; the
first word reaching a symplectic matrix defines that coset's unitary and
its id.  The identity is gate 0.
"""
import csv
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

LOCAL, CNOT_CLASS, SWAP_CLASS = "local", "cnot_class", "swap_class"
GATE_CLASSES = (LOCAL, CNOT_CLASS, SWAP_CLASS)
_CLASS_BY_RANK = {1: LOCAL, 2: CNOT_CLASS, 4: SWAP_CLASS}

# symplectic basis order: X0, X1, Z0, Z1 ; as (x, z) bit pairs
_BASIS = ((0b10, 0b00), (0b01, 0b00), (0b00, 0b10), (0b00, 0b01))


def _g(x1, z1, x2, z2):
    # exponent of i in sigma(x1,z1) sigma(x2,z2) = i^g sigma(x1^x2, z1^z2)
    if x1 == 0 and z1 == 0:
        return 0
    if x1 and z1:
        return z2 - x2
    if x1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


def pauli_mul(p, q):
    """Product of two phased two-qubit Paulis."""
    k = p[0] + q[0]
    for b in (1, 0):
        k += _g((p[1] >> b) & 1, (p[2] >> b) & 1, (q[1] >> b) & 1, (q[2] >> b) & 1)
    return (k % 4, p[1] ^ q[1], p[2] ^ q[2])


def _conjugate(images, p):
    # images: phased images of X0, X1, Z0, Z1
    k, x, z = p
    out = ((k + bin(x & z).count("1")) % 4, 0, 0)
    for q, b in ((0, 1), (1, 0)):       # qubit 0 is bit 1
        if (x >> b) & 1:
            out = pauli_mul(out, images[q])
        if (z >> b) & 1:
            out = pauli_mul(out, images[2 + q])
    return out


_IDENTITY_TABLEAU = tuple((0, x, z) for x, z in _BASIS)

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])
_I2 = np.eye(2)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

# generator tableaux written out by hand: images of (X0, X1, Z0, Z1)
_GENERATORS = {
    "H0": (np.kron(_H, _I2), ((0, 0, 0b10), (0, 0b01, 0), (0, 0b10, 0), (0, 0, 0b01))),
    "H1": (np.kron(_I2, _H), ((0, 0b10, 0), (0, 0, 0b01), (0, 0, 0b10), (0, 0b01, 0))),
    "S0": (np.kron(_S, _I2), ((0, 0b10, 0b10), (0, 0b01, 0), (0, 0, 0b10), (0, 0, 0b01))),
    "S1": (np.kron(_I2, _S), ((0, 0b10, 0), (0, 0b01, 0b01), (0, 0, 0b10), (0, 0, 0b01))),
    "CNOT01": (_CNOT, ((0, 0b11, 0), (0, 0b01, 0), (0, 0, 0b10), (0, 0, 0b11))),
}


def _sym_from_tableau(images):
    m = np.zeros((4, 4), dtype=np.uint8)
    for col, (_, x, z) in enumerate(images):
        m[:, col] = [(x >> 1) & 1, x & 1, (z >> 1) & 1, z & 1]
    return m


def _key(m):
    return bytes(np.asarray(m, dtype=np.uint8).ravel())


OMEGA = np.block([[np.zeros((2, 2)), np.eye(2)], [np.eye(2), np.zeros((2, 2))]]).astype(np.uint8)


def is_symplectic(m):
    m = np.asarray(m, dtype=np.int64)
    return bool(np.array_equal((m.T @ OMEGA @ m) % 2, OMEGA))


@dataclass(frozen=True)
class SymplecticRep:
    matrix: np.ndarray = field(compare=False)
    id: int


@dataclass(frozen=True)
class CliffordGate2:
    sym: SymplecticRep
    unitary: np.ndarray = field(repr=False, compare=False)
    tableau: tuple = field(repr=False)
    word: tuple
    gate_class: str
    schmidt_rank: int

    @property
    def id(self):
        return self.sym.id


def operator_schmidt_rank(u, tol=1e-10):
    r = np.asarray(u).reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    s = np.linalg.svd(r, compute_uv=False)
    return int(np.count_nonzero(s > tol * s[0]))


def classify(g):
    """``(gate_class, schmidt_rank)`` from the operator Schmidt rank of the unitary."""
    rank = operator_schmidt_rank(g.unitary)
    if rank not in _CLASS_BY_RANK:
        raise AssertionError(f"two-qubit Clifford with operator Schmidt rank {rank}")
    return _CLASS_BY_RANK[rank], rank


@lru_cache(maxsize=1)
def enumerate_gates():
    """All 720 coset representatives, identity first, in BFS order."""
    seen = {}
    order = []
    start = (np.eye(4, dtype=complex), _IDENTITY_TABLEAU, ())
    queue = deque([start])
    seen[_key(_sym_from_tableau(_IDENTITY_TABLEAU))] = 0
    order.append(start)
    while queue:
        u, tab, word = queue.popleft()
        for name, (gu, gtab) in _GENERATORS.items():
            ntab = tuple(_conjugate(gtab, p) for p in tab)
            k = _key(_sym_from_tableau(ntab))
            if k in seen:
                continue
            seen[k] = len(order)
            item = (gu @ u, ntab, (name,) + word)
            order.append(item)
            queue.append(item)
    gates = []
    for gid, (u, tab, word) in enumerate(order):
        rank = operator_schmidt_rank(u)
        gates.append(CliffordGate2(SymplecticRep(_sym_from_tableau(tab), gid), u, tab, word,
                                   _CLASS_BY_RANK[rank], rank))
    return tuple(gates)


@lru_cache(maxsize=1)
def _index_by_key():
    return {_key(g.sym.matrix): g.id for g in enumerate_gates()}


def gate_id_of(sym_matrix):
    return _index_by_key()[_key(np.asarray(sym_matrix) % 2)]


def lift_to_unitary(s):
    """Unitary of the {H, S, CNOT} word chosen for symplectic matrix ``s``."""
    m = s.matrix if isinstance(s, SymplecticRep) else np.asarray(s)
    if not is_symplectic(m):
        raise ValueError("matrix is not symplectic over GF(2)")
    return enumerate_gates()[gate_id_of(m)].unitary


def conjugate_pauli(g, p):
    """``U p U^dagger`` by tableau arithmetic; ``p = (k, x, z)``."""
    return _conjugate(g.tableau, p)


def compose_ids(a, b):
    """Gate id of the coset of ``U_a U_b``."""
    gates = enumerate_gates()
    return gate_id_of((gates[a].sym.matrix.astype(int) @ gates[b].sym.matrix.astype(int)) % 2)


# --------------------------------------------------------------------------

_PAULI_1Q = {(0, 0): _I2, (1, 0): np.array([[0, 1], [1, 0]]),
             (0, 1): np.diag([1, -1]), (1, 1): np.array([[0, -1j], [1j, 0]])}


def pauli_matrix(p):
    """Dense 4x4 matrix of a phased two-qubit Pauli."""
    k, x, z = p
    m = np.kron(_PAULI_1Q[((x >> 1) & 1, (z >> 1) & 1)], _PAULI_1Q[(x & 1, z & 1)])
    return (1j) ** k * m


def is_phased_pauli(m, tol=1e-10):
    """Return the phased Pauli equal to ``m`` or ``None``."""
    for x in range(4):
        for z in range(4):
            p = pauli_matrix((0, x, z))
            c = np.trace(p.conj().T @ m) / 4
            if abs(abs(c) - 1) < tol and np.allclose(m, c * p, atol=tol):
                k = int(round(np.angle(c) / (np.pi / 2))) % 4
                if abs(c - 1j ** k) < tol:
                    return (k, x, z)
    return None


@dataclass
class GateTable:
    """Gate arrays laid out for the truncation scan."""
    unitaries: np.ndarray      # (n, 4, 4)
    ranks: np.ndarray
    ids: np.ndarray
    local_class: np.ndarray    # smallest id in the left coset {l g : l local}

    def __len__(self):
        return len(self.ids)

    @property
    def identity_only(self):
        return len(self.ids) == 1 and self.ids[0] == 0


@lru_cache(maxsize=None)
def gate_table(identity_only=False):
    gates = enumerate_gates()
    if identity_only:
        gates = gates[:1]
    locals_ = [g for g in enumerate_gates() if g.schmidt_rank == 1]
    cls = []
    for g in gates:
        cls.append(min(compose_ids(l.id, g.id) for l in locals_))
    return GateTable(np.stack([g.unitary for g in gates]),
                     np.array([g.schmidt_rank for g in gates]),
                     np.array([g.id for g in gates]),
                     np.array(cls))


@dataclass
class CliffordCircuit:
    """Recorded two-site gates in execution order; ``bond`` is 1-based (sites b, b+1)."""
    n_sites: int
    record: list = field(default_factory=list)

    def append(self, sweep, bond, gate_id):
        if not 1 <= bond <= self.n_sites - 1:
            raise ValueError(f"bond {bond} outside 1..{self.n_sites - 1}")
        self.record.append((sweep, bond, gate_id))

    def __len__(self):
        return len(self.record)

    def rows(self):
        gates = enumerate_gates()
        return [(s, b, g, gates[g].gate_class) for s, b, g in self.record]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sweep", "bond", "gate_id", "gate_class"])
            w.writerows(self.rows())


def census():
    """Gate counts per class over all 720 cosets."""
    out = {c: 0 for c in GATE_CLASSES}
    for g in enumerate_gates():
        out[g.gate_class] += 1
    return out

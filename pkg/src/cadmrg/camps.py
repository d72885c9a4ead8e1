"""Clifford-augmented DMRG.

At every local step the two-site ground state ``psi`` is rotated by each
candidate two-qubit Clifford ``U`` before truncation, and the gate with the
smallest discarded weight wins.  The state stored in the MPS is ``U psi``
and the MPO is updated to ``U H U^dagger`` on the two central sites, so
the physical state after gates ``g_1 ... g_k`` is
``g_1^dagger ... g_k^dagger |MPS>``.

Discarded weights come from the reduced density matrix on the smaller
side of the cut: with ``Q = psi psi^dagger`` (four physical states kept
open) the rotated density matrix is a fixed 64-coefficient linear image of
``Q`` per gate, so all candidates share one ``Q`` and only need a small
Hermitian eigenvalue problem each.  Left multiplication by a local gate
does not change Schmidt values, so the default ``coset`` scan evaluates
one representative per left coset of the 36 local gates (20 in total);
members of a coset share the weight exactly and the tie-break selects the
representative, which is the smallest id in the coset.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import dense
from .clifford import CliffordCircuit, enumerate_gates, gate_table
from .dmrg import RunConfig, RunResult, _Truncator, run_engine, truncate_split
from .mps import MPO, MPS, StateError, mpo_weight_cutoff
from .pauli import DENSE_QUBIT_CAP, SizeError
from .tensor_core import svd_truncate

TIE_WINDOW = 1e-14

_SWAP = np.eye(4)[[0, 2, 1, 3]]


@dataclass
class ScanResult:
    gate_id: int
    discarded_weight: float
    left: np.ndarray
    right: np.ndarray
    weight_identity: float
    unitary: np.ndarray
    svd_weight: float


@dataclass(frozen=True)
class ScanTable:
    ids: np.ndarray
    ranks: np.ndarray
    unitaries: np.ndarray
    k_left: np.ndarray       # (g*4, 16): rho coefficients on the left side
    k_right: np.ndarray


def _coefficients(u):
    # K[g, t, t', s, s'] = sum_t2 U[g, (t, t2), s] conj(U[g, (t', t2), s'])
    u = u.reshape(-1, 2, 2, 4)
    k = np.einsum("gtxs,guxr->gtusr", u, u.conj())
    return k.reshape(-1, 16)


@lru_cache(maxsize=None)
def scan_table(mode: str = "coset") -> ScanTable:
    """Candidate gates for the scan: ``coset`` (20), ``full`` (720) or ``identity``."""
    table = gate_table()
    if mode == "full":
        sel = np.arange(len(table))
    elif mode == "coset":
        sel = np.unique(table.local_class)
    elif mode == "identity":
        sel = np.array([0])
    else:
        raise ValueError(f"unknown scan mode {mode!r}")
    u = table.unitaries[sel]
    swapped = _SWAP @ u @ _SWAP
    return ScanTable(table.ids[sel], table.ranks[sel], u, _coefficients(u), _coefficients(swapped))


def scan_weights(psi: np.ndarray, chi_cap: int, table: ScanTable) -> np.ndarray:
    """Discarded weight of ``U psi`` truncated to ``chi_cap``, for every gate in ``table``."""
    a, _, _, c = psi.shape
    g = len(table.ids)
    if min(2 * a, 2 * c) <= chi_cap:
        return np.zeros(g)
    if a <= c:
        m, k, d = psi.reshape(a, 4, c), table.k_left, a
    else:
        # right side: transpose psi and swap the two qubits of every gate
        m, k, d = psi.transpose(3, 2, 1, 0).reshape(c, 4, a), table.k_right, c
    q = np.tensordot(m, m.conj(), axes=(2, 2))                      # a s a' s'
    q = q.transpose(1, 3, 0, 2).reshape(16, d * d)
    rho = (k @ q).reshape(g, 2, 2, d, d).transpose(0, 3, 1, 4, 2).reshape(g, 2 * d, 2 * d)
    ev = np.linalg.eigvalsh(rho)
    ev = np.clip(ev, 0.0, None)
    total = ev.sum(axis=1)
    n_drop = 2 * d - chi_cap
    return ev[:, :n_drop].sum(axis=1) / total


def select_gate(weights, ranks, ids, window=TIE_WINDOW) -> int:
    """Index of the winner: minimum weight, ties by (rank, id)."""
    wmin = weights.min()
    tied = np.flatnonzero(weights <= wmin + window)
    return int(min(tied, key=lambda j: (ranks[j], ids[j])))


def apply_two_site_gate(u, psi):
    a, _, _, c = psi.shape
    return np.einsum("ts,asc->atc", u, psi.reshape(a, 4, c)).reshape(a, 2, 2, c)


def clifford_scan(psi: np.ndarray, chi_cap: int, gates: ScanTable | str = "coset",
                  direction: str = "right") -> ScanResult:
    """Choose the two-site Clifford minimizing the truncation error of ``psi``."""
    table = scan_table(gates) if isinstance(gates, str) else gates
    w = scan_weights(psi, chi_cap, table)
    j = select_gate(w, table.ranks, table.ids)
    u = table.unitaries[j]
    id_pos = np.flatnonzero(table.ids == 0)
    w_id = float(w[id_pos[0]]) if len(id_pos) else float("nan")
    rotated = psi if table.ids[j] == 0 else apply_two_site_gate(u, psi)
    m1, m2, dw = truncate_split(rotated, chi_cap, direction)
    return ScanResult(int(table.ids[j]), float(w[j]), m1, m2, w_id, u, dw)


def apply_gate_to_mpo_center(h: MPO, unitary: np.ndarray, bond: int, rel_threshold: float = 1e-10,
                             direction: str = "right", kind: str = "singular") -> MPO:
    """Replace ``W_i W_i+1`` by ``U (W_i W_i+1) U^dagger`` and re-split in place.

    The MPO center must be at ``bond`` or ``bond + 1``; afterwards it sits at
    ``bond + 1`` for ``direction='right'`` and at ``bond`` otherwise.  The
    threshold follows :func:`cadmrg.mps.mpo_weight_cutoff`.
    """
    if h.center not in (bond, bond + 1):
        raise StateError(f"MPO center {h.center} is not at bond {bond}")
    unitary = getattr(unitary, "unitary", unitary)
    w = np.tensordot(h.tensors[bond], h.tensors[bond + 1], axes=(3, 0))   # l o1 i1 o2 i2 r
    l, r = w.shape[0], w.shape[-1]
    w = w.transpose(0, 1, 3, 2, 4, 5).reshape(l, 4, 4, r)
    w = np.einsum("ab,xbcy,dc->xady", unitary, w, unitary.conj())
    w = w.reshape(l, 2, 2, 2, 2, r).transpose(0, 1, 3, 2, 4, 5)
    u, sv, v, _ = svd_truncate(w, [0, 1, 2], rel_threshold=mpo_weight_cutoff(rel_threshold, kind))
    if direction == "right":
        h.tensors[bond], h.tensors[bond + 1] = u, sv[:, None, None, None] * v
        h.center = bond + 1
    else:
        h.tensors[bond], h.tensors[bond + 1] = u * sv, v
        h.center = bond
    return h


class CliffordTruncator(_Truncator):
    def __init__(self, cfg: RunConfig, mode: str | None = None):
        super().__init__(cfg)
        self.table = scan_table(mode or cfg.scan)

    def split(self, psi, direction):
        r = clifford_scan(psi, self.cfg.chi_cap, self.table, direction)
        return r.gate_id, r.left, r.right, r.svd_weight, r.discarded_weight, r.weight_identity, r.unitary

    def update_mpo(self, h, bond, unitary, direction):
        apply_gate_to_mpo_center(h, unitary, bond, self.cfg.mpo_threshold, direction,
                                 self.cfg.mpo_threshold_kind)


def run_cadmrg(h: MPO, cfg: RunConfig, gates: str | None = None) -> RunResult:
    """CA-DMRG with restarts; ``gates='identity'`` reproduces :func:`run_dmrg`."""
    return run_engine(h, cfg, lambda c: CliffordTruncator(c, gates), with_circuit=True)


def reconstruct_state(circuit: CliffordCircuit, s: MPS, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
    """Dense physical state ``g_1^dagger ... g_k^dagger |MPS>``."""
    if s.n_sites > cap:
        raise SizeError(f"{s.n_sites} sites exceeds the dense cap of {cap}")
    v = s.to_dense(cap)
    gates = enumerate_gates()
    for _, bond, gid in reversed(circuit.record):
        v = dense.apply_two_qubit(v, gates[gid].unitary.conj().T, bond - 1, s.n_sites)
    return v


__all__ = ["ScanResult", "ScanTable", "scan_table", "scan_weights", "select_gate",
           "clifford_scan", "apply_gate_to_mpo_center", "apply_two_site_gate",
           "CliffordTruncator", "run_cadmrg", "reconstruct_state", "TIE_WINDOW"]

"""Two-site DMRG and the sweep engine shared with CA-DMRG.

The engine is parameterized by a gate table.  Plain DMRG is the engine
with the identity-only table, so a Clifford-augmented run restricted to
the identity degenerates to exactly the same floating-point operations.

Bonds are numbered by their left site, 0-based; CSV exports and circuit
records use 1-based bond labels.
"""
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import mps as mpslib
from .clifford import CliffordCircuit
from .mps import MPO, MPS, EnvCache, StateError
from .tensor_core import ConvergenceWarning, lowest_eigpair, svd_truncate


@dataclass(frozen=True)
class RunConfig:
    chi_cap: int
    max_sweeps: int = 50
    min_sweeps_before_stop: int = 20
    energy_tol: float = 1e-6
    n_restarts: int = 5
    seed: int = 0
    eig_tol: float = 1e-9
    mpo_threshold: float = 1e-10
    mpo_threshold_kind: str = "singular"   # singular | weight
    chi_init: int | None = None
    eig_max_iter: int = 300
    scan: str = "coset"            # coset | full
    track_drift: bool = True
    precondition: bool = True

    def __post_init__(self):
        for name in ("chi_cap", "max_sweeps", "n_restarts", "eig_max_iter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.min_sweeps_before_stop < 0:
            raise ValueError("min_sweeps_before_stop must be >= 0")
        if not self.energy_tol > 0 or not self.eig_tol > 0:
            raise ValueError("tolerances must be positive")
        if self.mpo_threshold < 0:
            raise ValueError("mpo_threshold must be >= 0")
        if self.mpo_threshold_kind not in ("singular", "weight"):
            raise ValueError(f"unknown threshold kind {self.mpo_threshold_kind!r}")
        if self.scan not in ("coset", "full"):
            raise ValueError(f"unknown scan mode {self.scan!r}")

    @property
    def initial_chi(self):
        return self.chi_init if self.chi_init is not None else min(self.chi_cap, 8)


@dataclass
class SweepReport:
    """Per-sweep record; ``chi_w`` is the largest MPO bond reached during the sweep."""
    sweep: int
    energy: float
    max_discarded: float
    wall_seconds: float
    chi: int
    chi_w: int
    n_gates: int = 0
    max_drift: float = 0.0
    unconverged_solves: int = 0
    matvecs: int = 0


@dataclass
class StepRecord:
    """One local optimization; ``bond`` is 0-based."""
    sweep: int
    bond: int
    energy: float
    gate_id: int
    weight: float
    weight_identity: float
    drift: float | None


@dataclass
class RestartResult:
    seed: int
    reports: list
    converged: bool
    mps: MPS
    mpo: MPO
    circuit: CliffordCircuit
    steps: list
    final_energy: float

    @property
    def best_energy(self):
        return min(r.energy for r in self.reports)


@dataclass
class RunResult:
    best_energy: float
    reports: list
    converged: bool
    mps: MPS
    circuit: CliffordCircuit | None
    final_energy: float
    mpo: MPO
    restarts: list = field(default_factory=list)
    best_restart: int = 0

    @property
    def steps(self):
        return self.restarts[self.best_restart].steps


# --------------------------------------------------------------------------
# local operations

def two_site_tensor(s: MPS, i: int) -> np.ndarray:
    return np.tensordot(s.tensors[i], s.tensors[i + 1], axes=(2, 0))


def heff_apply(L, w1, w2, R, theta):
    """Two-site effective Hamiltonian on ``theta[a, s1, s2, c]``."""
    t = np.tensordot(L, theta, axes=(2, 0))            # a' b s1 s2 c
    t = np.tensordot(t, w1, axes=([1, 2], [0, 2]))     # a' s2 c s1' b1
    t = np.tensordot(t, w2, axes=([4, 1], [0, 2]))     # a' c s1' s2' b2
    return np.tensordot(t, R, axes=([1, 4], [2, 1]))


class EffectiveHamiltonian:
    """Two-site effective Hamiltonian as two matrix products.

    ``L W_i`` and ``W_i+1 R`` are formed once per local problem, stored as
    matrices laid out so that each application is two GEMMs with no
    transposes: ``(a' s1' b) x (a s1)`` and ``(b s2 c) x (s2' c')``.
    """

    def __init__(self, L, w1, w2, R):
        a, c, b = L.shape[0], R.shape[0], w1.shape[3]
        self.shape = (a, 2, 2, c)
        lw = np.tensordot(L, w1, axes=(1, 0))                     # a' a s1' s1 b
        self.lw = lw.transpose(0, 2, 4, 1, 3).reshape(2 * a * b, 2 * a)
        wr = np.tensordot(w2, R, axes=(3, 1))                     # b s2' s2 c' c
        self.wr = wr.transpose(0, 2, 4, 1, 3).reshape(2 * b * c, 2 * c)
        self._b = b
        self._diag = (L, w1, w2, R)

    def __call__(self, theta):
        a, _, _, c = self.shape
        x = self.lw @ np.ascontiguousarray(theta).reshape(2 * a, 2 * c)
        return (x.reshape(2 * a, 2 * self._b * c) @ self.wr).reshape(self.shape)

    def diagonal(self):
        return heff_diagonal(*self._diag)


def heff_diagonal(L, w1, w2, R):
    """Diagonal of the two-site effective Hamiltonian, shape ``(a, 2, 2, c)``."""
    ld = np.einsum("aba->ab", L)
    rd = np.einsum("cbc->cb", R)
    w1d = np.einsum("bssd->bsd", w1)
    w2d = np.einsum("dttf->dtf", w2)
    t = np.tensordot(ld, w1d, axes=(1, 0))              # a s d
    t = np.tensordot(t, w2d, axes=(2, 0))               # a s t f
    return np.tensordot(t, rd, axes=(3, 1)).real        # a s t c


def local_solve(cache: EnvCache, h: MPO, s: MPS, bond: int, tol: float = 1e-9,
                max_iter: int = 300, precondition: bool = True):
    """Lowest eigenpair of the two-site effective Hamiltonian at ``bond``.

    Returns ``(energy, psi, EigResult)``; the warm start is the current
    two-site tensor.
    """
    if s.center not in (bond, bond + 1) or h.center != s.center:
        raise StateError(f"centers (MPS {s.center}, MPO {h.center}) not at bond {bond}")
    L, R = cache.left[bond], cache.right[bond + 2]
    if L is None or R is None:
        raise StateError(f"environments for bond {bond} are not built")
    w1, w2 = h.tensors[bond], h.tensors[bond + 1]
    op = EffectiveHamiltonian(L, w1, w2, R)
    res = lowest_eigpair(op, two_site_tensor(s, bond), tol=tol, max_iter=max_iter,
                         diagonal=op.diagonal() if precondition else None)
    return res.value, res.vector, res


def truncate_split(psi: np.ndarray, chi_cap: int, direction: str):
    """SVD split of ``psi[a, s1, s2, c]`` keeping at most ``chi_cap`` states.

    The singular values (renormalized) go to the right tensor when
    ``direction='right'`` and to the left one otherwise.  Returns
    ``(M_i, M_i+1, discarded_weight)``.
    """
    u, sv, v, dw = svd_truncate(psi, [0, 1], max_rank=chi_cap)
    sv = sv / np.linalg.norm(sv)
    if direction == "right":
        return u, sv[:, None, None] * v, dw
    if direction == "left":
        return u * sv, v, dw
    raise ValueError(f"unknown direction {direction!r}")


def move_mpo_across(h: MPO, bond: int, direction: str):
    """Exact QR move of the MPO center across ``bond``."""
    mpslib.move_center(h, bond + 1 if direction == "right" else bond)


# --------------------------------------------------------------------------
# engine

class _Truncator:
    """Identity-only truncation; the CA-DMRG subclass overrides ``split``."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg

    def split(self, psi, direction):
        m1, m2, dw = truncate_split(psi, self.cfg.chi_cap, direction)
        return 0, m1, m2, dw, dw, dw, None


def sweep(s: MPS, h: MPO, cache: EnvCache, cfg: RunConfig, sweep_index: int = 1,
          truncator=None, circuit: CliffordCircuit | None = None, steps: list | None = None):
    """One left-to-right-to-left pass; returns a :class:`SweepReport`."""
    truncator = truncator or _Truncator(cfg)
    n = s.n_sites
    t0 = time.perf_counter()
    energy, max_dw, n_gates, max_drift, unconverged, matvecs = 0.0, 0.0, 0, 0.0, 0, 0
    chi_w = h.chi_w
    bonds = [(i, "right") for i in range(n - 1)] + [(i, "left") for i in range(n - 2, -1, -1)]
    for i, direction in bonds:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            energy, psi, res = local_solve(cache, h, s, i, cfg.eig_tol, cfg.eig_max_iter,
                                               cfg.precondition)
        unconverged += not res.converged
        matvecs += res.iterations
        gid, m1, m2, dw, w_win, w_id, unitary = truncator.split(psi, direction)
        drift = None
        if gid != 0:
            truncator.update_mpo(h, i, unitary, direction)
            chi_w = max(chi_w, h.chi_w)
            n_gates += 1
            if circuit is not None:
                circuit.append(sweep_index, i + 1, gid)
            if cfg.track_drift:
                rotated = np.einsum("ts,asc->atc", unitary, psi.reshape(psi.shape[0], 4, -1))
                rotated = rotated.reshape(psi.shape)
                hx = EffectiveHamiltonian(cache.left[i], h.tensors[i], h.tensors[i + 1],
                                          cache.right[i + 2])(rotated)
                drift = abs(np.vdot(rotated, hx).real / np.vdot(rotated, rotated).real - energy)
                max_drift = max(max_drift, drift)
        else:
            move_mpo_across(h, i, direction)
        s.tensors[i], s.tensors[i + 1] = m1, m2
        if direction == "right":
            s.center = i + 1
            cache.refresh_left(s, h, i)
        else:
            s.center = i
            cache.refresh_right(s, h, i + 1)
        max_dw = max(max_dw, dw)
        if steps is not None:
            steps.append(StepRecord(sweep_index, i, float(energy), gid, w_win, w_id, drift))
    return SweepReport(sweep_index, float(energy), float(max_dw), time.perf_counter() - t0,
                       s.chi, max(chi_w, h.chi_w), n_gates, float(max_drift), unconverged, matvecs)


def _run_single(h0: MPO, cfg: RunConfig, seed: int, truncator) -> RestartResult:
    h = h0.copy()
    mpslib.move_center(h, 0)
    s = mpslib.random_mps(h.n_sites, cfg.initial_chi, seed, dtype=h.dtype)
    cache = mpslib.build_environments(s, h)
    circuit = CliffordCircuit(h.n_sites)
    steps, reports = [], []
    converged = False
    for m in range(1, cfg.max_sweeps + 1):
        rep = sweep(s, h, cache, cfg, m, truncator, circuit, steps)
        reports.append(rep)
        if m >= 2 and abs(rep.energy - reports[-2].energy) < cfg.energy_tol:
            if m > cfg.min_sweeps_before_stop:
                converged = True
                break
    final = mpslib.expectation(s, h)
    return RestartResult(seed, reports, converged, s, h, circuit, steps, final)


def run_engine(h: MPO, cfg: RunConfig, truncator_factory=_Truncator, with_circuit=False,
               restarts=None) -> RunResult:
    """Best of ``cfg.n_restarts`` independent runs (seeds ``seed, seed+1, ...``)."""
    if restarts is None:
        restarts = [_run_single(h, cfg, cfg.seed + r, truncator_factory(cfg))
                    for r in range(cfg.n_restarts)]
    best = min(range(len(restarts)), key=lambda r: (restarts[r].best_energy, r))
    b = restarts[best]
    return RunResult(b.best_energy, b.reports, b.converged, b.mps,
                     b.circuit if with_circuit else None, b.final_energy, b.mpo,
                     restarts, best)


def run_dmrg(h: MPO, cfg: RunConfig) -> RunResult:
    """Two-site DMRG with restarts."""
    return run_engine(h, cfg)


def run_restart(h: MPO, cfg: RunConfig, restart: int, method: str = "dmrg") -> RestartResult:
    """A single restart, for callers that distribute restarts across workers."""
    if method == "dmrg":
        factory = _Truncator
    else:
        from .camps import CliffordTruncator as factory
    return _run_single(h, cfg, cfg.seed + restart, factory(cfg))


def sweeps_to_converge(energies, tol):
    """First 1-based sweep after which every energy stays within ``tol`` of the last."""
    e = np.asarray(energies, dtype=float)
    if len(e) == 0:
        return 0
    ok = np.abs(e - e[-1]) < tol
    m = len(e)
    while m > 0 and ok[m - 1]:
        m -= 1
    return m + 1


__all__ = ["RunConfig", "SweepReport", "StepRecord", "RunResult", "RestartResult",
           "local_solve", "truncate_split", "sweep", "run_dmrg", "run_engine", "heff_apply",
           "two_site_tensor", "sweeps_to_converge"]

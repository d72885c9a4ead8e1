"""Acceptance criteria 1-12.

Criteria that need the molecular scans read them through the experiment
runner with the default configuration pack in ``configs/``.  Finished cells
are cached under ``results/cache``; missing cells are computed, which takes
hours for the full pack (``scripts/run_default_pack.sh`` fills the cache).
"""
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from cadmrg import experiments as ex
from cadmrg import models
from cadmrg.camps import reconstruct_state
from cadmrg.clifford import census, conjugate_pauli, enumerate_gates, is_phased_pauli, pauli_matrix
from cadmrg.dmrg import RunConfig, run_dmrg, run_restart, sweeps_to_converge
from cadmrg.fci import dense_ground_energy, fci_ground_energy
from cadmrg.fcidump import bundled, read_fcidump
from cadmrg.mps import mpo_canonicalize, mpo_from_pauli_sum
from cadmrg.pauli import pauli_matvec, qubit_hamiltonian
from conftest import ACCEPTANCE_LINES

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
MOLECULES = ("h2o", "nh3", "c2", "n2")
CHEMICAL_ACCURACY = 1.6e-3


def record(n, ok, detail):
    ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, detail


@lru_cache(maxsize=None)
def scan(name):
    return ex.cmd_run(ex.load_spec(CONFIGS / f"fig2_{name}.ini"))


def best(res, method, chi):
    row = next(r for r in res.summary if r[0] == method and r[1] == chi)
    return row[2], row[4]


def cadmrg_records(res):
    return [rec for (m, _, _), rec in res.records.items() if m == "cadmrg"]


def test_01_clifford_group(rng):
    t0 = time.perf_counter()
    gates = enumerate_gates()
    distinct = len({g.sym.matrix.tobytes() for g in gates})
    unitary = max(np.max(np.abs(g.unitary.conj().T @ g.unitary - np.eye(4))) for g in gates)
    mismatches = 0
    for _ in range(100):
        g = gates[rng.integers(720)]
        p = tuple(int(v) for v in rng.integers(4, size=3))
        mismatches += conjugate_pauli(g, p) != is_phased_pauli(g.unitary @ pauli_matrix(p) @ g.unitary.conj().T)
    dt = time.perf_counter() - t0
    ok = len(gates) == 720 and distinct == 720 and unitary < 1e-12 and mismatches == 0 and dt < 10
    record(1, ok, f"{len(gates)} gates, {distinct} distinct, max|U^H U - I| {unitary:.1e}, "
                  f"{mismatches} tableau mismatches, {dt:.2f} s, census {census()}")


def test_02_pipeline_exactness():
    t0 = time.perf_counter()
    t = read_fcidump(bundled("h2"))
    p = qubit_hamiltonian(t)
    e_fci, _ = fci_ground_energy(t, tol=1e-12)
    e_dense = dense_ground_energy(p, tol=1e-12)
    r = run_dmrg(mpo_canonicalize(mpo_from_pauli_sum(p)), RunConfig(chi_cap=16))
    e = [e_fci, e_dense, r.best_energy]
    spread = max(e) - min(e)
    dt = time.perf_counter() - t0
    record(2, spread < 1e-8 and dt < 60,
           f"FCI {e_fci:.12f}, dense {e_dense:.12f}, DMRG {r.best_energy:.12f}, spread {spread:.1e}, {dt:.1f} s")


def test_03_equal_chi_dominance():
    worst, cells = -np.inf, []
    for name in MOLECULES:
        res = scan(name)
        for chi in ex.load_spec(CONFIGS / f"fig2_{name}.ini").chis("cadmrg"):
            gap = best(res, "cadmrg", chi)[0] - best(res, "dmrg", chi)[0]
            cells.append((name, chi, gap))
            worst = max(worst, gap)
    bad = [c for c in cells if c[2] > 1e-9]
    record(3, not bad, f"max E_cadmrg - E_dmrg over {len(cells)} (molecule, chi) cells = {worst:.2e}"
                       + (f"; violations {bad}" if bad else ""))


def test_04_c2_chemical_accuracy():
    res = scan("c2")
    ca40, d40, d100 = best(res, "cadmrg", 40)[1], best(res, "dmrg", 40)[1], best(res, "dmrg", 100)[1]
    ok = ca40 < CHEMICAL_ACCURACY and d40 >= CHEMICAL_ACCURACY and d100 < CHEMICAL_ACCURACY
    record(4, ok, f"C2 |E - E_FCI|: CA-DMRG chi=40 {ca40:.3e}, DMRG chi=40 {d40:.3e}, "
                  f"DMRG chi=100 {d100:.3e} (threshold {CHEMICAL_ACCURACY})")


def test_05_per_step_dominance():
    res = scan("c2")
    steps = [s for rec in cadmrg_records(res) for s in rec["steps"]]
    violations = sum(1 for s in steps if s[4] > s[5])
    record(5, violations == 0 and len(steps) > 0,
           f"{violations} violations over {len(steps)} C2 CA-DMRG local steps")


@lru_cache(maxsize=None)
def h2o_cadmrg():
    p = qubit_hamiltonian(read_fcidump(bundled("h2o")))
    h = mpo_canonicalize(mpo_from_pauli_sum(p))
    return p, run_restart(h, RunConfig(chi_cap=12), 0, "cadmrg")


def test_06_mpo_update_end_to_end():
    p, r = h2o_cadmrg()
    v = reconstruct_state(r.circuit, r.mps)
    e = np.vdot(v, pauli_matvec(p, v)).real / np.vdot(v, v).real
    diff = abs(e - r.final_energy)
    record(6, diff < 1e-7, f"H2O chi=12, {len(r.circuit)} gates: <C MPS|H|C MPS> {e:.10f} vs engine "
                           f"{r.final_energy:.10f}, diff {diff:.1e}")


def test_07_energy_invariance_drift():
    _, r = h2o_cadmrg()
    drifts = [s.drift for s in r.steps if s.drift is not None]
    sources = ["h2o chi=12 direct"]
    for name in MOLECULES:
        res = scan(name)
        drifts += [s[6] for rec in cadmrg_records(res) for s in rec["steps"] if s[6] is not None]
        sources.append(f"fig2_{name}")
    worst = max(drifts)
    record(7, worst <= 1e-7, f"max drift {worst:.1e} over {len(drifts)} gate steps ({', '.join(sources)})")


def test_08_chi_w_bounded():
    parts, ok = [], True
    for name in MOLECULES:
        recs = [r for r in cadmrg_records(scan(name)) if len(r["sweeps"]) >= 20]
        init = recs[0]["chi_w_initial"]
        peak = max(s["chi_w"] for r in recs for s in r["sweeps"])
        ok &= peak <= 3 * init and len(recs) > 0
        parts.append(f"{name} {peak}/{init}={peak / init:.2f}")
    record(8, ok, "max chi_w / initial over CA-DMRG runs with >= 20 sweeps: " + ", ".join(parts))


def test_09_n2_curve():
    spec = ex.load_spec(CONFIGS / "n2_curve.ini")
    rows, missing = ex.cmd_curve(spec)
    err = {(r[0], r[1], r[2]): r[5] for r in rows}
    floor = min(r[3] - r[4] for r in rows)
    bad = [(lab, chi) for (lab, m, chi) in err if m == "cadmrg"
           and err[(lab, "cadmrg", chi)] > err[(lab, "dmrg", chi)]]
    chis = sorted({r[2] for r in rows})
    ok = not missing and not bad and floor >= -1e-9 and {60, 80} <= set(chis)
    record(9, ok, f"{len(spec.series)} bond lengths x chi {chis}: CA-DMRG worse at {bad or 'none'}, "
                  f"min(E - E_FCI) {floor:.1e}, missing {missing or 'none'}")


def test_10_tfim_baseline():
    h = mpo_canonicalize(mpo_from_pauli_sum(models.tfim(16, 1.0)))
    cfg = RunConfig(chi_cap=32, n_restarts=1)
    r = run_dmrg(h, cfg)
    exact = models.tfim_ground_energy(16, 1.0)
    n = sweeps_to_converge([rep.energy for rep in r.reports], cfg.energy_tol)
    err = abs(r.best_energy - exact)
    record(10, err < 1e-6 and n <= 15, f"TFIM N=16 chi=32: error {err:.1e}, converged after {n} sweeps")


def test_11_determinism(tmp_path):
    text = ("hamiltonian = bundled:h2o\nchi = 6, 10\nn_restarts = 2\nmax_sweeps = 3\n"
            "min_sweeps_before_stop = 0\nseed = 11\n")
    a = ex.cmd_run(ex.parse_spec(text + "out = a\n", tmp_path))
    b = ex.cmd_run(ex.parse_spec(text + "out = b\n", tmp_path))
    same = (a.out / "summary.csv").read_bytes() == (b.out / "summary.csv").read_bytes()
    record(11, same, "two uncached H2O runs (both methods, chi 6 and 10, seed 11): summary.csv "
                     + ("byte-identical" if same else "differs"))


def test_12_runtime_ratio():
    res = scan("c2")
    out = ex.cmd_report(res.out)["runtime_ratio"]
    ratios = {row[0]: row[3] for row in out}
    ok = bool(ratios) and max(ratios.values()) <= 10
    record(12, ok, "C2 CA-DMRG / DMRG seconds per sweep: "
                   + ", ".join(f"chi={c} {r:.2f}" for c, r in sorted(ratios.items())))

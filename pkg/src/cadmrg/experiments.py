"""Batch experiments: spec files, cached per-cell runs and CSV reports.

A spec is a flat ``key = value`` text file (no section header needed)::

    label = c2_scan
    hamiltonian = bundled:c2          # or fcidump:path/to/file, model:tfim
    model_params = n=16 g=1.0         # only for model: sources
    method = both                     # dmrg | cadmrg | both
    chi = 20, 30, 40, 60
    chi_dmrg = 20, 30, 40, 60, 100    # optional per-method override
    seed = 0
    workers = 1
    out = results/c2
    cache = results/cache             # optional; empty disables caching
    series = 0.90:bundled:n2_r0.90, 1.10:bundled:n2_r1.10   # curves only
    n_restarts = 5                    # any RunConfig field is an override

Relative paths are resolved against the spec file's directory.  Every
``(method, chi, restart)`` cell is independent; cells run in a process pool
and all files are written afterwards by the parent process in a fixed
order, so identical specs produce identical CSV bytes.
"""
import configparser
import csv
import dataclasses
import gzip
import hashlib
import json
import logging
import math
import os
import time
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import models
from .clifford import enumerate_gates
from .dmrg import RunConfig, run_restart, sweeps_to_converge
from .fcidump import bundled, read_fcidump
from .fci import fci_ground_energy
from .mps import mpo_canonicalize, mpo_from_pauli_sum
from .pauli import qubit_hamiltonian

log = logging.getLogger(__name__)

SCHEMA = 1
METHODS = ("dmrg", "cadmrg")
FCI_TOL = 1e-8
_RUNCONFIG_FIELDS = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_ENGINE_MODULES = ("camps", "clifford", "dmrg", "fcidump", "models", "mps", "pauli", "tensor_core")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class Source:
    """A Hamiltonian: an FCIDUMP file or a builtin model with parameters."""
    kind: str                      # fcidump | model
    ref: str                       # resolved file path or model name
    params: tuple = ()

    @property
    def exists(self):
        return self.kind == "model" or Path(self.ref).is_file()

    def describe(self):
        if self.kind == "model":
            return f"model:{self.ref}" + "".join(f" {k}={v}" for k, v in self.params)
        return f"fcidump:{self.ref}"


@dataclass
class ExperimentSpec:
    label: str
    source: Source | None
    method: str = "both"
    chi: tuple = ()
    chi_by_method: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)
    out: Path = Path("results")
    seed: int = 0
    workers: int = 1
    cache: Path | None = None
    series: tuple = ()             # ((label, Source), ...)

    @property
    def methods(self):
        return METHODS if self.method == "both" else (self.method,)

    def chis(self, method):
        return self.chi_by_method.get(method, self.chi)

    def config(self, chi):
        return RunConfig(chi_cap=chi, seed=self.seed, **self.overrides)

    def with_source(self, label, source, out):
        return dataclasses.replace(self, label=label, source=source, out=out, series=())


def _parse_chis(text):
    try:
        chis = tuple(int(c) for c in text.replace(",", " ").split())
    except ValueError as exc:
        raise SpecError(f"bad chi list {text!r}") from exc
    if not chis or any(c < 1 for c in chis) or list(chis) != sorted(set(chis)):
        raise SpecError(f"chi list must be positive and ascending: {text!r}")
    return chis


def _parse_source(text, base, params=""):
    kind, _, ref = text.strip().partition(":")
    if kind == "bundled":
        try:
            return Source("fcidump", str(bundled(ref)))
        except FileNotFoundError:
            return Source("fcidump", str(Path(__file__).parent / "data" / f"{ref}.FCIDUMP"))
    if kind == "fcidump":
        p = Path(ref)
        return Source("fcidump", str(p if p.is_absolute() else (base / p).resolve()))
    if kind == "model":
        if ref not in models.MODELS:
            raise SpecError(f"unknown model {ref!r}")
        pairs = []
        for tok in params.split():
            k, eq, v = tok.partition("=")
            if not eq:
                raise SpecError(f"bad model parameter {tok!r}")
            pairs.append((k, float(v) if "." in v or "e" in v else int(v)))
        return Source("model", ref, tuple(sorted(pairs)))
    raise SpecError(f"hamiltonian must start with bundled:, fcidump: or model:, got {text!r}")


def _coerce(name, value):
    typ = str(_RUNCONFIG_FIELDS[name])
    if value.lower() in ("none", ""):
        return None
    if "bool" in typ:
        return value.lower() in ("1", "true", "yes", "on")
    if "int" in typ:
        return int(value)
    if "float" in typ:
        return float(value)
    return value


def parse_spec(text: str, base: Path = Path(".")) -> ExperimentSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string("[experiment]\n" + text)
    kv = dict(cp["experiment"])
    base = Path(base)

    def path(key):
        v = kv.pop(key, "").strip()
        if not v:
            return None
        p = Path(v)
        return p if p.is_absolute() else base / p

    label = kv.pop("label", "experiment")
    params = kv.pop("model_params", "")
    ham = kv.pop("hamiltonian", "").strip()
    source = _parse_source(ham, base, params) if ham else None
    series = []
    for item in kv.pop("series", "").split(","):
        if item.strip():
            name, _, src = item.strip().partition(":")
            series.append((name, _parse_source(src, base, params)))
    if source is None and not series:
        raise SpecError("spec needs a hamiltonian or a series")
    if source is not None and not source.exists:
        raise SpecError(f"Hamiltonian file not found: {source.ref}")
    method = kv.pop("method", "both")
    if method not in METHODS + ("both",):
        raise SpecError(f"method must be dmrg, cadmrg or both, got {method!r}")
    chi = _parse_chis(kv.pop("chi", ""))
    by_method = {m: _parse_chis(kv.pop(f"chi_{m}")) for m in METHODS if f"chi_{m}" in kv}
    seed = int(kv.pop("seed", 0))
    workers = int(kv.pop("workers", 1))
    out = path("out") or base / "results" / label
    cache = path("cache")
    overrides = {}
    for k in list(kv):
        if k in ("chi_cap", "seed") or k not in _RUNCONFIG_FIELDS:
            raise SpecError(f"unknown key {k!r}")
        overrides[k] = _coerce(k, kv.pop(k))
    spec = ExperimentSpec(label, source, method, chi, by_method, overrides, out, seed, workers,
                          cache, tuple(series))
    spec.config(chi[0])                                 # validates the overrides
    return spec


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from exc
    return parse_spec(text, path.parent)


# --------------------------------------------------------------------------
# Hamiltonians, references and the cell cache

def _file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def source_key(src: Source) -> str:
    if src.kind == "model":
        return hashlib.sha256(src.describe().encode()).hexdigest()
    return _file_digest(src.ref)


@lru_cache(maxsize=1)
def engine_digest() -> str:
    """Hash of the numerical modules; any code change invalidates cached cells."""
    h = hashlib.sha256()
    here = Path(__file__).parent
    for name in _ENGINE_MODULES:
        h.update((here / f"{name}.py").read_bytes())
    return h.hexdigest()[:16]


def _pauli_sum(src: Source):
    if src.kind == "model":
        return models.MODELS[src.ref][0](**dict(src.params))
    return qubit_hamiltonian(read_fcidump(src.ref))


@lru_cache(maxsize=4)
def _mpo(src: Source, threshold: float, kind: str):
    return mpo_canonicalize(mpo_from_pauli_sum(_pauli_sum(src)), threshold, kind)


def reference_energy(src: Source, cache: Path | None = None) -> float:
    """Exact ground energy: FCI for integrals, the analytic value for models."""
    if src.kind == "model":
        return models.MODELS[src.ref][1](**dict(src.params))
    f = cache / f"fci-{source_key(src)[:24]}.json" if cache else None
    if f is not None and f.exists():
        return json.loads(f.read_text())["energy"]
    e, res = fci_ground_energy(read_fcidump(src.ref), tol=FCI_TOL)
    if f is not None:
        f.parent.mkdir(parents=True, exist_ok=True)
        f.write_text(json.dumps({"energy": e, "residual": res}))
    return e


def cell_key(src: Source, method: str, cfg: RunConfig, restart: int) -> str:
    payload = json.dumps([source_key(src), method, dataclasses.asdict(cfg), restart, engine_digest()],
                         sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:32]


def run_cell(src: Source, method: str, cfg: RunConfig, restart: int) -> dict:
    """One restart of one method at one bond dimension, as a JSON-able record."""
    t0 = time.perf_counter()
    try:
        h = _mpo(src, cfg.mpo_threshold, cfg.mpo_threshold_kind)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            r = run_restart(h, cfg, restart, method)
    except Exception as exc:                            # recorded, never dropped
        return {"status": f"failed: {type(exc).__name__}: {exc}",
                "traceback": traceback.format_exc(), "sweeps": [], "steps": [], "circuit": [],
                "total_seconds": time.perf_counter() - t0}
    return {
        "status": "converged" if r.converged else "max_sweeps",
        "chi_w_initial": h.chi_w,
        "final_energy": r.final_energy,
        "sweeps": [dataclasses.asdict(rep) for rep in r.reports],
        "steps": [[st.sweep, st.bond, st.energy, st.gate_id, st.weight, st.weight_identity, st.drift]
                  for st in r.steps] if method == "cadmrg" else [],
        "circuit": [list(row[:3]) for row in r.circuit.record],
        "total_seconds": time.perf_counter() - t0,
    }


def cached_cell(src, method, cfg, restart, cache: Path | None) -> dict:
    f = cache / f"cell-{cell_key(src, method, cfg, restart)}.json.gz" if cache else None
    if f is not None and f.exists():
        with gzip.open(f, "rt") as fh:
            return json.load(fh)
    rec = run_cell(src, method, cfg, restart)
    if f is not None and not rec["status"].startswith("failed"):
        f.parent.mkdir(parents=True, exist_ok=True)
        tmp = f.with_suffix(f".tmp{os.getpid()}")
        with gzip.open(tmp, "wt") as fh:
            json.dump(rec, fh)
        tmp.replace(f)
    return rec


def _cell_job(args):
    return cached_cell(*args)


# --------------------------------------------------------------------------
# CSV output

def _fmt(v):
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r}")
        return repr(v)
    return "" if v is None else str(v)


def write_csv(path: Path, kind: str, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# cadmrg {kind} schema={SCHEMA} energy_unit=hartree\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path: Path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


RUNS_HEADER = ["method", "chi", "restart", "sweep", "energy", "max_discarded", "chi_w_max",
               "wall_seconds", "fci_energy", "chi_w_initial", "n_gates", "max_drift",
               "unconverged_solves", "status"]
SUMMARY_HEADER = ["method", "chi", "best_energy", "fci_energy", "abs_error", "sweeps_to_converge",
                  "status"]


def summarize(runs: list, energy_tol: float) -> list:
    """Summary rows recomputed from runs.csv rows (dicts of strings or values)."""
    groups = {}
    for r in runs:
        groups.setdefault((r["method"], int(r["chi"])), []).append(r)
    out = []
    for (method, chi), rows in sorted(groups.items(), key=lambda kv: (METHODS.index(kv[0][0]), kv[0][1])):
        good = [r for r in rows if r["energy"] not in ("", None)]
        statuses = sorted({r["status"] for r in rows})
        status = "failed" if any(s.startswith("failed") for s in statuses) else \
            ("converged" if statuses == ["converged"] else "max_sweeps")
        if not good:
            out.append([method, chi, None, None, None, None, status])
            continue
        fci = float(good[0]["fci_energy"])
        best = min(good, key=lambda r: (float(r["energy"]), int(r["restart"]), int(r["sweep"])))
        best_e = float(best["energy"])
        trace = [float(r["energy"]) for r in good if r["restart"] == best["restart"]]
        out.append([method, chi, best_e, fci, abs(best_e - fci),
                    sweeps_to_converge(trace, energy_tol), status])
    return out


@dataclass
class RunOutput:
    out: Path
    summary: list
    failures: list
    records: dict


def cmd_run(spec: ExperimentSpec) -> RunOutput:
    """Run every (method, chi, restart) cell of ``spec`` and write the report files."""
    src = spec.source
    if src is None or not src.exists:
        raise SpecError(f"Hamiltonian file not found: {src.ref if src else None}")
    e_ref = reference_energy(src, spec.cache)
    jobs = []
    for method in spec.methods:
        for chi in spec.chis(method):
            cfg = spec.config(chi)
            for r in range(cfg.n_restarts):
                jobs.append((src, method, cfg, r, spec.cache))
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = [_cell_job(j) for j in jobs]
    records = {(m, cfg.chi_cap, r): rec for (_, m, cfg, r, _), rec in zip(jobs, results)}
    _write_run(spec, records, e_ref)
    summary = summarize(read_csv(spec.out / "runs.csv"),
                        spec.config(spec.chi[0]).energy_tol)
    write_csv(spec.out / "summary.csv", "summary", SUMMARY_HEADER, summary)
    failures = [(k, v["status"]) for k, v in records.items() if v["status"].startswith("failed")]
    for k, status in failures:
        log.error("cell %s %s", k, status)
    return RunOutput(spec.out, summary, failures, records)


def _write_run(spec, records, e_ref):
    runs, timing, circuits, steps = [], [], [], []
    gates = enumerate_gates()
    for (method, chi, r), rec in records.items():
        status = rec["status"]
        if not rec["sweeps"]:
            runs.append([method, chi, r, 0, None, None, None, None, e_ref, None, None, None, None,
                         status])
        for sw in rec["sweeps"]:
            runs.append([method, chi, r, sw["sweep"], sw["energy"], sw["max_discarded"], sw["chi_w"],
                         sw["wall_seconds"], e_ref, rec["chi_w_initial"], sw["n_gates"],
                         sw["max_drift"], sw["unconverged_solves"], status])
        n = len(rec["sweeps"])
        timing.append([method, chi, r, n, rec["total_seconds"],
                       rec["total_seconds"] / n if n else None])
        for sweep_i, bond, gid in rec["circuit"]:
            circuits.append([method, chi, r, sweep_i, bond, gid, gates[gid].gate_class])
        for s_, bond, e, gid, w, wid, drift in rec["steps"]:
            steps.append([method, chi, r, s_, bond + 1, e, gid, w, wid, drift])
    out = spec.out
    write_csv(out / "runs.csv", "runs", RUNS_HEADER, runs)
    write_csv(out / "timing.csv", "timing",
              ["method", "chi", "restart", "n_sweeps", "total_seconds", "seconds_per_sweep"], timing)
    write_csv(out / "circuits.csv", "circuits",
              ["method", "chi", "restart", "sweep", "bond", "gate_id", "gate_class"], circuits)
    write_csv(out / "steps.csv", "steps",
              ["method", "chi", "restart", "sweep", "bond", "energy", "gate_id", "weight",
               "weight_identity", "drift"], steps)
    (out / "spec.txt").write_text(_describe(spec))


def _describe(spec):
    lines = [f"label = {spec.label}", f"hamiltonian = {spec.source.describe()}",
             f"method = {spec.method}", f"seed = {spec.seed}"]
    for m in spec.methods:
        lines.append(f"chi_{m} = {', '.join(map(str, spec.chis(m)))}")
    lines += [f"{k} = {v}" for k, v in sorted(spec.overrides.items())]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# curves and derived reports

def cmd_curve(spec: ExperimentSpec):
    """Run each point of ``spec.series`` into ``out/<label>`` and collect ``curve.csv``.

    Returns ``(rows, missing)``; missing files are skipped and listed.
    """
    if not spec.series:
        raise SpecError("curve needs a nonempty series")
    rows, missing = [], []
    for label, src in spec.series:
        if not src.exists:
            log.error("missing Hamiltonian for point %s: %s", label, src.ref)
            missing.append((label, src.ref))
            continue
        res = cmd_run(spec.with_source(label, src, spec.out / label))
        for method, chi, best, fci, err, _, _ in res.summary:
            if best is not None:
                rows.append([label, method, chi, best, fci, err])
    write_csv(spec.out / "curve.csv", "curve",
              ["bond_length_label", "method", "chi", "energy", "fci_energy", "abs_error"], rows)
    if missing:
        (spec.out / "missing.txt").write_text("".join(f"{a}\t{b}\n" for a, b in missing))
    return rows, missing


def cmd_report(run_dir) -> dict:
    """Derived tables from a run directory; incomplete inputs give partial output."""
    run_dir = Path(run_dir)
    runs_path = run_dir / "runs.csv"
    if not runs_path.exists():
        raise FileNotFoundError(f"{runs_path} not found")
    runs = [r for r in read_csv(runs_path) if r["energy"]]
    written = {}

    best = {}
    for r in runs:
        k = (r["method"], int(r["chi"]))
        best[k] = min(best.get(k, math.inf), float(r["energy"]))
    rows, flags = [], []
    for method in METHODS:
        chis = sorted(c for m, c in best if m == method)
        prev = None
        for chi in chis:
            fci = float(next(r["fci_energy"] for r in runs if r["method"] == method))
            err = abs(best[(method, chi)] - fci)
            mono = prev is None or err <= prev + 1e-9
            if not mono:
                flags.append((method, chi))
            rows.append([method, chi, 1.0 / chi, best[(method, chi)], fci, err, int(mono)])
            prev = err
    write_csv(run_dir / "error_vs_invchi.csv", "error_vs_invchi",
              ["method", "chi", "inv_chi", "best_energy", "fci_energy", "abs_error", "monotone"], rows)
    written["error_vs_invchi"] = rows
    for method, chi in flags:
        log.warning("error not monotone in chi for %s at chi=%d", method, chi)

    per = {}
    for r in runs:
        per.setdefault((r["method"], int(r["chi"])), []).append(float(r["wall_seconds"]))
    rows = []
    for chi in sorted({c for _, c in per}):
        d, c = per.get(("dmrg", chi)), per.get(("cadmrg", chi))
        if d and c:
            rows.append([chi, float(np.mean(d)), float(np.mean(c)), float(np.mean(c) / np.mean(d))])
        elif d or c:
            log.info("runtime ratio at chi=%d needs both methods", chi)
    write_csv(run_dir / "runtime_ratio.csv", "runtime_ratio",
              ["chi", "dmrg_seconds_per_sweep", "cadmrg_seconds_per_sweep", "ratio"], rows)
    written["runtime_ratio"] = rows

    rows = [[r["method"], int(r["chi"]), int(r["restart"]), int(r["sweep"]), int(r["chi_w_max"]),
             int(r["chi_w_initial"])] for r in runs]
    write_csv(run_dir / "chiw_vs_sweep.csv", "chiw_vs_sweep",
              ["method", "chi", "restart", "sweep", "chi_w_max", "chi_w_initial"], rows)
    written["chiw_vs_sweep"] = rows

    circ = run_dir / "circuits.csv"
    rows = []
    if circ.exists():
        rows = [[int(r["chi"]), int(r["restart"]), int(r["sweep"]), int(r["bond"]), r["gate_class"]]
                for r in read_csv(circ) if r["method"] == "cadmrg"]
    else:
        log.warning("%s missing; gate timeline left empty", circ)
    write_csv(run_dir / "gate_timeline.csv", "gate_timeline",
              ["chi", "restart", "sweep", "bond", "gate_class"], rows)
    written["gate_timeline"] = rows
    return written

import subprocess
import sys

import pytest

from cadmrg import experiments as ex
from cadmrg.clifford import GATE_CLASSES
from cadmrg.fcidump import bundled

TFIM = """label = tfim
hamiltonian = model:tfim
model_params = n=16 g=1.0
method = dmrg
chi = 32
n_restarts = 1
min_sweeps_before_stop = 0
"""

H2 = """label = h2
hamiltonian = bundled:h2
chi = 2, 4
n_restarts = 2
max_sweeps = 4
min_sweeps_before_stop = 1
"""


def spec_at(text, tmp_path, out="out", cache=""):
    return ex.parse_spec(text + f"out = {out}\ncache = {cache}\n", tmp_path)


@pytest.mark.parametrize("text, msg", [
    ("hamiltonian = bundled:h2\nchi = 4, 2\n", "ascending"),
    ("hamiltonian = bundled:h2\nchi = 0\n", "positive"),
    ("hamiltonian = bundled:h2\nchi = 4\nbogus = 1\n", "unknown key"),
    ("hamiltonian = bundled:h2\nchi = 4\nmethod = dft\n", "method"),
    ("hamiltonian = fcidump:nope.FCIDUMP\nchi = 4\n", "not found"),
    ("hamiltonian = model:heisenberg\nchi = 4\n", "unknown model"),
    ("chi = 4\n", "hamiltonian or a series"),
    ("hamiltonian = bundled:h2\nchi = 4\nscan = bogus\n", "scan"),
])
def test_spec_errors(tmp_path, text, msg):
    with pytest.raises((ex.SpecError, ValueError), match=msg):
        ex.parse_spec(text, tmp_path)


def test_spec_fields(tmp_path):
    s = ex.parse_spec(H2 + "chi_dmrg = 2, 4, 8\nenergy_tol = 1e-8\n", tmp_path)
    assert s.methods == ("dmrg", "cadmrg")
    assert s.chis("dmrg") == (2, 4, 8) and s.chis("cadmrg") == (2, 4)
    cfg = s.config(4)
    assert cfg.chi_cap == 4 and cfg.n_restarts == 2 and cfg.energy_tol == 1e-8
    assert s.source.ref == str(bundled("h2"))


def test_tfim_against_analytic(tmp_path):
    res = ex.cmd_run(spec_at(TFIM, tmp_path))
    (row,) = res.summary
    assert row[0] == "dmrg" and row[1] == 32
    assert row[4] < 1e-6
    assert not res.failures


def test_summary_byte_identical(tmp_path):
    a = ex.cmd_run(spec_at(H2, tmp_path, "a"))
    b = ex.cmd_run(spec_at(H2, tmp_path, "b"))
    assert (a.out / "summary.csv").read_bytes() == (b.out / "summary.csv").read_bytes()
    assert (a.out / "circuits.csv").read_bytes() == (b.out / "circuits.csv").read_bytes()


def test_cache_round_trip(tmp_path):
    a = ex.cmd_run(spec_at(H2, tmp_path, "a", "cache"))
    assert len(list((tmp_path / "cache").glob("cell-*.json.gz"))) == 8
    b = ex.cmd_run(spec_at(H2, tmp_path, "b", "cache"))
    assert (a.out / "runs.csv").read_bytes() == (b.out / "runs.csv").read_bytes()


def test_summary_recomputes_from_runs(tmp_path):
    res = ex.cmd_run(spec_at(H2, tmp_path))
    runs = ex.read_csv(res.out / "runs.csv")
    again = ex.summarize(runs, 1e-6)
    assert [[ex._fmt(v) for v in r] for r in again] == \
        [[ex._fmt(v) for v in r] for r in res.summary]
    header = (res.out / "runs.csv").read_text().splitlines()[:2]
    assert header[0].startswith("# cadmrg runs schema=")
    assert header[1].split(",")[:8] == ["method", "chi", "restart", "sweep", "energy",
                                        "max_discarded", "chi_w_max", "wall_seconds"]


def test_failed_cells_are_recorded(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("solver exploded")
    monkeypatch.setattr(ex, "run_restart", boom)
    res = ex.cmd_run(spec_at(H2, tmp_path))
    assert len(res.failures) == 8
    rows = ex.read_csv(res.out / "runs.csv")
    assert len(rows) == 8 and all(r["status"].startswith("failed") for r in rows)
    assert all(r[-1] == "failed" for r in res.summary)


def test_report_tables(tmp_path):
    res = ex.cmd_run(spec_at(H2, tmp_path))
    out = ex.cmd_report(res.out)
    for name in ("error_vs_invchi", "runtime_ratio", "chiw_vs_sweep", "gate_timeline"):
        assert (res.out / f"{name}.csv").exists()
    assert {r[-1] for r in out["gate_timeline"]} <= set(GATE_CLASSES)
    assert [r[0] for r in out["runtime_ratio"]] == [2, 4]


def test_report_partial(tmp_path):
    res = ex.cmd_run(spec_at(H2.replace("chi = 2, 4", "chi = 2") + "method = dmrg\n", tmp_path))
    (res.out / "circuits.csv").unlink()
    out = ex.cmd_report(res.out)
    assert out["runtime_ratio"] == [] and out["gate_timeline"] == []
    with pytest.raises(FileNotFoundError):
        ex.cmd_report(tmp_path / "nothing")


def test_curve_with_missing_point(tmp_path):
    text = ("series = a:bundled:h2, b:fcidump:missing.FCIDUMP\nchi = 2\nn_restarts = 1\n"
            "max_sweeps = 3\nmin_sweeps_before_stop = 1\n")
    spec = spec_at(text, tmp_path)
    rows, missing = ex.cmd_curve(spec)
    assert [m[0] for m in missing] == ["b"]
    assert {r[0] for r in rows} == {"a"}
    for label, method, chi, e, fci, err in rows:
        assert e >= fci - 1e-9
    single = ex.cmd_run(spec.with_source("a", spec.series[0][1], tmp_path / "single"))
    assert (tmp_path / "out" / "a" / "summary.csv").read_bytes() == \
        (single.out / "summary.csv").read_bytes()


def test_cli(tmp_path):
    cfg = tmp_path / "tfim.ini"
    cfg.write_text(TFIM)
    run = [sys.executable, "-m", "cadmrg.cli"]
    p = subprocess.run(run + ["run", "--config", str(cfg), "--out", str(tmp_path / "o")],
                       capture_output=True, text=True)
    assert p.returncode == 0, p.stderr
    assert (tmp_path / "o" / "summary.csv").exists()
    p = subprocess.run(run + ["gates"], capture_output=True, text=True)
    assert p.stdout.split() == ["local,36", "cnot_class,324", "swap_class,360"]
    p = subprocess.run(run + ["fci", "h2"], capture_output=True, text=True)
    assert abs(float(p.stdout) + 1.1372701747) < 1e-9
    p = subprocess.run(run + ["run", "--config", str(tmp_path / "none.ini")], capture_output=True,
                       text=True)
    assert p.returncode == 2 and "none.ini" in p.stderr

"""Compare the numba and pure-NumPy kernels on bundled molecules.

Usage: ``python benchmarks/bench_kernels.py [--repeat N] [--out timings.csv]``

Both twins are imported directly, so the comparison does not depend on
``CADMRG_DISABLE_NUMBA``.  Each kernel is called once to trigger
compilation before timing; the best of ``--repeat`` runs is reported.
"""
import argparse
import csv
import sys
import time

import numpy as np

from cadmrg import kernels
from cadmrg._accel import HAVE_NUMBA
from cadmrg.fci import SectorHamiltonian
from cadmrg.fcidump import bundled, read_fcidump
from cadmrg.pauli import qubit_hamiltonian


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    for name in ("h2o", "nh3"):
        t = read_fcidump(bundled(name))
        p = qubit_hamiltonian(t)
        if p.n_qubits <= 14:
            v = np.random.default_rng(0).standard_normal(1 << p.n_qubits).astype(complex)
            args = (p.xs, p.zs, p.coeffs, v)
            yield ("pauli_apply", name, f"{p.n_terms} terms on 2^{p.n_qubits}",
                   lambda a=args: kernels.pauli_apply_numba(*a),
                   lambda a=args: kernels.pauli_apply_numpy(*a))
        H = SectorHamiltonian(t, t.n_alpha, t.n_beta)
        c = np.random.default_rng(1).standard_normal(H.dim)
        args = (c, H.basis.strs_a, H.basis.strs_b, H.addr_a, H.addr_b, H.h1, H.eri, H.diag,
                t.n_spatial, *H.tables)
        yield ("fci_sigma", name, f"sector dim {H.dim}",
               lambda a=args: kernels.fci_sigma_numba(*a),
               lambda a=args: kernels.fci_sigma_numpy(*a))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--out", help="optional CSV output path")
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba unavailable: the numba column times the uncompiled Python loops", file=sys.stderr)
    rows = []
    for kernel, system, size, f_numba, f_numpy in cases():
        a, b = f_numba(), f_numpy()
        err = float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))
        tn, tp = best_time(f_numba, args.repeat), best_time(f_numpy, args.repeat)
        rows.append((kernel, system, size, tn, tp, tp / tn, err))
        print(f"{kernel:12s} {system:5s} {size:28s} numba {tn * 1e3:9.2f} ms  "
              f"numpy {tp * 1e3:9.2f} ms  speedup {tp / tn:6.1f}x  max rel diff {err:.1e}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kernel", "system", "size", "numba_seconds", "numpy_seconds", "speedup",
                        "max_rel_diff"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())

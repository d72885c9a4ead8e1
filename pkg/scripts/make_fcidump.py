"""Generate the bundled STO-3G FCIDUMP files.

Run once with PySCF installed (``pip install pyscf``); the output is
committed under ``src/cadmrg/data``.  Orbitals are canonical RHF orbitals
in PySCF's default ordering, no frozen core.

    python scripts/make_fcidump.py [outdir]
"""
import os
import sys

import numpy as np
from pyscf import gto, scf
from pyscf.tools import fcidump


def _nh3(r_nh=(1.012, 1.012, 1.012), theta=106.7):
    # N on the z axis, hydrogens arranged with H-N-H angle theta (balanced case)
    t = np.deg2rad(theta)
    # angle between N-H bond and the C3 axis
    cos_a = np.sqrt((1 + 2 * np.cos(t)) / 3)
    sin_a = np.sqrt(1 - cos_a ** 2)
    atoms = [("N", (0.0, 0.0, 0.0))]
    for k, r in enumerate(r_nh):
        phi = 2 * np.pi * k / 3
        atoms.append(("H", (r * sin_a * np.cos(phi), r * sin_a * np.sin(phi), -r * cos_a)))
    return atoms


def _h2o(r_oh=0.9572, theta=104.52):
    t = np.deg2rad(theta) / 2
    return [("O", (0.0, 0.0, 0.0)),
            ("H", (r_oh * np.sin(t), 0.0, r_oh * np.cos(t))),
            ("H", (-r_oh * np.sin(t), 0.0, r_oh * np.cos(t)))]


def _diatomic(sym, r):
    return [(sym, (0.0, 0.0, 0.0)), (sym, (0.0, 0.0, r))]


GEOMETRIES = {
    "h2": [("H", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, 0.7414))],
    "h2o": _h2o(),
    "nh3": _nh3(),
    "nh3_unbalanced": _nh3(r_nh=(1.012, 1.20, 1.40)),
    "c2": _diatomic("C", 1.2425),
    "n2": _diatomic("N", 1.0977),
}

N2_SERIES = [0.9, 1.1, 1.3, 1.6, 2.0]


def write(atoms, path):
    mol = gto.M(atom=atoms, basis="sto-3g", unit="Angstrom", symmetry=False, verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    fcidump.from_scf(mf, path, tol=1e-14)
    return mf.e_tot


def main(outdir):
    os.makedirs(outdir, exist_ok=True)
    for name, atoms in GEOMETRIES.items():
        e = write(atoms, os.path.join(outdir, f"{name}.FCIDUMP"))
        print(f"{name:16s} E_RHF = {e:.10f}")
    for r in N2_SERIES:
        e = write(_diatomic("N", r), os.path.join(outdir, f"n2_r{r:.2f}.FCIDUMP"))
        print(f"n2 r={r:.2f}       E_RHF = {e:.10f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "src", "cadmrg", "data"))

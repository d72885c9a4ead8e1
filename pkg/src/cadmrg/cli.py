"""Command line entry point: ``cadmrg {run,curve,report,fci,gates}``."""
import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import experiments as ex


def _load(args):
    spec = ex.load_spec(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out is not None:
        changes["out"] = Path(args.out)
    return dataclasses.replace(spec, **changes)


def _run(args):
    res = ex.cmd_run(_load(args))
    ex.cmd_report(res.out)
    for row in res.summary:
        print(",".join(ex._fmt(v) for v in row))
    return 1 if res.failures else 0


def _curve(args):
    spec = _load(args)
    rows, missing = ex.cmd_curve(spec)
    for row in rows:
        print(",".join(ex._fmt(v) for v in row))
    for label, path in missing:
        print(f"missing: {label} {path}", file=sys.stderr)
    return 1 if missing else 0


def _report(args):
    ex.cmd_report(args.run_dir)
    return 0


def _fci(args):
    from .fci import fci_ground_energy
    from .fcidump import bundled, read_fcidump
    path = Path(args.fcidump)
    if not path.exists():
        path = bundled(args.fcidump)
    t = read_fcidump(path)
    e, res = fci_ground_energy(t, tol=args.tol)
    print(f"{e!r}")
    print(f"residual {res:.3e}", file=sys.stderr)
    return 0


def _gates(args):
    from .clifford import census
    for k, v in census().items():
        print(f"{k},{v}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="cadmrg", description="DMRG and Clifford-augmented DMRG experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (("run", _run, "run a spec and write CSV reports"),
                               ("curve", _curve, "run every point of a series spec")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out")
        sp.set_defaults(func=fn)
    sp = sub.add_parser("report", help="derive tables from a run directory")
    sp.add_argument("run_dir")
    sp.set_defaults(func=_report)
    sp = sub.add_parser("fci", help="exact ground energy of an FCIDUMP")
    sp.add_argument("fcidump", help="path or bundled name")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.set_defaults(func=_fci)
    sp = sub.add_parser("gates", help="print the two-qubit Clifford census")
    sp.set_defaults(func=_gates)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ex.SpecError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

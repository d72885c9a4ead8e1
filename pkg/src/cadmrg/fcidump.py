"""FCIDUMP reading and writing.

Integrals are stored in chemist notation ``(ij|kl)`` with 1-based indices::

     &FCI NORB=2,NELEC=2,MS2=0,
      ORBSYM=1,1,
      ISYM=1,
     &END
     0.6744  1  1  1  1
    -1.2525  1  1  0  0
     0.7137  0  0  0  0
"""
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class FCIDUMPError(ValueError):
    def __init__(self, msg, lineno=None):
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)
        self.lineno = lineno


@dataclass
class IntegralTable:
    n_spatial: int
    n_electrons: int
    ms2: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray
    orbsym: list[int] = field(default_factory=list)
    isym: int = 1

    @property
    def n_alpha(self):
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_beta(self):
        return (self.n_electrons - self.ms2) // 2

    @classmethod
    def zeros(cls, n_spatial, n_electrons, ms2=0):
        n = n_spatial
        return cls(n, n_electrons, ms2, 0.0, np.zeros((n, n)), np.zeros((n, n, n, n)))

    def check_symmetry(self, atol=1e-12):
        g = self.two_body
        ok = np.allclose(self.one_body, self.one_body.T, atol=atol)
        for perm in [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)]:
            ok &= np.allclose(g, g.transpose(perm), atol=atol)
        return bool(ok)


def _parse_header(text, lineno):
    body = re.sub(r"^\s*&FCI", "", text, flags=re.I)
    body = re.sub(r"(&END|/)\s*$", "", body.strip(), flags=re.I)
    parts = re.split(r"([A-Za-z_][A-Za-z0-9_]*)\s*=", body)
    fields = {}
    for key, val in zip(parts[1::2], parts[2::2]):
        fields[key.upper()] = [v for v in re.split(r"[,\s]+", val.strip()) if v]
    for req in ("NORB", "NELEC"):
        if req not in fields or len(fields[req]) != 1:
            raise FCIDUMPError(f"header missing {req}", lineno)
    try:
        return {
            "NORB": int(fields["NORB"][0]),
            "NELEC": int(fields["NELEC"][0]),
            "MS2": int(fields.get("MS2", ["0"])[0]),
            "ORBSYM": [int(v) for v in fields.get("ORBSYM", [])],
            "ISYM": int(fields.get("ISYM", ["1"])[0]),
        }
    except ValueError as exc:
        raise FCIDUMPError(f"malformed header value ({exc})", lineno) from None


def _float(tok):
    return float(tok.replace("D", "E").replace("d", "e"))


def _two_body_images(i, j, k, l):
    return {(i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
            (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i)}


def parse_fcidump(text: str) -> IntegralTable:
    """Parse FCIDUMP text; every symmetry image of each record is filled."""
    lines = text.splitlines()
    header = []
    start = None
    for n, line in enumerate(lines):
        header.append(line)
        if re.search(r"&END|^\s*/\s*$", line, flags=re.I):
            start = n + 1
            break
    if start is None or not re.match(r"\s*&FCI", header[0] if header else "", flags=re.I):
        raise FCIDUMPError("missing &FCI ... &END header", 1)
    h = _parse_header(" ".join(header), 1)
    n = h["NORB"]
    if n < 1:
        raise FCIDUMPError("NORB must be positive", 1)
    t = IntegralTable.zeros(n, h["NELEC"], h["MS2"])
    t.orbsym, t.isym = h["ORBSYM"], h["ISYM"]
    for lineno, line in enumerate(lines[start:], start=start + 1):
        toks = line.split()
        if not toks:
            continue
        if len(toks) != 5:
            raise FCIDUMPError(f"expected 'value i j k l', got {line.strip()!r}", lineno)
        try:
            val = _float(toks[0])
            i, j, k, l = (int(x) for x in toks[1:])
        except ValueError:
            raise FCIDUMPError(f"non-numeric record {line.strip()!r}", lineno) from None
        if any(x < 0 or x > n for x in (i, j, k, l)):
            raise FCIDUMPError(f"orbital index out of range 1..{n}", lineno)
        if i == j == k == l == 0:
            t.core_energy = val
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                # orbital energies (i 0 0 0) carry no Hamiltonian information
                continue
            t.one_body[i - 1, j - 1] = t.one_body[j - 1, i - 1] = val
        else:
            if 0 in (i, j, k, l):
                raise FCIDUMPError("zero index inside a two-body record", lineno)
            for idx in _two_body_images(i - 1, j - 1, k - 1, l - 1):
                t.two_body[idx] = val
    return t


def read_fcidump(path) -> IntegralTable:
    return parse_fcidump(Path(path).read_text())


def write_fcidump(t: IntegralTable, tol: float = 0.0) -> str:
    """Serialize with one record per symmetry-unique integral (``repr`` floats)."""
    n = t.n_spatial
    orbsym = t.orbsym or [1] * n
    out = [f" &FCI NORB={n},NELEC={t.n_electrons},MS2={t.ms2},",
           "  ORBSYM=" + ",".join(str(s) for s in orbsym) + ",",
           f"  ISYM={t.isym},", " &END"]
    g = t.two_body
    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(n):
                for l in range(k + 1):
                    if k * (k + 1) // 2 + l > ij:
                        continue
                    v = g[i, j, k, l]
                    if abs(v) > tol:
                        out.append(f"{float(v)!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            v = t.one_body[i, j]
            if abs(v) > tol:
                out.append(f"{float(v)!r} {i + 1} {j + 1} 0 0")
    out.append(f"{float(t.core_energy)!r} 0 0 0 0")
    return "\n".join(out) + "\n"


def bundled(name: str) -> Path:
    """Path of a bundled FCIDUMP file, e.g. ``bundled('h2o')``."""
    p = Path(__file__).parent / "data" / f"{name}.FCIDUMP"
    if not p.exists():
        raise FileNotFoundError(p)
    return p


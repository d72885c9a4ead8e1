"""Matrix product states and operators.

MPS site tensors have axes ``(left bond, physical, right bond)``; MPO site
tensors ``(left bond, out, in, right bond)``, so a dense operator element is
``<out|W|in>``.  Site 0 is the most significant qubit of a dense index.
Environments use the axis order ``(bra, mpo, ket)`` throughout.
"""
import struct
from dataclasses import dataclass, field

import numpy as np

from .kernels import popcount
from .pauli import DENSE_QUBIT_CAP, PauliSum, SizeError
from .tensor_core import DegenerateTensorError, DimensionError, orthonormalize, svd_truncate

_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
# X^x Z^z for (x, z) in 00, 01, 10, 11; real matrices
_MONOMIAL = np.stack([np.eye(2), _Z, _X, _X @ _Z])


class StateError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# containers

@dataclass
class MPS:
    tensors: list
    center: int

    @property
    def n_sites(self):
        return len(self.tensors)

    @property
    def bond_dims(self):
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def chi(self):
        return max(self.bond_dims, default=1)

    @property
    def dtype(self):
        return np.result_type(*self.tensors)

    def copy(self):
        return MPS([t.copy() for t in self.tensors], self.center)

    def to_dense(self, cap=DENSE_QUBIT_CAP):
        if self.n_sites > cap:
            raise SizeError(f"{self.n_sites} sites exceeds the dense cap of {cap}")
        v = self.tensors[0]
        for t in self.tensors[1:]:
            v = np.tensordot(v, t, axes=(v.ndim - 1, 0))
        return v.reshape(-1)

    def norm(self):
        return float(np.linalg.norm(self.tensors[self.center]))


@dataclass
class MPO:
    tensors: list
    center: int | None = None

    @property
    def n_sites(self):
        return len(self.tensors)

    @property
    def bond_dims(self):
        return [t.shape[3] for t in self.tensors[:-1]]

    @property
    def chi_w(self):
        return max(self.bond_dims, default=1)

    @property
    def dtype(self):
        return np.result_type(*self.tensors)

    def copy(self):
        return MPO([t.copy() for t in self.tensors], self.center)

    def to_dense(self, cap=12):
        n = self.n_sites
        if n > cap:
            raise SizeError(f"{n} sites exceeds the dense cap of {cap}")
        m = self.tensors[0][0]                        # (out, in, wr)
        for t in self.tensors[1:]:
            m = np.tensordot(m, t, axes=(m.ndim - 1, 0))   # (..., out, in, wr)
        m = m[..., 0]
        outs = list(range(0, 2 * n, 2))
        ins = list(range(1, 2 * n, 2))
        return m.transpose(outs + ins).reshape(1 << n, 1 << n)


# --------------------------------------------------------------------------
# construction

def random_mps(n_sites: int, chi_init: int, seed: int, dtype=float) -> MPS:
    """Random normalized MPS, right-canonical with center at site 0."""
    if n_sites < 2 or chi_init < 1:
        raise ValueError("need n_sites >= 2 and chi_init >= 1")
    rng = np.random.default_rng(seed)
    dims = [1] + [min(chi_init, 2 ** min(k, n_sites - k)) for k in range(1, n_sites)] + [1]
    complex_ = np.issubdtype(np.dtype(dtype), np.complexfloating)
    tensors = []
    for k in range(n_sites):
        shape = (dims[k], 2, dims[k + 1])
        t = rng.standard_normal(shape)
        if complex_:
            t = t + 1j * rng.standard_normal(shape)
        tensors.append(t.astype(dtype))
    s = MPS(tensors, n_sites - 1)
    move_center(s, 0)
    s.tensors[0] /= np.linalg.norm(s.tensors[0])
    return s


def _qr_step_mps(s, k, direction):
    t = s.tensors[k]
    if direction == "right":
        q, r = orthonormalize(t, [0, 1], "left")
        s.tensors[k] = q
        s.tensors[k + 1] = np.tensordot(r, s.tensors[k + 1], axes=(1, 0))
    else:
        q, r = orthonormalize(t, [0], "right")
        s.tensors[k] = q
        s.tensors[k - 1] = np.tensordot(s.tensors[k - 1], r, axes=(2, 0))


def _step_mpo(h, k, direction, rel_threshold):
    t = h.tensors[k]
    if direction == "right":
        if rel_threshold > 0:
            u, sv, v, _ = svd_truncate(t, [0, 1, 2], rel_threshold=rel_threshold)
            q, r = u, sv[:, None] * v
        else:
            q, r = orthonormalize(t, [0, 1, 2], "left")
        h.tensors[k] = q
        h.tensors[k + 1] = np.tensordot(r, h.tensors[k + 1], axes=(1, 0))
    else:
        if rel_threshold > 0:
            u, sv, v, _ = svd_truncate(t, [0], rel_threshold=rel_threshold)
            q, r = v, u * sv
        else:
            q, r = orthonormalize(t, [0], "right")
        h.tensors[k] = q
        h.tensors[k - 1] = np.tensordot(h.tensors[k - 1], r, axes=(3, 0))


def move_center(s, to: int, rel_threshold: float = 0.0):
    """Relocate the canonical center of an MPS or MPO in place.

    MPS moves are exact QR steps.  MPO moves are QR steps when
    ``rel_threshold`` is 0 and thresholded SVD steps otherwise; an MPO
    without a center is first brought to center 0 by a full sweep.
    """
    if not 0 <= to < s.n_sites:
        raise IndexError(f"site {to} outside 0..{s.n_sites - 1}")
    if isinstance(s, MPO):
        if s.center is None:
            for k in range(s.n_sites - 1):
                _step_mpo(s, k, "right", 0.0)
            s.center = s.n_sites - 1
        while s.center < to:
            _step_mpo(s, s.center, "right", rel_threshold)
            s.center += 1
        while s.center > to:
            _step_mpo(s, s.center, "left", rel_threshold)
            s.center -= 1
        return s
    while s.center < to:
        _qr_step_mps(s, s.center, "right")
        s.center += 1
    while s.center > to:
        _qr_step_mps(s, s.center, "left")
        s.center -= 1
    return s


def _product_batch(n, xs, zs, coeffs):
    """Direct sum of product operators X^x Z^z (one per term) as an MPO."""
    b = len(coeffs)
    idx = np.arange(b)
    tensors = []
    for q in range(n):
        bit = n - 1 - q
        code = 2 * ((xs >> bit) & 1) + ((zs >> bit) & 1)
        mats = _MONOMIAL[code]                         # (b, 2, 2)
        if q == 0:
            mats = mats * coeffs[:, None, None]
        if n == 1:
            w = mats.sum(axis=0)[None, :, :, None]
        elif q == 0:
            w = mats.transpose(1, 2, 0)[None]
        elif q == n - 1:
            w = mats[..., None]
        else:
            w = np.zeros((b, 2, 2, b), dtype=mats.dtype)
            w[idx, :, :, idx] = mats
        tensors.append(w)
    return MPO(tensors)


def _direct_sum(a: MPO, b: MPO) -> MPO:
    n = a.n_sites
    dtype = np.result_type(a.dtype, b.dtype)
    out = []
    for k, (wa, wb) in enumerate(zip(a.tensors, b.tensors)):
        la, ra = wa.shape[0], wa.shape[3]
        lb, rb = wb.shape[0], wb.shape[3]
        if n == 1:
            out.append(wa + wb)
            continue
        if k == 0:
            w = np.zeros((1, 2, 2, ra + rb), dtype)
            w[..., :ra], w[..., ra:] = wa, wb
        elif k == n - 1:
            w = np.zeros((la + lb, 2, 2, 1), dtype)
            w[:la], w[la:] = wa, wb
        else:
            w = np.zeros((la + lb, 2, 2, ra + rb), dtype)
            w[:la, :, :, :ra] = wa
            w[la:, :, :, ra:] = wb
        out.append(w)
    return MPO(out)


def compress_mpo(h: MPO, rel_threshold: float) -> MPO:
    """Left QR sweep then right-to-left thresholded SVD sweep; center ends at 0."""
    h = h.copy()
    h.center = None
    move_center(h, h.n_sites - 1)
    while h.center > 0:
        _step_mpo(h, h.center, "left", rel_threshold)
        h.center -= 1
    return h


def mpo_from_pauli_sum(p: PauliSum, batch: int = 64, construct_threshold: float = 1e-24) -> MPO:
    """Exact MPO of a PauliSum built by summing compressed batches of product terms.

    Each word is written as ``i**|x&z| X^x Z^z`` so the site matrices are
    real; the tensors are real whenever all the resulting coefficients are.
    Batches are merged pairwise and recompressed with a negligible
    threshold, so the bond dimension never exceeds the term count.
    """
    p = p.simplify(0.0)
    if p.n_terms == 0:
        raise ValueError("empty PauliSum")
    n = p.n_qubits
    c = p.coeffs * (1j) ** (popcount(p.xs & p.zs) % 4)
    if np.max(np.abs(c.imag)) == 0.0:
        c = c.real
    parts = []
    for s in range(0, p.n_terms, batch):
        sl = slice(s, s + batch)
        parts.append(compress_mpo(_product_batch(n, p.xs[sl], p.zs[sl], c[sl]),
                                  construct_threshold))
    while len(parts) > 1:
        merged = []
        for k in range(0, len(parts) - 1, 2):
            merged.append(compress_mpo(_direct_sum(parts[k], parts[k + 1]), construct_threshold))
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    h = parts[0]
    h.center = 0
    return h


def mpo_weight_cutoff(rel_threshold: float, kind: str = "singular") -> float:
    """Cutoff on ``s_i**2 / sum_j s_j**2`` for an MPO truncation threshold.

    ``kind='singular'`` drops singular values with ``s_i / ||s|| < rel_threshold``;
    ``kind='weight'`` applies ``rel_threshold`` to the squared weights directly.
    """
    if kind == "singular":
        return rel_threshold ** 2
    if kind == "weight":
        return rel_threshold
    raise ValueError(f"unknown threshold kind {kind!r}")


def mpo_canonicalize(h: MPO, rel_threshold: float = 1e-10, kind: str = "singular") -> MPO:
    """Right-canonical copy with center 0, truncated per :func:`mpo_weight_cutoff`."""
    return compress_mpo(h, mpo_weight_cutoff(rel_threshold, kind))


def identity_mpo(n_sites: int) -> MPO:
    return MPO([np.eye(2)[None, :, :, None].copy() for _ in range(n_sites)], 0)


# --------------------------------------------------------------------------
# contractions

def _check_sites(s, h):
    if s.n_sites != h.n_sites:
        raise DimensionError(f"MPS has {s.n_sites} sites, MPO has {h.n_sites}")


def extend_left(L, m, w):
    """Left environment after absorbing one site: ``L'[a', b', c']``."""
    t = np.tensordot(L, m, axes=(2, 0))                    # a b t c'
    t = np.tensordot(t, w, axes=([1, 2], [0, 2]))          # a c' s b'
    t = np.tensordot(t, m.conj(), axes=([0, 2], [0, 1]))   # c' b' a'
    return t.transpose(2, 1, 0)


def extend_right(R, m, w):
    """Right environment after absorbing one site: ``R'[a, b, c]``."""
    t = np.tensordot(m, R, axes=(2, 2))                    # c t a' b'
    t = np.tensordot(t, w, axes=([1, 3], [2, 3]))          # c a' b s
    t = np.tensordot(t, m.conj(), axes=([1, 3], [2, 1]))   # c b a
    return t.transpose(2, 1, 0)


_ONE = np.ones((1, 1, 1))


def expectation(s: MPS, h: MPO) -> float:
    """``<s|h|s> / <s|s>``, real part (the imaginary residue is dropped)."""
    _check_sites(s, h)
    L = _ONE
    for m, w in zip(s.tensors, h.tensors):
        L = extend_left(L, m, w)
    N = np.ones((1, 1))
    for m in s.tensors:
        N = np.tensordot(np.tensordot(N, m, axes=(1, 0)), m.conj(), axes=([0, 1], [0, 1]))
    nrm = N[0, 0].real
    return float(L[0, 0, 0].real / nrm)


def expectation_complex(s: MPS, h: MPO) -> complex:
    _check_sites(s, h)
    L = _ONE
    for m, w in zip(s.tensors, h.tensors):
        L = extend_left(L, m, w)
    return complex(L[0, 0, 0])


@dataclass
class EnvCache:
    """Left and right environments for one (MPS, MPO) pair.

    ``left[i]`` covers sites ``< i`` and ``right[i]`` sites ``>= i``;
    ``left[0]`` and ``right[N]`` are the scalar 1.  Entries are ``None``
    until built.
    """
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)

    @property
    def n_sites(self):
        return len(self.left) - 1

    def refresh_left(self, s, h, i):
        """Recompute ``left[i+1]`` from ``left[i]`` and site ``i``."""
        self.left[i + 1] = extend_left(self.left[i], s.tensors[i], h.tensors[i])

    def refresh_right(self, s, h, i):
        """Recompute ``right[i]`` from ``right[i+1]`` and site ``i``."""
        self.right[i] = extend_right(self.right[i + 1], s.tensors[i], h.tensors[i])


def build_environments(s: MPS, h: MPO) -> EnvCache:
    """Environments left and right of the shared center."""
    _check_sites(s, h)
    if h.center is not None and h.center != s.center:
        raise StateError(f"MPS center {s.center} differs from MPO center {h.center}")
    n = s.n_sites
    c = EnvCache([None] * (n + 1), [None] * (n + 1))
    c.left[0] = _ONE.copy()
    c.right[n] = _ONE.copy()
    for i in range(s.center):
        c.refresh_left(s, h, i)
    for i in range(n - 1, s.center, -1):
        c.refresh_right(s, h, i)
    return c


def refresh_environment(cache: EnvCache, s: MPS, h: MPO, site: int, side: str) -> EnvCache:
    if side == "left":
        cache.refresh_left(s, h, site)
    elif side == "right":
        cache.refresh_right(s, h, site)
    else:
        raise ValueError(f"unknown side {side!r}")
    return cache


# --------------------------------------------------------------------------
# checks

def isometry_error(t: np.ndarray, side: str) -> float:
    """Distance from isometry; ``side='left'`` contracts all axes but the last."""
    if side == "left":
        m = t.reshape(-1, t.shape[-1])
        g = m.conj().T @ m
    else:
        m = t.reshape(t.shape[0], -1)
        g = m @ m.conj().T
    return float(np.max(np.abs(g - np.eye(g.shape[0])), initial=0.0))


def canonical_error(s) -> float:
    """Largest isometry violation away from the center."""
    err = 0.0
    for k, t in enumerate(s.tensors):
        if k < s.center:
            err = max(err, isometry_error(t, "left"))
        elif k > s.center:
            err = max(err, isometry_error(t, "right"))
    return err


# --------------------------------------------------------------------------
# snapshots: magic, kind, n_sites, then per site ndim + dims + complex128 data

_MAGIC = b"CAMP"


def save_snapshot(obj, path):
    kind = 1 if isinstance(obj, MPS) else 2
    center = -1 if obj.center is None else obj.center
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<iii", kind, obj.n_sites, center))
        for t in obj.tensors:
            fh.write(struct.pack("<i", t.ndim) + struct.pack(f"<{t.ndim}q", *t.shape))
            fh.write(np.ascontiguousarray(t, dtype="<c16").tobytes())


def load_snapshot(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    kind, n, center = struct.unpack_from("<iii", data, 4)
    off = 16
    tensors = []
    for _ in range(n):
        (nd,) = struct.unpack_from("<i", data, off)
        off += 4
        shape = struct.unpack_from(f"<{nd}q", data, off)
        off += 8 * nd
        size = int(np.prod(shape))
        t = np.frombuffer(data, dtype="<c16", count=size, offset=off).reshape(shape).copy()
        off += 16 * size
        if not np.any(t.imag):
            t = t.real.copy()
        tensors.append(t)
    center = None if center < 0 else center
    return MPS(tensors, center) if kind == 1 else MPO(tensors, center)


__all__ = ["MPS", "MPO", "EnvCache", "StateError", "DegenerateTensorError", "random_mps",
           "move_center", "mpo_from_pauli_sum", "mpo_canonicalize", "compress_mpo",
           "identity_mpo", "mpo_weight_cutoff", "expectation", "build_environments", "refresh_environment",
           "extend_left", "extend_right", "canonical_error", "save_snapshot", "load_snapshot"]

import numpy as np
import pytest

from cadmrg import models
from cadmrg.fcidump import bundled, read_fcidump
from cadmrg.mps import (MPO, MPS, StateError, build_environments, canonical_error, compress_mpo,
                        expectation, identity_mpo, load_snapshot, move_center, mpo_canonicalize,
                        mpo_from_pauli_sum, random_mps, refresh_environment, save_snapshot)
from cadmrg.pauli import PauliSum, qubit_hamiltonian
from cadmrg.tensor_core import DimensionError

# Frozen MPO bond dimensions after construction and canonicalization at 1e-10.
MOLECULE_CHI_W = {"h2o": 92, "nh3": 154, "c2": 162, "n2": 162, "nh3_unbalanced": 154}


def random_pauli_sum(rng, n, terms=30):
    return PauliSum(n, rng.integers(1 << n, size=terms), rng.integers(1 << n, size=terms),
                    rng.standard_normal(terms))


def random_mpo(rng, n, chi=3):
    dims = [1] + [chi] * (n - 1) + [1]
    return MPO([rng.standard_normal((dims[k], 2, 2, dims[k + 1])) for k in range(n)])


def test_random_mps_properties():
    s = random_mps(6, 1, seed=3)
    assert s.bond_dims == [1] * 5
    a, b = random_mps(8, 4, seed=5), random_mps(8, 4, seed=5)
    assert all(np.array_equal(x, y) for x, y in zip(a.tensors, b.tensors))
    for seed in range(50):
        s = random_mps(8, 4, seed)
        assert abs(np.linalg.norm(s.to_dense()) - 1) < 1e-12
        assert canonical_error(s) < 1e-12


def test_move_center_mps():
    s = random_mps(8, 6, seed=2, dtype=complex)
    v = s.to_dense()
    t = s.copy()
    move_center(t, 0)
    assert all(np.array_equal(x, y) for x, y in zip(s.tensors, t.tensors))
    move_center(t, 7)
    assert t.center == 7 and canonical_error(t) < 1e-12
    assert np.max(np.abs(t.to_dense() - v)) < 1e-11
    with pytest.raises(IndexError):
        move_center(t, 8)


def test_move_center_mpo(rng):
    h = random_mpo(rng, 6)
    d = h.to_dense()
    move_center(h, 3)
    assert h.center == 3
    move_center(h, 1)
    assert np.linalg.norm(h.to_dense() - d) / np.linalg.norm(d) < 1e-9


def test_single_term_mpo():
    h = mpo_from_pauli_sum(PauliSum.from_terms(3, {"ZZI": 0.7}))
    assert h.bond_dims == [1, 1]
    z = np.diag([1.0, -1.0])
    assert np.allclose(h.to_dense(), 0.7 * np.kron(np.kron(z, z), np.eye(2)))


def test_tfim_mpo_rank():
    p = models.tfim(8, 0.9)
    h = mpo_canonicalize(mpo_from_pauli_sum(p))
    assert h.chi_w == 3
    assert np.allclose(h.to_dense(), p.to_dense().real)


def test_random_pauli_mpo(rng):
    for n in (2, 4, 6):
        p = random_pauli_sum(rng, n)
        assert np.max(np.abs(mpo_from_pauli_sum(p).to_dense() - p.to_dense())) < 1e-12


def test_canonicalize_preserves_operator(rng):
    h = random_mpo(rng, 6)
    d = h.to_dense()
    c = compress_mpo(h.copy(), 0.0)
    assert np.linalg.norm(c.to_dense() - d) / np.linalg.norm(d) < 1e-10
    again = mpo_canonicalize(c.copy(), 0.0)
    assert again.bond_dims == c.bond_dims


@pytest.mark.parametrize("name", sorted(MOLECULE_CHI_W))
def test_molecular_mpo_bond_dimension(name):
    p = qubit_hamiltonian(read_fcidump(bundled(name)))
    raw = mpo_from_pauli_sum(p)
    h = mpo_canonicalize(raw.copy())
    assert h.chi_w == MOLECULE_CHI_W[name]
    # canonicalization does not change the bond dimension much
    assert h.chi_w <= raw.chi_w and raw.chi_w <= 1.5 * h.chi_w
    assert h.dtype == np.float64


def test_expectation_examples(rng):
    s = random_mps(6, 4, seed=1)
    assert expectation(s, identity_mpo(6)) == pytest.approx(1.0, abs=1e-12)
    p = qubit_hamiltonian(read_fcidump(bundled("h2o")))
    h = mpo_from_pauli_sum(p)
    zero = MPS([np.array([1.0, 0.0]).reshape(1, 2, 1) for _ in range(14)], 0)
    diag = p.coeffs[p.xs == 0].sum().real
    assert expectation(zero, h) == pytest.approx(diag, abs=1e-10)
    q = random_pauli_sum(rng, 8, 40)
    s = random_mps(8, 5, seed=9, dtype=complex)
    v = s.to_dense()
    ref = np.vdot(v, q.to_dense() @ v).real
    assert abs(expectation(s, mpo_from_pauli_sum(q)) - ref) < 1e-10


def test_environments(rng):
    q = random_pauli_sum(rng, 6, 25)
    h = mpo_canonicalize(mpo_from_pauli_sum(q), 0.0)
    s = random_mps(6, 4, seed=4)
    cache = build_environments(s, h)
    assert cache.left[0].shape == (1, 1, 1) and cache.left[0][0, 0, 0] == 1.0
    assert cache.right[6][0, 0, 0] == 1.0
    e = expectation(s, h)
    full = cache.right[1]
    m, w = s.tensors[0], h.tensors[0]
    # contract the center site into the right environment
    t = np.tensordot(m, full, axes=(2, 2))                  # l s a' b'
    t = np.tensordot(t, w, axes=([1, 3], [2, 3]))           # l a' l_w o
    total = np.tensordot(t, m.conj(), axes=([1, 3], [2, 1]))
    assert abs(total.ravel()[0] - e) < 1e-10
    # moving the center and refreshing one environment matches a rebuild
    move_center(s, 1)
    move_center(h, 1)
    refresh_environment(cache, s, h, 0, "left")
    rebuilt = build_environments(s, h)
    assert np.allclose(cache.left[1], rebuilt.left[1])
    with pytest.raises(ValueError):
        refresh_environment(cache, s, h, 0, "up")


def test_environment_errors():
    s = random_mps(4, 2, seed=0)
    h = identity_mpo(4)
    move_center(h, 2)
    with pytest.raises(StateError):
        build_environments(s, h)
    with pytest.raises(DimensionError):
        expectation(s, identity_mpo(5))


def test_snapshot_round_trip(tmp_path, rng):
    s = random_mps(5, 3, seed=8, dtype=complex)
    save_snapshot(s, tmp_path / "s.bin")
    t = load_snapshot(tmp_path / "s.bin")
    assert isinstance(t, MPS) and t.center == s.center
    assert all(np.array_equal(a, b) for a, b in zip(s.tensors, t.tensors))
    h = random_mpo(rng, 4)
    save_snapshot(h, tmp_path / "h.bin")
    g = load_snapshot(tmp_path / "h.bin")
    assert isinstance(g, MPO) and g.center is None
    assert all(np.array_equal(a, b) and b.dtype == np.float64 for a, b in zip(h.tensors, g.tensors))
    (tmp_path / "bad.bin").write_bytes(b"XXXX")
    with pytest.raises(ValueError):
        load_snapshot(tmp_path / "bad.bin")

import numpy as np
import pytest

from cadmrg.fcidump import (FCIDUMPError, IntegralTable, bundled, parse_fcidump, read_fcidump,
                            write_fcidump)

HEADER = "&FCI NORB=2, NELEC=2, MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n"


def test_minimal_file():
    t = parse_fcidump(HEADER + "0.5 0 0 0 0\n")
    assert t.core_energy == 0.5
    assert not t.one_body.any() and not t.two_body.any()
    assert (t.n_spatial, t.n_alpha, t.n_beta) == (2, 1, 1)


def test_two_body_symmetry_closure():
    t = parse_fcidump(HEADER + "1.25 1 1 1 1\n0.3 1 2 1 1\n")
    assert t.two_body[0, 0, 0, 0] == 1.25
    images = {(0, 1, 0, 0), (1, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0)}
    for idx in images:
        assert t.two_body[idx] == 0.3
    assert np.count_nonzero(t.two_body) == 5
    assert t.check_symmetry()


def test_one_body_symmetric():
    t = parse_fcidump(HEADER + "-0.7 2 1 0 0\n")
    assert t.one_body[0, 1] == t.one_body[1, 0] == -0.7


def test_round_trip_bundled():
    t = read_fcidump(bundled("h2o"))
    u = parse_fcidump(write_fcidump(t))
    assert u.core_energy == t.core_energy
    assert np.array_equal(u.one_body, t.one_body)
    assert np.array_equal(u.two_body, t.two_body)
    assert (u.n_spatial, u.n_electrons, u.ms2) == (t.n_spatial, t.n_electrons, t.ms2)


def test_round_trip_random(rng):
    t = IntegralTable.zeros(3, 2)
    h = rng.standard_normal((3, 3))
    t.one_body = h + h.T
    g = rng.standard_normal((3,) * 4)
    for p in [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)]:
        g = g + g.transpose(p)
    t.two_body = g
    t.core_energy = 1.5
    u = parse_fcidump(write_fcidump(t))
    assert np.array_equal(u.two_body, t.two_body) and np.array_equal(u.one_body, t.one_body)


@pytest.mark.parametrize("body, lineno", [("1.0 1 1\n", 5), ("abc 1 1 1 1\n", 5),
                                          ("1.0 3 1 1 1\n", 5)])
def test_errors_carry_line_numbers(body, lineno):
    with pytest.raises(FCIDUMPError) as exc:
        parse_fcidump(HEADER + body)
    assert exc.value.lineno == lineno


def test_missing_header():
    with pytest.raises(FCIDUMPError):
        parse_fcidump("1.0 1 1 1 1\n")


@pytest.mark.parametrize("name, norb, nelec", [("h2", 2, 2), ("h2o", 7, 10), ("nh3", 8, 10),
                                               ("c2", 10, 12), ("n2", 10, 14)])
def test_bundled_sizes(name, norb, nelec):
    t = read_fcidump(bundled(name))
    assert (t.n_spatial, t.n_electrons) == (norb, nelec)
    assert t.check_symmetry()


def test_bundled_missing():
    with pytest.raises(FileNotFoundError):
        bundled("no_such_molecule")

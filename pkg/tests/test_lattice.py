import numpy as np
import pytest

from tools.lattice import (
    SKT_EQ_T0,
    gk_derivation,
    gk_lattice,
    lattice_check,
    nilradical_derivation,
    skt_eq_lattice,
    skt_eq_lattice_basis,
    solve_gk_lattice_params,
)
from tools.almost_nilpotent import skt_eq_family
from utils.errors import ValidityError


def test_skt_lattice_in_dimension_four():
    L, certificate = skt_eq_lattice(2)
    assert L.dim == 4
    assert certificate.passed
    assert certificate.matrix == [[1, 0, 0], [0, 0, -1], [0, 1, 4]]
    assert certificate.t0 == pytest.approx(np.log(2.0 + np.sqrt(3.0)))
    assert certificate.determinant == pytest.approx(1.0)


@pytest.mark.parametrize("n", [3, 4])
def test_skt_lattice_rotations_close_up(n):
    _, certificate = skt_eq_lattice(n)
    assert certificate.passed
    M = np.array(certificate.matrix)
    assert M[:3, :3].tolist() == [[1, 0, 0], [0, 0, -1], [0, 1, 4]]
    assert np.array_equal(M[3:, 3:], np.eye(2 * n - 4, dtype=int))


def test_nilradical_derivation_of_skt_family():
    L, _ = skt_eq_family([])
    assert np.allclose(nilradical_derivation(L), np.diag([0.0, -1.0, 1.0]))


def test_zero_derivation_gives_identity():
    certificate = lattice_check(np.zeros((3, 3)), np.eye(3), 1.0)
    assert certificate.passed
    assert certificate.matrix == np.eye(3, dtype=int).tolist()
    assert certificate.deviation == 0.0


def test_non_integral_exponential_fails():
    certificate = lattice_check(np.diag([1.0, -1.0]), np.eye(2), 1.0)
    assert not certificate.passed
    assert certificate.determinant == pytest.approx(1.0)


def test_lattice_check_rejects_bad_bases():
    with pytest.raises(ValidityError):
        lattice_check(np.zeros((3, 3)), np.zeros((3, 3)), 1.0)
    with pytest.raises(ValidityError):
        lattice_check(np.zeros((3, 3)), np.eye(2), 1.0)
    with pytest.raises(ValidityError):
        skt_eq_lattice_basis(1)


def test_solve_gk_lattice_params():
    p, t0, q = solve_gk_lattice_params(2, 0)
    lam = np.exp(t0)
    assert lam == pytest.approx(2.2056, abs=1e-3)
    assert lam**3 - 2 * lam**2 - 1 == pytest.approx(0.0, abs=1e-9)
    assert 2 * lam ** (-0.5) * np.cos(p * t0) == pytest.approx(2 - lam)
    assert q * t0 == pytest.approx(2 * np.pi)


@pytest.mark.parametrize("m,n", [(0, 0), (1, 1), (5, 5)])
def test_solve_gk_lattice_params_without_solution(m, n):
    assert solve_gk_lattice_params(m, n) is None


@pytest.mark.parametrize("N", [4, 5])
def test_gk_lattice(N):
    certificate = gk_lattice(2, 0, N)
    assert certificate is not None
    assert certificate.passed
    M = np.array(certificate.matrix)
    assert M[:3, 2].tolist() == [1, 0, 2]
    assert np.array_equal(M[3:, 3:], np.eye(2 * N - 4, dtype=int))


def test_gk_derivation_needs_dimension_eight():
    with pytest.raises(ValidityError):
        gk_derivation(3, 0.0, 0.0)
    assert gk_derivation(4, 0.5, 1.0).shape == (7, 7)
    assert SKT_EQ_T0 > 0

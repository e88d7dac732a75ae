import numpy as np
import pytest

from tools.almost_nilpotent import streq_skt
from tools.hermitian import (
    AlmostComplexStructure,
    HermitianStructure,
    balanced_residual,
    bismut_ricci_oracle,
    kahler_residual,
    lee_form,
    ricci_tau,
    skt_residual,
    skt_residual_real,
    structure_search,
)
from tools.lie_core import LieAlgebra
from tools.multilinear import wedge, wedge_power
from utils.errors import ValidityError
from utils.utils import parse_structure_tuple


def from_pairs(dim, pairs):
    return AlmostComplexStructure.from_pairs(dim, [(i - 1, j - 1, s) for i, j, s in pairs]).matrix


@pytest.fixture
def s516():
    L = parse_structure_tuple("(f^{23}+f^{46}, f^{36}, -f^{26}, 0, 0, 0)")
    return HermitianStructure(L, from_pairs(6, [(1, 5, -1.0), (2, 3, 1.0), (4, 6, 1.0)]))


def test_almost_complex_structure_must_square_to_minus_one():
    with pytest.raises(ValidityError):
        AlmostComplexStructure(np.eye(4))
    with pytest.raises(ValidityError):
        AlmostComplexStructure(np.zeros((3, 3)))


def test_metric_must_be_hermitian(s47, perp_J):
    g = np.eye(6)
    g[1, 1] = 2.0
    with pytest.raises(ValidityError):
        HermitianStructure(s47, perp_J, g)


def test_nijenhuis_of_integrable_structure(s47, perp_J):
    _, residual = HermitianStructure(s47, perp_J).nijenhuis
    assert residual < 1e-12


def test_nijenhuis_of_generic_structure(s47, rng):
    P = rng.standard_normal((6, 6)) + 2 * np.eye(6)
    J = P @ AlmostComplexStructure.standard(6).matrix @ np.linalg.inv(P)
    H = HermitianStructure(s47, J, np.linalg.inv(P @ P.T))
    assert H.nijenhuis[1] > 1e-6
    with pytest.raises(ValidityError):
        skt_residual(H)


def test_skt_family_residuals():
    _, H = streq_skt(1.5, [1.0, 0.5])
    assert H.nijenhuis[1] < 1e-12
    assert skt_residual(H) < 1e-12
    assert skt_residual_real(H) < 1e-12
    assert balanced_residual(H) > 1e-6
    assert kahler_residual(H) > 1e-6


def test_balanced_structure_residuals(s516):
    assert balanced_residual(s516) < 1e-12
    assert s516.norm(lee_form(s516)) < 1e-12
    assert skt_residual(s516) > 1e-6
    assert skt_residual(s516) == pytest.approx(skt_residual_real(s516), rel=1e-9)


def test_kahler_structure():
    L = parse_structure_tuple("(f^{23}+1/2 f^{16}, -1/2 f^{26}, f^{36}, f^{56}, -f^{46}, 0)")
    H = HermitianStructure(L, from_pairs(6, [(1, 2, -1.0), (3, 6, 1.0), (4, 5, 1.0)]))
    assert H.nijenhuis[1] < 1e-12
    for residual in (kahler_residual, skt_residual, balanced_residual):
        assert residual(H) < 1e-12


def test_abelian_algebra_is_kahler():
    H = HermitianStructure(LieAlgebra.abelian(4), AlmostComplexStructure.standard(4).matrix)
    assert kahler_residual(H) == 0.0
    assert H.norm(lee_form(H)) == 0.0


def test_lee_form_defines_d_of_omega_power():
    L, H = streq_skt(2.0, [1.0, -0.3])
    top = wedge_power(H.omega, 2)
    lhs = L.d(top)
    rhs = wedge(lee_form(H), top)
    assert np.allclose(lhs.coefficients, rhs.coefficients, atol=1e-12)
    assert lee_form(H).to_dict() == pytest.approx({(5,): 2.0})


def test_bismut_ricci_of_skt_family():
    _, H = streq_skt(2.0, [1.0, 0.5])
    rho = ricci_tau(H, -1.0)
    assert rho[(1, 2)] == pytest.approx(-4.0, abs=1e-12)
    assert rho.to_dict(1e-12).keys() == {(1, 2)}


@pytest.mark.parametrize("c,b", [(2.0, [1.0, 0.5]), (-0.5, [0.0, 3.0])])
def test_ricci_agrees_with_curvature_oracle(c, b):
    _, H = streq_skt(c, b)
    difference = ricci_tau(H, -1.0) - bismut_ricci_oracle(H)
    assert H.norm(difference) < 1e-8


def test_ricci_oracle_with_nontrivial_metric(s47, perp_J):
    g = np.eye(6)
    g[0, 0] = g[5, 5] = 3.0
    H = HermitianStructure(s47, perp_J, g)
    assert H.norm(ricci_tau(H, -1.0) - bismut_ricci_oracle(H)) < 1e-8


def test_structure_search_on_abelian_algebra():
    first = structure_search(LieAlgebra.abelian(4), "skt", restarts=2, iters=20, seed=3)
    second = structure_search(LieAlgebra.abelian(4), "skt", restarts=2, iters=20, seed=3)
    assert first.structure is not None
    assert first.residual < 1e-6
    assert first.residual == second.residual


def test_structure_search_rejects_odd_dimension(s47):
    with pytest.raises(ValidityError):
        structure_search(LieAlgebra.abelian(3), "skt")
    with pytest.raises(ValidityError):
        structure_search(s47, "kahler")

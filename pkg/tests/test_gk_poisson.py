import numpy as np
import pytest

from tools.gk_poisson import (
    Bivector20,
    ComplexifiedAlgebra,
    commutator_bivector,
    dbar_kernel,
    gk_family,
    gk_residual,
    holomorphic_poisson_space,
    is_split,
    membership_residual,
    poisson_candidate,
    poisson_residual,
    streq6,
)
from tools.almost_nilpotent import pair_complex_structure
from tools.lie_core import LieAlgebra
from utils.errors import ValidityError


@pytest.mark.parametrize("p,q", [(0.0, 0.0), (0.3, 1.0), (-2.0, 0.5)])
def test_gk_family_is_generalized_kahler(p, q):
    S = gk_family(4, p, q)
    assert S.algebra.jacobi_residual() < 1e-12
    assert gk_residual(S) < 1e-10


def test_gk_family_torsion():
    H = gk_family(4, 0.3, 1.0).torsion()
    assert H["plus"].to_dict(1e-10) == pytest.approx({(0, 1, 2): -1.0})
    assert (H["plus"] + H["minus"]).norm() < 1e-10


def test_gk_family_is_not_split():
    split, K = is_split(gk_family(4, 1.0, 1.0))
    assert not split
    assert np.abs(K).max() > 1.0


def test_commutator_bivector():
    pi = commutator_bivector(gk_family(4, 0.0, 1.0))
    assert pi.to_dict(1e-10) == pytest.approx({(3, 5): -2.0, (4, 6): -2.0})


@pytest.mark.parametrize("n", [4, 5])
def test_poisson_candidate_is_holomorphic_poisson(n):
    S = gk_family(n, 0.5, 2.0)
    sigma = poisson_candidate(S)
    dbar, schouten = poisson_residual(ComplexifiedAlgebra(S.algebra, S.J_plus), sigma)
    assert sigma.norm() > 1e-6
    assert dbar < 1e-9
    assert schouten < 1e-9


def test_gk_family_needs_dimension_eight():
    with pytest.raises(ValidityError):
        gk_family(3, 0.0, 0.0)


def test_complexified_abelian_algebra():
    C = ComplexifiedAlgebra(LieAlgebra.abelian(4), np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]))
    assert C.is_integrable
    kernel = dbar_kernel(C)
    assert kernel.shape == (1, 1)
    assert len(holomorphic_poisson_space(C)) == 1
    assert membership_residual(kernel, Bivector20(2, 2, [1.0])) < 1e-12


def test_dimension_mismatch_raises():
    with pytest.raises(ValidityError):
        ComplexifiedAlgebra(LieAlgebra.abelian(4), np.eye(2))


@pytest.mark.parametrize(
    "b1,b2,nontrivial",
    [(0.0, 0.0, True), (1.0, 0.0, True), (0.0, 2.0, True), (1.0, 2.0, False), (1.0, -1.0, False)],
)
def test_streq6_holomorphic_bivectors(b1, b2, nontrivial):
    L, H = streq6(1.0, b1, b2)
    kernel = dbar_kernel(ComplexifiedAlgebra(L, H.J))
    assert (kernel.shape[1] > 0) == nontrivial


def complex_affine_plus_line():
    """aff(C) + C as a real Lie algebra: [Z1, Z2] = Z2 with e_{2k-1} = Z_k, e_{2k} = i Z_k."""
    C = np.zeros((6, 6, 6))
    for i, j, k, value in [(0, 2, 2, 1.0), (0, 3, 3, 1.0), (1, 2, 3, 1.0), (1, 3, 2, -1.0)]:
        C[i, j, k], C[j, i, k] = value, -value
    return ComplexifiedAlgebra(LieAlgebra(C, name="aff(C)+C"), pair_complex_structure(6))


def assert_poisson_directions(C, space, expected):
    for sigma in space:
        assert poisson_residual(C, sigma)[1] < 1e-9
    for target in expected:
        overlaps = [abs(np.vdot(sigma.coefficients, target)) / np.linalg.norm(sigma.coefficients) for sigma in space]
        assert max(overlaps) == pytest.approx(1.0, abs=1e-9)


def test_poisson_space_does_not_depend_on_kernel_basis():
    C = complex_affine_plus_line()
    assert dbar_kernel(C).shape == (3, 3)
    Z12, Z13, Z23 = np.eye(3)
    rotated = np.column_stack([(Z12 + Z13) / np.sqrt(2.0), (Z12 - 1j * Z13) / np.sqrt(2.0), Z23])
    for kernel in (None, rotated):
        space = holomorphic_poisson_space(C, kernel=kernel)
        assert len(space) == 3
        assert_poisson_directions(C, space, [Z12, Z13, Z23])


def test_mixed_bivector_is_not_poisson():
    C = complex_affine_plus_line()
    _, schouten = poisson_residual(C, Bivector20(3, 2, [1.0, 1.0, 0.0]))
    assert schouten > 1.0

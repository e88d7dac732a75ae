import numpy as np
import pytest
import sympy as sp

from tools.lie_core import (
    Derivation,
    LieAlgebra,
    ad_spectrum_type_I,
    check_ideal,
    descending_central_series,
    is_strongly_unimodular,
    is_unimodular,
    matrix_exp,
    semidirect_extend,
    symplectic_probe,
)
from tools.multilinear import KForm
from utils.errors import ValidityError
from utils.utils import parse_structure_tuple


def heisenberg3() -> LieAlgebra:
    # [f_2, f_3] = -f_1, i.e. df^1 = f^{23}
    return LieAlgebra.from_structure_equations([{(1, 2): 1}, {}, {}], name="h3")


def test_structure_equations_round_trip_through_d(s47):
    df = s47.structure_equations()
    assert df[0].to_dict() == {(1, 2): 1.0}
    assert df[1].to_dict() == {(2, 5): 1.0}
    assert df[2].to_dict() == {(1, 5): -1.0}
    assert all(df[k].is_zero() for k in range(3, 6))


def test_bracket_convention():
    h3 = heisenberg3()
    assert np.allclose(h3.bracket(np.eye(3)[1], np.eye(3)[2]), [-1.0, 0.0, 0.0])


def test_jacobi_residual_zero_for_lie_algebras(s47):
    assert s47.jacobi_residual() < 1e-14
    assert s47.exact_jacobi()


def test_jacobi_failure_is_rejected():
    # [e1, e2] = e3, [e2, e3] = e1, [e1, e3] = e1 violates Jacobi
    C = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (0, 2, 0)]:
        C[i, j, k], C[j, i, k] = 1.0, -1.0
    with pytest.raises(ValidityError):
        LieAlgebra(C)
    assert LieAlgebra(C, check=False).jacobi_residual() > 0.1


def test_non_antisymmetric_constants_rejected():
    C = np.zeros((2, 2, 2))
    C[0, 1, 0] = 1.0
    with pytest.raises(ValidityError):
        LieAlgebra(C)


def test_exact_jacobi_with_symbolic_coefficients():
    L = parse_structure_tuple("(f^{23}, sqrt(2) f^{36}, -sqrt(2) f^{26}, 0, 0, 0)")
    assert L.exact is not None
    assert all(isinstance(v, sp.Basic) for v in L.exact.values())
    assert L.exact_jacobi()


def test_d_squared_vanishes(s47, rng):
    for k in range(1, 5):
        sigma = KForm(6, k, rng.standard_normal(KForm(6, k).coefficients.shape))
        assert s47.d(s47.d(sigma)).is_zero(1e-10)


def test_unimodularity(s47):
    ok, worst = is_unimodular(s47)
    assert ok and worst < 1e-12
    L = parse_structure_tuple("(f^{23}+1/2 f^{16}, -1/2 f^{26}, f^{36}, 0, 0, 0)")
    ok, worst = is_unimodular(L)
    assert not ok


def test_strong_unimodularity_on_catalog_algebra(s47):
    ok, worst = is_strongly_unimodular(s47, np.eye(6)[:, :5])
    assert ok and worst < 1e-9


def test_unimodular_but_not_strongly_unimodular():
    # ad_{f6} = diag(1, 1, 0, -2, 0): trace -1 on n / n^1 and 1 on n^1 = span(f1)
    L = parse_structure_tuple("(f^{16} + f^{23}, f^{26}, 0, -2f^{46}, 0, 0)")
    assert is_unimodular(L)[0]
    ok, worst = is_strongly_unimodular(L, np.eye(6)[:, :5])
    assert not ok and worst == pytest.approx(1.0)


def test_check_ideal():
    h3 = heisenberg3()
    assert check_ideal(h3, np.eye(3)[:, [0]]) < 1e-12
    with pytest.raises(ValidityError):
        check_ideal(h3, np.eye(3)[:, [1]])


def test_descending_central_series_of_h3_plus_r2(s47):
    series = descending_central_series(s47, np.eye(6)[:, :5])
    assert series.dims == [5, 1, 0]
    assert series.is_nilpotent


def test_derivation_and_semidirect_extension():
    h3 = heisenberg3()
    D = np.diag([0.0, 1.0, -1.0])
    Derivation(h3, D)
    with pytest.raises(ValidityError):
        Derivation(h3, np.diag([1.0, 0.0, 0.0]))
    L = semidirect_extend(h3, D)
    assert L.dim == 4
    assert np.allclose(L.ad(np.eye(4)[3])[:3, :3], D)
    assert L.jacobi_residual() < 1e-12


def test_type_I_spectrum(s47):
    assert ad_spectrum_type_I(s47)
    L = parse_structure_tuple("(f^{23}, f^{26}, -f^{36}, 0, 0, 0)")
    assert not ad_spectrum_type_I(L)


def test_matrix_exp_of_rotation():
    t = 0.3
    R = matrix_exp(np.array([[0.0, -t], [t, 0.0]]))
    assert np.allclose(R, [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


def test_change_basis_preserves_jacobi(s47, rng):
    P = rng.standard_normal((6, 6)) + 3 * np.eye(6)
    L = s47.change_basis(P)
    assert L.jacobi_residual() < 1e-8


def test_symplectic_probe_on_abelian_algebra():
    sigma = symplectic_probe(LieAlgebra.abelian(4))
    assert sigma is not None
    assert abs(np.linalg.det(sigma.to_matrix())) > 0.5

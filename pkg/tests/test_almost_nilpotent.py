import numpy as np
import pytest
from pydantic import ValidationError

from models.model import Case1Data, Case2Data, ReducedCase2Data, ReducedSktCase1
from tools.almost_nilpotent import (
    balanced_case1,
    balanced_case2,
    balanced_case2_bcpq,
    build_case1,
    build_case2,
    domega_case1,
    integrable_case1,
    kahler_case1,
    kahler_sub_family,
    lee_form_case1,
    lee_form_case2,
    mu_A_c,
    reduced_case2_constraints,
    rotation_blocks,
    skt_case1,
    skt_case2_abelian_k3,
    skt_case2_dim6,
    skt_eq_family,
    skt_eq_normal_form,
    streq_skt,
    strongly_unimodular_case1,
)
from tools.hermitian import (
    balanced_residual,
    kahler_residual,
    lee_form,
    skt_residual,
)
from utils.errors import ValidityError


def perp_data(c=1.0, b=(1.0, 2.0)):
    k = 2 * len(b)
    E = np.zeros((k, k))
    E[0, 1], E[1, 0] = c, -c
    return Case1Data(n=len(b) + 1, A=rotation_blocks(b).tolist(), eta=E.tolist())


def test_case1_rejects_invalid_derivation():
    eta = [[0.0, 1.0], [-1.0, 0.0]]
    with pytest.raises(ValidityError):
        build_case1(Case1Data(n=2, a=0.0, A=[[1.0, 0.0], [0.0, 0.0]], eta=eta))
    L, H = build_case1(Case1Data(n=2, a=1.0, A=[[1.0, 0.0], [0.0, 0.0]], eta=eta))
    assert L.jacobi_residual() < 1e-12
    assert H.dim == 4


def test_case1_data_validation():
    with pytest.raises(ValidationError):
        Case1Data(n=2, eta=[[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValidationError):
        Case1Data(n=2, eta=[[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValidationError):
        ReducedSktCase1(n=2, c=0.0)
    with pytest.raises(ValidationError):
        ReducedSktCase1(n=2, A=[[1.0, 0.0], [0.0, -1.0]], c=1.0)


def test_case1_predicates_on_skt_family():
    d = perp_data()
    assert integrable_case1(d)
    assert skt_case1(d)
    assert not kahler_case1(d)
    assert not balanced_case1(d)
    assert strongly_unimodular_case1(d)


def test_case1_predicates_agree_with_general_checks():
    d = perp_data(c=2.0, b=(1.0, 0.5))
    _, H = build_case1(d)
    assert skt_residual(H) < 1e-9
    assert kahler_residual(H) > 1e-6
    assert balanced_residual(H) > 1e-6


def test_non_integrable_case1_raises():
    d = perp_data()
    d.beta = [1.0, 0.0, 0.0, 0.0]
    assert not integrable_case1(d)
    with pytest.raises(ValidityError):
        skt_case1(d)


def test_lee_form_case1_matches_general_lee_form():
    d = perp_data(c=3.0)
    _, H = build_case1(d)
    closed = lee_form_case1(d)
    assert closed.to_dict() == pytest.approx({(5,): 3.0})
    assert (closed - lee_form(H)).norm() < 1e-10


def test_domega_case1_matches_differential():
    d = perp_data(c=1.5, b=(0.3, -2.0))
    L, H = build_case1(d)
    assert (L.d(H.omega) - domega_case1(d)).norm() < 1e-10


def test_streq_skt_is_mu_A_c():
    L, _ = streq_skt(2.0, [1.0])
    M, _ = mu_A_c(ReducedSktCase1(n=2, A=rotation_blocks([1.0]).tolist(), c=2.0))
    assert L.name == "skt-perp-family"
    assert np.allclose(L.constants, M.constants)


def test_case2_lie_condition_violation_is_named():
    with pytest.raises(ValidityError, match="Lie2"):
        build_case2(Case2Data(n=2, a=1.0, lam=1.0))
    with pytest.raises(ValidityError):
        build_case2(Case2Data(n=2, a=1.0))
    L, _ = build_case2(Case2Data(n=2, a=1.0, a1=1.0, lam=1.0))
    assert L.jacobi_residual() < 1e-12


def test_skt_case2_abelian_k3():
    assert skt_case2_abelian_k3(Case2Data(n=2, a=1.0, a2=-1.0, lam=-1.0))
    assert not skt_case2_abelian_k3(Case2Data(n=2, a=1.0, a2=-0.5, lam=-0.5))
    with pytest.raises(ValidityError):
        skt_case2_abelian_k3(Case2Data(n=2, a=1.0, a2=-1.0, lam=0.0))


def test_skt_normal_form_in_dimension_four():
    normal, P, b = skt_eq_normal_form(Case2Data(n=2, a=1.0, a2=-1.0, lam=-1.0))
    family, _ = skt_eq_family([])
    assert b == []
    assert np.allclose(normal.constants, family.constants)


def test_skt_sub_family_is_skt():
    _, H = skt_eq_family([])
    assert skt_residual(H) < 1e-9


def test_kahler_sub_family_is_kahler():
    L, H = kahler_sub_family([])
    assert L.jacobi_residual() < 1e-12
    assert kahler_residual(H) < 1e-9


@pytest.mark.parametrize("b,c,p,q", [(1.0, 1.0, 0.0, 0.0), (1.0, 1.0, 1.0, 0.0), (0.5, 2.0, 0.0, 1.0)])
def test_balanced_case2_model(b, c, p, q):
    data = Case2Data(
        n=3,
        v1=-c,
        alpha=[p, q],
        gamma=[-q, p],
        A=[[0.0, b], [-b, 0.0]],
        xi=[[0.0, c], [-c, 0.0]],
        allow_zero_eta=True,
    )
    assert balanced_case2(data)
    assert lee_form_case2(data).is_zero(1e-12)
    L, H = balanced_case2_bcpq(b, c, p, q)
    assert L.jacobi_residual() < 1e-10
    assert lee_form(H).norm() < 1e-9
    assert balanced_residual(H) < 1e-9


def test_reduced_case2():
    r = ReducedCase2Data(a=1.0, a2=1.0)
    assert reduced_case2_constraints(r)["Lie2"] == pytest.approx(2.0)
    assert skt_case2_dim6(r) == (False, None)
    assert skt_case2_dim6(ReducedCase2Data(a=1.0, a2=-1.0)) == (True, "sub1")
    with pytest.raises(ValidationError):
        ReducedCase2Data(v=[1.0])

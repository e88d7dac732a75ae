import numpy as np
import pytest

from tools.multilinear import (
    KForm,
    Metric,
    contract,
    form_inner,
    form_trace,
    fundamental_form,
    hodge_star,
    wedge,
    wedge_power,
)
from tools.hermitian import AlmostComplexStructure
from utils.errors import ValidityError

from conftest import random_spd


def e(n, *indices):
    return KForm.basis(n, indices)


def random_form(rng, n, k):
    return KForm(n, k, rng.standard_normal(KForm(n, k).coefficients.shape))


def test_wedge_of_basis_one_forms():
    assert wedge(e(4, 0), e(4, 1)).to_dict() == {(0, 1): 1.0}
    assert wedge(e(4, 1), e(4, 0)).to_dict() == {(0, 1): -1.0}


def test_wedge_with_repeated_index_vanishes():
    assert wedge(e(4, 0, 1), e(4, 0, 1)).is_zero()


def test_wedge_of_two_planes():
    sigma = wedge(e(6, 1, 2), e(6, 3, 4))
    assert sigma.to_dict() == {(1, 2, 3, 4): 1.0}


def test_wedge_above_top_degree_is_zero():
    assert wedge(e(4, 0, 1, 2), e(4, 2, 3)).degree == 5
    assert wedge(e(4, 0, 1, 2), e(4, 2, 3)).coefficients.size == 0


def test_wedge_dimension_mismatch():
    with pytest.raises(ValidityError):
        wedge(e(4, 0), e(6, 0))


@pytest.mark.parametrize("p,q", [(1, 1), (1, 2), (2, 2), (2, 3)])
def test_wedge_graded_commutative(rng, p, q):
    alpha, beta = random_form(rng, 6, p), random_form(rng, 6, q)
    lhs = wedge(alpha, beta).coefficients
    rhs = (-1) ** (p * q) * wedge(beta, alpha).coefficients
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_hodge_star_of_constants_and_planes():
    g = Metric.identity(4)
    assert hodge_star(KForm(4, 0, [1.0]), g).to_dict() == {(0, 1, 2, 3): 1.0}
    assert hodge_star(e(4, 0, 1), g).to_dict() == {(2, 3): 1.0}


@pytest.mark.parametrize("n", [4, 6, 8])
def test_hodge_involution_sign(rng, n):
    g = Metric(random_spd(rng, n))
    for k in range(n + 1):
        sigma = random_form(rng, n, k)
        twice = hodge_star(hodge_star(sigma, g), g)
        assert np.allclose(twice.coefficients, (-1) ** (k * (n - k)) * sigma.coefficients, atol=1e-9)


def test_degenerate_metric_is_rejected():
    with pytest.raises(ValidityError):
        Metric(np.diag([1.0, 1.0, 0.0, 1.0]))


def test_form_inner_normalization():
    g = Metric.identity(6)
    assert form_inner(e(6, 0, 1), e(6, 0, 1), g) == pytest.approx(1.0)
    omega = e(6, 0, 5) + e(6, 1, 2) + e(6, 3, 4)
    assert form_inner(omega, e(6, 0, 5), g) == pytest.approx(1.0)
    assert form_inner(omega, 2.5 * e(6, 1, 2), g) == pytest.approx(2.5)


def test_form_inner_degree_mismatch():
    with pytest.raises(ValidityError):
        form_inner(e(4, 0), e(4, 0, 1), Metric.identity(4))


def test_form_trace_over_pairs():
    J = AlmostComplexStructure.from_pairs(6, [(0, 5, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).matrix
    g = Metric.identity(6)
    b1, b2 = 0.7, -1.9
    assert form_trace(b1 * e(6, 1, 2) + b2 * e(6, 3, 4), J, g) == pytest.approx(b1 + b2)
    assert form_trace(fundamental_form(J, g), J, g) == pytest.approx(3.0)
    assert form_trace(e(6, 1, 3), J, g) == pytest.approx(0.0)


def test_contract_is_adjoint_of_wedge(rng):
    n = 6
    g = Metric(random_spd(rng, n))
    for p in (0, 1, 2):
        psi = random_form(rng, n, p)
        sigma = random_form(rng, n, p + 2)
        beta = random_form(rng, n, 2)
        lhs = form_inner(contract(psi, sigma, g), beta, g)
        rhs = form_inner(sigma, wedge(psi, beta), g)
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_contract_by_one_is_identity(rng):
    sigma = random_form(rng, 6, 2)
    out = contract(KForm(6, 0, [1.0]), sigma, Metric.identity(6))
    assert np.allclose(out.coefficients, sigma.coefficients)


def test_contract_of_power_is_proportional_to_omega():
    J = AlmostComplexStructure.standard(6).matrix
    g = Metric.identity(6)
    omega = fundamental_form(J, g)
    out = contract(omega, wedge_power(omega, 2), g)
    ratio = form_inner(out, omega, g) / form_inner(omega, omega, g)
    assert np.allclose(out.coefficients, ratio * omega.coefficients, atol=1e-12)


def test_contract_degree_mismatch():
    with pytest.raises(ValidityError):
        contract(e(4, 0, 1, 2), e(4, 0, 1), Metric.identity(4))

"""Model almost nilpotent Hermitian Lie algebras n x_B R with dim [n, n] = 1.

Case 1 (J n^1 orthogonal to n): basis e_1, k1 = span(e_2..e_{2n-1}), e_{2n}, with
Je_1 = e_{2n} and Je_{2l} = e_{2l+1}. Case 2 (J n^1 inside n): basis e_1, e_2,
k3 = span(e_3..e_{2n-2}), e_{2n-1}, e_{2n}, with Je_{2l-1} = e_{2l}. In both cases
[e_{2n}, X] = BX on n, [Y, Z] = -eta(Y, Z) e_1, and g is the identity.

Local matrices on k1, k2 = span(e_2..e_{2n-1}) and k3 are stored in the adapted basis;
the builders embed them.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from models.model import Case1Data, Case2Data, ReducedCase2Data, ReducedSktCase1
from tools.hermitian import AlmostComplexStructure, HermitianStructure
from tools.lie_core import LieAlgebra, semidirect_extend
from tools.multilinear import KForm, wedge
from utils.errors import ValidityError

logger = logging.getLogger(__name__)

TOL = 1e-9


def pair_complex_structure(m: int) -> np.ndarray:
    """Standard J on an even-dimensional block: e_{2i} -> e_{2i+1} (0-based)."""
    J = np.zeros((m, m))
    for i in range(m // 2):
        J[2 * i + 1, 2 * i] = 1.0
        J[2 * i, 2 * i + 1] = -1.0
    return J


def rotation_blocks(b: Sequence[float]) -> np.ndarray:
    """diag(C_{b_1}, ..., C_{b_k}) with C_b = [[0, b], [-b, 0]]."""
    out = np.zeros((2 * len(b), 2 * len(b)))
    for l, value in enumerate(b):
        out[2 * l, 2 * l + 1] = value
        out[2 * l + 1, 2 * l] = -value
    return out


def form_action(M: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """M^* sigma = sigma(M., .) + sigma(., M.) for a 2-form given by its matrix."""
    return M.T @ sigma + sigma @ M


def _embed_matrix(local: np.ndarray, indices: Sequence[int], dim: int) -> np.ndarray:
    out = np.zeros((dim, dim))
    idx = np.asarray(indices, dtype=int)
    out[np.ix_(idx, idx)] = local
    return out


def _embed_vector(local: np.ndarray, indices: Sequence[int], dim: int) -> np.ndarray:
    out = np.zeros(dim)
    out[np.asarray(indices, dtype=int)] = local
    return out


def _e(dim: int, *indices: int) -> KForm:
    return KForm.basis(dim, indices)


def _check_zero(residual: np.ndarray, tol: float) -> bool:
    return float(np.abs(residual).max(initial=0.0)) < tol


# Case 1


def _case1_indices(n: int) -> List[int]:
    return list(range(1, 2 * n - 1))


def case1_complex_structure(n: int) -> AlmostComplexStructure:
    N = 2 * n
    pairs = [(0, N - 1, 1.0)] + [(2 * l - 1, 2 * l, 1.0) for l in range(1, n)]
    return AlmostComplexStructure.from_pairs(N, pairs)


def case1_validity_residual(d: Case1Data) -> np.ndarray:
    """A^* eta - a eta on k1."""
    return form_action(d.A_matrix, d.eta_matrix) - d.a * d.eta_matrix


def case1_derivation(d: Case1Data) -> np.ndarray:
    """B = [[a, beta], [0, A]] on n = span(e_1, ..., e_{2n-1})."""
    k = d.k1_dim
    B = np.zeros((k + 1, k + 1))
    B[0, 0] = d.a
    B[0, 1:] = d.beta_vector
    B[1:, 1:] = d.A_matrix
    return B


def build_case1(d: Case1Data, tol: float = 1e-10) -> Tuple[LieAlgebra, HermitianStructure]:
    """Lie algebra mu(a, beta, A, eta) with its model Hermitian structure.

    Raises:
        ValidityError: if A^* eta != a eta.
    """
    residual = case1_validity_residual(d)
    worst = float(np.abs(residual).max(initial=0.0))
    if worst > tol:
        raise ValidityError(f"A^*eta = a eta violated (residual {worst:.3e})")
    N = 2 * d.n
    constants = np.zeros((N - 1, N - 1, N - 1))
    constants[1:, 1:, 0] = -d.eta_matrix
    nil = LieAlgebra(constants, name="n", tol=tol)
    L = semidirect_extend(nil, case1_derivation(d), name="mu(a,beta,A,eta)", tol=tol)
    return L, HermitianStructure(L, case1_complex_structure(d.n))


def integrable_case1(d: Case1Data, tol: float = TOL) -> bool:
    """[A, J|k1] = 0, beta = 0 and eta of type (1,1)."""
    Jk = pair_complex_structure(d.k1_dim)
    A, E = d.A_matrix, d.eta_matrix
    return (
        _check_zero(A @ Jk - Jk @ A, tol)
        and _check_zero(d.beta_vector, tol)
        and _check_zero(Jk.T @ E @ Jk - E, tol)
    )


def _require_integrable_case1(d: Case1Data) -> None:
    if not integrable_case1(d):
        raise ValidityError("Case-1 data do not define an integrable J")


def _k1_omega(d: Case1Data) -> np.ndarray:
    return pair_complex_structure(d.k1_dim).T


def skt_case1(d: Case1Data, tol: float = TOL) -> bool:
    """eta^2 = eta ^ A^*omega and (aA + A^2 + A^t A)^* omega = 2 a eta."""
    _require_integrable_case1(d)
    A, E, omega = d.A_matrix, d.eta_matrix, _k1_omega(d)
    eta = KForm.from_matrix(E)
    first = wedge(eta, eta) - wedge(eta, KForm.from_matrix(form_action(A, omega)))
    second = form_action(d.a * A + A @ A + A.T @ A, omega) - 2 * d.a * E
    return first.norm() < tol and _check_zero(second, tol)


def kahler_case1(d: Case1Data, tol: float = TOL) -> bool:
    """eta = A^* omega."""
    _require_integrable_case1(d)
    return _check_zero(d.eta_matrix - form_action(d.A_matrix, _k1_omega(d)), tol)


def eta_trace(E: np.ndarray) -> float:
    """<eta, omega> for the standard pairs e_{2i} -> e_{2i+1} of a local block."""
    return float(sum(E[2 * i, 2 * i + 1] for i in range(E.shape[0] // 2)))


def balanced_case1(d: Case1Data, tol: float = TOL) -> bool:
    """tr A = tr eta."""
    _require_integrable_case1(d)
    return abs(np.trace(d.A_matrix) - eta_trace(d.eta_matrix)) < tol


def lee_form_case1(d: Case1Data) -> KForm:
    """(tr eta - tr A) e^{2n}, for beta = 0."""
    N = 2 * d.n
    return _e(N, N - 1) * (eta_trace(d.eta_matrix) - np.trace(d.A_matrix))


def domega_case1(d: Case1Data) -> KForm:
    """(eta - A^* omega) ^ e^{2n}."""
    N = 2 * d.n
    local = d.eta_matrix - form_action(d.A_matrix, _k1_omega(d))
    sigma = KForm.from_matrix(_embed_matrix(local, _case1_indices(d.n), N))
    return wedge(sigma, _e(N, N - 1))


def strongly_unimodular_case1(d: Case1Data, tol: float = TOL) -> bool:
    return abs(d.a) < tol and abs(np.trace(d.A_matrix)) < tol


def mu_A_c(datum: ReducedSktCase1) -> Tuple[LieAlgebra, HermitianStructure]:
    """Case-1 SKT datum with a = 0, beta = 0 and eta = c e^{23}."""
    k = 2 * datum.n - 2
    E = np.zeros((k, k))
    E[0, 1], E[1, 0] = datum.c, -datum.c
    return build_case1(Case1Data(n=datum.n, A=datum.A, eta=E.tolist()))


def streq_skt(c: float, b: Sequence[float]) -> Tuple[LieAlgebra, HermitianStructure]:
    """df^1 = c f^{23}, df^{2l} = b_l f^{2l+1,2n}, df^{2l+1} = -b_l f^{2l,2n}, l = 1..n-1."""
    n = len(b) + 1
    L, H = mu_A_c(ReducedSktCase1(n=n, A=rotation_blocks(b).tolist(), c=c))
    L.name = "skt-perp-family"
    return L, H


# Case 2


def _k3_indices(n: int) -> List[int]:
    return list(range(2, 2 * n - 2))


def _k2_indices(n: int) -> List[int]:
    return list(range(1, 2 * n - 1))


def case2_complex_structure(n: int) -> AlmostComplexStructure:
    return AlmostComplexStructure.standard(2 * n)


def case2_derivation(d: Case2Data) -> np.ndarray:
    """B on n = e_1 + e_2 + k3 + e_{2n-1}, columns are images."""
    m = d.k3_dim
    k3 = slice(2, 2 + m)
    last = m + 2
    B = np.zeros((m + 3, m + 3))
    B[0, :] = np.concatenate([[d.a1, d.p1], d.vec("alpha"), [d.v1]])
    B[1, :] = np.concatenate([[0.0, d.a2], d.vec("gamma"), [d.v2]])
    B[k3, 1] = d.vec("w")
    B[k3, k3] = d.mat("A")
    B[k3, last] = d.vec("v")
    B[last, :] = np.concatenate([[0.0, d.p2], d.vec("beta"), [d.a]])
    return B


def case2_eta(d: Case2Data) -> np.ndarray:
    """eta = xi + delta ^ e^2 + nu ^ e^{2n-1} + lam e^{2,2n-1} on k2."""
    m = d.k3_dim
    E = np.zeros((m + 2, m + 2))
    E[1 : m + 1, 1 : m + 1] = d.mat("xi")
    E[1 : m + 1, 0] = d.vec("delta")
    E[0, 1 : m + 1] = -d.vec("delta")
    E[1 : m + 1, m + 1] = d.vec("nu")
    E[m + 1, 1 : m + 1] = -d.vec("nu")
    E[0, m + 1] = d.lam
    E[m + 1, 0] = -d.lam
    return E


def case2_lie_residuals(d: Case2Data) -> Dict[str, float]:
    """Blocks of B^* eta - a1 eta on k2, one per Lie condition.

    Lie1 pairs e_2 with k3, Lie2 is the (e_2, e_{2n-1}) entry, Lie3 is k3 x k3 and Lie4
    pairs k3 with e_{2n-1}.
    """
    m = d.k3_dim
    B2 = case2_derivation(d)[1:, 1:]
    E = case2_eta(d)
    R = form_action(B2, E) - d.a1 * E
    k3 = slice(1, m + 1)
    return {
        "Lie1": float(np.abs(R[k3, 0]).max(initial=0.0)),
        "Lie2": float(abs(R[0, m + 1])),
        "Lie3": float(np.abs(R[k3, k3]).max(initial=0.0)),
        "Lie4": float(np.abs(R[k3, m + 1]).max(initial=0.0)),
    }


def build_case2(d: Case2Data, tol: float = 1e-10) -> Tuple[LieAlgebra, HermitianStructure]:
    """Lie algebra mu(Xi) with its model Hermitian structure.

    Raises:
        ValidityError: naming every violated Lie condition, or if eta = 0.
    """
    E = case2_eta(d)
    if not d.allow_zero_eta and np.abs(E).max(initial=0.0) < 1e-14:
        raise ValidityError("eta must be nonzero (dim n^1 = 1)")
    violated = {k: v for k, v in case2_lie_residuals(d).items() if v > tol}
    if violated:
        detail = ", ".join(f"{k} residual {v:.3e}" for k, v in violated.items())
        raise ValidityError(f"Case-2 data violate {', '.join(violated)}: {detail}")
    N = 2 * d.n
    constants = np.zeros((N - 1, N - 1, N - 1))
    constants[1:, 1:, 0] = -E
    nil = LieAlgebra(constants, name="n", tol=tol)
    L = semidirect_extend(nil, case2_derivation(d), name="mu(Xi)", tol=tol)
    return L, HermitianStructure(L, case2_complex_structure(d.n))


def _J3(d: Case2Data) -> np.ndarray:
    return pair_complex_structure(d.k3_dim)


def integrable_case2(d: Case2Data, tol: float = TOL) -> bool:
    """p1 = p2 = 0, beta = delta = 0, lam = a2 - a1, [A, J] = 0, w = 0, nu = gamma - J alpha."""
    J3 = _J3(d)
    A = d.mat("A")
    return (
        abs(d.p1) < tol
        and abs(d.p2) < tol
        and _check_zero(d.vec("beta"), tol)
        and _check_zero(d.vec("delta"), tol)
        and abs(d.lam - (d.a2 - d.a1)) < tol
        and _check_zero(A @ J3 - J3 @ A, tol)
        and _check_zero(d.vec("w"), tol)
        and _check_zero(d.vec("nu") - d.vec("gamma") + J3 @ d.vec("alpha"), tol)
    )


def _require_integrable_case2(d: Case2Data) -> None:
    if not integrable_case2(d):
        raise ValidityError("Case-2 data do not define an integrable J")


def kahler_case2(d: Case2Data, tol: float = TOL) -> bool:
    _require_integrable_case2(d)
    A = d.mat("A")
    return (
        abs(d.a) > tol
        and abs(d.a1 - d.a / 2) < tol
        and abs(d.a2 + d.a / 2) < tol
        and abs(d.v1) < tol
        and abs(d.v2) < tol
        and _check_zero(d.vec("v"), tol)
        and _check_zero(d.vec("alpha"), tol)
        and _check_zero(d.vec("gamma"), tol)
        and _check_zero(d.mat("xi"), tol)
        and _check_zero(A + A.T, tol)
    )


def balanced_case2(d: Case2Data, tol: float = TOL) -> bool:
    """v1 = -tr xi, v2 = 0, v = 0, tr A = -a1 - a2."""
    _require_integrable_case2(d)
    return (
        abs(d.v1 + eta_trace(d.mat("xi"))) < tol
        and abs(d.v2) < tol
        and _check_zero(d.vec("v"), tol)
        and abs(np.trace(d.mat("A")) + d.a1 + d.a2) < tol
    )


def lee_form_case2(d: Case2Data) -> KForm:
    """-v2 e^1 + (v1 + tr xi) e^2 + (Jv)^flat - (a1 + a2 + tr A) e^{2n}."""
    N = 2 * d.n
    theta = np.zeros(N)
    theta[0] = -d.v2
    theta[1] = d.v1 + eta_trace(d.mat("xi"))
    theta[_k3_indices(d.n)] = _J3(d) @ d.vec("v")
    theta[N - 1] = -(d.a1 + d.a2 + np.trace(d.mat("A")))
    return KForm(N, 1, theta)


def strongly_unimodular_case2(d: Case2Data, tol: float = TOL) -> bool:
    return abs(d.a1) < tol and abs(d.a + d.a2 + np.trace(d.mat("A"))) < tol


def domega_case2(d: Case2Data) -> KForm:
    """Closed form of d omega for mu(Xi), including the w-term -e^2 ^ (Jw)^flat ^ e^{2n}."""
    N = 2 * d.n
    k3 = _k3_indices(d.n)
    J3 = _J3(d)

    def one(local: np.ndarray) -> KForm:
        return KForm(N, 1, _embed_vector(local, k3, N))

    e1, e2, e_last, e_top = _e(N, 0), _e(N, 1), _e(N, N - 2), _e(N, N - 1)
    xi = KForm.from_matrix(_embed_matrix(d.mat("xi"), k3, N))
    a_omega = KForm.from_matrix(_embed_matrix(form_action(d.mat("A"), J3.T), k3, N))
    terms = [
        -(d.a1 + d.a2) * wedge(wedge(e1, e2), e_top),
        wedge(wedge(one(d.vec("gamma")), e1), e_top),
        wedge(e2, xi),
        -wedge(wedge(one(d.vec("nu")), e2), e_last),
        -wedge(wedge(one(d.vec("alpha")), e2), e_top),
        d.v1 * wedge(wedge(e2, e_last), e_top),
        -d.v2 * wedge(wedge(e1, e_last), e_top),
        wedge(wedge(one(J3 @ d.vec("v")), e_last), e_top),
        -wedge(a_omega, e_top),
        -wedge(wedge(e2, one(J3 @ d.vec("w"))), e_top),
    ]
    total = KForm(N, 3)
    for term in terms:
        total = total + term
    return total


# Six-dimensional reduced case 2


def reduced_case2_to_full(r: ReducedCase2Data, allow_zero_eta: bool = False) -> Case2Data:
    s = -0.5 * (r.a + r.a2)
    J3 = pair_complex_structure(2)
    alpha, nu = np.asarray(r.alpha), np.asarray(r.nu)
    return Case2Data(
        n=3,
        a=r.a,
        a1=0.0,
        a2=r.a2,
        v1=r.v1,
        v2=r.v2,
        lam=r.a2,
        v=list(r.v),
        alpha=list(r.alpha),
        gamma=(J3 @ alpha + nu).tolist(),
        nu=list(r.nu),
        A=[[s, r.q], [-r.q, s]],
        xi=[[0.0, r.c], [-r.c, 0.0]],
        allow_zero_eta=allow_zero_eta,
    )


def reduced_case2_constraints(r: ReducedCase2Data) -> Dict[str, float]:
    """a2 (a + a2) = 0, c (a + a2) = 0 and (a + a2) nu + a2 J alpha + A^* nu - c Jv = 0."""
    J3 = pair_complex_structure(2)
    s = -0.5 * (r.a + r.a2)
    A = np.array([[s, r.q], [-r.q, s]])
    alpha, nu, v = (np.asarray(x) for x in (r.alpha, r.nu, r.v))
    fourth = (r.a + r.a2) * nu + r.a2 * (J3 @ alpha) + A.T @ nu - r.c * (J3 @ v)
    return {
        "Lie2": abs(r.a2 * (r.a + r.a2)),
        "Lie3": abs(r.c * (r.a + r.a2)),
        "Lie4": float(np.abs(fourth).max()),
    }


def dJdomega_expansion(r: ReducedCase2Data) -> KForm:
    """dd^c omega of the reduced six-dimensional model, term by term."""
    N = 6
    J3 = pair_complex_structure(2)
    s = -0.5 * (r.a + r.a2)
    A = np.array([[s, r.q], [-r.q, s]])
    alpha, nu, v = (np.asarray(x) for x in (r.alpha, r.nu, r.v))
    Jalpha = J3 @ alpha

    def one(local: np.ndarray) -> KForm:
        return KForm(N, 1, _embed_vector(local, [2, 3], N))

    e56 = _e(N, 4, 5)
    first = (A.T + r.a * np.eye(2)) @ Jalpha + r.c * (J3 @ v) + r.a2 * (Jalpha + nu)
    second = (A.T + (r.a + 2 * r.a2) * np.eye(2)) @ (J3 @ nu - alpha)
    top = (
        alpha @ alpha
        + nu @ nu
        + (Jalpha + nu) @ (Jalpha + nu)
        + r.a2 * (r.a + r.a2)
        - 2 * r.c * r.v1
    )
    return (
        r.a2 * (r.a + r.a2) * _e(N, 0, 1, 4, 5)
        + r.c * (r.a + r.a2) * _e(N, 0, 2, 3, 5)
        + wedge(wedge(_e(N, 0), one(first)), e56)
        + wedge(wedge(_e(N, 1), one(second)), e56)
        + top * _e(N, 2, 3, 4, 5)
    )


def skt_case2_dim6(r: ReducedCase2Data, tol: float = TOL) -> Tuple[bool, Optional[str]]:
    """SKT test for reduced data; the branch is "sub2" (c != 0) or "sub1" (c = 0, a != 0)."""
    J3 = pair_complex_structure(2)
    s = -0.5 * (r.a + r.a2)
    A = np.array([[s, r.q], [-r.q, s]])
    alpha, nu, v = (np.asarray(x) for x in (r.alpha, r.nu, r.v))
    if abs(r.a + r.a2) >= tol:
        return False, None
    if abs(r.c) >= tol:
        ok = (
            abs(r.v1 - alpha @ alpha / r.c) < tol
            and _check_zero(v + (A.T + r.a * np.eye(2)) @ alpha / r.c, tol)
            and _check_zero(nu + J3 @ alpha, tol)
        )
        return (True, "sub2") if ok else (False, None)
    if abs(r.a) >= tol and _check_zero(alpha, tol) and _check_zero(nu, tol):
        return True, "sub1"
    return False, None


# Abelian k3


def abelian_k3_assumption(d: Case2Data, tol: float = TOL) -> bool:
    """alpha = gamma = 0 and xi = 0."""
    return (
        _check_zero(d.vec("alpha"), tol)
        and _check_zero(d.vec("gamma"), tol)
        and _check_zero(d.mat("xi"), tol)
    )


def skt_case2_abelian_k3(d: Case2Data, tol: float = TOL) -> bool:
    """Strongly unimodular SKT iff a1 = 0, a2 = -a != 0 and A in u(k3), on integrable data."""
    if not abelian_k3_assumption(d, tol):
        raise ValidityError("Data do not satisfy alpha = gamma = 0, xi = 0")
    _require_integrable_case2(d)
    A = d.mat("A")
    return (
        abs(d.a1) < tol
        and abs(d.a) > tol
        and abs(d.a2 + d.a) < tol
        and _check_zero(A + A.T, tol)
    )


def _rotation_normal_form(A: np.ndarray, tol: float = 1e-9) -> Tuple[np.ndarray, List[float]]:
    """Orthogonal Q and b with Q^T A Q = diag(C_{b_1}, ...) for skew A."""
    m = A.shape[0]
    if m == 0:
        return np.zeros((0, 0)), []
    T, Z = linalg.schur(A, output="real")
    pairs, singles = [], []
    i = 0
    while i < m:
        if i + 1 < m and abs(T[i + 1, i]) > tol:
            pairs.append((i, i + 1))
            i += 2
        else:
            singles.append(i)
            i += 1
    order = [j for pair in pairs for j in pair] + singles
    Q = Z[:, order]
    b = [float(T[i, j]) for i, j in pairs] + [0.0] * (len(singles) // 2)
    return Q, b


def skt_eq_normal_form(d: Case2Data) -> Tuple[LieAlgebra, np.ndarray, List[float]]:
    """Basis (-a e_1, e_2, e_{2n-1} - X, k3 rotated, e_{2n}/a) turning an abelian-k3 SKT model
    into df^1 = f^{23}, df^2 = -f^{2,2n}, df^3 = f^{3,2n} plus rotations b_l.

    Returns the algebra in the new basis, the basis matrix (columns) and the b_l.
    """
    if not skt_case2_abelian_k3(d):
        raise ValidityError("Normal form needs strongly unimodular SKT data with abelian k3")
    L, _ = build_case2(d)
    N = 2 * d.n
    a = d.a
    B = case2_derivation(d)
    k1 = N - 2
    v_tilde = np.concatenate([[d.v1, d.v2], d.vec("v")])
    X = linalg.solve(B[:k1, :k1] - a * np.eye(k1), v_tilde)
    Q, b = _rotation_normal_form(d.mat("A"))
    P = np.zeros((N, N))
    P[0, 0] = -a
    P[1, 1] = 1.0
    P[N - 2, 2] = 1.0
    P[:k1, 2] -= X
    if d.k3_dim:
        P[2 : N - 2, 3 : N - 1] = Q
    P[N - 1, N - 1] = 1.0 / a
    normal = L.change_basis(P, name="skt-sub-family")
    b_scaled = [value / a for value in b]
    logger.debug(f"SKT normal form rotations: {b_scaled}")
    return normal, P, b_scaled


def _family_equations(N: int, terms: Dict[int, Dict[Tuple[int, int], float]]) -> list:
    return [terms.get(k, {}) for k in range(N)]


def skt_eq_family(b: Sequence[float]) -> Tuple[LieAlgebra, HermitianStructure]:
    """df^1 = f^{23}, df^2 = -f^{2,2n}, df^3 = f^{3,2n}, df^{2l+2} = b_l f^{2l+3,2n},
    df^{2l+3} = -b_l f^{2l+2,2n}, with Jf_1 = -f_2, Jf_3 = f_{2n}, Jf_{2l+2} = f_{2l+3}."""
    n = len(b) + 2
    N = 2 * n
    top = N - 1
    terms: Dict[int, Dict[Tuple[int, int], float]] = {
        0: {(1, 2): 1.0},
        1: {(1, top): -1.0},
        2: {(2, top): 1.0},
    }
    for l, value in enumerate(b, start=1):
        terms[2 * l + 1] = {(2 * l + 2, top): value}
        terms[2 * l + 2] = {(2 * l + 1, top): -value}
    L = LieAlgebra.from_structure_equations(_family_equations(N, terms), name="skt-sub-family")
    pairs = [(0, 1, -1.0), (2, top, 1.0)] + [(2 * l + 1, 2 * l + 2, 1.0) for l in range(1, n - 1)]
    return L, HermitianStructure(L, AlmostComplexStructure.from_pairs(N, pairs))


def kahler_sub_family(b: Sequence[float]) -> Tuple[LieAlgebra, HermitianStructure]:
    """df^1 = 1/2 f^{1,2n} + f^{23}, df^2 = -1/2 f^{2,2n}, df^3 = f^{3,2n} plus rotations b_l."""
    n = len(b) + 2
    N = 2 * n
    top = N - 1
    terms: Dict[int, Dict[Tuple[int, int], float]] = {
        0: {(0, top): 0.5, (1, 2): 1.0},
        1: {(1, top): -0.5},
        2: {(2, top): 1.0},
    }
    for l, value in enumerate(b, start=1):
        terms[2 * l + 1] = {(2 * l + 2, top): value}
        terms[2 * l + 2] = {(2 * l + 1, top): -value}
    L = LieAlgebra.from_structure_equations(_family_equations(N, terms), name="kahler-sub-family")
    pairs = [(0, 1, -1.0), (2, top, 1.0)] + [(2 * l + 1, 2 * l + 2, 1.0) for l in range(1, n - 1)]
    return L, HermitianStructure(L, AlmostComplexStructure.from_pairs(N, pairs))


def gtheta_metric(n: int, theta: float) -> np.ndarray:
    """Identity plus sin(theta) (f^1 . f^{2n-1} - f^{2n-2} . f^{2n}) as a symmetric matrix."""
    N = 2 * n
    s = np.sin(theta)
    g = np.eye(N)
    g[0, N - 2] = g[N - 2, 0] = s
    g[N - 3, N - 1] = g[N - 1, N - 3] = -s
    return g


def gtheta_family(b: Sequence[float], theta: float) -> HermitianStructure:
    """SKT structure on df^1 = f^{23} plus rotations, tilted so that J n^1 makes angle theta with n^perp.

    Raises:
        ValidityError: for theta outside [0, pi/2) (the metric degenerates at pi/2).
    """
    if not 0.0 <= theta < np.pi / 2 - 1e-12:
        raise ValidityError(f"theta must lie in [0, pi/2), got {theta}")
    L, H = streq_skt(1.0, b)
    return HermitianStructure(L, H.J, gtheta_metric(len(b) + 1, theta))


def balanced_case2_bcpq(b: float, c: float, p: float, q: float) -> Tuple[LieAlgebra, HermitianStructure]:
    """Six-dimensional balanced model: alpha = p e^3 + q e^4, A = C_b, eta = c e^{34}, v1 = -c."""
    data = Case2Data(
        n=3,
        v1=-c,
        alpha=[p, q],
        gamma=[-q, p],
        A=[[0.0, b], [-b, 0.0]],
        xi=[[0.0, c], [-c, 0.0]],
        allow_zero_eta=True,
    )
    L, H = build_case2(data)
    L.name = "mu(b,c,p,q)"
    return L, H

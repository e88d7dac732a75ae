"""Pluriclosed and balanced flows as bracket flows on a fixed (R^{2n}, J, g).

A flow of left-invariant metrics is traded for an ODE on structure constants,
mu' = -pi(M) mu with M = E - U, where E solves omega(E X, Y) = sigma(X, Y) for the
flow 2-form sigma and U is a unitary gauge. Reduced right-hand sides for the
almost nilpotent families, closed-form solutions and the direct metric flow used as
a cross-check live here as well.
"""

import logging
from math import factorial
from typing import Callable, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from models.model import Case1Data, Case2Data, FlowSettings, ReducedCase2Data
from models.state import (
    BalancedFlowState,
    BracketPoint,
    FlowSample,
    FlowTrajectory,
    PluriclosedCase2State,
)
from tools.almost_nilpotent import (
    balanced_case2_bcpq,
    build_case1,
    build_case2,
    form_action,
    pair_complex_structure,
    reduced_case2_to_full,
)
from tools.hermitian import (
    HermitianStructure,
    balanced_residual,
    ricci_11,
    ricci_tau,
    skt_residual_real,
)
from tools.lie_core import LieAlgebra, act
from tools.multilinear import KForm, Metric, hodge_star, lefschetz_inverse, wedge, wedge_power
from utils.errors import NumericalError, ValidityError

logger = logging.getLogger(__name__)

FlowKind = Literal["pluriclosed", "balanced"]
Gauge = Callable[[np.ndarray, np.ndarray], np.ndarray]
VectorField = Callable[[float, np.ndarray], np.ndarray]

GAUGE_TOL = 1e-10
METRIC_FLOOR = 1e-12


def pi_action(A: np.ndarray, constants: np.ndarray) -> np.ndarray:
    """Infinitesimal action of gl(n) on brackets: (pi(A) mu)(X, Y)."""
    return act(A, constants)


def hermitian_at(constants: np.ndarray, J: np.ndarray, g: Optional[np.ndarray] = None) -> HermitianStructure:
    """Hermitian structure (J, g) on the bracket ``constants`` without a Jacobi check."""
    return HermitianStructure(LieAlgebra(constants, check=False), J, g)


# Flow 2-forms and their endomorphisms


def p_form(H: HermitianStructure) -> KForm:
    """(1,1)-part of the Bismut Ricci form."""
    return ricci_11(H, ricci_tau(H, -1.0))


def q_form(H: HermitianStructure, bv_factor: float = 1.0) -> KForm:
    """Velocity of the balanced flow.

    (n-2)! L^{-1}(i d dbar *(rho^C ^ omega)) + bv_factor/(n-1) L^{-1}(Delta_BC omega^{n-1}),
    L the Lefschetz map of omega^{n-2}.

    Raises:
        ValidityError: if J is not integrable.
        NumericalError: if a Lefschetz inverse fails.
    """
    H.require_integrable()
    n = H.complex_dim
    if n < 2:
        raise ValidityError("The balanced flow needs complex dimension at least 2")
    omega = H.omega
    lefschetz = wedge_power(omega, n - 2)
    rho_c = ricci_tau(H, 1.0)
    star = hodge_star(wedge(rho_c, omega), H.metric)
    star = KForm(star.dim, star.degree, star.coefficients.astype(complex))
    ddbar = H.partial(H.partial_bar(star))
    first = factorial(n - 2) * lefschetz_inverse(lefschetz, 1j * ddbar)
    top = wedge_power(omega, n - 1)
    top = KForm(top.dim, top.degree, top.coefficients.astype(complex))
    second = (bv_factor / (n - 1)) * lefschetz_inverse(lefschetz, H.bott_chern_laplacian(top))
    total = first + second
    imaginary = float(np.abs(total.coefficients.imag).max(initial=0.0))
    if imaginary > 1e-8 * max(1.0, total.norm()):
        raise NumericalError(f"Balanced flow velocity has imaginary part {imaginary:.3e}")
    return total.real


def form_endomorphism(H: HermitianStructure, sigma: KForm) -> np.ndarray:
    """E with omega(E X, Y) = sigma(X, Y)."""
    return linalg.solve(H.omega.to_matrix(), sigma.to_matrix())


def p_endomorphism(H: HermitianStructure) -> np.ndarray:
    """Generator of the pluriclosed bracket flow: P = 1/2 Omega^{-1} (rho^B)^{1,1}."""
    return 0.5 * form_endomorphism(H, p_form(H))


def q_endomorphism(H: HermitianStructure, bv_factor: float = 1.0) -> np.ndarray:
    """Generator of the balanced bracket flow: Q = -1/2 Omega^{-1} q(omega)."""
    return -0.5 * form_endomorphism(H, q_form(H, bv_factor))


# Gauges


def triangular_gauge(E: np.ndarray, head: int) -> np.ndarray:
    """Skew U cancelling the block of E below the first ``head`` coordinates."""
    L = np.zeros_like(E)
    L[head:, :head] = E[head:, :head]
    return L - L.T


def pluriclosed_case2_gauge(E: np.ndarray, constants: np.ndarray) -> np.ndarray:
    return triangular_gauge(E, E.shape[0] - 2)


def abelian_k3_gauge(E: np.ndarray, constants: np.ndarray) -> np.ndarray:
    """Triangular gauge plus a/4 (A - A^t) on k3, with a and A read off ad_{e_2n}."""
    N = E.shape[0]
    U = triangular_gauge(E, N - 2)
    B = constants[N - 1, : N - 1, : N - 1].T
    a = B[N - 2, N - 2]
    A = B[2 : N - 2, 2 : N - 2]
    U[2 : N - 2, 2 : N - 2] += 0.25 * a * (A - A.T)
    return U


def balanced_case2_gauge(E: np.ndarray, constants: np.ndarray) -> np.ndarray:
    return triangular_gauge(E, 2)


GAUGES: Dict[str, Gauge] = {
    "pluriclosed-case2": pluriclosed_case2_gauge,
    "abelian-k3": abelian_k3_gauge,
    "balanced-case2": balanced_case2_gauge,
}


def check_gauge(U: np.ndarray, J: np.ndarray, g: Optional[np.ndarray] = None, tol: float = GAUGE_TOL) -> None:
    """Raise ValidityError unless U is g-skew and commutes with J."""
    g = np.eye(U.shape[0]) if g is None else np.asarray(g, dtype=float)
    scale = max(1.0, float(np.abs(U).max(initial=0.0)))
    skew = float(np.abs(U.T @ g + g @ U).max(initial=0.0))
    commute = float(np.abs(U @ J - J @ U).max(initial=0.0))
    if skew > tol * scale or commute > tol * scale:
        raise ValidityError(
            f"Gauge is not unitary: skew residual {skew:.3e}, [U, J] residual {commute:.3e}"
        )


# Integrator


def _rk4(rhs: VectorField, t: float, y: np.ndarray, h: float, k1: np.ndarray) -> np.ndarray:
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h * (k1 / 6.0 + k2 / 3.0 + k3 / 3.0 + k4 / 6.0)


def _require_finite(y: np.ndarray, t: float, what: str) -> np.ndarray:
    if not np.all(np.isfinite(y)):
        raise NumericalError(f"Non-finite {what} at t = {t:.6g}")
    return y


def integrate(
    rhs: VectorField,
    y0: np.ndarray,
    settings: FlowSettings,
    describe: Callable[[np.ndarray], Dict[str, float]],
    diagnose: Optional[Callable[[float, np.ndarray], Dict[str, float]]] = None,
    flow: str = "",
) -> FlowTrajectory:
    """Adaptive RK4 with step doubling.

    A step is accepted when the difference between one full step and two half steps,
    divided by 15, is below tolerance * max(1, |y|); otherwise the step is halved.
    Every accepted step is recorded. ``diagnose`` may raise NumericalError to abort.

    Raises:
        NumericalError: on step underflow, non-finite values or an exhausted step budget.
    """
    y = _require_finite(np.array(y0, dtype=float), 0.0, "initial state")
    t, t_max = 0.0, settings.t_max
    h = min(settings.initial_step, settings.step_cap)
    diagnose = diagnose or (lambda _t, _y: {})

    samples = [FlowSample(t=t, state=describe(y), diagnostics=diagnose(t, y))]
    quiet, converged_at = 0, None
    steps = 0
    while t_max - t > 1e-14 * max(1.0, t_max):
        k1 = _require_finite(rhs(t, y), t, "derivative")
        if converged_at is None:
            quiet = quiet + 1 if np.linalg.norm(k1) < settings.convergence_tol else 0
            if quiet >= settings.convergence_steps:
                converged_at = t
                logger.info(f"{flow or 'flow'}: stationary from t = {t:.6g}")
        h = min(h, t_max - t)
        while True:
            steps += 1
            if steps > settings.max_steps:
                raise NumericalError(f"Step budget of {settings.max_steps} exhausted at t = {t:.6g}")
            full = _rk4(rhs, t, y, h, k1)
            half = _rk4(rhs, t, y, 0.5 * h, k1)
            two = _rk4(rhs, t + 0.5 * h, half, 0.5 * h, rhs(t + 0.5 * h, half))
            _require_finite(two, t, "state")
            error = float(np.linalg.norm(two - full)) / 15.0
            allowed = settings.tolerance * max(1.0, float(np.linalg.norm(y)))
            if error <= allowed:
                break
            h *= 0.5
            if h < settings.min_step * max(1.0, t):
                raise NumericalError(f"Step size underflow (h = {h:.3e}) at t = {t:.6g}")
        t = t_max if t_max - (t + h) <= 1e-14 * max(1.0, t_max) else t + h
        y = two
        samples.append(FlowSample(t=t, state=describe(y), diagnostics=diagnose(t, y)))
        growth = 2.0 if error == 0 else min(2.0, 0.9 * (allowed / error) ** 0.2)
        h = min(max(growth, 0.2) * h, settings.step_cap)

    logger.info(f"{flow or 'flow'}: {len(samples)} samples up to t = {t:.6g}")
    return FlowTrajectory(
        flow=flow,
        samples=samples,
        converged=converged_at is not None,
        converged_at=converged_at,
    )


# Full bracket flows


def constant_names(dim: int) -> List[str]:
    return [
        f"c_{i + 1}_{j + 1}_{k + 1}"
        for i in range(dim)
        for j in range(i + 1, dim)
        for k in range(dim)
    ]


def describe_constants(constants: np.ndarray) -> Dict[str, float]:
    """State columns c_i_j_k (1-based, i < j) of a bracket."""
    dim = constants.shape[0]
    values = [constants[i, j, k] for i in range(dim) for j in range(i + 1, dim) for k in range(dim)]
    return dict(zip(constant_names(dim), map(float, values)))


def constants_from_state(state: Dict[str, float], dim: int) -> np.ndarray:
    C = np.zeros((dim, dim, dim))
    for i in range(dim):
        for j in range(i + 1, dim):
            for k in range(dim):
                C[i, j, k] = state[f"c_{i + 1}_{j + 1}_{k + 1}"]
                C[j, i, k] = -C[i, j, k]
    return C


def bracket_points(trajectory: FlowTrajectory, dim: int) -> List[BracketPoint]:
    """Samples of a full bracket-flow run as BracketPoints.

    Raises:
        ValidityError: if the samples do not carry the constants c_i_j_k.
    """
    names = constant_names(dim)
    if any(name not in s.state for s in trajectory.samples for name in names):
        raise ValidityError(f"Trajectory {trajectory.flow!r} does not record a {dim}-dimensional bracket")
    return [BracketPoint.from_array(s.t, constants_from_state(s.state, dim)) for s in trajectory.samples]


def readout_case1(constants: np.ndarray) -> Dict[str, float]:
    """a, c = eta(e_2, e_3) and the sizes of eta and A for the case-1 layout."""
    N = constants.shape[0]
    B = constants[N - 1, : N - 1, : N - 1].T
    eta = -constants[1 : N - 1, 1 : N - 1, 0]
    return {
        "a": float(B[0, 0]),
        "c": float(eta[0, 1]),
        "eta_norm": float(np.linalg.norm(eta) / np.sqrt(2.0)),
        "A_norm": float(np.linalg.norm(B[1:, 1:])),
    }


def readout_case2(constants: np.ndarray) -> Dict[str, float]:
    """Scalars of ad_{e_2n} and eta for the case-2 layout."""
    N = constants.shape[0]
    B = constants[N - 1, : N - 1, : N - 1].T
    eta = -constants[1 : N - 1, 1 : N - 1, 0]
    out = {
        "a": float(B[N - 2, N - 2]),
        "a2": float(B[1, 1]),
        "v1": float(B[0, N - 2]),
        "v2": float(B[1, N - 2]),
        "v_norm": float(np.linalg.norm(B[2 : N - 2, N - 2])),
        "A_norm": float(np.linalg.norm(B[2 : N - 2, 2 : N - 2])),
        "eta_norm": float(np.linalg.norm(eta) / np.sqrt(2.0)),
    }
    if N == 6:
        out["q"] = float(B[2, 3])
        out["c"] = float(eta[1, 2])
    return out


def bracket_generator(
    flow: FlowKind,
    J: np.ndarray,
    g: Optional[np.ndarray] = None,
    gauge: Optional[Gauge] = None,
    bv_factor: float = 1.0,
) -> Callable[[np.ndarray], np.ndarray]:
    """C -> M = E - U for the chosen flow and gauge."""

    def generator(C: np.ndarray) -> np.ndarray:
        H = hermitian_at(C, J, g)
        E = p_endomorphism(H) if flow == "pluriclosed" else q_endomorphism(H, bv_factor)
        if gauge is None:
            return E
        U = gauge(E, C)
        check_gauge(U, J, g, tol=max(GAUGE_TOL, 1e-8))
        return E - U

    return generator


def bracket_flow_rhs(
    generator: Callable[[np.ndarray], np.ndarray], dim: int, normalized: bool = False
) -> VectorField:
    """y = C.ravel() -> -pi(M) C, optionally projected to keep |mu| constant."""

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        C = y.reshape(dim, dim, dim)
        F = -act(generator(C), C)
        if normalized:
            F = F - (np.vdot(F, C) / np.vdot(C, C)) * C
        return F.ravel()

    return rhs


def _eta_part(C: np.ndarray) -> float:
    N = C.shape[0]
    return float(np.linalg.norm(C[: N - 1, : N - 1, 0]))


def integrate_bracket_flow(
    constants: Union[np.ndarray, LieAlgebra],
    J: np.ndarray,
    flow: FlowKind,
    settings: FlowSettings,
    g: Optional[np.ndarray] = None,
    gauge: Optional[Gauge] = None,
    normalized: bool = False,
    bv_factor: float = 1.0,
    readout: Optional[Callable[[np.ndarray], Dict[str, float]]] = None,
) -> FlowTrajectory:
    """Integrate mu' = -pi(E - U) mu from ``constants``.

    State columns are the constants c_i_j_k, or whatever ``readout`` extracts.
    Diagnostics carry the bracket norm, the Jacobi residual and the residual of the
    condition the flow preserves.

    Raises:
        ValidityError: if J is not integrable or a gauge is not unitary.
        NumericalError: on Jacobi drift above ``settings.jacobi_tol`` or integrator failure.
    """
    C0 = constants.constants if isinstance(constants, LieAlgebra) else np.asarray(constants, dtype=float)
    dim = C0.shape[0]
    J = np.asarray(J, dtype=float)
    hermitian_at(C0, J, g).require_integrable()
    rhs = bracket_flow_rhs(bracket_generator(flow, J, g, gauge, bv_factor), dim, normalized)
    describe = (lambda y: readout(y.reshape(dim, dim, dim))) if readout else (
        lambda y: describe_constants(y.reshape(dim, dim, dim))
    )

    def diagnose(t: float, y: np.ndarray) -> Dict[str, float]:
        L = LieAlgebra(y.reshape(dim, dim, dim), check=False)
        jacobi = L.jacobi_residual()
        if jacobi > settings.jacobi_tol:
            raise NumericalError(f"Jacobi drift {jacobi:.3e} at t = {t:.6g}")
        H = HermitianStructure(L, J, g)
        out = {"bracket_norm": L.norm(), "jacobi": jacobi}
        if flow == "pluriclosed":
            out["skt_residual"] = skt_residual_real(H)
        else:
            out["balanced_residual"] = balanced_residual(H)
        return out

    label = f"{flow}{'-normalized' if normalized else ''}"
    trajectory = integrate(rhs, C0.ravel(), settings, describe, diagnose, flow=label)
    if trajectory.converged:
        final = trajectory.final
        eta = None if readout else _eta_part(constants_from_state(final.state, dim))
        trajectory.limit_label = "flat Kahler" if eta is not None and eta < 1e-6 else "stationary"
    return trajectory


# Reduced pluriclosed systems


def _abelian_k3_parts(y: np.ndarray, m: int) -> Tuple[float, float, float, np.ndarray, np.ndarray]:
    return y[0], y[1], y[2], y[3 : 3 + m], y[3 + m :].reshape(m, m)


def abelian_k3_r(a: float, v1: float, v2: float, v: np.ndarray, k: int) -> float:
    return -0.5 * a**2 * (2.0 + 0.5 * k) - 0.5 * (v1**2 + v2**2 + float(v @ v))


def _abelian_k3_field(y: np.ndarray, m: int, k: int) -> Tuple[np.ndarray, float]:
    a, v1, v2, v, A = _abelian_k3_parts(y, m)
    size = v1**2 + v2**2 + float(v @ v)
    r = abelian_k3_r(a, v1, v2, v, k)
    S = -0.5 * A @ A.T + 0.25 * a * (A + A.T) - 0.5 * a**2 * (2.0 + 0.5 * k) * np.eye(m)
    da = r * a
    dv1 = 2.0 * r * v1
    dv2 = -(a**2) * v2 + 2.0 * r * v2
    dv = r * v + S @ v - 0.5 * size * v
    dA = r * A + 0.25 * a * (A @ A.T - A.T @ A)
    return np.concatenate([[da, dv1, dv2], dv, dA.ravel()]), r


def sub2_constants(state: PluriclosedCase2State) -> np.ndarray:
    """Six-dimensional bracket of a sub2 state: a2 = -a, v1 = |alpha|^2 / c, nu = -J alpha."""
    if abs(state.c) < 1e-14:
        raise NumericalError("c vanished on the sub2 branch")
    alpha = np.asarray(state.alpha, dtype=float)
    A = np.array([[0.0, state.q], [-state.q, 0.0]])
    J3 = pair_complex_structure(2)
    reduced = ReducedCase2Data(
        a=state.a,
        a2=-state.a,
        v1=float(alpha @ alpha) / state.c,
        v2=state.v2,
        q=state.q,
        c=state.c,
        v=(-(A.T + state.a * np.eye(2)) @ alpha / state.c).tolist(),
        alpha=alpha.tolist(),
        nu=(-J3 @ alpha).tolist(),
    )
    L, _ = build_case2(reduced_case2_to_full(reduced), tol=1e-8)
    return np.array(L.constants)


def pluriclosed_state_constants(state: PluriclosedCase2State) -> np.ndarray:
    """Full bracket of a reduced pluriclosed state; abelian_k3 uses a2 = lam = -a.

    Raises:
        ValidityError: if the data do not define a Lie algebra with eta != 0.
    """
    if state.branch == "sub2":
        return sub2_constants(state)
    data = Case2Data(
        n=state.k3_dim // 2 + 2,
        a=state.a,
        a2=-state.a,
        lam=-state.a,
        v1=state.v1,
        v2=state.v2,
        v=list(state.v),
        A=state.A,
    )
    L, _ = build_case2(data, tol=1e-8)
    return np.array(L.constants)


def sub2_r(a: float, q: float, v2: float, c: float, alpha: np.ndarray) -> float:
    """(|alpha|^2 (c^2 + |alpha|^2 + a^2 + q^2) + c^2 (v2^2 + 2 a^2)) / c^2."""
    size = float(alpha @ alpha)
    return (size * (c**2 + size + a**2 + q**2) + c**2 * (v2**2 + 2.0 * a**2)) / c**2


def _sub2_field(y: np.ndarray) -> np.ndarray:
    a, q, v2, c = y[:4]
    alpha = np.asarray(y[4:6], dtype=float)
    if abs(c) < 1e-14:
        raise NumericalError("c vanished on the sub2 branch")
    s = c**2 + float(alpha @ alpha)
    r = sub2_r(a, q, v2, c, alpha)
    # J e_3 = e_4 on k3
    J_alpha = np.array([-alpha[1], alpha[0]])
    dalpha = (-0.5 * r - 0.5 * (3.0 * s + q**2)) * alpha + 0.5 * a * q * J_alpha
    return np.concatenate([[-0.5 * r * a, -0.5 * r * q, -(r + a**2) * v2, -s * c], dalpha])


def sub2_projected_rhs(state: PluriclosedCase2State) -> np.ndarray:
    """Gauged full pluriclosed flow at the sub2 bracket, read back onto (a, q, v2, c, alpha)."""
    C = sub2_constants(state)
    M = bracket_generator("pluriclosed", pair_complex_structure(6), gauge=pluriclosed_case2_gauge)(C)
    dC = -act(M, C)
    return np.array(
        [dC[5, 4, 4], dC[5, 3, 2], dC[5, 4, 1], -dC[2, 3, 0], dC[5, 2, 0], dC[5, 3, 0]]
    )


def pluriclosed_case2_rhs(state: PluriclosedCase2State, k: Optional[int] = None) -> np.ndarray:
    """Derivative of a reduced pluriclosed case-2 state, in ``state.to_vector()`` layout.

    abelian_k3: a' = r a, v1' = 2r v1, v2' = (2r - a^2) v2,
    v' = r v + S v - 1/2 (v1^2 + v2^2 + |v|^2) v, A' = r A + a/4 [A, A^t].
    sub2, with s = c^2 + |alpha|^2 and r = sub2_r: a' = -r a / 2, q' = -r q / 2,
    v2' = -(r + a^2) v2, c' = -s c, alpha' = -(r + 3s + q^2) alpha / 2 + a q J alpha / 2.

    Raises:
        NumericalError: if c = 0 on the sub2 branch.
    """
    if state.branch == "abelian_k3":
        field, _ = _abelian_k3_field(state.to_vector(), state.k3_dim, state.k if k is None else k)
        return field
    return _sub2_field(state.to_vector())


def normalized_pluriclosed_rhs(state: PluriclosedCase2State, k: Optional[int] = None) -> np.ndarray:
    """Abelian-k3 system with r Id subtracted from the generator: a' = 0, A' = a/4 [A, A^t]."""
    if state.branch != "abelian_k3":
        raise ValidityError("The normalized reduced flow is defined on the abelian_k3 branch")
    y = state.to_vector()
    field, r = _abelian_k3_field(y, state.k3_dim, state.k if k is None else k)
    return field - r * y


def _pluriclosed_diagnostics(state: PluriclosedCase2State, k: int) -> Dict[str, float]:
    if state.branch == "abelian_k3":
        v = np.asarray(state.v, dtype=float)
        return {
            "a_sq": state.a**2,
            "v1_sq": state.v1**2,
            "v2_sq": state.v2**2,
            "v_sq": float(v @ v),
            "A_sq": float(np.sum(state.A_matrix**2)),
            "r": abelian_k3_r(state.a, state.v1, state.v2, v, k),
        }
    alpha = np.asarray(state.alpha, dtype=float)
    C = pluriclosed_state_constants(state)
    H = hermitian_at(C, pair_complex_structure(6))
    return {"c_sq": state.c**2, "alpha_sq": float(alpha @ alpha), "skt_residual": skt_residual_real(H)}


# Reduced balanced systems


def balanced_case1_coefficients(A: np.ndarray, eta: np.ndarray) -> Tuple[float, np.ndarray]:
    """(p, P) of the case-1 balanced flow on k1 of dimension 4."""
    Jk = pair_complex_structure(4)
    A_plus = 0.5 * (A + A.T)
    m = 4.0 * float(np.sum(A**2)) - float(np.trace(Jk @ A)) ** 2
    eta_sq = 0.5 * float(np.sum(eta**2))
    p = -(m / 32.0) * float(np.sum(A_plus**2)) + eta_sq**2 / 16.0
    P = (m / 32.0) * (A @ A.T - A.T @ A) - (eta_sq**2 / 16.0) * np.eye(4)
    return p, P


def _balanced_case1_field(y: np.ndarray) -> np.ndarray:
    a, A, eta = y[0], y[1:17].reshape(4, 4), y[17:33].reshape(4, 4)
    p, P = balanced_case1_coefficients(A, eta)
    dA = A @ P - P @ A + p * A
    deta = form_action(P, eta) - p * eta
    return np.concatenate([[p * a], dA.ravel(), deta.ravel()])


def balanced_case1_rhs(state: BalancedFlowState) -> np.ndarray:
    """a' = p a, A' = [A, P] + p A, eta' = P^* eta - p eta."""
    if state.case != 1:
        raise ValidityError("balanced_case1_rhs needs a case-1 state")
    return _balanced_case1_field(state.to_vector())


def _balanced_case2_field(y: np.ndarray) -> np.ndarray:
    b, c, p, q = y
    size = c**2 + p**2 + q**2
    h = 0.25 * (size**2 + 0.5 * b**2 * (p**2 + q**2))
    k = 0.5 * (size + 0.5 * b**2)
    rate = k * b**2 + 3.0 * h
    return np.array([-h * b, -3.0 * h * c, -rate * p, -rate * q])


def balanced_case2_rhs(state: BalancedFlowState) -> np.ndarray:
    """b' = -h b, c' = -3h c, p' = -(k b^2 + 3h) p, q' = -(k b^2 + 3h) q."""
    if state.case != 2:
        raise ValidityError("balanced_case2_rhs needs a case-2 state")
    return _balanced_case2_field(state.to_vector())


def balanced_state_constants(state: BalancedFlowState) -> np.ndarray:
    """Full bracket of a reduced balanced state."""
    if state.case == 1:
        L, _ = build_case1(
            Case1Data(n=3, a=state.a, A=state.A, eta=state.eta, allow_zero_eta=True), tol=1e-8
        )
        return np.array(L.constants)
    L, _ = balanced_case2_bcpq(state.b, state.c, state.p, state.q)
    return np.array(L.constants)


def balanced_case1_state(constants: np.ndarray, tol: float = 1e-10) -> BalancedFlowState:
    """Reduced case-1 state (a, A, eta) read off a six-dimensional bracket in the case-1 layout.

    Raises:
        ValidityError: if the bracket is not of the form built from (a, A, eta) with beta = 0.
    """
    C = np.asarray(constants, dtype=float)
    if C.shape != (6, 6, 6):
        raise ValidityError(f"Case-1 balanced states need dimension 6, got {C.shape[0]}")
    B = C[5, :5, :5].T
    state = BalancedFlowState(
        case=1, a=float(B[0, 0]), A=B[1:, 1:].tolist(), eta=(-C[1:5, 1:5, 0]).tolist()
    )
    mismatch = float(np.abs(balanced_state_constants(state) - C).max())
    if mismatch > tol:
        raise ValidityError(f"Bracket is not a case-1 datum in the e_1, k1, e_6 layout (mismatch {mismatch:.3e})")
    return state


def _balanced_diagnostics(state: BalancedFlowState) -> Dict[str, float]:
    if state.case == 1:
        p, _ = balanced_case1_coefficients(state.A_matrix, state.eta_matrix)
        return {"p": p, "eta_sq": 0.5 * float(np.sum(state.eta_matrix**2))}
    return {"h": state.h, "k": state.k, "size": state.c**2 + state.p**2 + state.q**2}


def integrate_reduced(
    state: Union[PluriclosedCase2State, BalancedFlowState],
    settings: FlowSettings,
    normalized: bool = False,
) -> FlowTrajectory:
    """Integrate one of the reduced systems from ``state``.

    Raises:
        ValidityError: for a normalized run outside the abelian_k3 branch.
        NumericalError: on integrator failure or c reaching 0 on the sub2 branch.
    """
    if isinstance(state, PluriclosedCase2State):
        k = state.k
        names = state.columns()
        if state.branch == "abelian_k3":
            m = state.k3_dim

            def rhs(t: float, y: np.ndarray) -> np.ndarray:
                field, r = _abelian_k3_field(y, m, k)
                return field - r * y if normalized else field

        else:
            if normalized:
                raise ValidityError("The normalized reduced flow is defined on the abelian_k3 branch")

            def rhs(t: float, y: np.ndarray) -> np.ndarray:
                return _sub2_field(y)

        def diagnose(t: float, y: np.ndarray) -> Dict[str, float]:
            return _pluriclosed_diagnostics(state.with_vector(y), k)

        flow = f"pluriclosed-{state.branch}{'-normalized' if normalized else ''}"
    else:
        if normalized:
            raise ValidityError("Normalized reduced balanced flows are not available")
        names = state.columns()
        field = _balanced_case1_field if state.case == 1 else _balanced_case2_field

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            return field(y)

        def diagnose(t: float, y: np.ndarray) -> Dict[str, float]:
            return _balanced_diagnostics(state.with_vector(y))

        flow = f"balanced-case{state.case}"

    def describe(y: np.ndarray) -> Dict[str, float]:
        return dict(zip(names, map(float, y)))

    trajectory = integrate(rhs, state.to_vector(), settings, describe, diagnose, flow=flow)
    trajectory.limit_label = _reduced_limit_label(state, trajectory, normalized)
    return trajectory


def _reduced_limit_label(state, trajectory: FlowTrajectory, normalized: bool) -> Optional[str]:
    final = trajectory.final.state
    if isinstance(state, PluriclosedCase2State) and state.branch == "abelian_k3" and normalized:
        rest = [v for name, v in final.items() if name in ("v1", "v2") or name.startswith("v_")]
        if max(map(abs, rest), default=0.0) < 1e-3:
            return "expanding soliton"
    if trajectory.converged:
        return "stationary"
    return None


def monotone_violations(
    trajectory: FlowTrajectory, names: List[str], tol: float = 1e-10
) -> List[Tuple[str, float]]:
    """(name, t) wherever a column increases between consecutive samples."""
    out = []
    times = [s.t for s in trajectory.samples]
    for name in names:
        values = trajectory.column(name)
        for t, before, after in zip(times[1:], values, values[1:]):
            if after > before + tol * max(1.0, abs(before)):
                out.append((name, t))
    return out


# Closed forms


def pluriclosed_c(t, c0: float):
    """eta coefficient of mu(A, c) along the pluriclosed flow: c0 / sqrt(1 + 2 c0^2 t)."""
    return c0 / np.sqrt(1.0 + 2.0 * c0**2 * np.asarray(t, dtype=float))


def balanced_example(t, q0: float, r0: float, s0: float) -> Dict[str, np.ndarray]:
    """Balanced flow of df^1 = q0 (f^23 - f^45), rotations r0 on (f2, f3) and s0 on (f4, f5).

    q, r, s along the bracket flow, and u1, u2 with omega(t) = u1 f^16 + u2 (f^23 + f^45)
    along the direct metric flow.
    """
    base = 3.0 * q0**4 * np.asarray(t, dtype=float) + 1.0
    return {
        "q": q0 * base ** (-0.25),
        "r": r0 * base ** (1.0 / 12.0),
        "s": s0 * base ** (1.0 / 12.0),
        "u1": base ** (-1.0 / 6.0),
        "u2": base ** (1.0 / 6.0),
    }


def balanced_example_limit(q0: float, r0: float, s0: float) -> Dict[str, float]:
    """Limit of the example after rescaling to the initial bracket norm."""
    if r0 == 0 and s0 == 0:
        raise ValidityError("The normalized limit needs r0 or s0 nonzero")
    scale = np.sqrt(q0**2 + r0**2 + s0**2) / np.sqrt(r0**2 + s0**2)
    return {"q": 0.0, "r": float(r0 * scale), "s": float(s0 * scale)}


# Direct metric flow


def _metric_from_omega(Omega: np.ndarray, J: np.ndarray) -> np.ndarray:
    g = -J.T @ Omega
    return 0.5 * (g + g.T)


def metric_flow_direct(
    H0: HermitianStructure,
    flow: FlowKind,
    settings: FlowSettings,
    bv_factor: float = 1.0,
) -> FlowTrajectory:
    """Integrate omega' = -(rho^B)^{1,1} or omega' = q(omega) with the bracket and J fixed.

    Raises:
        ValidityError: if J is not integrable.
        NumericalError: if the metric degenerates (smallest eigenvalue below 1e-12).
    """
    H0.require_integrable()
    L, J, N = H0.algebra, H0.J, H0.dim

    def structure(y: np.ndarray) -> HermitianStructure:
        g = _metric_from_omega(KForm(N, 2, y).to_matrix(), J)
        smallest = float(np.linalg.eigvalsh(g).min())
        if smallest < METRIC_FLOOR:
            raise NumericalError(f"Metric degenerated: smallest eigenvalue {smallest:.3e}")
        try:
            return HermitianStructure(L, J, Metric(g), tol=1e-8)
        except ValidityError as e:
            raise NumericalError(f"Metric left the Hermitian cone: {e}")

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        H = structure(y)
        velocity = -p_form(H) if flow == "pluriclosed" else q_form(H, bv_factor)
        return velocity.coefficients

    def diagnose(t: float, y: np.ndarray) -> Dict[str, float]:
        H = structure(y)
        out = {"min_eig": float(np.linalg.eigvalsh(H.metric.g).min())}
        if flow == "pluriclosed":
            out["rho_norm"] = H.norm(ricci_tau(H, -1.0))
            out["skt_residual"] = skt_residual_real(H)
        else:
            out["balanced_residual"] = balanced_residual(H)
        return out

    pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]

    def describe(y: np.ndarray) -> Dict[str, float]:
        return {f"omega_{i + 1}{j + 1}": float(v) for (i, j), v in zip(pairs, y)}

    return integrate(rhs, H0.omega.coefficients, settings, describe, diagnose, flow=f"{flow}-metric")

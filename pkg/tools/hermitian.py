"""Almost-Hermitian structures on Lie algebras.

All metric-dependent quantities are computed in the orthonormal frame of the Cholesky
factor of g and mapped back to the original coframe.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import comb, factorial
from typing import Dict, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize

from tools.lie_core import LieAlgebra
from tools.multilinear import (
    KForm,
    Metric,
    derivation_extension,
    form_inner,
    fundamental_form,
    lefschetz_inverse,
    pullback,
    wedge,
    wedge_power,
)
from utils.errors import ValidityError

logger = logging.getLogger(__name__)

INTEGRABILITY_TOL = 1e-9


@dataclass(frozen=True)
class AlmostComplexStructure:
    """J with J^2 = -Id. Column j of ``matrix`` is J e_j."""

    matrix: np.ndarray
    tol: float = field(default=1e-10)

    def __post_init__(self):
        J = np.asarray(self.matrix, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] % 2:
            raise ValidityError(f"J must be an even square matrix, got shape {J.shape}")
        residual = float(np.abs(J @ J + np.eye(J.shape[0])).max())
        if residual > self.tol:
            raise ValidityError(f"J^2 != -Id (residual {residual:.3e})")
        object.__setattr__(self, "matrix", J)

    @classmethod
    def from_pairs(
        cls, dim: int, pairs: Sequence[Tuple[int, int, float]]
    ) -> "AlmostComplexStructure":
        """J e_i = s e_j and J e_j = -e_i / s for each (i, j, s), 0-based."""
        J = np.zeros((dim, dim))
        for i, j, s in pairs:
            J[j, i] = s
            J[i, j] = -1.0 / s
        return cls(J)

    @classmethod
    def standard(cls, dim: int) -> "AlmostComplexStructure":
        return cls.from_pairs(dim, [(2 * l, 2 * l + 1, 1.0) for l in range(dim // 2)])


@dataclass(frozen=True)
class GauduchonParams:
    """Point on the Gauduchon line; tau = -1 is Bismut, tau = 1 is Chern."""

    tau: float = -1.0

    @property
    def is_bismut(self) -> bool:
        return self.tau == -1.0

    @property
    def is_chern(self) -> bool:
        return self.tau == 1.0


def nijenhuis_tensor(constants: np.ndarray, J: np.ndarray) -> np.ndarray:
    """N[i, j] = [Je_i, Je_j] - J[Je_i, e_j] - J[e_i, Je_j] - [e_i, e_j]."""
    T1 = np.einsum("pi,qj,pqk->ijk", J, J, constants)
    T2 = np.einsum("mk,pi,pjk->ijm", J, J, constants)
    T3 = np.einsum("mk,qj,iqk->ijm", J, J, constants)
    return T1 - T2 - T3 - constants


class HermitianStructure:
    """(J, g) on a Lie algebra with fundamental form omega = g(J., .).

    Args:
        algebra: the Lie algebra.
        J: complex structure matrix or AlmostComplexStructure.
        g: Metric or matrix; identity when omitted.
        tol: compatibility tolerance for g(J., J.) = g.

    Raises:
        ValidityError: if J^2 != -Id or g is not J-compatible.
    """

    def __init__(self, algebra: LieAlgebra, J, g=None, tol: float = 1e-10):
        acs = J if isinstance(J, AlmostComplexStructure) else AlmostComplexStructure(J)
        if acs.matrix.shape[0] != algebra.dim:
            raise ValidityError(f"J has size {acs.matrix.shape[0]}, algebra has dim {algebra.dim}")
        if g is None:
            metric = Metric.identity(algebra.dim)
        elif isinstance(g, Metric):
            metric = g
        else:
            metric = Metric(np.asarray(g, dtype=float))
        mismatch = float(np.abs(acs.matrix.T @ metric.g @ acs.matrix - metric.g).max())
        if mismatch > tol * max(1.0, float(np.abs(metric.g).max())):
            raise ValidityError(f"g is not J-Hermitian (mismatch {mismatch:.3e})")
        self.algebra = algebra
        self.J = acs.matrix
        self.metric = metric
        self.tol = tol
        self._projectors: Dict[int, List[np.ndarray]] = {}
        self._partials: Dict[Tuple[int, bool], np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def complex_dim(self) -> int:
        return self.algebra.dim // 2

    @cached_property
    def omega(self) -> KForm:
        return fundamental_form(self.J, self.metric)

    @cached_property
    def frame_algebra(self) -> LieAlgebra:
        P = self.metric.frame
        C = np.einsum(
            "ia,jb,ijk,ck->abc", P, P, self.algebra.constants, self.metric.coframe
        )
        return LieAlgebra(C, name=self.algebra.name, check=False)

    @cached_property
    def frame_J(self) -> np.ndarray:
        return self.metric.coframe @ self.J @ self.metric.frame

    def to_frame(self, sigma: KForm) -> KForm:
        return self.metric.to_frame(sigma)

    def from_frame(self, sigma: KForm) -> KForm:
        return self.metric.from_frame(sigma)

    def norm(self, sigma: KForm) -> float:
        return float(np.linalg.norm(self.to_frame(sigma).coefficients))

    # Integrability and bidegrees

    @cached_property
    def nijenhuis(self) -> Tuple[np.ndarray, float]:
        N = nijenhuis_tensor(self.algebra.constants, self.J)
        return N, float(np.linalg.norm(N, axis=2).max(initial=0.0))

    @property
    def is_integrable(self) -> bool:
        return self.nijenhuis[1] < INTEGRABILITY_TOL

    def require_integrable(self) -> None:
        residual = self.nijenhuis[1]
        if residual >= INTEGRABILITY_TOL:
            raise ValidityError(f"J is not integrable (Nijenhuis residual {residual:.3e})")

    def _size(self, degree: int) -> int:
        return comb(self.dim, degree) if 0 <= degree <= self.dim else 0

    def bidegree_projectors(self, degree: int) -> List[np.ndarray]:
        """Frame projectors onto (p, degree - p) forms, p = 0..degree."""
        if degree not in self._projectors:
            D = derivation_extension(self.frame_J.T.astype(complex), degree)
            eigen = [1j * (2 * p - degree) for p in range(degree + 1)]
            identity = np.eye(self._size(degree), dtype=complex)
            projectors = []
            for p, lam in enumerate(eigen):
                proj = identity.copy()
                for q, other in enumerate(eigen):
                    if q != p:
                        proj = proj @ (D - other * identity) / (lam - other)
                projectors.append(proj)
            self._projectors[degree] = projectors
        return self._projectors[degree]

    def _partial_matrix(self, degree: int, bar: bool) -> np.ndarray:
        """Frame matrix of the (anti)holomorphic part of d on degree-k forms."""
        key = (degree, bar)
        if key not in self._partials:
            rows, cols = self._size(degree + 1), self._size(degree)
            out = np.zeros((rows, cols), dtype=complex)
            if rows and cols:
                d = self.frame_algebra.differential_matrix(degree)
                source = self.bidegree_projectors(degree)
                target = self.bidegree_projectors(degree + 1)
                for p, proj in enumerate(source):
                    q = p if bar else p + 1
                    out += target[q] @ d @ proj
            self._partials[key] = out
        return self._partials[key]

    def partial_matrix(self, degree: int) -> np.ndarray:
        return self._partial_matrix(degree, bar=False)

    def partial_bar_matrix(self, degree: int) -> np.ndarray:
        return self._partial_matrix(degree, bar=True)

    def _apply(self, matrix: np.ndarray, sigma: KForm, degree_shift: int) -> KForm:
        framed = self.to_frame(sigma)
        result = KForm(self.dim, sigma.degree + degree_shift, matrix @ framed.coefficients)
        return self.from_frame(result)

    def partial(self, sigma: KForm) -> KForm:
        self.require_integrable()
        return self._apply(self.partial_matrix(sigma.degree), sigma, 1)

    def partial_bar(self, sigma: KForm) -> KForm:
        self.require_integrable()
        return self._apply(self.partial_bar_matrix(sigma.degree), sigma, 1)

    def partial_adjoint(self, sigma: KForm) -> KForm:
        return self._apply(self.partial_matrix(sigma.degree - 1).conj().T, sigma, -1)

    def partial_bar_adjoint(self, sigma: KForm) -> KForm:
        return self._apply(self.partial_bar_matrix(sigma.degree - 1).conj().T, sigma, -1)

    def bott_chern_matrix(self, degree: int) -> np.ndarray:
        """Frame matrix of the modified Bott-Chern Laplacian on degree-k forms."""
        self.require_integrable()
        k = degree
        P, Pb = self.partial_matrix, self.partial_bar_matrix

        def adj(m: np.ndarray) -> np.ndarray:
            return m.conj().T

        terms = [
            P(k - 1) @ Pb(k - 2) @ adj(Pb(k - 2)) @ adj(P(k - 1)),
            adj(Pb(k)) @ adj(P(k + 1)) @ P(k + 1) @ Pb(k),
            adj(Pb(k)) @ P(k) @ adj(P(k)) @ Pb(k),
            adj(P(k)) @ Pb(k) @ adj(Pb(k)) @ P(k),
            adj(Pb(k)) @ Pb(k),
            adj(P(k)) @ P(k),
        ]
        return sum(terms)

    def bott_chern_laplacian(self, sigma: KForm) -> KForm:
        return self._apply(self.bott_chern_matrix(sigma.degree), sigma, 0)

    def __repr__(self) -> str:
        return f"HermitianStructure(algebra={self.algebra.name!r}, dim={self.dim})"


def nijenhuis(H: HermitianStructure) -> Tuple[np.ndarray, float]:
    return H.nijenhuis


def dc(H: HermitianStructure, sigma: KForm) -> KForm:
    """d^c = i(dbar - d) via the bidegree split; real input gives real output."""
    H.require_integrable()
    k = sigma.degree
    matrix = 1j * (H.partial_bar_matrix(k) - H.partial_matrix(k))
    result = H._apply(matrix, sigma, 1)
    if not np.iscomplexobj(sigma.coefficients):
        imag = float(np.abs(result.coefficients.imag).max(initial=0.0))
        if imag > 1e-9:
            raise ValidityError(f"d^c of a real form has imaginary part {imag:.3e}")
        return result.real
    return result


def dc_real(H: HermitianStructure, sigma: KForm) -> KForm:
    """J^{-1} d J on real forms, J acting by pullback."""
    return pullback(H.algebra.d(pullback(sigma, H.J)), -H.J)


def skt_residual(H: HermitianStructure) -> float:
    return H.norm(H.algebra.d(dc(H, H.omega)))


def skt_residual_real(H: HermitianStructure) -> float:
    return H.norm(H.algebra.d(dc_real(H, H.omega)))


def kahler_residual(H: HermitianStructure) -> float:
    H.require_integrable()
    return H.norm(H.algebra.d(H.omega))


def balanced_residual(H: HermitianStructure) -> float:
    H.require_integrable()
    return H.norm(H.algebra.d(wedge_power(H.omega, H.complex_dim - 1)))


def lee_form(H: HermitianStructure) -> KForm:
    """theta(X) = -tr ad_X + 1/2 g(sum_l [e_l, J e_l], J X)."""
    C, J = H.frame_algebra.constants, H.frame_J
    traces = np.einsum("ajj->a", C)
    S = np.einsum("pl,lpk->k", J, C)
    theta = -traces + 0.5 * (J.T @ S)
    return H.from_frame(KForm(H.dim, 1, theta))


def theta_tau(H: HermitianStructure, tau: float) -> KForm:
    """Gauduchon 1-form with d theta^tau the Ricci form of the tau-connection."""
    C, J = H.frame_algebra.constants, H.frame_J
    traces = np.einsum("ajj->a", C)
    ad_j = np.einsum("ajk,jk->a", C, J)
    omega_d = -0.5 * np.einsum("ji,ija->a", J, C)
    theta = 0.5 * (ad_j - tau * (J.T @ traces) + (tau - 1.0) * omega_d)
    return H.from_frame(KForm(H.dim, 1, theta))


def ricci_tau(H: HermitianStructure, tau: float) -> KForm:
    return H.algebra.d(theta_tau(H, tau))


def ricci_11(H: HermitianStructure, rho: KForm) -> KForm:
    """(1,1)-part 1/2 (rho + rho(J., J.))."""
    return 0.5 * (rho + pullback(rho, H.J))


def gauduchon_ricci_oracle(H: HermitianStructure, tau: float = -1.0) -> KForm:
    """Ricci form of the tau-connection from its curvature, independent of theta^tau."""
    C, J = H.frame_algebra.constants, H.frame_J
    domega = H.to_frame(H.algebra.d(H.omega)).to_tensor()
    T = np.einsum("pqr,pa,qb,rk->abk", domega, J, J, J)
    Cterm = -np.einsum("pbk,pa->abk", domega, J)
    levi_civita = 0.5 * (
        C - np.einsum("bka->abk", C) + np.einsum("kab->abk", C)
    )
    conn = levi_civita + 0.25 * (1 - tau) * T + 0.25 * (1 + tau) * Cterm
    gamma = np.einsum("abk->akb", conn)
    curvature = (
        np.einsum("akl,blm->abkm", gamma, gamma)
        - np.einsum("bkl,alm->abkm", gamma, gamma)
        - np.einsum("abc,ckm->abkm", C, gamma)
    )
    rho = -0.5 * np.einsum("abkl,kl->ab", curvature, J)
    return H.from_frame(KForm.from_matrix(rho))


def bismut_ricci_oracle(H: HermitianStructure) -> KForm:
    H.require_integrable()
    return gauduchon_ricci_oracle(H, tau=-1.0)


def angle_theta_hat(
    H: HermitianStructure, n1_basis: np.ndarray, nilradical_basis: np.ndarray
) -> float:
    """Smaller angle between the lines J n^1 and the g-orthogonal complement of n."""
    n1 = np.asarray(n1_basis, dtype=float).reshape(H.dim, -1)
    nil = np.asarray(nilradical_basis, dtype=float).reshape(H.dim, -1)
    if n1.shape[1] != 1 or nil.shape[1] != H.dim - 1:
        raise ValidityError(
            f"angle_theta_hat needs dim n^1 = 1 and codim n = 1, got {n1.shape[1]} and {H.dim - nil.shape[1]}"
        )
    annihilator = linalg.null_space(nil.T)
    if annihilator.shape[1] != 1:
        raise ValidityError("Nilradical basis is rank deficient")
    normal = H.metric.sharp(KForm(H.dim, 1, annihilator[:, 0]))
    jv = H.J @ n1[:, 0]
    g = H.metric
    cosine = abs(g.inner(jv, normal)) / np.sqrt(g.inner(jv, jv) * g.inner(normal, normal))
    return float(np.arccos(np.clip(cosine, 0.0, 1.0)))


class SearchResult(NamedTuple):
    structure: Optional[HermitianStructure]
    residual: float
    restart: int


def _search_objective(
    constants: np.ndarray, J0: np.ndarray, target: str
) -> Tuple[float, float]:
    """Scale-free Nijenhuis and target residuals for bracket ``constants`` with (J0, Id)."""
    scale = float(np.linalg.norm(constants))
    if scale < 1e-14:
        return 0.0, 0.0
    mu = constants / scale
    L = LieAlgebra(mu, check=False)
    N = nijenhuis_tensor(mu, J0)
    omega = KForm.from_matrix(J0.T)
    if target == "skt":
        value = L.d(pullback(L.d(omega), -J0)).norm()
    else:
        n = J0.shape[0] // 2
        value = L.d(wedge_power(omega, n - 1)).norm()
    return float(np.linalg.norm(N)), float(value)


def structure_search(
    L: LieAlgebra,
    target: Literal["skt", "balanced"],
    restarts: int = 5,
    iters: int = 200,
    seed: int = 0,
    initial_guesses: Optional[Sequence[np.ndarray]] = None,
    accept: float = 1e-6,
) -> SearchResult:
    """Minimise Nijenhuis^2 + target^2 over (h J0 h^-1, h^-T h^-1). A miss certifies nothing."""
    if L.dim % 2:
        raise ValidityError("structure_search needs an even-dimensional algebra")
    if target not in ("skt", "balanced"):
        raise ValidityError(f"Unknown search target: {target}")
    n = L.dim
    J0 = AlmostComplexStructure.standard(n).matrix
    rng = np.random.default_rng(seed)
    guesses = [np.asarray(h, dtype=float) for h in (initial_guesses or [])]

    def combined(h: np.ndarray) -> float:
        nij, tgt = _search_objective(
            np.einsum("ia,jb,ijk,ck->abc", h, h, L.constants, linalg.inv(h)), J0, target
        )
        return nij**2 + tgt**2

    def objective(x: np.ndarray) -> float:
        h = x.reshape(n, n)
        if abs(np.linalg.det(h)) < 1e-10:
            return 1e6
        return combined(h) + 1e-12 * np.linalg.cond(h) ** 2

    def gradient(x: np.ndarray, step: float = 1e-5) -> np.ndarray:
        grad = np.zeros_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = step
            grad[i] = (objective(x + e) - objective(x - e)) / (2 * step)
        return grad

    best = SearchResult(None, np.inf, -1)
    best_h = None
    for restart in range(restarts):
        if restart < len(guesses):
            h0 = guesses[restart]
        elif restart == len(guesses):
            h0 = np.eye(n)
        else:
            h0 = np.eye(n) + 0.5 * rng.standard_normal((n, n))
        result = optimize.minimize(
            objective, h0.ravel(), jac=gradient, method="BFGS", options={"maxiter": iters}
        )
        h = result.x.reshape(n, n)
        residual = np.sqrt(combined(h)) if abs(np.linalg.det(h)) > 1e-10 else np.inf
        logger.debug(f"structure_search {L.name} restart {restart}: residual {residual:.3e}")
        if residual < best.residual:
            best, best_h = SearchResult(None, float(residual), restart), h

    if best_h is not None and best.residual < accept:
        hinv = linalg.inv(best_h)
        structure = HermitianStructure(
            L, best_h @ J0 @ hinv, hinv.T @ hinv, tol=1e-8
        )
        logger.info(f"structure_search {L.name}: found {target} structure, residual {best.residual:.3e}")
        return SearchResult(structure, best.residual, best.restart)
    logger.info(f"structure_search {L.name}: plateau residual {best.residual:.3e} (not a certificate)")
    return best


def is_symmetric_11(H: HermitianStructure, sigma: KForm, tol: float = 1e-10) -> bool:
    return (pullback(sigma, H.J) - sigma).norm() < tol


def inner(H: HermitianStructure, alpha: KForm, beta: KForm):
    return form_inner(alpha, beta, H.metric)

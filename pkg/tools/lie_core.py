"""Lie algebras given by structure constants.

``constants[i, j, k]`` is c^k_{ij}, so that [f_i, f_j] = sum_k c^k_{ij} f_k. Exterior
derivatives follow d(alpha)(X, Y) = -alpha([X, Y]).
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from scipy import linalg

from tools.multilinear import (
    KForm,
    derivation_extension,
    multi_indices,
    sort_with_sign,
    wedge_matrix,
)
from utils.errors import ValidityError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


def act(A: np.ndarray, constants: np.ndarray) -> np.ndarray:
    """(A.mu)(X, Y) = A mu(X, Y) - mu(AX, Y) - mu(X, AY) on structure constants."""
    return (
        np.einsum("mk,ijk->ijm", A, constants)
        - np.einsum("pi,pjm->ijm", A, constants)
        - np.einsum("qj,iqm->ijm", A, constants)
    )


def _orth(vectors: np.ndarray, dim: int, tol: float) -> np.ndarray:
    if vectors.size == 0:
        return np.zeros((dim, 0))
    return linalg.orth(vectors, rcond=tol)


class LieAlgebra:
    """Finite-dimensional real Lie algebra.

    Args:
        constants: array of shape (n, n, n), antisymmetric in the first two slots.
        name: label used in reports.
        tol: absolute tolerance for antisymmetry and Jacobi.
        check: verify Jacobi at construction.
        exact: optional {(i, j, k): sympy number} with i < j, used by ``exact_jacobi``.

    Raises:
        ValidityError: if the constants are not antisymmetric or violate Jacobi.
    """

    def __init__(
        self,
        constants: np.ndarray,
        name: str = "",
        tol: float = DEFAULT_TOL,
        check: bool = True,
        exact: Optional[Dict[Tuple[int, int, int], Any]] = None,
    ):
        C = np.array(constants, dtype=float)
        if C.ndim != 3 or len(set(C.shape)) != 1:
            raise ValidityError(f"Structure constants must have shape (n, n, n), got {C.shape}")
        if np.abs(C + C.transpose(1, 0, 2)).max(initial=0.0) > tol:
            raise ValidityError("Structure constants are not antisymmetric")
        C.setflags(write=False)
        self.constants = C
        self.name = name
        self.tol = tol
        self.exact = exact
        self._differentials: Dict[int, np.ndarray] = {}
        if check:
            residual = self.jacobi_residual()
            if residual > tol:
                raise ValidityError(
                    f"Jacobi identity fails for {name or 'algebra'}: residual {residual:.3e}"
                )

    @classmethod
    def abelian(cls, dim: int, name: str = "") -> "LieAlgebra":
        return cls(np.zeros((dim, dim, dim)), name=name or f"R{dim}", exact={})

    @classmethod
    def from_structure_equations(
        cls,
        equations: Sequence[Mapping[Tuple[int, int], Any]],
        name: str = "",
        tol: float = DEFAULT_TOL,
        check: bool = True,
    ) -> "LieAlgebra":
        """Build from df^k = sum D^k_{ij} f^{ij} given as [{(i, j): D^k_{ij}}, ...] (0-based).

        Sympy numbers are kept for exact Jacobi checking; floats disable the exact record.
        """
        n = len(equations)
        exact: Dict[Tuple[int, int, int], Any] = {}
        for k, terms in enumerate(equations):
            for (i, j), coeff in terms.items():
                srt, sign = sort_with_sign((i, j))
                if sign == 0 or max(srt) >= n:
                    raise ValidityError(f"Invalid index pair {(i, j)} in df^{k + 1}")
                key = (srt[0], srt[1], k)
                exact[key] = exact.get(key, 0) - sign * sp.sympify(coeff)
        C = np.zeros((n, n, n))
        for (i, j, k), value in exact.items():
            C[i, j, k] = float(value)
            C[j, i, k] = -float(value)
        is_exact = all(
            value.is_number and not value.has(sp.Float) for value in exact.values()
        )
        return cls(C, name=name, tol=tol, check=check, exact=exact if is_exact else None)

    @property
    def dim(self) -> int:
        return self.constants.shape[0]

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.constants)

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ad_x; column j is [x, f_j]."""
        return np.einsum("i,ijk->kj", np.asarray(x, dtype=float), self.constants)

    def norm(self) -> float:
        return float(np.linalg.norm(self.constants) / np.sqrt(2.0))

    def jacobi_tensor(self) -> np.ndarray:
        T = np.einsum("abk,kcm->abcm", self.constants, self.constants)
        return T + np.einsum("bcam->abcm", T) + np.einsum("cabm->abcm", T)

    def jacobi_residual(self) -> float:
        return float(np.linalg.norm(self.jacobi_tensor(), axis=3).max(initial=0.0))

    def exact_jacobi(self) -> bool:
        """Symbolic Jacobi check on the exact constants. Raises if none are recorded."""
        if self.exact is None:
            raise ValidityError(f"{self.name or 'algebra'} has no exact structure constants")
        n = self.dim

        def c(i: int, j: int, k: int):
            if i == j:
                return 0
            if i < j:
                return self.exact.get((i, j, k), 0)
            return -self.exact.get((j, i, k), 0)

        for a, b, cc in multi_indices(n, 3):
            for m in range(n):
                total = sum(
                    c(a, b, k) * c(k, cc, m)
                    + c(b, cc, k) * c(k, a, m)
                    + c(cc, a, k) * c(k, b, m)
                    for k in range(n)
                )
                total = sp.expand(total)
                if total != 0 and sp.simplify(total) != 0:
                    logger.debug(f"Exact Jacobi fails at {(a, b, cc, m)}")
                    return False
        return True

    def differential_matrix(self, degree: int) -> np.ndarray:
        """Matrix of d on degree-k coefficients, d = 1/2 sum_a e^a ^ theta(e_a)."""
        if degree not in self._differentials:
            n = self.dim
            total = None
            for a in range(n):
                W = wedge_matrix(KForm.basis(n, (a,)), degree)
                L = derivation_extension(-self.constants[a], degree)
                term = W @ L
                total = term if total is None else total + term
            self._differentials[degree] = 0.5 * total
        return self._differentials[degree]

    def d(self, sigma: KForm) -> KForm:
        return ce_differential(self, sigma)

    def structure_equations(self) -> List[KForm]:
        """[df^1, ..., df^n]."""
        return [self.d(KForm.basis(self.dim, (k,))) for k in range(self.dim)]

    def derivation_residual(self, D: np.ndarray) -> float:
        return float(np.abs(act(np.asarray(D, dtype=float), self.constants)).max(initial=0.0))

    def change_basis(self, P: np.ndarray, name: Optional[str] = None) -> "LieAlgebra":
        """Constants in the basis whose vectors are the columns of P."""
        P = np.asarray(P, dtype=float)
        Pinv = linalg.inv(P)
        C = np.einsum("ia,jb,ijk,ck->abc", P, P, self.constants, Pinv)
        return LieAlgebra(C, name=name or self.name, tol=max(self.tol, 1e-9))

    def __repr__(self) -> str:
        return f"LieAlgebra(name={self.name!r}, dim={self.dim})"


def ce_differential(L: LieAlgebra, sigma: KForm) -> KForm:
    if sigma.dim != L.dim:
        raise ValidityError(f"Form of dim {sigma.dim} on algebra of dim {L.dim}")
    D = L.differential_matrix(sigma.degree)
    return KForm(L.dim, sigma.degree + 1, D @ sigma.coefficients)


def jacobi_residual(L: LieAlgebra) -> float:
    return L.jacobi_residual()


@dataclass(frozen=True)
class Derivation:
    """A derivation D of ``algebra``; checked against the Leibniz rule on creation."""

    algebra: LieAlgebra
    matrix: np.ndarray
    tol: float = field(default=DEFAULT_TOL)

    def __post_init__(self):
        D = np.asarray(self.matrix, dtype=float)
        if D.shape != (self.algebra.dim, self.algebra.dim):
            raise ValidityError(f"Derivation matrix has shape {D.shape}")
        residual = self.algebra.derivation_residual(D)
        if residual > self.tol:
            raise ValidityError(f"Not a derivation: Leibniz residual {residual:.3e}")
        object.__setattr__(self, "matrix", D)


@dataclass(frozen=True)
class Filtration:
    """Nested subspaces, each an orthonormal column basis."""

    subspaces: Tuple[np.ndarray, ...]

    @property
    def dims(self) -> List[int]:
        return [s.shape[1] for s in self.subspaces]

    @property
    def is_nilpotent(self) -> bool:
        return self.dims[-1] == 0


def _project_out(basis: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    if basis.shape[1] == 0:
        return vectors
    return vectors - basis @ (basis.T @ vectors)


def check_ideal(L: LieAlgebra, basis: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """Residual of [g, V] inside V; raises ValidityError above tol."""
    V = _orth(np.asarray(basis, dtype=float), L.dim, tol)
    images = np.einsum("ijk,jv->kiv", L.constants, V).reshape(L.dim, -1)
    residual = float(np.abs(_project_out(V, images)).max(initial=0.0))
    if residual > tol:
        raise ValidityError(f"Subspace is not an ideal: residual {residual:.3e}")
    return residual


def descending_central_series(
    L: LieAlgebra, ideal_basis: np.ndarray, tol: float = DEFAULT_TOL
) -> Filtration:
    """n^0 = n, n^l = [n, n^{l-1}] until the dimension stops dropping."""
    n0 = _orth(np.asarray(ideal_basis, dtype=float), L.dim, tol)
    layers = [n0]
    while layers[-1].shape[1] > 0:
        current = layers[-1]
        brackets = np.einsum("ia,jb,ijk->kab", n0, current, L.constants).reshape(L.dim, -1)
        nxt = _orth(brackets, L.dim, tol) if np.abs(brackets).max(initial=0.0) > tol else np.zeros((L.dim, 0))
        if nxt.shape[1] == current.shape[1]:
            break
        layers.append(nxt)
    return Filtration(tuple(layers))


def is_strongly_unimodular(
    L: LieAlgebra, nilradical_basis: np.ndarray, tol: float = 1e-9
) -> Tuple[bool, float]:
    """tr(ad_X on n^l / n^{l+1}) = 0 for every basis vector X and every layer."""
    check_ideal(L, nilradical_basis, tol=max(tol, L.tol))
    series = descending_central_series(L, nilradical_basis)
    worst = 0.0
    for upper, lower in zip(series.subspaces, series.subspaces[1:] + (np.zeros((L.dim, 0)),)):
        complement = _project_out(lower, upper)
        if np.abs(complement).max(initial=0.0) < tol:
            continue
        Q = _orth(complement, L.dim, tol)
        for x in np.eye(L.dim):
            trace = float(np.trace(Q.T @ L.ad(x) @ Q))
            worst = max(worst, abs(trace))
    return worst < tol, worst


def is_unimodular(L: LieAlgebra, tol: float = 1e-9) -> Tuple[bool, float]:
    traces = np.einsum("ijj->i", L.constants)
    worst = float(np.abs(traces).max(initial=0.0))
    return worst < tol, worst


def semidirect_extend(
    n: LieAlgebra, D: np.ndarray, name: str = "", tol: float = DEFAULT_TOL
) -> LieAlgebra:
    """n x_D R with new last basis vector e and [e, x] = D x."""
    derivation = Derivation(n, D, tol=tol)
    m = n.dim
    C = np.zeros((m + 1, m + 1, m + 1))
    C[:m, :m, :m] = n.constants
    C[m, :m, :m] = derivation.matrix.T
    C[:m, m, :m] = -derivation.matrix.T
    return LieAlgebra(C, name=name, tol=max(tol, n.tol))


def ad_spectrum_type_I(
    L: LieAlgebra, X: Optional[np.ndarray] = None, tol: float = 1e-9
) -> bool:
    """All eigenvalues of ad_X purely imaginary; X defaults to the last basis vector."""
    if X is None:
        X = np.eye(L.dim)[-1]
    eigenvalues = linalg.eigvals(L.ad(X))
    return bool(np.all(np.abs(eigenvalues.real) < tol))


def matrix_exp(M: np.ndarray) -> np.ndarray:
    return linalg.expm(np.asarray(M, dtype=float))


def closed_two_forms(L: LieAlgebra, tol: float = 1e-10) -> np.ndarray:
    """Columns span the kernel of d on 2-forms."""
    return linalg.null_space(L.differential_matrix(2), rcond=tol)


def symplectic_probe(
    L: LieAlgebra, samples: int = 1000, seed: int = 0, tol: float = 1e-8
) -> Optional[KForm]:
    """Random search for a closed non-degenerate 2-form. A miss certifies nothing."""
    n = L.dim
    if n % 2:
        raise ValidityError("symplectic_probe needs an even-dimensional algebra")
    Z = closed_two_forms(L)
    if Z.shape[1] == 0:
        logger.info(f"{L.name}: no closed 2-forms")
        return None

    def nondegenerate(coeffs: np.ndarray) -> bool:
        matrix = KForm(n, 2, coeffs).to_matrix()
        scale = np.linalg.norm(coeffs) ** n
        return abs(np.linalg.det(matrix)) > tol * scale

    standard = KForm(n, 2)
    for l in range(n // 2):
        standard = standard + KForm.basis(n, (2 * l, 2 * l + 1))
    if L.d(standard).is_zero(1e-10):
        logger.info(f"{L.name}: standard form is symplectic")
        return standard

    rng = np.random.default_rng(seed)
    for sample in range(samples):
        coeffs = Z @ rng.standard_normal(Z.shape[1])
        if nondegenerate(coeffs):
            logger.info(f"{L.name}: symplectic form found at sample {sample}")
            return KForm(n, 2, coeffs)
    logger.info(f"{L.name}: no symplectic form after {samples} samples")
    return None

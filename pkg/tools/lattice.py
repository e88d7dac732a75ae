"""Integrality of exp(t0 D) for almost nilpotent algebras n x_D R."""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from models.model import LatticeCertificate
from tools.almost_nilpotent import rotation_blocks, skt_eq_family
from tools.lie_core import LieAlgebra, matrix_exp
from utils.errors import ValidityError

logger = logging.getLogger(__name__)

LATTICE_TOL = 1e-9
SKT_EQ_T0 = float(np.log(2.0 + np.sqrt(3.0)))


def lattice_check(D: np.ndarray, basis: np.ndarray, t0: float, tol: float = LATTICE_TOL) -> LatticeCertificate:
    """exp(t0 D) in the basis given by the columns of ``basis``.

    The certificate passes when every entry lies within ``tol`` of an integer and
    |det| = 1.

    Raises:
        ValidityError: if the basis is not invertible or shapes disagree.
    """
    D = np.asarray(D, dtype=float)
    P = np.asarray(basis, dtype=float)
    if D.shape != P.shape or D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValidityError(f"D and basis must be square of equal size, got {D.shape} and {P.shape}")
    if abs(np.linalg.det(P)) < 1e-12:
        raise ValidityError("Lattice basis is not invertible")
    E = linalg.solve(P, matrix_exp(t0 * D) @ P)
    rounded = np.rint(E)
    deviation = float(np.abs(E - rounded).max(initial=0.0))
    determinant = float(np.linalg.det(E))
    passed = deviation < tol and abs(abs(determinant) - 1.0) < tol
    logger.info(f"lattice check at t0 = {t0:.12g}: deviation {deviation:.3e}, det {determinant:.12g}")
    return LatticeCertificate(
        basis=P.tolist(),
        t0=float(t0),
        matrix=rounded.astype(int).tolist(),
        deviation=deviation,
        determinant=determinant,
        passed=passed,
    )


def nilradical_derivation(L: LieAlgebra) -> np.ndarray:
    """D = ad_{e_top} restricted to span(e_1, ..., e_{top-1})."""
    m = L.dim - 1
    return L.ad(np.eye(L.dim)[-1])[:m, :m]


def skt_eq_lattice_basis(n: int) -> np.ndarray:
    """f'_1 = -sqrt3/6 f_1, f'_2 = sqrt3/6 (-f_2 + f_3), f'_3 = 1/2 (f_2 + f_3) + sqrt3/3 (-f_2 + f_3),
    f'_l = f_l otherwise; columns are the new vectors."""
    if n < 2:
        raise ValidityError(f"n must be at least 2, got {n}")
    s = np.sqrt(3.0)
    P = np.eye(2 * n - 1)
    P[:3, :3] = [
        [-s / 6.0, 0.0, 0.0],
        [0.0, -s / 6.0, 0.5 - s / 3.0],
        [0.0, s / 6.0, 0.5 + s / 3.0],
    ]
    return P


def skt_eq_lattice(n: int) -> Tuple[LieAlgebra, LatticeCertificate]:
    """Certificate for the SKT family with every rotation speed 2 pi / ln(2 + sqrt 3)."""
    L, _ = skt_eq_family([2.0 * np.pi / SKT_EQ_T0] * (n - 2))
    return L, lattice_check(nilradical_derivation(L), skt_eq_lattice_basis(n), SKT_EQ_T0)


def solve_gk_lattice_params(m: int, n: int, tol: float = LATTICE_TOL) -> Optional[Tuple[float, float, float]]:
    """(p, t0, q) with exp(t0 diag(1, C_p - 1/2 Id)) of characteristic polynomial x^3 - m x^2 + n x - 1.

    Needs one real root lam > 1 and a non-real conjugate pair; returns None otherwise or
    when cos(p t0) would leave [-1, 1].
    """
    roots = np.roots([1.0, -float(m), float(n), -1.0])
    real = [float(r.real) for r in roots if abs(r.imag) < 1e-12]
    if len(real) != 1 or real[0] <= 1.0 + tol:
        logger.info(f"(m, n) = ({m}, {n}): no admissible root pattern")
        return None
    lam = real[0]
    t0 = float(np.log(lam))
    cosine = (m - lam) / (2.0 * lam ** (-0.5))
    if abs(cosine) > 1.0:
        return None
    p = float(np.arccos(cosine)) / t0
    q = 2.0 * np.pi / t0
    block = _gk_block(p)
    char = np.poly(matrix_exp(t0 * block))
    residual = float(np.abs(char - np.array([1.0, -m, n, -1.0])).max())
    if residual > 1e-8:
        logger.warning(f"(m, n) = ({m}, {n}): characteristic polynomial residual {residual:.3e}")
        return None
    return p, t0, q


def _gk_block(p: float) -> np.ndarray:
    block = np.zeros((3, 3))
    block[0, 0] = 1.0
    block[1:, 1:] = rotation_blocks([p]) - 0.5 * np.eye(2)
    return block


def gk_derivation(N: int, p: float, q: float) -> np.ndarray:
    """diag(1, C_p - 1/2 Id, C_q, ..., C_q) on a nilradical of dimension 2N - 1."""
    if N < 4:
        raise ValidityError(f"N must be at least 4, got {N}")
    D = np.zeros((2 * N - 1, 2 * N - 1))
    D[:3, :3] = _gk_block(p)
    D[3:, 3:] = rotation_blocks([q] * (N - 2))
    return D


def gk_lattice(m: int, n: int, N: int = 4) -> Optional[LatticeCertificate]:
    """Certificate for A^{p,q}_{2N} with (p, t0, q) from ``solve_gk_lattice_params``.

    The basis on the first block is the Krylov basis (v, Xv, X^2 v) of X = exp(t0 block),
    in which X is the integer companion matrix of x^3 - m x^2 + n x - 1.
    """
    params = solve_gk_lattice_params(m, n)
    if params is None:
        return None
    p, t0, q = params
    X = matrix_exp(t0 * _gk_block(p))
    v = np.array([1.0, 1.0, 0.0])
    basis = np.eye(2 * N - 1)
    basis[:3, :3] = np.column_stack([v, X @ v, X @ X @ v])
    return lattice_check(gk_derivation(N, p, q), basis, t0)

"""Complexified brackets, generalized Kahler triples and holomorphic Poisson bivectors.

The (1,0)-basis is Z_l = x_l - i J x_l (not normalized), with x_l picked greedily from
e_1, e_2, ... so that span(x, Jx) grows. Bivectors of type (2,0) are stored over
Z_k ^ Z_l, k < l.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from tools.almost_nilpotent import streq_skt
from tools.hermitian import AlmostComplexStructure, HermitianStructure, dc_real
from tools.lie_core import LieAlgebra
from tools.multilinear import KVector, Metric, derivation_extension, multi_indices, pushforward
from utils.errors import ValidityError

logger = logging.getLogger(__name__)

KERNEL_RCOND = 1e-9


class Bivector20(KVector):
    """(2,0)-bivector: complex coefficients over Z_k ^ Z_l, k < l."""

    @classmethod
    def from_kvector(cls, vector: KVector) -> "Bivector20":
        if vector.degree != 2:
            raise ValidityError("A (2,0)-bivector has degree 2")
        return cls(vector.dim, 2, vector.coefficients.astype(complex))


def select_10_basis(J: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Real vectors x_l (columns) with x_1, Jx_1, x_2, Jx_2, ... a basis."""
    dim = J.shape[0]
    chosen: List[np.ndarray] = []
    span = np.zeros((dim, 0))
    for k in range(dim):
        x = np.eye(dim)[:, k]
        candidate = np.column_stack([span, x, J @ x])
        if np.linalg.matrix_rank(candidate, tol=tol) == span.shape[1] + 2:
            chosen.append(x)
            span = candidate
        if span.shape[1] == dim:
            break
    return np.column_stack(chosen)


class ComplexifiedAlgebra:
    """g tensor C in the basis W = (Z_1, ..., Z_n, Zbar_1, ..., Zbar_n).

    Args:
        algebra: the real Lie algebra.
        J: complex structure matrix or AlmostComplexStructure.
    """

    def __init__(self, algebra: LieAlgebra, J, tol: float = 1e-10):
        acs = J if isinstance(J, AlmostComplexStructure) else AlmostComplexStructure(J)
        if acs.matrix.shape[0] != algebra.dim:
            raise ValidityError("J and the algebra have different dimensions")
        self.algebra = algebra
        self.J = acs.matrix
        self.tol = tol
        self.n = algebra.dim // 2
        X = select_10_basis(self.J, tol)
        Z = X - 1j * (self.J @ X)
        self.W = np.column_stack([Z, Z.conj()])
        self.W_inv = linalg.inv(self.W)

    @property
    def Z(self) -> np.ndarray:
        return self.W[:, : self.n]

    @cached_property
    def constants(self) -> np.ndarray:
        """Cc[a, b, c]: [W_a, W_b] = sum_c Cc[a, b, c] W_c."""
        return np.einsum(
            "ia,jb,ijk,ck->abc", self.W, self.W, self.algebra.constants, self.W_inv
        )

    @property
    def integrability_residual(self) -> float:
        """Size of the (0,1)-part of [g^{1,0}, g^{1,0}]."""
        n = self.n
        return float(np.abs(self.constants[:n, :n, n:]).max(initial=0.0))

    @property
    def is_integrable(self) -> bool:
        return self.integrability_residual < 1e-9

    def require_integrable(self) -> None:
        if not self.is_integrable:
            raise ValidityError(
                f"J is not integrable: [g^(1,0), g^(1,0)] has (0,1)-part {self.integrability_residual:.3e}"
            )

    def conjugation_residual(self) -> float:
        """max |conj([W_a, W_b]) - [conj W_a, conj W_b]|."""
        n = self.n
        swap = np.r_[n : 2 * n, 0:n]
        C = self.constants
        return float(np.abs(C[np.ix_(swap, swap, swap)] - C.conj()).max(initial=0.0))

    def bracket10(self, a: int, b: int) -> np.ndarray:
        """(1,0)-components of [Z_a, Z_b]."""
        return self.constants[a, b, : self.n]

    def to_complex(self, vector: np.ndarray) -> np.ndarray:
        """Components of a real or complex vector in the W basis."""
        return self.W_inv @ np.asarray(vector)

    def dbar_operator(self, xbar: np.ndarray) -> np.ndarray:
        """Matrix of Y -> [Xbar, Y]^{1,0} on g^{1,0}, Xbar = sum_a x_a Zbar_a."""
        n = self.n
        x = np.asarray(xbar, dtype=complex)
        return np.einsum("a,abc->cb", x, self.constants[n:, :n, :n])


def dbar_bivector(C: ComplexifiedAlgebra, xbar: np.ndarray, sigma: KVector) -> Bivector20:
    """dbar_X(Y ^ Z) = [X, Y]^{1,0} ^ Z + Y ^ [X, Z]^{1,0} for X of type (0,1)."""
    C.require_integrable()
    if sigma.dim != C.n or sigma.degree != 2:
        raise ValidityError(f"Expected a bivector over {C.n} (1,0)-vectors")
    M = derivation_extension(C.dbar_operator(xbar), 2)
    return Bivector20(C.n, 2, M @ sigma.coefficients.astype(complex))


def dbar_matrix(C: ComplexifiedAlgebra) -> np.ndarray:
    """The maps dbar_{Zbar_l} on Lambda^2 g^{1,0}, stacked over l."""
    C.require_integrable()
    blocks = [derivation_extension(C.dbar_operator(np.eye(C.n)[l]), 2) for l in range(C.n)]
    return np.vstack(blocks)


def _wedge3(vector: np.ndarray, i: int, j: int, n: int) -> np.ndarray:
    """Coefficients of v ^ Z_i ^ Z_j over sorted triples."""
    out = np.zeros(len(multi_indices(n, 3)), dtype=complex)
    positions = {idx: pos for pos, idx in enumerate(multi_indices(n, 3))}
    for k, value in enumerate(vector):
        if value == 0 or len({k, i, j}) < 3:
            continue
        perm = (k, i, j)
        srt = tuple(sorted(perm))
        inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
        out[positions[srt]] += (-1) ** inversions * value
    return out


def schouten(C: ComplexifiedAlgebra, sigma: KVector, tau: KVector) -> KVector:
    """Schouten bracket of two (2,0)-bivectors, a (3,0)-vector.

    On decomposables [Z_a ^ Z_b, Z_c ^ Z_d] = [Z_a, Z_c] ^ Z_b ^ Z_d - [Z_a, Z_d] ^ Z_b ^ Z_c
    - [Z_b, Z_c] ^ Z_a ^ Z_d + [Z_b, Z_d] ^ Z_a ^ Z_c.
    """
    n = C.n
    pairs = multi_indices(n, 2)
    out = np.zeros(len(multi_indices(n, 3)), dtype=complex)
    s, t = sigma.coefficients, tau.coefficients
    for p, (a, b) in enumerate(pairs):
        if s[p] == 0:
            continue
        for q, (c, d) in enumerate(pairs):
            if t[q] == 0:
                continue
            term = (
                _wedge3(C.bracket10(a, c), b, d, n)
                - _wedge3(C.bracket10(a, d), b, c, n)
                - _wedge3(C.bracket10(b, c), a, d, n)
                + _wedge3(C.bracket10(b, d), a, c, n)
            )
            out += s[p] * t[q] * term
    return KVector(n, 3, out)


def schouten_form(C: ComplexifiedAlgebra, basis: Sequence[KVector]) -> np.ndarray:
    """S[i, j] = [b_i, b_j] as (3,0)-coefficients, shape (k, k, C(n, 3))."""
    k = len(basis)
    size = len(multi_indices(C.n, 3))
    S = np.zeros((k, k, size), dtype=complex)
    for i, j in itertools.product(range(k), repeat=2):
        S[i, j] = schouten(C, basis[i], basis[j]).coefficients
    return S


def dbar_kernel(C: ComplexifiedAlgebra) -> np.ndarray:
    """Columns span the holomorphic (2,0)-bivectors."""
    return linalg.null_space(dbar_matrix(C), rcond=KERNEL_RCOND)


def _unit_phase(v: np.ndarray) -> np.ndarray:
    """v / |v| with its largest coefficient real and positive."""
    v = v / np.linalg.norm(v)
    top = v[np.argmax(np.abs(v))]
    return v * (abs(top) / top)


def _quadratic(S: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("a,b,abc->c", y, y, S)


def poisson_lines(S: np.ndarray, tol: float = 1e-9) -> List[np.ndarray]:
    """Unit y with sum y_a y_b S[a, b] = 0, searched on the lines of each coordinate plane.

    Complete when S has at most two coordinates. The returned directions are pairwise
    non-parallel.
    """
    m = S.shape[0]
    found: List[np.ndarray] = []

    def keep(y: np.ndarray) -> None:
        if np.linalg.norm(_quadratic(S, y)) > tol * max(1.0, float(np.vdot(y, y).real)):
            return
        y = _unit_phase(y)
        if all(abs(np.vdot(u, y)) < 1.0 - 1e-9 for u in found):
            found.append(y)

    eye = np.eye(m, dtype=complex)
    for a in range(m):
        keep(eye[a])
    for a, b in itertools.combinations(range(m), 2):
        # Q(e_b + t e_a) = t^2 S_aa + 2t S_ab + S_bb
        coefficients = np.stack([S[a, a], S[a, b] + S[b, a], S[b, b]])
        lead = int(np.argmax(np.abs(coefficients).max(axis=0)))
        if np.abs(coefficients[:, lead]).max() < tol:
            continue
        poly = np.where(np.abs(coefficients[:, lead]) < tol, 0.0, coefficients[:, lead])
        for t in np.roots(poly):
            if abs(t) > tol:
                keep(eye[b] + t * eye[a])
    return found


def holomorphic_poisson_space(
    C: ComplexifiedAlgebra, tol: float = 1e-9, kernel: Optional[np.ndarray] = None
) -> List[Bivector20]:
    """Holomorphic bivectors with [sigma, sigma] = 0.

    The Poisson set inside V = ker dbar is R + P, where R is the radical of the Schouten
    pairing on V and P the Poisson cone of a complement. Returned are an orthonormal basis
    of R followed by one unit vector per Poisson line of the complement. The complement is
    spanned by the right singular vectors of the pairing, so the result does not depend on
    the basis of V. When the pairing vanishes R = V.

    Args:
        kernel: columns spanning V, orthonormalized first; ``dbar_kernel(C)`` when omitted.
    """
    kernel = dbar_kernel(C) if kernel is None else linalg.orth(np.asarray(kernel, dtype=complex))
    k = kernel.shape[1]
    if k == 0:
        logger.info(f"{C.algebra.name}: no holomorphic (2,0)-bivectors")
        return []
    S = schouten_form(C, [Bivector20(C.n, 2, kernel[:, i]) for i in range(k)])
    # rows (i, c), columns j
    pairing = S.transpose(0, 2, 1).reshape(-1, k)
    _, singular, Vh = linalg.svd(pairing)
    rank = int(np.sum(singular > tol))
    directions = Vh.conj().T
    radical = [_unit_phase(kernel @ directions[:, j]) for j in range(rank, k)]
    W = directions[:, :rank]
    lines = poisson_lines(np.einsum("ia,jb,ijc->abc", W, W, S), tol) if rank else []
    poisson = radical + [_unit_phase(kernel @ (W @ y)) for y in lines]
    logger.info(
        f"{C.algebra.name}: holomorphic space of dim {k}, Poisson radical of dim {len(radical)}, "
        f"{len(lines)} further Poisson lines"
    )
    return [Bivector20(C.n, 2, v) for v in poisson]


def poisson_residual(C: ComplexifiedAlgebra, sigma: KVector) -> Tuple[float, float]:
    """(||dbar sigma||, ||[sigma, sigma]||)."""
    dbar = float(np.linalg.norm(dbar_matrix(C) @ sigma.coefficients))
    return dbar, schouten(C, sigma, sigma).norm()


def membership_residual(kernel: np.ndarray, sigma: KVector) -> float:
    """Distance of sigma from the column span of ``kernel``."""
    v = sigma.coefficients.astype(complex)
    if kernel.shape[1] == 0:
        return float(np.linalg.norm(v))
    return float(np.linalg.norm(v - kernel @ (kernel.conj().T @ v)))


# Generalized Kahler


@dataclass
class GKStructure:
    """
    Triple (J+, J-, g) on a Lie algebra.

    Fields:
    - algebra: the Lie algebra.
    - J_plus, J_minus: complex structure matrices.
    - g: metric matrix, Hermitian for both.
    """

    algebra: LieAlgebra
    J_plus: np.ndarray
    J_minus: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.plus = HermitianStructure(self.algebra, self.J_plus, self.g)
        self.minus = HermitianStructure(self.algebra, self.J_minus, self.g)

    @property
    def metric(self) -> Metric:
        return self.plus.metric

    def torsion(self) -> Dict[str, object]:
        """H+ = d^c_+ omega_+ and H- = d^c_- omega_-."""
        for H in (self.plus, self.minus):
            H.require_integrable()
        return {
            "plus": dc_real(self.plus, self.plus.omega),
            "minus": dc_real(self.minus, self.minus.omega),
        }


def gk_residual(S: GKStructure) -> float:
    """||d^c_+ omega_+ + d^c_- omega_-|| + ||d d^c_+ omega_+||."""
    H = S.torsion()
    return S.plus.norm(H["plus"] + H["minus"]) + S.plus.norm(S.algebra.d(H["plus"]))


def commutator(S: GKStructure) -> np.ndarray:
    return S.J_plus @ S.J_minus - S.J_minus @ S.J_plus


def is_split(S: GKStructure, tol: float = 1e-10) -> Tuple[bool, np.ndarray]:
    K = commutator(S)
    return bool(np.abs(K).max(initial=0.0) < tol), K


def commutator_bivector(S: GKStructure) -> KVector:
    """[J+, J-] g^{-1} with components pi^{ij} = (K g^{-1})_{ji}."""
    K = commutator(S)
    return KVector.from_matrix((K @ linalg.inv(S.g)).T)


def poisson_candidate(S: GKStructure) -> Bivector20:
    """(2,0)-part with respect to J+ of [J+, J-] g^{-1}, over the Z-basis of J+."""
    C = ComplexifiedAlgebra(S.algebra, S.J_plus)
    pi = commutator_bivector(S)
    full = pushforward(KVector(pi.dim, 2, pi.coefficients.astype(complex)), C.W_inv)
    n = C.n
    positions = {idx: pos for pos, idx in enumerate(multi_indices(2 * n, 2))}
    coeffs = np.array([full.coefficients[positions[idx]] for idx in multi_indices(n, 2)])
    return Bivector20(n, 2, coeffs)


def gk_family(n: int, p: float, q: float) -> GKStructure:
    """Non-split GK structure on df^1 = f^{1,2n}, df^2 = -1/2 f^{2,2n} + p f^{3,2n},
    df^3 = -p f^{2,2n} - 1/2 f^{3,2n}, df^{2l+2} = q f^{2l+3,2n}, df^{2l+3} = -q f^{2l+2,2n}."""
    if n < 4:
        raise ValidityError(f"The GK family needs n >= 4, got {n}")
    N = 2 * n
    top = N - 1
    equations: List[Dict[Tuple[int, int], float]] = [{} for _ in range(N)]
    equations[0] = {(0, top): 1.0}
    equations[1] = {(1, top): -0.5, (2, top): p}
    equations[2] = {(1, top): -p, (2, top): -0.5}
    for l in range(1, n - 1):
        equations[2 * l + 1] = {(2 * l + 2, top): q}
        equations[2 * l + 2] = {(2 * l + 1, top): -q}
    L = LieAlgebra.from_structure_equations(equations, name=f"A^{{{p},{q}}}_{N}")
    tail = [(2 * l + 5, 2 * l + 6, 1.0) for l in range(1, n - 3)]
    plus = AlmostComplexStructure.from_pairs(
        N, [(0, top, 1.0), (1, 2, 1.0), (3, 4, 1.0), (5, 6, -1.0)] + tail
    )
    minus = AlmostComplexStructure.from_pairs(
        N, [(0, top, 1.0), (1, 2, -1.0), (3, 6, -1.0), (4, 5, 1.0)] + tail
    )
    return GKStructure(L, plus.matrix, minus.matrix, np.eye(N))


def streq6(c: float, b1: float, b2: float) -> Tuple[LieAlgebra, HermitianStructure]:
    """Six-dimensional SKT algebra df^1 = c f^{23}, df^2 = b1 f^{36}, df^3 = -b1 f^{26},
    df^4 = b2 f^{56}, df^5 = -b2 f^{46}."""
    L, H = streq_skt(c, [b1, b2])
    L.name = "streq6"
    return L, H

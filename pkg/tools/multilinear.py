"""Exterior algebra over a real n-dimensional inner-product space.

Forms and multivectors are stored densely over strictly increasing multi-indices,
in the lexicographic order of ``itertools.combinations``. Coefficients may be real or
complex; complex coefficients are only produced by the bidegree machinery.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import comb
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from utils.errors import NumericalError, ValidityError

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]


@lru_cache(maxsize=None)
def multi_indices(dim: int, degree: int) -> Tuple[MultiIndex, ...]:
    return tuple(itertools.combinations(range(dim), degree))


@lru_cache(maxsize=None)
def index_positions(dim: int, degree: int) -> Dict[MultiIndex, int]:
    return {idx: pos for pos, idx in enumerate(multi_indices(dim, degree))}


def sort_with_sign(indices: Sequence[int]) -> Tuple[Optional[MultiIndex], int]:
    """Sort a multi-index, returning the permutation sign (0 on a repeated index)."""
    if len(set(indices)) < len(indices):
        return None, 0
    inversions = sum(
        1
        for a in range(len(indices))
        for b in range(a + 1, len(indices))
        if indices[a] > indices[b]
    )
    return tuple(sorted(indices)), (-1) ** inversions


class _Alternating:
    """Shared storage for KForm and KVector."""

    __array_ufunc__ = None

    def __init__(self, dim: int, degree: int, coefficients: Optional[Iterable] = None):
        if dim < 0 or degree < 0:
            raise ValidityError(f"Invalid dim/degree: {dim}, {degree}")
        self.dim = int(dim)
        self.degree = int(degree)
        size = comb(self.dim, self.degree)
        if coefficients is None:
            self.coefficients = np.zeros(size)
        else:
            arr = np.asarray(coefficients)
            if not np.iscomplexobj(arr):
                arr = arr.astype(float)
            if arr.shape != (size,):
                raise ValidityError(
                    f"Expected {size} coefficients for degree {degree} in dim {dim}, got {arr.shape}"
                )
            self.coefficients = arr

    @classmethod
    def zero(cls, dim: int, degree: int):
        return cls(dim, degree)

    @classmethod
    def basis(cls, dim: int, indices: Sequence[int], coefficient: complex = 1.0):
        """The element e^{i1...ik} (0-based indices, any order, sign-adjusted)."""
        out = cls(dim, len(indices))
        srt, sign = sort_with_sign(tuple(indices))
        if sign == 0:
            return out
        if any(i < 0 or i >= dim for i in srt):
            raise ValidityError(f"Index out of range in {tuple(indices)} for dim {dim}")
        if np.iscomplexobj(coefficient):
            out.coefficients = out.coefficients.astype(complex)
        out.coefficients[index_positions(dim, len(srt))[srt]] = sign * coefficient
        return out

    @classmethod
    def from_dict(cls, dim: int, degree: int, terms: Dict[MultiIndex, complex]):
        out = cls(dim, degree)
        for idx, value in terms.items():
            if len(idx) != degree:
                raise ValidityError(f"Index {idx} has wrong length for degree {degree}")
            out = out + cls.basis(dim, idx, value)
        return out

    @classmethod
    def from_matrix(cls, matrix: np.ndarray):
        """2-form (or bivector) from an antisymmetric matrix of its values."""
        matrix = np.asarray(matrix)
        n = matrix.shape[0]
        coeffs = np.array([matrix[i, j] for i, j in multi_indices(n, 2)])
        return cls(n, 2, coeffs)

    def to_matrix(self) -> np.ndarray:
        if self.degree != 2:
            raise ValidityError("to_matrix is only defined in degree 2")
        out = np.zeros((self.dim, self.dim), dtype=self.coefficients.dtype)
        for pos, (i, j) in enumerate(multi_indices(self.dim, 2)):
            out[i, j] = self.coefficients[pos]
            out[j, i] = -self.coefficients[pos]
        return out

    def to_tensor(self) -> np.ndarray:
        """Fully antisymmetric array of shape (dim,)*degree."""
        out = np.zeros((self.dim,) * self.degree, dtype=self.coefficients.dtype)
        for pos, idx in enumerate(multi_indices(self.dim, self.degree)):
            for perm in itertools.permutations(range(self.degree)):
                _, sign = sort_with_sign(perm)
                out[tuple(idx[p] for p in perm)] = sign * self.coefficients[pos]
        return out

    def __getitem__(self, indices: Sequence[int]):
        srt, sign = sort_with_sign(tuple(indices))
        if sign == 0:
            return 0.0
        return sign * self.coefficients[index_positions(self.dim, self.degree)[srt]]

    def to_dict(self, tol: float = 1e-12) -> Dict[MultiIndex, complex]:
        return {
            idx: self.coefficients[pos]
            for pos, idx in enumerate(multi_indices(self.dim, self.degree))
            if abs(self.coefficients[pos]) > tol
        }

    def _check_compatible(self, other: "_Alternating") -> None:
        if type(self) is not type(other):
            raise ValidityError(f"Cannot combine {type(self).__name__} and {type(other).__name__}")
        if self.dim != other.dim or self.degree != other.degree:
            raise ValidityError(
                f"Shape mismatch: ({self.dim},{self.degree}) vs ({other.dim},{other.degree})"
            )

    def __add__(self, other):
        self._check_compatible(other)
        return type(self)(self.dim, self.degree, self.coefficients + other.coefficients)

    def __sub__(self, other):
        self._check_compatible(other)
        return type(self)(self.dim, self.degree, self.coefficients - other.coefficients)

    def __neg__(self):
        return type(self)(self.dim, self.degree, -self.coefficients)

    def __mul__(self, scalar):
        return type(self)(self.dim, self.degree, self.coefficients * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return type(self)(self.dim, self.degree, self.coefficients / scalar)

    def conj(self):
        return type(self)(self.dim, self.degree, np.conj(self.coefficients))

    @property
    def real(self):
        return type(self)(self.dim, self.degree, np.real(self.coefficients))

    @property
    def imag(self):
        return type(self)(self.dim, self.degree, np.imag(self.coefficients))

    def norm(self) -> float:
        """Coefficient norm; the metric norm when the basis is orthonormal."""
        return float(np.linalg.norm(self.coefficients))

    def is_zero(self, tol: float = 1e-12) -> bool:
        return self.norm() <= tol

    def __repr__(self) -> str:
        terms = ", ".join(
            f"{''.join(str(i + 1) for i in idx) or '1'}: {value:.6g}"
            for idx, value in self.to_dict().items()
        )
        return f"{type(self).__name__}(dim={self.dim}, degree={self.degree}, {{{terms}}})"


class KForm(_Alternating):
    """A k-form; ``KForm.basis(n, (1, 2))`` is e^{23} in 1-based notation."""

    def evaluate(self, vectors: np.ndarray):
        """sigma(X_1, ..., X_k) for the columns X_j of ``vectors``."""
        vectors = np.asarray(vectors).reshape(self.dim, self.degree)
        total = 0.0
        for pos, idx in enumerate(multi_indices(self.dim, self.degree)):
            total = total + self.coefficients[pos] * np.linalg.det(vectors[list(idx), :])
        return total

    def wedge(self, other: "KForm") -> "KForm":
        return wedge(self, other)


class KVector(_Alternating):
    """A k-vector; contraction with forms is the coefficient pairing."""

    def pair(self, form: KForm):
        if form.dim != self.dim or form.degree != self.degree:
            raise ValidityError("KVector/KForm pairing needs equal dim and degree")
        return np.dot(form.coefficients, self.coefficients)


@lru_cache(maxsize=None)
def _wedge_table(dim: int, p: int, q: int):
    pos = index_positions(dim, p + q)
    rows_a, rows_b, target, signs = [], [], [], []
    for a, left in enumerate(multi_indices(dim, p)):
        for b, right in enumerate(multi_indices(dim, q)):
            srt, sign = sort_with_sign(left + right)
            if sign:
                rows_a.append(a)
                rows_b.append(b)
                target.append(pos[srt])
                signs.append(sign)
    return (
        np.array(rows_a, dtype=int),
        np.array(rows_b, dtype=int),
        np.array(target, dtype=int),
        np.array(signs, dtype=float),
    )


def wedge(alpha: _Alternating, beta: _Alternating) -> _Alternating:
    if alpha.dim != beta.dim:
        raise ValidityError(f"Dimension mismatch in wedge: {alpha.dim} vs {beta.dim}")
    if type(alpha) is not type(beta):
        raise ValidityError("Cannot wedge a form with a multivector")
    degree = alpha.degree + beta.degree
    dtype = np.result_type(alpha.coefficients, beta.coefficients)
    out = np.zeros(comb(alpha.dim, degree), dtype=dtype)
    if degree <= alpha.dim:
        ia, ib, target, signs = _wedge_table(alpha.dim, alpha.degree, beta.degree)
        np.add.at(out, target, signs * alpha.coefficients[ia] * beta.coefficients[ib])
    return type(alpha)(alpha.dim, degree, out)


def wedge_power(alpha: KForm, power: int) -> KForm:
    out = KForm(alpha.dim, 0, [1.0])
    for _ in range(power):
        out = wedge(out, alpha)
    return out


def wedge_matrix(psi: _Alternating, degree: int) -> np.ndarray:
    """Matrix of sigma -> psi ^ sigma on degree-``degree`` coefficients."""
    n = psi.dim
    out_degree = psi.degree + degree
    out = np.zeros(
        (comb(n, out_degree), comb(n, degree)), dtype=psi.coefficients.dtype
    )
    if out_degree <= n:
        ia, ib, target, signs = _wedge_table(n, psi.degree, degree)
        np.add.at(out, (target, ib), signs * psi.coefficients[ia])
    return out


def compound(matrix: np.ndarray, degree: int) -> np.ndarray:
    """k-th compound matrix: minors det(M[I, J]) over sorted multi-indices."""
    matrix = np.asarray(matrix)
    n = matrix.shape[0]
    if degree == 0:
        return np.ones((1, 1), dtype=matrix.dtype)
    idx = np.array(multi_indices(n, degree), dtype=int)
    if idx.size == 0:
        return np.zeros((0, 0), dtype=matrix.dtype)
    sub = matrix[idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(sub)


def pullback(sigma: KForm, matrix: np.ndarray) -> KForm:
    """(M^* sigma)(X_1, ...) = sigma(M X_1, ...)."""
    coeffs = compound(matrix, sigma.degree).T @ sigma.coefficients
    return KForm(sigma.dim, sigma.degree, coeffs)


def pushforward(vector: KVector, matrix: np.ndarray) -> KVector:
    coeffs = compound(matrix, vector.degree) @ vector.coefficients
    return KVector(vector.dim, vector.degree, coeffs)


@lru_cache(maxsize=None)
def _derivation_table(dim: int, degree: int):
    pos = index_positions(dim, degree)
    rows, cols, ii, jj, signs = [], [], [], [], []
    for col, idx in enumerate(multi_indices(dim, degree)):
        for slot, j in enumerate(idx):
            for i in range(dim):
                srt, sign = sort_with_sign(idx[:slot] + (i,) + idx[slot + 1 :])
                if sign:
                    rows.append(pos[srt])
                    cols.append(col)
                    ii.append(i)
                    jj.append(j)
                    signs.append(sign)
    return tuple(np.array(x, dtype=int) for x in (rows, cols, ii, jj)) + (
        np.array(signs, dtype=float),
    )


def derivation_extension(matrix: np.ndarray, degree: int) -> np.ndarray:
    """Extend a linear map on 1-form coefficients to degree-k coefficients as a derivation."""
    matrix = np.asarray(matrix)
    n = matrix.shape[0]
    size = comb(n, degree)
    out = np.zeros((size, size), dtype=matrix.dtype)
    if degree == 0 or size == 0:
        return out
    rows, cols, ii, jj, signs = _derivation_table(n, degree)
    np.add.at(out, (rows, cols), signs * matrix[ii, jj])
    return out


@dataclass(frozen=True)
class Metric:
    """Positive definite inner product g, with the Cholesky coframe g = h^T h.

    Fields:
    - g: symmetric positive definite n x n array.
    - tol: eigenvalue floor below which g counts as degenerate.
    """

    g: np.ndarray
    tol: float = field(default=1e-12)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValidityError(f"Metric must be a square matrix, got shape {g.shape}")
        if not np.allclose(g, g.T, atol=1e-12):
            raise ValidityError("Metric must be symmetric")
        g = 0.5 * (g + g.T)
        smallest = float(np.linalg.eigvalsh(g).min())
        if smallest <= self.tol:
            raise ValidityError(f"Degenerate metric: smallest eigenvalue {smallest:.3e}")
        object.__setattr__(self, "g", g)

    @classmethod
    def identity(cls, dim: int) -> "Metric":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    @cached_property
    def coframe(self) -> np.ndarray:
        """h with g = h^T h; rows are an orthonormal coframe."""
        return linalg.cholesky(self.g, lower=False)

    @cached_property
    def frame(self) -> np.ndarray:
        """h^{-1}; columns are an orthonormal frame."""
        return linalg.solve_triangular(self.coframe, np.eye(self.dim), lower=False)

    def to_frame(self, sigma: KForm) -> KForm:
        return pullback(sigma, self.frame)

    def from_frame(self, sigma: KForm) -> KForm:
        return pullback(sigma, self.coframe)

    def flat(self, vector: np.ndarray) -> KForm:
        return KForm(self.dim, 1, self.g @ np.asarray(vector, dtype=float))

    def sharp(self, alpha: KForm) -> np.ndarray:
        return linalg.solve(self.g, alpha.coefficients, assume_a="pos")

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.asarray(x) @ self.g @ np.asarray(y))


def hodge_star(sigma: KForm, g: Metric, orientation: int = 1) -> KForm:
    """*e^I = sgn(I, I^c) e^{I^c} in the orthonormal coframe of g."""
    if orientation not in (1, -1):
        raise ValidityError("orientation must be +1 or -1")
    n = sigma.dim
    framed = g.to_frame(sigma)
    pos = index_positions(n, n - sigma.degree)
    out = np.zeros(comb(n, n - sigma.degree), dtype=framed.coefficients.dtype)
    for k, idx in enumerate(multi_indices(n, sigma.degree)):
        rest = tuple(i for i in range(n) if i not in idx)
        _, sign = sort_with_sign(idx + rest)
        out[pos[rest]] += orientation * sign * framed.coefficients[k]
    return g.from_frame(KForm(n, n - sigma.degree, out))


def form_inner(alpha: KForm, beta: KForm, g: Metric):
    if alpha.degree != beta.degree or alpha.dim != beta.dim:
        raise ValidityError(
            f"Degree mismatch in inner product: {alpha.degree} vs {beta.degree}"
        )
    value = np.vdot(g.to_frame(beta).coefficients, g.to_frame(alpha).coefficients)
    return float(value.real) if abs(value.imag) < 1e-15 else value


def fundamental_form(J: np.ndarray, g: Metric) -> KForm:
    """omega = g(J., .)."""
    return KForm.from_matrix(np.asarray(J).T @ g.g)


def form_trace(sigma: KForm, J: np.ndarray, g: Metric) -> float:
    if sigma.degree != 2:
        raise ValidityError("form_trace expects a 2-form")
    return form_inner(sigma, fundamental_form(J, g), g)


def contract(psi: KForm, sigma: KForm, g: Metric) -> KForm:
    """Metric adjoint of psi ^ . : <contract(psi, sigma), beta> = <sigma, psi ^ beta>."""
    degree = sigma.degree - psi.degree
    if degree < 0 or psi.dim != sigma.dim:
        raise ValidityError(
            f"Cannot contract degree {sigma.degree} by degree {psi.degree}"
        )
    W = wedge_matrix(g.to_frame(psi), degree)
    framed = KForm(sigma.dim, degree, W.conj().T @ g.to_frame(sigma).coefficients)
    return g.from_frame(framed)


def lefschetz_inverse(psi: KForm, sigma: KForm, tol: float = 1e-8) -> KForm:
    """Solve psi ^ beta = sigma for beta by least squares."""
    degree = sigma.degree - psi.degree
    if degree < 0:
        raise ValidityError("lefschetz_inverse: target degree below source degree")
    W = wedge_matrix(psi, degree)
    if np.iscomplexobj(sigma.coefficients):
        W = W.astype(complex)
    solution, *_ = np.linalg.lstsq(W, sigma.coefficients, rcond=None)
    residual = float(np.linalg.norm(W @ solution - sigma.coefficients))
    if residual > tol * (1.0 + float(np.linalg.norm(sigma.coefficients))):
        raise NumericalError(f"Lefschetz inverse not solvable, residual {residual:.3e}")
    return KForm(sigma.dim, degree, solution)

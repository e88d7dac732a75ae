import os
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    Field,
    ValidationInfo,
    computed_field,
    field_validator,
    model_validator,
)

Matrix = List[List[float]]
Vector = List[float]

SEED_ENV = "HERMLIE_SEED"


def _square(value: Matrix, size: int, name: str) -> Matrix:
    if size == 0:
        return []
    arr = np.asarray(value, dtype=float) if value else np.zeros((size, size))
    if arr.shape != (size, size):
        raise ValueError(f"{name} must be {size}x{size}, got shape {arr.shape}")
    return arr.tolist()


def _vector(value: Vector, size: int, name: str) -> Vector:
    arr = np.asarray(value, dtype=float) if value else np.zeros(size)
    if arr.shape != (size,):
        raise ValueError(f"{name} must have length {size}, got {arr.shape}")
    return arr.tolist()


def _antisymmetric(value: Matrix, name: str, tol: float = 1e-12) -> None:
    arr = np.asarray(value, dtype=float)
    if arr.size and np.abs(arr + arr.T).max() > tol:
        raise ValueError(f"{name} must be antisymmetric")


class RunConfig(BaseModel):
    """
    Settings for one CLI invocation.

    Fields:
    - command: CLI sub-command.
    - target: catalog name or input file for the algebra.
    - params: parameter bindings from ``--params k=v,...``.
    - t_max: final flow time.
    - tolerance: integrator local error tolerance.
    - output: output path (CSV trajectory or JSON report).
    - seed: RNG seed; ``HERMLIE_SEED`` overrides it in ``from_env``.
    - json_output: emit machine-readable JSON instead of tables.
    - flow: pluriclosed or balanced, for the flow command.
    - reduced: integrate the reduced ODE instead of the full bracket flow.
    - normalized: subtract the scaling component of the flow.
    - restarts, iterations: structure-search knobs.
    - bv_factor: factor on the Bott-Chern summand of the balanced flow.
    """

    command: str = Field(..., min_length=1, description="CLI sub-command")
    target: Optional[str] = Field(None, description="Catalog name or input file")
    params: Dict[str, float] = Field(default_factory=dict, description="Parameter bindings")
    t_max: float = Field(1.0, description="Final flow time")
    tolerance: float = Field(1e-8, description="Integrator local error tolerance")
    output: Optional[str] = Field(None, description="Output path")
    seed: int = Field(0, description="RNG seed")
    json_output: bool = Field(False, description="Emit JSON")
    flow: Optional[Literal["pluriclosed", "balanced"]] = Field(None, description="Flow type")
    reduced: bool = Field(False, description="Use the reduced ODE")
    normalized: bool = Field(False, description="Normalized flow")
    restarts: int = Field(5, description="Structure search restarts")
    iterations: int = Field(200, description="Structure search iterations per restart")
    bv_factor: float = Field(1.0, description="Balanced flow Bott-Chern factor")

    @field_validator("t_max")
    @classmethod
    def validate_t_max(cls, value: float) -> float:
        if value <= 0:
            raise ValueError(f"t_max must be positive, got {value}")
        return value

    @field_validator("tolerance")
    @classmethod
    def validate_tolerance(cls, value: float) -> float:
        if not 0 < value <= 1e-2:
            raise ValueError(f"tolerance must lie in (0, 1e-2], got {value}")
        return value

    @field_validator("restarts", "iterations")
    @classmethod
    def validate_positive(cls, value: int, info: ValidationInfo) -> int:
        if value < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return value

    @classmethod
    def from_env(cls, **kwargs: Any) -> "RunConfig":
        seed = os.environ.get(SEED_ENV)
        if seed is not None and seed.strip():
            try:
                kwargs["seed"] = int(seed)
            except ValueError:
                raise ValueError(f"{SEED_ENV} must be an integer, got {seed!r}")
        return cls(**kwargs)


class Case1Data(BaseModel):
    """
    Algebraic data (a, beta, A, eta) of an almost nilpotent algebra with J n^1 orthogonal to n.

    Basis e_1, ..., e_{2n}; k1 = span(e_2, ..., e_{2n-1}) has local indices 0..2n-3.

    Fields:
    - n: complex dimension.
    - a: eigenvalue of B on e_1.
    - beta: 1-form on k1 (row of B on e_1); empty means zero.
    - A: endomorphism of k1; empty means zero.
    - eta: 2-form on k1 as an antisymmetric matrix.
    - allow_zero_eta: permit eta = 0 (flow limits only).
    """

    n: int = Field(..., ge=2, description="Complex dimension")
    a: float = Field(0.0, description="B e_1 = a e_1")
    beta: Vector = Field(default_factory=list, description="1-form on k1")
    A: Matrix = Field(default_factory=list, description="Endomorphism of k1")
    eta: Matrix = Field(..., description="2-form on k1")
    allow_zero_eta: bool = Field(False, description="Allow eta = 0")

    @model_validator(mode="after")
    def validate_shapes(self) -> "Case1Data":
        k = 2 * self.n - 2
        self.beta = _vector(self.beta, k, "beta")
        self.A = _square(self.A, k, "A")
        self.eta = _square(self.eta, k, "eta")
        _antisymmetric(self.eta, "eta")
        if not self.allow_zero_eta and np.abs(self.eta_matrix).max() < 1e-14:
            raise ValueError("eta must be nonzero (dim n^1 = 1)")
        return self

    @property
    def k1_dim(self) -> int:
        return 2 * self.n - 2

    @property
    def beta_vector(self) -> np.ndarray:
        return np.asarray(self.beta, dtype=float)

    @property
    def A_matrix(self) -> np.ndarray:
        return np.asarray(self.A, dtype=float)

    @property
    def eta_matrix(self) -> np.ndarray:
        return np.asarray(self.eta, dtype=float)


class Case2Data(BaseModel):
    """
    Algebraic data of an almost nilpotent algebra with J n^1 inside n.

    Basis e_1, e_2, k3 = span(e_3, ..., e_{2n-2}), e_{2n-1}, e_{2n}; vectors and forms on
    k3 use local indices 0..2n-5. Empty vectors and matrices mean zero.

    Fields:
    - a, a1, a2, p1, p2, v1, v2, lam: scalars.
    - v, w: vectors in k3.
    - alpha, beta, gamma, delta, nu: 1-forms on k3.
    - A: endomorphism of k3.
    - xi: 2-form on k3 as an antisymmetric matrix.
    """

    n: int = Field(..., ge=2, description="Complex dimension")
    a: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    v1: float = 0.0
    v2: float = 0.0
    lam: float = Field(0.0, description="eta(e_2, e_{2n-1})")
    v: Vector = Field(default_factory=list)
    w: Vector = Field(default_factory=list)
    alpha: Vector = Field(default_factory=list)
    beta: Vector = Field(default_factory=list)
    gamma: Vector = Field(default_factory=list)
    delta: Vector = Field(default_factory=list)
    nu: Vector = Field(default_factory=list)
    A: Matrix = Field(default_factory=list)
    xi: Matrix = Field(default_factory=list)
    allow_zero_eta: bool = False

    @model_validator(mode="after")
    def validate_shapes(self) -> "Case2Data":
        m = self.k3_dim
        for name in ("v", "w", "alpha", "beta", "gamma", "delta", "nu"):
            setattr(self, name, _vector(getattr(self, name), m, name))
        for name in ("A", "xi"):
            setattr(self, name, _square(getattr(self, name), m, name))
        _antisymmetric(self.xi, "xi")
        return self

    @property
    def k3_dim(self) -> int:
        return 2 * self.n - 4

    def vec(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float).reshape(self.k3_dim)

    def mat(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float).reshape(self.k3_dim, self.k3_dim)


class ReducedSktCase1(BaseModel):
    """
    Reduced SKT datum mu(A, c): A in u(k1), eta = c e^{23}.

    Fields:
    - n: complex dimension.
    - A: skew endomorphism of k1 commuting with the standard J on k1.
    - c: nonzero coefficient of eta.
    """

    n: int = Field(..., ge=2)
    A: Matrix = Field(default_factory=list)
    c: float = Field(..., description="eta = c e^{23}")

    @field_validator("c")
    @classmethod
    def validate_c(cls, value: float) -> float:
        if value == 0:
            raise ValueError("c must be nonzero")
        return value

    @model_validator(mode="after")
    def validate_unitary(self) -> "ReducedSktCase1":
        k = 2 * self.n - 2
        self.A = _square(self.A, k, "A")
        A = np.asarray(self.A, dtype=float)
        Jk = np.zeros((k, k))
        for l in range(k // 2):
            Jk[2 * l + 1, 2 * l], Jk[2 * l, 2 * l + 1] = 1.0, -1.0
        if np.abs(A + A.T).max() > 1e-10:
            raise ValueError("A must be skew-symmetric")
        if np.abs(A @ Jk - Jk @ A).max() > 1e-10:
            raise ValueError("A must commute with J on k1")
        return self


class ReducedCase2Data(BaseModel):
    """
    Six-dimensional case-2 data after the strongly unimodular reduction.

    a1 = 0, p = w = 0, beta = delta = 0, xi = c e^{34}, lam = a2, gamma = J alpha + nu and
    A = -(a + a2)/2 Id + q J on k3 = span(e_3, e_4).

    Fields:
    - a, a2, v1, v2, q, c: scalars.
    - v: vector in k3.
    - alpha, nu: 1-forms on k3.
    """

    a: float = 0.0
    a2: float = 0.0
    v1: float = 0.0
    v2: float = 0.0
    q: float = 0.0
    c: float = 0.0
    v: Vector = Field(default_factory=lambda: [0.0, 0.0])
    alpha: Vector = Field(default_factory=lambda: [0.0, 0.0])
    nu: Vector = Field(default_factory=lambda: [0.0, 0.0])

    @field_validator("v", "alpha", "nu")
    @classmethod
    def validate_pair(cls, value: Vector, info: ValidationInfo) -> Vector:
        if len(value) != 2:
            raise ValueError(f"{info.field_name} must have length 2")
        return [float(x) for x in value]


class ExampleStructure(BaseModel):
    """
    A Hermitian structure attached to a catalog entry.

    Fields:
    - label: short identifier ("perp", "sub", ...).
    - pairs: J f_i = s f_j as (i, j, s) with 1-based i, j and s an expression in the entry parameters.
    - metric: "identity", "adapted" (the basis f_i, J f_i of the pairs is orthonormal) or an
      explicit matrix of expressions.
    - claims: properties the structure is claimed to have (complex, skt, balanced, kahler).
    - when: parameter values at which the structure applies; empty means always.
    """

    label: str = Field(..., min_length=1)
    pairs: List[Tuple[int, int, str]] = Field(..., min_length=1)
    metric: Any = Field("identity", description="identity, adapted or matrix")
    claims: List[str] = Field(default_factory=lambda: ["complex"])
    when: Dict[str, str] = Field(default_factory=dict)

    @field_validator("claims")
    @classmethod
    def validate_claims(cls, value: List[str]) -> List[str]:
        allowed = {"complex", "skt", "balanced", "kahler"}
        unknown = set(value) - allowed
        if unknown:
            raise ValueError(f"Unknown claims {sorted(unknown)}; allowed {sorted(allowed)}")
        return value

    @field_validator("metric")
    @classmethod
    def validate_metric(cls, value: Any) -> Any:
        if isinstance(value, str):
            if value not in ("identity", "adapted"):
                raise ValueError(f"Unknown metric keyword {value!r}")
        elif not isinstance(value, list):
            raise ValueError("metric must be a keyword or a matrix")
        return value


class ParameterSlot(BaseModel):
    """
    Fields:
    - name: parameter symbol.
    - admissible: human-readable range ("a>0", "0<|a|<=1", ...).
    - samples: three sample values as expressions.
    """

    name: str
    admissible: str = ""
    samples: List[str] = Field(default_factory=list)


class CatalogEntry(BaseModel):
    """
    A named Lie algebra with expected property flags and example structures.

    Fields:
    - name: ASCII name, e.g. "s6.52_0_b".
    - display: name as printed in the tables.
    - table: "h3+R2", "h5", "family" or "extra".
    - equations: structure tuple text in the entry parameters.
    - parameters: parameter slots.
    - nilradical: 1-based basis indices spanning the nilradical.
    - nilradical_type: expected isomorphism type of the nilradical.
    - flags: table columns, e.g. {"complex": ["perp"], "skt": [], "balanced": ["perp"]};
      conditional cells are written "perp@a=1".
    - structures: attached example structures.
    - strongly_unimodular: expected outcome of the strong unimodularity test.
    - notes: free text.
    """

    name: str = Field(..., min_length=1)
    display: str = ""
    table: Literal["h3+R2", "h5", "family", "extra"] = "h3+R2"
    equations: str = Field(..., min_length=1)
    parameters: List[ParameterSlot] = Field(default_factory=list)
    nilradical: List[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5])
    nilradical_type: str = "h3+R2"
    flags: Dict[str, List[str]] = Field(
        default_factory=lambda: {"complex": [], "skt": [], "balanced": []}
    )
    structures: List[ExampleStructure] = Field(default_factory=list)
    strongly_unimodular: bool = True
    notes: str = ""

    @field_validator("flags")
    @classmethod
    def validate_flags(cls, value: Dict[str, List[str]]) -> Dict[str, List[str]]:
        for key, cells in value.items():
            if key not in ("complex", "skt", "balanced"):
                raise ValueError(f"Unknown flag column {key!r}")
            for cell in cells:
                if cell.split("@")[0] not in ("perp", "sub"):
                    raise ValueError(f"Invalid flag cell {cell!r} in {key}")
        return value

    def sample_points(self) -> List[Dict[str, str]]:
        """One binding per sample index; slots with fewer samples repeat their last one."""
        if not self.parameters:
            return [{}]
        count = max(len(p.samples) for p in self.parameters)
        return [
            {p.name: p.samples[min(i, len(p.samples) - 1)] for p in self.parameters}
            for i in range(count)
        ]


class FlowSettings(BaseModel):
    """
    Adaptive RK4 settings shared by bracket, reduced and metric flows.

    Fields:
    - t_max: final time.
    - tolerance: accepted local error per step, relative to max(1, |y|).
    - initial_step: first trial step.
    - max_step: step cap; t_max / 20 when omitted.
    - min_step: underflow floor relative to max(1, t).
    - jacobi_tol: abort when the Jacobi residual of a bracket drifts above this.
    - convergence_tol: derivative norm regarded as stationary.
    - convergence_steps: consecutive stationary steps before convergence is declared.
    - max_steps: hard budget of accepted plus rejected steps.
    """

    t_max: float = Field(..., gt=0, description="Final time")
    tolerance: float = Field(1e-8, gt=0, description="Local error tolerance")
    initial_step: float = Field(1e-2, gt=0)
    max_step: Optional[float] = Field(None, gt=0)
    min_step: float = Field(1e-12, gt=0)
    jacobi_tol: float = Field(1e-7, gt=0)
    convergence_tol: float = Field(1e-9, gt=0)
    convergence_steps: int = Field(10, ge=1)
    max_steps: int = Field(200_000, ge=1)

    @property
    def step_cap(self) -> float:
        return self.max_step if self.max_step is not None else self.t_max / 20.0


class LatticeCertificate(BaseModel):
    """
    Integrality certificate for exp(t0 D) in a given basis.

    Fields:
    - basis: basis change (columns are the new basis vectors).
    - t0: time at which the exponential is integral.
    - matrix: rounded integer matrix exp(t0 D) in the basis.
    - deviation: max distance of the entries from the integers.
    - determinant: det exp(t0 D).
    - passed: deviation and determinant within tolerance.
    """

    basis: Matrix
    t0: float
    matrix: List[List[int]]
    deviation: float
    determinant: float
    passed: bool


class CheckResult(BaseModel):
    """
    Fields:
    - name: check identifier, e.g. "jacobi" or "sub:skt".
    - expected: expected outcome.
    - value: residual or measured quantity.
    - passed: whether the outcome matches the expectation.
    - detail: free text.
    """

    name: str
    expected: bool = True
    value: float = 0.0
    passed: bool
    detail: str = ""


class EntryReport(BaseModel):
    """
    Verification report of one catalog entry at one parameter binding.

    Fields:
    - entry: entry name.
    - params: parameter binding used.
    - checks: individual checks.
    - passed: all checks passed.
    """

    entry: str
    params: Dict[str, str] = Field(default_factory=dict)
    checks: List[CheckResult] = Field(default_factory=list)

    @computed_field
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

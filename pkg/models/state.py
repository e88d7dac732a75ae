from typing import Any, Dict, List, Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.model import CatalogEntry, CheckResult, EntryReport, Matrix, Vector


class VerificationState(BaseModel):
    """
    State carried through the verification graph for one catalog entry.

    Fields:
    - entry: the catalog entry under verification.
    - params: parameter binding as expressions.
    - values: the binding evaluated to floats.
    - algebra: the LieAlgebra built from the entry equations.
    - nilradical_dims: dimensions of the descending central series of the nilradical.
    - checks: results accumulated by the nodes.
    - report: final report, set by the last node.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    entry: CatalogEntry = Field(..., description="Catalog entry")
    params: Dict[str, str] = Field(default_factory=dict, description="Parameter binding")
    values: Dict[str, float] = Field(default_factory=dict, description="Evaluated binding")
    algebra: Optional[Any] = Field(None, description="Built LieAlgebra")
    nilradical_dims: List[int] = Field(default_factory=list, description="Central series dims")
    checks: List[CheckResult] = Field(default_factory=list, description="Check results")
    report: Optional[EntryReport] = Field(None, description="Final report")

    @field_validator("params")
    @classmethod
    def validate_params(cls, value: Dict[str, str]) -> Dict[str, str]:
        for key, expr in value.items():
            if not key.strip() or not str(expr).strip():
                raise ValueError("Parameter names and values must be non-empty")
        return {k: str(v) for k, v in value.items()}


class BracketPoint(BaseModel):
    """
    Structure constants at time t over the fixed (R^{2n}, J, g).

    Fields:
    - t: flow time.
    - dim: dimension of the algebra.
    - constants: C[i, j, k] flattened in C order.
    """

    t: float
    dim: int = Field(..., ge=1)
    constants: List[float]

    @model_validator(mode="after")
    def validate_size(self) -> "BracketPoint":
        if len(self.constants) != self.dim**3:
            raise ValueError(f"Expected {self.dim ** 3} constants, got {len(self.constants)}")
        return self

    @classmethod
    def from_array(cls, t: float, constants: np.ndarray) -> "BracketPoint":
        C = np.asarray(constants, dtype=float)
        return cls(t=t, dim=C.shape[0], constants=C.ravel().tolist())

    def array(self) -> np.ndarray:
        return np.asarray(self.constants, dtype=float).reshape((self.dim,) * 3)


class PluriclosedCase2State(BaseModel):
    """
    Reduced data of a pluriclosed case-2 bracket.

    The "abelian_k3" branch carries (a, v1, v2, v, A) with a2 = -a and a1 = 0; the "sub2"
    branch is six-dimensional and carries (a, q, v2, c, alpha).

    Fields:
    - branch: which reduced system the state belongs to.
    - a, v1, v2: scalars of the derivation.
    - v: vector in k3.
    - A: endomorphism of k3.
    - q, c: rotation speed on k3 and coefficient of eta on k3 (sub2 only).
    - alpha: 1-form on k3 (sub2 only).
    """

    branch: Literal["abelian_k3", "sub2"]
    a: float = 0.0
    v1: float = 0.0
    v2: float = 0.0
    v: Vector = Field(default_factory=list)
    A: Matrix = Field(default_factory=list)
    q: float = 0.0
    c: float = 0.0
    alpha: Vector = Field(default_factory=lambda: [0.0, 0.0])

    @model_validator(mode="after")
    def validate_branch(self) -> "PluriclosedCase2State":
        if self.branch == "abelian_k3":
            m = len(self.v)
            A = np.asarray(self.A, dtype=float) if self.A else np.zeros((m, m))
            if A.shape != (m, m) or m % 2:
                raise ValueError(f"A must be square of even size {m}, got {A.shape}")
            self.A = A.tolist()
        else:
            if len(self.alpha) != 2:
                raise ValueError("alpha must have length 2")
            if self.c == 0:
                raise ValueError("c must be nonzero on the sub2 branch")
        return self

    @property
    def k3_dim(self) -> int:
        return len(self.v) if self.branch == "abelian_k3" else 2

    @property
    def A_matrix(self) -> np.ndarray:
        return np.asarray(self.A, dtype=float).reshape(self.k3_dim, self.k3_dim)

    @property
    def k(self) -> int:
        """Half the rank of A + A^t."""
        if self.branch != "abelian_k3" or self.k3_dim == 0:
            return 0
        A = self.A_matrix
        return int(np.linalg.matrix_rank(A + A.T, tol=1e-9)) // 2

    def to_vector(self) -> np.ndarray:
        if self.branch == "abelian_k3":
            return np.concatenate(
                [[self.a, self.v1, self.v2], np.asarray(self.v, dtype=float), self.A_matrix.ravel()]
            )
        return np.array([self.a, self.q, self.v2, self.c, *self.alpha], dtype=float)

    def with_vector(self, y: np.ndarray) -> "PluriclosedCase2State":
        y = np.asarray(y, dtype=float)
        if self.branch == "abelian_k3":
            m = self.k3_dim
            return PluriclosedCase2State(
                branch="abelian_k3",
                a=y[0],
                v1=y[1],
                v2=y[2],
                v=y[3 : 3 + m].tolist(),
                A=y[3 + m :].reshape(m, m).tolist(),
            )
        return PluriclosedCase2State(
            branch="sub2", a=y[0], q=y[1], v2=y[2], c=y[3], alpha=y[4:6].tolist()
        )

    def columns(self) -> List[str]:
        if self.branch == "abelian_k3":
            m = self.k3_dim
            return (
                ["a", "v1", "v2"]
                + [f"v_{i}" for i in range(m)]
                + [f"A_{i}{j}" for i in range(m) for j in range(m)]
            )
        return ["a", "q", "v2", "c", "alpha_0", "alpha_1"]


class BalancedFlowState(BaseModel):
    """
    Reduced data of a six-dimensional balanced bracket.

    Fields:
    - case: 1 for J n^1 orthogonal to n, 2 for J n^1 inside n.
    - a: e_1 eigenvalue of the derivation (case 1).
    - A: endomorphism of k1 (case 1).
    - eta: 2-form on k1 as an antisymmetric matrix (case 1).
    - b, c, p, q: case-2 parameters.
    """

    case: Literal[1, 2]
    a: float = 0.0
    A: Matrix = Field(default_factory=list)
    eta: Matrix = Field(default_factory=list)
    b: float = 0.0
    c: float = 0.0
    p: float = 0.0
    q: float = 0.0

    @model_validator(mode="after")
    def validate_case(self) -> "BalancedFlowState":
        if self.case == 1:
            A = np.asarray(self.A, dtype=float) if self.A else np.zeros((4, 4))
            E = np.asarray(self.eta, dtype=float) if self.eta else np.zeros((4, 4))
            if A.shape != (4, 4) or E.shape != (4, 4):
                raise ValueError("Case-1 balanced states live on k1 of dimension 4")
            if np.abs(E + E.T).max() > 1e-12:
                raise ValueError("eta must be antisymmetric")
            self.A, self.eta = A.tolist(), E.tolist()
        return self

    @property
    def A_matrix(self) -> np.ndarray:
        return np.asarray(self.A, dtype=float)

    @property
    def eta_matrix(self) -> np.ndarray:
        return np.asarray(self.eta, dtype=float)

    @property
    def h(self) -> float:
        s = self.c**2 + self.p**2 + self.q**2
        return 0.25 * (s**2 + 0.5 * self.b**2 * (self.p**2 + self.q**2))

    @property
    def k(self) -> float:
        return 0.5 * (self.c**2 + self.p**2 + self.q**2 + 0.5 * self.b**2)

    def to_vector(self) -> np.ndarray:
        if self.case == 1:
            return np.concatenate([[self.a], self.A_matrix.ravel(), self.eta_matrix.ravel()])
        return np.array([self.b, self.c, self.p, self.q], dtype=float)

    def with_vector(self, y: np.ndarray) -> "BalancedFlowState":
        y = np.asarray(y, dtype=float)
        if self.case == 1:
            E = y[17:33].reshape(4, 4)
            return BalancedFlowState(
                case=1, a=y[0], A=y[1:17].reshape(4, 4).tolist(), eta=(0.5 * (E - E.T)).tolist()
            )
        return BalancedFlowState(case=2, b=y[0], c=y[1], p=y[2], q=y[3])

    def columns(self) -> List[str]:
        if self.case == 1:
            return (
                ["a"]
                + [f"A_{i}{j}" for i in range(4) for j in range(4)]
                + [f"eta_{i}{j}" for i in range(4) for j in range(4)]
            )
        return ["b", "c", "p", "q"]


class FlowSample(BaseModel):
    """
    Fields:
    - t: flow time.
    - state: named state components.
    - diagnostics: named scalar diagnostics (bracket norm, residuals, monotone quantities).
    """

    t: float
    state: Dict[str, float] = Field(default_factory=dict)
    diagnostics: Dict[str, float] = Field(default_factory=dict)


class FlowTrajectory(BaseModel):
    """
    Time-ordered samples of a bracket-flow, reduced-ODE or metric-flow run.

    Fields:
    - flow: label of the flow ("pluriclosed", "balanced", ...).
    - samples: accepted steps, strictly increasing in t.
    - converged: the derivative stayed below the convergence threshold long enough.
    - converged_at: time of the convergence declaration.
    - limit_label: description of the observed limit, if any.
    """

    flow: str
    samples: List[FlowSample] = Field(default_factory=list)
    converged: bool = False
    converged_at: Optional[float] = None
    limit_label: Optional[str] = None

    @field_validator("samples")
    @classmethod
    def validate_order(cls, value: List[FlowSample]) -> List[FlowSample]:
        times = [s.t for s in value]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("Trajectory times must be strictly increasing")
        return value

    @property
    def final(self) -> FlowSample:
        if not self.samples:
            raise ValueError("Empty trajectory")
        return self.samples[-1]

    def column(self, name: str) -> np.ndarray:
        """State or diagnostic column over all samples."""
        return np.array(
            [s.state[name] if name in s.state else s.diagnostics[name] for s in self.samples]
        )

    def to_frame(self) -> pd.DataFrame:
        rows = [{"t": s.t, **s.state, **s.diagnostics} for s in self.samples]
        if not rows:
            return pd.DataFrame(columns=["t"])
        state_cols = list(self.samples[0].state)
        diag_cols = list(self.samples[0].diagnostics)
        return pd.DataFrame(rows, columns=["t", *state_cols, *diag_cols])

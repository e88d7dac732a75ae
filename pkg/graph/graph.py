import logging
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from langgraph.graph import END, START, StateGraph

from models.model import CatalogEntry, CheckResult, EntryReport, ExampleStructure
from models.state import VerificationState
from tools.hermitian import (
    HermitianStructure,
    balanced_residual,
    bismut_ricci_oracle,
    kahler_residual,
    ricci_tau,
    skt_residual,
)
from tools.lie_core import LieAlgebra, check_ideal, descending_central_series, is_strongly_unimodular
from utils.catalog_data import (
    entry_algebra,
    entry_structure,
    evaluate,
    resolve_params,
    structure_applies,
)
from utils.errors import HermlieError

logger = logging.getLogger(__name__)
logging.basicConfig(level=logging.INFO)

RESIDUAL_TOL = 1e-12
NONZERO_TOL = 1e-6
RICCI_TOL = 1e-8
PROPERTY_RESIDUALS = {
    "skt": skt_residual,
    "balanced": balanced_residual,
    "kahler": kahler_residual,
}


def nilradical_type(L: LieAlgebra, basis: np.ndarray, tol: float = 1e-10) -> Tuple[str, List[int]]:
    """Isomorphism type of a nilradical with dim n^1 <= 1: "R5", "h3+R2", "h5", ...

    Two-step algebras with a one-dimensional derived algebra are h_{2k+1} + R^l, where 2k
    is the rank of the bracket form on n / n^1.
    """
    series = descending_central_series(L, basis, tol)
    dims = series.dims
    m = dims[0]
    if len(dims) == 1 or dims[1] == 0:
        return f"R{m}", dims
    if dims[1:] != [1, 0]:
        return f"nilpotent{dims}", dims
    Q = series.subspaces[0]
    z = series.subspaces[1][:, 0]
    form = np.einsum("ia,jb,ijk,k->ab", Q, Q, L.constants, z)
    rank = int(np.linalg.matrix_rank(form, tol=1e-9))
    heisenberg = f"h{rank + 1}"
    rest = m - rank - 1
    return (heisenberg if rest == 0 else f"{heisenberg}+R{rest}"), dims


class VerificationGraph:
    def __init__(self, entry: CatalogEntry):
        """
        Verification pipeline for one catalog entry.

        Args:
            entry: the catalog entry whose algebra and structures are checked.
        """
        self.entry = entry

    def _record(self, state: VerificationState, check: CheckResult) -> None:
        level = logging.INFO if check.passed else logging.WARNING
        logger.log(level, f"{self.entry.name} {state.params} {check.name}: {check.passed} ({check.value:.3e})")
        state.checks.append(check)

    def build_node(self, state: VerificationState) -> VerificationState:
        """Evaluate the binding and build the Lie algebra."""
        try:
            state.params = resolve_params(self.entry, state.params)
            state.values = {k: evaluate(v) for k, v in state.params.items()}
            state.algebra = entry_algebra(self.entry, state.params)
            return state
        except HermlieError as e:
            self._record(state, CheckResult(name="build", passed=False, detail=str(e)))
            state.algebra = None
            return state
        except Exception as e:
            raise RuntimeError(f"Error in build_node: {e}")

    def route_after_build(self, state: VerificationState) -> str:
        return "checks" if state.algebra is not None else "failed"

    def jacobi_node(self, state: VerificationState) -> VerificationState:
        """Exact Jacobi when every constant is exact, numerical otherwise."""
        try:
            L = state.algebra
            residual = L.jacobi_residual()
            if L.exact is not None:
                passed, detail = L.exact_jacobi(), "exact"
            else:
                passed, detail = residual < L.tol, "numerical"
            self._record(state, CheckResult(name="jacobi", value=residual, passed=passed, detail=detail))
            return state
        except HermlieError:
            raise
        except Exception as e:
            raise RuntimeError(f"Error in jacobi_node: {e}")

    def _nilradical_basis(self, L: LieAlgebra) -> np.ndarray:
        return np.eye(L.dim)[:, [i - 1 for i in self.entry.nilradical]]

    def unimodular_node(self, state: VerificationState) -> VerificationState:
        """Strong unimodularity against the entry's expectation."""
        try:
            L = state.algebra
            ok, residual = is_strongly_unimodular(L, self._nilradical_basis(L))
            expected = self.entry.strongly_unimodular
            self._record(
                state,
                CheckResult(
                    name="strongly_unimodular",
                    expected=expected,
                    value=residual,
                    passed=ok == expected,
                ),
            )
            return state
        except HermlieError as e:
            self._record(state, CheckResult(name="strongly_unimodular", passed=False, detail=str(e)))
            return state
        except Exception as e:
            raise RuntimeError(f"Error in unimodular_node: {e}")

    def nilradical_node(self, state: VerificationState) -> VerificationState:
        """Nilpotent ideal of the expected isomorphism type."""
        try:
            L = state.algebra
            basis = self._nilradical_basis(L)
            check_ideal(L, basis)
            found, dims = nilradical_type(L, basis)
            state.nilradical_dims = dims
            self._record(
                state,
                CheckResult(
                    name="nilradical",
                    passed=dims[-1] == 0 and found == self.entry.nilradical_type,
                    detail=f"{found}, central series {dims}",
                ),
            )
            return state
        except HermlieError as e:
            self._record(state, CheckResult(name="nilradical", passed=False, detail=str(e)))
            return state
        except Exception as e:
            raise RuntimeError(f"Error in nilradical_node: {e}")

    def _check_structure(
        self, state: VerificationState, structure: ExampleStructure, tol: float
    ) -> Dict[str, bool]:
        label = structure.label
        outcome: Dict[str, bool] = {}
        try:
            H = entry_structure(self.entry, structure, state.algebra, state.params)
        except HermlieError as e:
            self._record(state, CheckResult(name=f"{label}:structure", passed=False, detail=str(e)))
            return outcome
        _, nijenhuis = H.nijenhuis
        claimed = "complex" in structure.claims
        integrable = nijenhuis < tol
        outcome["complex"] = integrable == claimed
        self._record(
            state,
            CheckResult(name=f"{label}:complex", expected=claimed, value=nijenhuis, passed=outcome["complex"]),
        )
        if not integrable:
            return outcome
        for prop, residual_of in PROPERTY_RESIDUALS.items():
            value = residual_of(H)
            expected = prop in structure.claims
            passed = value < tol if expected else value > NONZERO_TOL
            outcome[prop] = passed
            self._record(
                state, CheckResult(name=f"{label}:{prop}", expected=expected, value=value, passed=passed)
            )
        self._record(state, self._ricci_check(H, label))
        return outcome

    def _ricci_check(self, H: HermitianStructure, label: str) -> CheckResult:
        difference = ricci_tau(H, -1.0) - bismut_ricci_oracle(H)
        value = H.norm(difference)
        return CheckResult(name=f"{label}:ricci", value=value, passed=value < RICCI_TOL)

    def _cell_required(self, cell: str, state: VerificationState) -> bool:
        if "@" not in cell:
            return True
        condition = cell.split("@", 1)[1]
        name, value = condition.split("=", 1)
        return name in state.values and abs(state.values[name] - evaluate(value)) < 1e-12

    def structures_node(self, state: VerificationState) -> VerificationState:
        """Residuals of every applicable structure, then the table flags against them."""
        try:
            L = state.algebra
            tol = RESIDUAL_TOL * max(1.0, L.norm() ** 2)
            outcomes: Dict[str, Dict[str, bool]] = {}
            for structure in self.entry.structures:
                if not structure_applies(structure, state.values):
                    logger.debug(f"{self.entry.name}: {structure.label} not applicable at {state.params}")
                    continue
                outcomes[structure.label] = {
                    claim: passed
                    for claim, passed in self._check_structure(state, structure, tol).items()
                    if claim in structure.claims
                }
            for column, cells in self.entry.flags.items():
                for cell in cells:
                    if not self._cell_required(cell, state):
                        continue
                    label = cell.split("@")[0]
                    passed = outcomes.get(label, {}).get(column, False)
                    self._record(state, CheckResult(name=f"flag:{column}:{cell}", passed=passed))
            for label, claims in outcomes.items():
                if label not in ("perp", "sub"):
                    continue
                for column in claims:
                    if column not in self.entry.flags:
                        continue
                    listed = any(
                        c.split("@")[0] == label and self._cell_required(c, state)
                        for c in self.entry.flags[column]
                    )
                    self._record(state, CheckResult(name=f"flag:{column}:{label}:listed", passed=listed))
            return state
        except HermlieError:
            raise
        except Exception as e:
            raise RuntimeError(f"Error in structures_node: {e}")

    def report_node(self, state: VerificationState) -> VerificationState:
        """Collect the checks into an EntryReport."""
        state.report = EntryReport(entry=self.entry.name, params=state.params, checks=state.checks)
        return state

    def define_edges(self):
        """Define the edges of the verification workflow."""
        return {
            START: "build",
            "build": (self.route_after_build, {"checks": "jacobi", "failed": "finalize_report"}),
            "jacobi": "unimodular",
            "unimodular": "nilradical",
            "nilradical": "structures",
            "structures": "finalize_report",
            "finalize_report": END,
        }

    def build_graph(self):
        """Build the verification workflow graph."""
        workflow = StateGraph(VerificationState)
        workflow.add_node("build", self.build_node)
        workflow.add_node("jacobi", self.jacobi_node)
        workflow.add_node("unimodular", self.unimodular_node)
        workflow.add_node("nilradical", self.nilradical_node)
        workflow.add_node("structures", self.structures_node)
        workflow.add_node("finalize_report", self.report_node)

        for source, target in self.define_edges().items():
            if source == START:
                workflow.add_edge(START, target)
            elif isinstance(target, tuple):
                workflow.add_conditional_edges(source, target[0], target[1])
            else:
                workflow.add_edge(source, target)

        return workflow.compile(name="Verification-Graph")

    def invoke_graph(
        self, initial_state: VerificationState, run_name: str = "Verification-Pipeline"
    ) -> VerificationState:
        """
        Invoke the workflow graph with the given initial state.

        Args:
            initial_state: state holding the binding to verify.
            run_name: name of the run for logging purposes.

        Returns:
            The final VerificationState.
        """
        self.graph = self.build_graph()
        logger.info(f"{run_name}: {self.entry.name} at {initial_state.params}")
        result = self.graph.invoke(initial_state, config={"run_name": run_name})
        return VerificationState(**result)


def verify_entry(entry: CatalogEntry, params: Optional[Mapping[str, str]] = None) -> EntryReport:
    """Run the verification graph for one entry at one binding (first samples by default)."""
    graph = VerificationGraph(entry)
    state = graph.invoke_graph(
        VerificationState(entry=entry, params={k: str(v) for k, v in (params or {}).items()})
    )
    return state.report


def verify_catalog(
    entries: List[CatalogEntry], params: Optional[Mapping[str, str]] = None
) -> List[EntryReport]:
    """Every entry at every sample binding (or at ``params`` when given), sorted by name."""
    reports: List[EntryReport] = []
    for entry in sorted(entries, key=lambda e: e.name):
        bindings = [dict(params)] if params else entry.sample_points()
        for binding in bindings:
            reports.append(verify_entry(entry, binding))
    return reports

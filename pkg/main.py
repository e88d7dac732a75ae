import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError
from rich import print as pp
from rich import print_json
from rich.table import Table

from graph.graph import verify_catalog
from models.model import EntryReport, FlowSettings, RunConfig
from models.state import BalancedFlowState, PluriclosedCase2State
from tools.flows import (
    GAUGES,
    balanced_case1_state,
    bracket_points,
    describe_constants,
    integrate_bracket_flow,
    integrate_reduced,
    metric_flow_direct,
    readout_case1,
)
from tools.gk_poisson import (
    ComplexifiedAlgebra,
    gk_family,
    gk_residual,
    holomorphic_poisson_space,
    is_split,
    poisson_candidate,
    poisson_residual,
    commutator_bivector,
)
from tools.hermitian import (
    HermitianStructure,
    balanced_residual,
    kahler_residual,
    lee_form,
    skt_residual,
    structure_search,
)
from tools.lattice import (
    SKT_EQ_T0,
    gk_lattice,
    lattice_check,
    nilradical_derivation,
    skt_eq_lattice_basis,
    solve_gk_lattice_params,
)
from tools.lie_core import LieAlgebra, is_strongly_unimodular, is_unimodular
from utils.catalog_data import (
    catalog,
    entry_algebra,
    entry_structure,
    get_entry,
    resolve_params,
    structure_applies,
)
from utils.errors import HermlieError, NumericalError, ParseError, PropertyError, ValidityError
from utils.utils import (
    algebra_to_json,
    evaluate_params,
    format_structure_tuple,
    load_algebra_file,
    load_matrix,
    parse_params,
    save_report,
    save_trajectory_csv,
)

logger = logging.getLogger(__name__)
logging.basicConfig(level=logging.INFO)

PROPERTY_TOL = 1e-10


def _emit(config: RunConfig, payload: Dict[str, Any], table: Optional[Table] = None) -> None:
    if config.json_output:
        print_json(json.dumps(payload, default=float))
    elif table is not None:
        pp(table)


def _load_algebra(reference: str, params: Dict[str, str]) -> Tuple[LieAlgebra, Optional[Any]]:
    """Algebra from a file, or from a catalog entry together with the entry itself."""
    if os.path.exists(reference):
        return load_algebra_file(reference, params), None
    try:
        entry = get_entry(reference)
    except ValidityError:
        raise ParseError(f"{reference!r} is neither a file nor a catalog entry")
    return entry_algebra(entry, params), entry


def _entry_hermitian(entry, L: LieAlgebra, params: Dict[str, str], label: Optional[str]):
    binding = resolve_params(entry, params)
    values = {k: float(v) for k, v in evaluate_params(binding).items()}
    for structure in entry.structures:
        if label is not None and structure.label != label:
            continue
        if structure_applies(structure, values):
            return entry_structure(entry, structure, L, binding), structure.label
    which = "" if label is None else f" labelled {label}"
    raise ValidityError(f"{entry.name} has no applicable structure{which}")


def _hermitian(args, L: LieAlgebra, entry, params: Dict[str, str]) -> Tuple[HermitianStructure, str]:
    if args.J:
        g = load_matrix(args.g) if args.g else None
        return HermitianStructure(L, load_matrix(args.J), g), "file"
    if entry is None:
        raise ValidityError("A complex structure is needed: pass --J (and optionally --g)")
    return _entry_hermitian(entry, L, params, getattr(args, "structure", None))


# Commands


def run_verify_catalog(args, config: RunConfig) -> int:
    entries = [get_entry(args.entry)] if args.entry else catalog()
    reports: List[EntryReport] = verify_catalog(entries, args.raw_params or None)
    rows = [
        {
            "entry": r.entry,
            "params": ",".join(f"{k}={v}" for k, v in r.params.items()),
            "check": c.name,
            "expected": c.expected,
            "value": c.value,
            "passed": c.passed,
        }
        for r in reports
        for c in r.checks
    ]
    frame = pd.DataFrame(rows, columns=["entry", "params", "check", "expected", "value", "passed"])
    summary = frame.groupby(["entry", "params"], sort=True)["passed"].agg(["all", "count"]).reset_index()
    payload = {"passed": all(r.passed for r in reports), "reports": [r.model_dump() for r in reports]}

    table = Table(title="Catalog verification")
    for column in ("entry", "params", "checks", "result", "failures"):
        table.add_column(column)
    for report in reports:
        failures = ", ".join(c.name for c in report.failures())
        table.add_row(
            report.entry,
            ",".join(f"{k}={v}" for k, v in report.params.items()),
            str(len(report.checks)),
            "[green]pass[/green]" if report.passed else "[red]FAIL[/red]",
            failures,
        )
    _emit(config, payload, table)
    if not config.json_output:
        pp(f"{int(summary['all'].sum())}/{len(summary)} bindings passed")
    if config.output:
        save_report(payload, config.output)
    return 0 if payload["passed"] else PropertyError.exit_code


def run_check(args, config: RunConfig) -> int:
    L, entry = _load_algebra(args.file, args.raw_params)
    uni, uni_res = is_unimodular(L)
    payload: Dict[str, Any] = {
        "algebra": L.name,
        "dim": L.dim,
        "equations": format_structure_tuple(L),
        "jacobi_residual": L.jacobi_residual(),
        "unimodular": uni,
        "unimodular_residual": uni_res,
    }
    nilradical = args.nilradical or (entry.nilradical if entry is not None else None)
    if nilradical:
        basis = np.eye(L.dim)[:, [i - 1 for i in nilradical]]
        strong, strong_res = is_strongly_unimodular(L, basis)
        payload.update(strongly_unimodular=strong, strongly_unimodular_residual=strong_res)
    if args.J or (entry is not None and entry.structures):
        H, label = _hermitian(args, L, entry, args.raw_params)
        _, nijenhuis = H.nijenhuis
        payload.update(structure=label, nijenhuis=nijenhuis)
        if nijenhuis < PROPERTY_TOL:
            payload.update(
                skt_residual=skt_residual(H),
                balanced_residual=balanced_residual(H),
                kahler_residual=kahler_residual(H),
                lee_form_norm=H.norm(lee_form(H)),
            )
    table = Table(title=f"check {L.name or args.file}")
    table.add_column("quantity")
    table.add_column("value")
    for key, value in payload.items():
        table.add_row(key, f"{value:.3e}" if isinstance(value, float) else str(value))
    _emit(config, payload, table)
    return 0


def _reduced_state(args, L: Optional[LieAlgebra]):
    if args.state:
        with open(args.state) as f:
            data = json.load(f)
        try:
            if "branch" in data:
                return PluriclosedCase2State.model_validate(data)
            return BalancedFlowState.model_validate(data)
        except ValidationError as e:
            raise ValidityError(f"Invalid reduced state in {args.state}: {e}")
    if args.flow == "balanced" and L is not None:
        return balanced_case1_state(L.constants)
    raise ValidityError("Reduced pluriclosed runs need --state with a reduced case-2 state")


def run_flow(args, config: RunConfig) -> int:
    settings = FlowSettings(t_max=config.t_max, tolerance=config.tolerance)
    L, entry, H, label = None, None, None, None
    if args.algebra:
        L, entry = _load_algebra(args.algebra, args.raw_params)
        if args.J or entry is not None:
            H, label = _hermitian(args, L, entry, args.raw_params)
    mode = "reduced" if args.reduced else "metric" if args.metric else "full"
    if mode == "reduced":
        trajectory = integrate_reduced(_reduced_state(args, L), settings, normalized=config.normalized)
    elif H is None:
        raise ValidityError("flow needs --algebra with a structure (catalog entry or --J)")
    elif mode == "metric":
        trajectory = metric_flow_direct(H, config.flow, settings, bv_factor=config.bv_factor)
    else:
        readout = None
        if label == "perp":
            readout = lambda C: {**readout_case1(C), **describe_constants(C)}
        trajectory = integrate_bracket_flow(
            L,
            H.J,
            config.flow,
            settings,
            g=H.metric.g,
            gauge=GAUGES[args.gauge] if args.gauge != "none" else None,
            normalized=config.normalized,
            bv_factor=config.bv_factor,
            readout=readout,
        )
    if config.output:
        save_trajectory_csv(trajectory, config.output)
    final = trajectory.final
    payload = {
        "flow": trajectory.flow,
        "samples": len(trajectory.samples),
        "t": final.t,
        "converged": trajectory.converged,
        "converged_at": trajectory.converged_at,
        "limit": trajectory.limit_label,
        "final": {**final.state, **final.diagnostics},
    }
    if mode == "full":
        payload["bracket"] = bracket_points(trajectory, L.dim)[-1].model_dump()
    table = Table(title=f"{trajectory.flow} flow, t = {final.t:.6g}")
    table.add_column("column")
    table.add_column("final value")
    for key, value in payload["final"].items():
        if not key.startswith("c_"):
            table.add_row(key, f"{value:.12g}")
    _emit(config, payload, table)
    return 0


def run_gk_verify(args, config: RunConfig) -> int:
    S = gk_family(args.n, args.p, args.q)
    residual = gk_residual(S)
    split, _ = is_split(S)
    torsion = S.torsion()["plus"]
    sigma = poisson_candidate(S)
    dbar, schouten = poisson_residual(ComplexifiedAlgebra(S.algebra, S.J_plus), sigma)
    payload = {
        "algebra": S.algebra.name,
        "gk_residual": residual,
        "split": split,
        "H_plus": {str(tuple(i + 1 for i in k)): float(np.real(v)) for k, v in torsion.to_dict().items()},
        "commutator_bivector": {
            str(tuple(i + 1 for i in k)): float(np.real(v)) for k, v in commutator_bivector(S).to_dict().items()
        },
        "sigma_dbar": dbar,
        "sigma_schouten": schouten,
    }
    table = Table(title=f"generalized Kahler {S.algebra.name}")
    table.add_column("quantity")
    table.add_column("value")
    for key, value in payload.items():
        table.add_row(key, f"{value:.3e}" if isinstance(value, float) else str(value))
    _emit(config, payload, table)
    ok = residual < PROPERTY_TOL and dbar < PROPERTY_TOL and schouten < PROPERTY_TOL
    return 0 if ok else PropertyError.exit_code


def _certificate_table(certificate) -> Table:
    table = Table(title=f"exp(t0 D) at t0 = {certificate.t0:.12g}")
    for i in range(len(certificate.matrix)):
        table.add_column(str(i + 1), justify="right")
    for row in certificate.matrix:
        table.add_row(*map(str, row))
    return table


def run_lattice(args, config: RunConfig) -> int:
    if args.solve:
        try:
            m, n = (int(x) for x in args.solve.split(","))
        except ValueError:
            raise ParseError(f"--solve expects m,n, got {args.solve!r}")
        params = solve_gk_lattice_params(m, n)
        if params is None:
            payload = {"m": m, "n": n, "solution": None}
            _emit(config, payload)
            if not config.json_output:
                pp(f"[yellow]x^3 - {m}x^2 + {n}x - 1 admits no (p, t0, q)[/yellow]")
            return PropertyError.exit_code
        p, t0, q = params
        certificate = gk_lattice(m, n, args.dim)
        payload = {"m": m, "n": n, "p": p, "t0": t0, "q": q, "certificate": certificate.model_dump()}
        _emit(config, payload, _certificate_table(certificate))
        if not config.json_output:
            pp(f"p = {p:.12g}, t0 = {t0:.12g}, q = {q:.12g}")
        return 0 if certificate.passed else PropertyError.exit_code

    if not args.entry:
        raise ValidityError("lattice needs --entry or --solve")
    entry = get_entry(args.entry)
    L = entry_algebra(entry, args.raw_params)
    D = nilradical_derivation(L)
    if args.t0 == "auto":
        if entry.name != "skt-sub-family":
            raise ValidityError(f"No automatic t0 for {entry.name}; pass --t0")
        t0, basis = SKT_EQ_T0, skt_eq_lattice_basis(L.dim // 2)
    else:
        t0 = float(evaluate_params({"t0": args.t0})["t0"])
        basis = load_matrix(args.basis) if args.basis else np.eye(D.shape[0])
    certificate = lattice_check(D, basis, t0)
    _emit(config, {"entry": entry.name, "certificate": certificate.model_dump()}, _certificate_table(certificate))
    if not config.json_output:
        colour = "green" if certificate.passed else "red"
        pp(f"[{colour}]deviation {certificate.deviation:.3e}, det {certificate.determinant:.12g}[/{colour}]")
    return 0 if certificate.passed else PropertyError.exit_code


def run_poisson(args, config: RunConfig) -> int:
    L, entry = _load_algebra(args.algebra, args.raw_params)
    H, _ = _hermitian(args, L, entry, args.raw_params)
    C = ComplexifiedAlgebra(L, H.J)
    C.require_integrable()
    space = holomorphic_poisson_space(C)
    payload = {
        "algebra": L.name,
        "count": len(space),
        "basis": [
            {str((k + 1, l + 1)): [float(v.real), float(v.imag)] for (k, l), v in b.to_dict().items()}
            for b in space
        ],
    }
    table = Table(title=f"holomorphic Poisson bivectors on {L.name}")
    table.add_column("#")
    table.add_column("sigma over Z_k ^ Z_l")
    for i, b in enumerate(space):
        table.add_row(str(i + 1), ", ".join(f"{v:.6g} Z{k + 1}Z{l + 1}" for (k, l), v in b.to_dict().items()))
    _emit(config, payload, table)
    return 0


def run_search(args, config: RunConfig) -> int:
    L, _ = _load_algebra(args.algebra, args.raw_params)
    result = structure_search(
        L, args.target, restarts=config.restarts, iters=config.iterations, seed=config.seed
    )
    found = result.structure is not None
    payload = {"algebra": L.name, "target": args.target, "found": found, "residual": result.residual, "restart": result.restart}
    if found:
        payload.update(J=result.structure.J.tolist(), g=result.structure.metric.g.tolist())
    _emit(config, payload)
    if not config.json_output:
        colour = "green" if found else "yellow"
        verdict = "found" if found else "plateau (not a certificate)"
        pp(f"[{colour}]{args.target} search on {L.name}: {verdict}, residual {result.residual:.3e}[/{colour}]")
    return 0 if found else PropertyError.exit_code


def run_export(args, config: RunConfig) -> int:
    L, _ = _load_algebra(args.algebra, args.raw_params)
    data = algebra_to_json(L)
    if config.output:
        save_report(data, config.output)
    else:
        print_json(json.dumps(data))
    return 0


COMMANDS = {
    "verify-catalog": run_verify_catalog,
    "check": run_check,
    "flow": run_flow,
    "gk-verify": run_gk_verify,
    "lattice": run_lattice,
    "poisson": run_poisson,
    "search": run_search,
    "export": run_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hermlie", description="Hermitian structures on Lie algebras")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--params", default="", help="parameter bindings k=v,...")
        p.add_argument("--json", action="store_true", default=argparse.SUPPRESS)

    def structure_options(p: argparse.ArgumentParser) -> None:
        p.add_argument("--J", help="complex structure matrix file")
        p.add_argument("--g", help="metric matrix file")
        p.add_argument("--structure", help="label of a catalog structure (perp, sub, ...)")

    p = sub.add_parser("verify-catalog", help="verify catalog entries")
    common(p)
    p.add_argument("--entry")
    p.add_argument("--out", help="JSON report path")

    p = sub.add_parser("check", help="Jacobi, unimodularity and structure residuals")
    common(p)
    p.add_argument("file", help="algebra file or catalog entry")
    p.add_argument("--nilradical", type=lambda s: [int(x) for x in s.split(",")], help="1-based indices")
    structure_options(p)

    p = sub.add_parser("flow", help="pluriclosed or balanced flow")
    common(p)
    p.add_argument("flow", choices=["pluriclosed", "balanced"])
    p.add_argument("--algebra")
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--out", help="trajectory CSV path")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--full", action="store_true")
    mode.add_argument("--reduced", action="store_true")
    mode.add_argument("--metric", action="store_true", help="integrate the metric directly")
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--state", help="reduced state JSON")
    p.add_argument("--gauge", choices=["none", *GAUGES], default="none")
    p.add_argument("--bv-factor", type=float, default=1.0)
    structure_options(p)

    p = sub.add_parser("gk-verify", help="generalized Kahler family A^{p,q}_{2n}")
    common(p)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)

    p = sub.add_parser("lattice", help="integrality of exp(t0 D)")
    common(p)
    p.add_argument("--entry")
    p.add_argument("--t0", default="auto")
    p.add_argument("--basis", help="basis matrix file (columns)")
    p.add_argument("--solve", help="m,n for x^3 - m x^2 + n x - 1")
    p.add_argument("--dim", type=int, default=4, help="complex dimension for --solve")

    p = sub.add_parser("poisson", help="holomorphic Poisson bivectors")
    common(p)
    p.add_argument("--algebra", required=True)
    structure_options(p)

    p = sub.add_parser("search", help="residual search for SKT or balanced structures")
    common(p)
    p.add_argument("--algebra", required=True)
    p.add_argument("--target", choices=["skt", "balanced"], required=True)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--iterations", type=int, default=200)

    p = sub.add_parser("export", help="algebra as canonical JSON")
    common(p)
    p.add_argument("--algebra", required=True)
    p.add_argument("--out")
    return parser


def _config(args) -> RunConfig:
    raw = parse_params(args.params)
    args.raw_params = raw
    return RunConfig.from_env(
        command=args.command,
        target=getattr(args, "algebra", None) or getattr(args, "entry", None) or getattr(args, "file", None),
        params=evaluate_params(raw),
        t_max=getattr(args, "t_max", 1.0),
        tolerance=getattr(args, "tolerance", 1e-8),
        output=getattr(args, "out", None),
        seed=args.seed,
        json_output=args.json,
        flow=getattr(args, "flow", None),
        reduced=getattr(args, "reduced", False),
        normalized=getattr(args, "normalized", False),
        restarts=getattr(args, "restarts", 5),
        iterations=getattr(args, "iterations", 200),
        bv_factor=getattr(args, "bv_factor", 1.0),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ParseError.exit_code if e.code else 0
    try:
        config = _config(args)
        return COMMANDS[args.command](args, config)
    except HermlieError as e:
        pp(f"[red]{type(e).__name__}: {e}[/red]")
        return e.exit_code
    except ValidationError as e:
        pp(f"[red]Invalid configuration: {e}[/red]")
        return ValidityError.exit_code
    except (ValueError, FileNotFoundError) as e:
        pp(f"[red]{e}[/red]")
        return ParseError.exit_code
    except FloatingPointError as e:
        pp(f"[red]{e}[/red]")
        return NumericalError.exit_code


if __name__ == "__main__":
    sys.exit(main())

import json
import logging
import os
import re
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import sympy as sp
from rich import print as pp
from sympy.parsing.sympy_parser import (
    implicit_multiplication,
    parse_expr,
    standard_transformations,
)

from models.state import FlowTrajectory
from tools.lie_core import LieAlgebra
from utils.errors import ParseError

logger = logging.getLogger(__name__)

TERM_PATTERN = re.compile(r"f\^\{([0-9]+(?:\s*,\s*[0-9]+)*)\}")
TRANSFORMATIONS = standard_transformations + (implicit_multiplication,)
EXPRESSION_NAMES: Dict[str, Any] = {
    "pi": sp.pi,
    "sqrt": sp.sqrt,
    "ln": sp.log,
    "log": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
}


def _location(text: str, offset: int) -> Tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def parse_expression(
    source: str, params: Optional[Mapping[str, Any]] = None, text: str = "", offset: int = 0
) -> sp.Expr:
    """Sympy value of a coefficient such as "1/2", "-a", "2*pi/ln(2+sqrt(3))".

    Raises:
        ParseError: on malformed text or unbound parameter symbols.
    """
    names = dict(EXPRESSION_NAMES)
    for key, value in (params or {}).items():
        names[key] = sp.sympify(value) if not isinstance(value, str) else parse_expression(value)
    try:
        value = parse_expr(source, local_dict=names, transformations=TRANSFORMATIONS)
    except Exception as e:
        line, column = _location(text or source, offset)
        raise ParseError(f"Cannot parse coefficient {source!r}: {e}", line, column)
    free = sorted(str(s) for s in getattr(value, "free_symbols", ()))
    if free:
        line, column = _location(text or source, offset)
        raise ParseError(f"Unbound parameters {free} in {source!r}", line, column)
    return value


def _split_components(text: str, start: int, end: int) -> List[Tuple[str, int]]:
    """Top-level comma split of text[start:end], keeping offsets."""
    parts, depth, last = [], 0, start
    for pos in range(start, end):
        ch = text[pos]
        if ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append((text[last:pos], last))
            last = pos + 1
    parts.append((text[last:end], last))
    return parts


def _coefficient(source: str, params, text: str, offset: int) -> sp.Expr:
    stripped = source.strip().rstrip("*").strip()
    if stripped in ("", "+"):
        return sp.Integer(1)
    if stripped == "-":
        return sp.Integer(-1)
    if stripped.startswith("+"):
        stripped = stripped[1:].strip()
    if stripped.startswith("-") and stripped[1:].strip() and not stripped[1:].strip().startswith("("):
        return -parse_expression(stripped[1:].strip(), params, text, offset)
    return parse_expression(stripped, params, text, offset)


def _indices(raw: str, dim: int, text: str, offset: int) -> Tuple[int, int]:
    if "," in raw:
        digits = [int(x) for x in raw.split(",")]
    else:
        digits = [int(x) for x in raw]
    if len(digits) != 2:
        raise ParseError(f"Expected a 2-form f^{{ij}}, got f^{{{raw}}}", *_location(text, offset))
    if any(i < 1 or i > dim for i in digits) or digits[0] == digits[1]:
        raise ParseError(f"Invalid indices f^{{{raw}}} for dimension {dim}", *_location(text, offset))
    return digits[0] - 1, digits[1] - 1


def parse_structure_equations(
    text: str, params: Optional[Mapping[str, Any]] = None
) -> List[Dict[Tuple[int, int], sp.Expr]]:
    """Parse "(f^{23}, f^{36}, -f^{26}, 0, 0, 0)" into [{(i, j): D^k_ij}, ...] (0-based).

    Indices are single digits unless separated by commas, as in f^{1,10}.
    """
    body = text.strip()
    lead = len(text) - len(text.lstrip())
    if not body.startswith("(") or not body.endswith(")"):
        raise ParseError("Structure tuple must be enclosed in parentheses", *_location(text, lead))
    start, end = lead + 1, lead + len(body) - 1
    components = _split_components(text, start, end)
    dim = len(components)
    equations: List[Dict[Tuple[int, int], sp.Expr]] = []
    for component, offset in components:
        terms: Dict[Tuple[int, int], sp.Expr] = {}
        if not component.strip():
            raise ParseError("Empty entry in structure tuple", *_location(text, offset))
        matches = list(TERM_PATTERN.finditer(component))
        if not matches:
            value = parse_expression(component.strip(), params, text, offset)
            if value != 0:
                raise ParseError(
                    f"Entry {component.strip()!r} is neither 0 nor a sum of f^{{ij}} terms",
                    *_location(text, offset),
                )
            equations.append(terms)
            continue
        cursor = 0
        for match in matches:
            coeff = _coefficient(component[cursor : match.start()], params, text, offset + cursor)
            i, j = _indices(match.group(1).replace(" ", ""), dim, text, offset + match.start())
            key, sign = ((i, j), 1) if i < j else ((j, i), -1)
            terms[key] = terms.get(key, sp.Integer(0)) + sign * coeff
            cursor = match.end()
        if component[cursor:].strip():
            raise ParseError(
                f"Trailing text {component[cursor:].strip()!r}", *_location(text, offset + cursor)
            )
        equations.append({key: value for key, value in terms.items() if value != 0})
    return equations


def parse_structure_tuple(
    text: str, params: Optional[Mapping[str, Any]] = None, name: str = "", check: bool = True
) -> LieAlgebra:
    """LieAlgebra from structure-tuple text; Jacobi is enforced unless ``check`` is off.

    Raises:
        ParseError: malformed text.
        ValidityError: the constants violate Jacobi.
    """
    equations = parse_structure_equations(text, params)
    return LieAlgebra.from_structure_equations(equations, name=name, check=check)


def parse_algebra_json(data: Any, name: str = "") -> LieAlgebra:
    """Canonical JSON {"dim": n, "brackets": [{"i", "j", "k", "c"}]} with 1-based indices."""
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise ParseError(f"Invalid JSON: {e.msg}", e.lineno, e.colno)
    if not isinstance(data, dict) or "dim" not in data:
        raise ParseError("Algebra JSON needs a 'dim' field")
    try:
        dim = int(data["dim"])
        brackets = list(data.get("brackets", []))
    except (TypeError, ValueError) as e:
        raise ParseError(f"Invalid algebra JSON: {e}")
    if dim < 1:
        raise ParseError(f"dim must be positive, got {dim}")
    C = np.zeros((dim, dim, dim))
    exact: Dict[Tuple[int, int, int], Any] = {}
    for number, item in enumerate(brackets):
        try:
            i, j, k = int(item["i"]) - 1, int(item["j"]) - 1, int(item["k"]) - 1
            raw = item["c"]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Bracket entry {number} is malformed: {e}")
        if not all(0 <= x < dim for x in (i, j, k)) or i == j:
            raise ParseError(f"Bracket entry {number} has invalid indices {(i + 1, j + 1, k + 1)}")
        value = parse_expression(raw) if isinstance(raw, str) else sp.sympify(raw)
        sign = 1 if i < j else -1
        key = (min(i, j), max(i, j), k)
        exact[key] = exact.get(key, 0) + sign * value
    for (i, j, k), value in exact.items():
        C[i, j, k] = float(value)
        C[j, i, k] = -float(value)
    is_exact = all(v.is_number and not v.has(sp.Float) for v in exact.values())
    return LieAlgebra(C, name=name or str(data.get("name", "")), exact=exact if is_exact else None)


def parse_algebra(text: str, params: Optional[Mapping[str, Any]] = None, name: str = "") -> LieAlgebra:
    """JSON when the text starts with '{', structure tuple otherwise."""
    if text.lstrip().startswith("{"):
        return parse_algebra_json(text, name=name)
    return parse_structure_tuple(text, params=params, name=name)


def _format_indices(i: int, j: int, dim: int) -> str:
    if dim <= 9:
        return f"f^{{{i + 1}{j + 1}}}"
    return f"f^{{{i + 1},{j + 1}}}"


def _format_coefficient(value: Any) -> str:
    if isinstance(value, sp.Basic):
        return str(value).replace(" ", "")
    return f"{float(value):.12g}"


def format_structure_tuple(L: LieAlgebra) -> str:
    """Canonical tuple text: sorted index pairs, unit coefficients omitted, minimal signs."""
    dim = L.dim
    entries = []
    for k in range(dim):
        pieces = []
        for i in range(dim):
            for j in range(i + 1, dim):
                if L.exact is not None:
                    value = -sp.sympify(L.exact.get((i, j, k), 0))
                    if value == 0:
                        continue
                    negative = bool(value.is_negative) if value.is_real else False
                else:
                    value = -float(L.constants[i, j, k])
                    if value == 0.0:
                        continue
                    negative = value < 0
                magnitude = -value if negative else value
                coeff = "" if magnitude == 1 else _format_coefficient(magnitude)
                term = _format_indices(i, j, dim)
                term = f"{coeff}{term}" if not coeff or not coeff[-1].isalpha() else f"{coeff} {term}"
                if not pieces:
                    pieces.append(f"-{term}" if negative else term)
                else:
                    pieces.append(f" - {term}" if negative else f" + {term}")
        entries.append("".join(pieces) if pieces else "0")
    return "(" + ", ".join(entries) + ")"


def algebra_to_json(L: LieAlgebra) -> Dict[str, Any]:
    """Canonical JSON with full-precision float coefficients, 1-based indices, i < j."""
    brackets = []
    for i in range(L.dim):
        for j in range(i + 1, L.dim):
            for k in range(L.dim):
                value = float(L.constants[i, j, k])
                if value != 0.0:
                    brackets.append({"i": i + 1, "j": j + 1, "k": k + 1, "c": value})
    data: Dict[str, Any] = {"dim": L.dim, "brackets": brackets}
    if L.name:
        data["name"] = L.name
    return data


def parse_params(text: Optional[str]) -> Dict[str, str]:
    """"a=1/2,b=2" into {"a": "1/2", "b": "2"}."""
    if not text:
        return {}
    params: Dict[str, str] = {}
    for chunk in text.split(","):
        if not chunk.strip():
            continue
        if "=" not in chunk:
            raise ParseError(f"Parameter binding {chunk!r} must look like name=value")
        key, value = (part.strip() for part in chunk.split("=", 1))
        if not key or not value:
            raise ParseError(f"Parameter binding {chunk!r} must look like name=value")
        parse_expression(value)
        params[key] = value
    return params


def evaluate_params(params: Mapping[str, str]) -> Dict[str, float]:
    return {key: float(parse_expression(str(value))) for key, value in params.items()}


def load_matrix(path: str) -> np.ndarray:
    """Square matrix from a JSON list of rows or whitespace-separated text."""
    if not os.path.exists(path):
        raise ParseError(f"No such file: {path}")
    with open(path) as f:
        text = f.read()
    try:
        if text.lstrip().startswith("["):
            rows = json.loads(text)
            M = np.array(
                [[float(parse_expression(x)) if isinstance(x, str) else float(x) for x in row] for row in rows]
            )
        else:
            M = np.array(
                [[float(parse_expression(x)) for x in line.split()] for line in text.splitlines() if line.strip()]
            )
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid matrix JSON in {path}: {e.msg}", e.lineno, e.colno)
    except (TypeError, ValueError) as e:
        raise ParseError(f"Invalid matrix in {path}: {e}")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParseError(f"Matrix in {path} must be square, got shape {M.shape}")
    return M


def load_algebra_file(path: str, params: Optional[Mapping[str, Any]] = None) -> LieAlgebra:
    if not os.path.exists(path):
        raise ParseError(f"No such file: {path}")
    with open(path) as f:
        text = f.read()
    return parse_algebra(text, params=params, name=os.path.splitext(os.path.basename(path))[0])


def save_trajectory_csv(trajectory: FlowTrajectory, path: str) -> None:
    """Header row plus one row per accepted step at 17 significant digits."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    trajectory.to_frame().to_csv(path, index=False, float_format="%.17g")
    logger.info(f"wrote {len(trajectory.samples)} samples to {path}")


def save_report(report: Any, path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    try:
        with open(path, "w") as f:
            json.dump(report, f, indent=2)
        pp(f"[green]Saved report to {path}[/green]")
    except (OSError, TypeError) as e:
        pp(f"[red]Error saving report to {path}: {e}[/red]")
        raise

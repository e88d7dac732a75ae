"""Almost nilpotent algebras of dimension six (and the families of higher dimension).

Equations are structure tuples df^1, ..., df^N in the entry parameters. Structures give
J f_i = s f_j per pair; the "adapted" metric makes f_i, J f_i orthonormal for every pair.
"""

import json
import logging
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
from scipy import linalg

from models.model import CatalogEntry, ExampleStructure
from tools.hermitian import AlmostComplexStructure, HermitianStructure
from tools.lie_core import LieAlgebra
from utils.errors import ParseError, ValidityError
from utils.utils import parse_expression, parse_structure_tuple

logger = logging.getLogger(__name__)

NIL5 = [1, 2, 3, 4, 5]
NO_FLAGS = {"complex": [], "skt": [], "balanced": []}

PERP = [[1, 6, "1"], [2, 3, "1"], [4, 5, "1"]]
PERP_H5 = [[1, 6, "1"], [2, 4, "-1"], [3, 5, "1"]]


def _perp(claims: List[str], pairs=None, when: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    return {"label": "perp", "pairs": pairs or PERP, "claims": claims, "when": when or {}}


def _sub(pairs, claims: List[str], metric: Any = "identity") -> Dict[str, Any]:
    return {"label": "sub", "pairs": pairs, "claims": claims, "metric": metric}


catalog_data: List[Dict[str, Any]] = [
    # nilradical h3 + R2
    {
        "name": "h3+s3.1_-1",
        "display": "h3+s3.1^{-1}",
        "equations": "(f^{23}, 0, 0, f^{46}, -f^{56}, 0)",
    },
    {
        "name": "h3+s3.3_0",
        "display": "h3+s3.3^0",
        "equations": "(f^{23}, 0, 0, f^{56}, -f^{46}, 0)",
        "flags": {"complex": ["perp"], "skt": ["perp"], "balanced": []},
        "structures": [_perp(["complex", "skt"])],
    },
    {
        "name": "s4.6+R2",
        "display": "s4.6+R2",
        "equations": "(f^{23}, f^{26}, -f^{36}, 0, 0, 0)",
        "flags": {"complex": ["sub"], "skt": ["sub"], "balanced": []},
        "structures": [_sub([[1, 2, "1"], [3, 6, "1"], [4, 5, "1"]], ["complex", "skt"])],
    },
    {
        "name": "s4.7+R2",
        "display": "s4.7+R2",
        "equations": "(f^{23}, f^{36}, -f^{26}, 0, 0, 0)",
        "flags": {"complex": ["perp", "sub"], "skt": ["perp", "sub"], "balanced": []},
        "structures": [
            _perp(["complex", "skt"]),
            _sub([[1, 4, "1"], [2, 3, "1"], [5, 6, "1"]], ["complex", "skt"]),
        ],
    },
    {
        "name": "s5.15+R",
        "display": "s5.15+R",
        "equations": "(f^{23}+f^{46}, f^{26}, -f^{36}, 0, 0, 0)",
    },
    {
        "name": "s5.16+R",
        "display": "s5.16+R",
        "equations": "(f^{23}+f^{46}, f^{36}, -f^{26}, 0, 0, 0)",
        "flags": {"complex": ["sub"], "skt": [], "balanced": ["sub"]},
        "structures": [_sub([[1, 5, "-1"], [2, 3, "1"], [4, 6, "1"]], ["complex", "balanced"])],
    },
    {
        "name": "s6.24",
        "display": "s6.24",
        "equations": "(f^{23}, f^{26}, -f^{36}, f^{56}, 0, 0)",
    },
    {
        "name": "s6.25",
        "display": "s6.25",
        "equations": "(f^{23}, f^{36}, -f^{26}, 0, f^{46}, 0)",
        "flags": {"complex": ["sub"], "skt": ["sub"], "balanced": []},
        "structures": [_sub([[1, 5, "-1"], [2, 3, "1"], [4, 6, "1"]], ["complex", "skt"])],
    },
    {
        "name": "s6.30",
        "display": "s6.30",
        "equations": "(f^{23}+f^{56}, f^{26}, -f^{36}, 0, f^{46}, 0)",
    },
    {
        "name": "s6.31",
        "display": "s6.31",
        "equations": "(f^{23}+f^{56}, f^{36}, -f^{26}, 0, f^{46}, 0)",
    },
    {
        "name": "s6.32_-1",
        "display": "s6.32^{-1}",
        "equations": "(f^{23}, f^{36}, 0, f^{46}, -f^{56}, 0)",
    },
    {
        "name": "s6.34_0",
        "display": "s6.34^0",
        "equations": "(f^{23}, f^{36}, 0, f^{56}, -f^{46}, 0)",
    },
    {
        "name": "s6.43",
        "display": "s6.43",
        "equations": "(f^{23}, f^{26}, -f^{36}, f^{26}+f^{46}, f^{36}-f^{56}, 0)",
    },
    {
        "name": "s6.44",
        "display": "s6.44",
        "equations": "(f^{23}, f^{36}, -f^{26}, f^{26}+f^{56}, f^{36}-f^{46}, 0)",
        "flags": {"complex": ["perp"], "skt": [], "balanced": []},
        "structures": [_perp(["complex"])],
    },
    {
        "name": "s6.45_a_-1",
        "display": "s6.45^{a,-1}",
        "equations": "(f^{23}, a f^{26}, -a f^{36}, f^{46}, -f^{56}, 0)",
        "parameters": [{"name": "a", "admissible": "a>0", "samples": ["1/2", "1", "3"]}],
    },
    {
        "name": "s6.46_a_-a",
        "display": "s6.46^{a,-a}",
        "equations": "(f^{23}, f^{36}, -f^{26}, a f^{46}, -a f^{56}, 0)",
        "parameters": [{"name": "a", "admissible": "a!=0", "samples": ["-1", "1/2", "2"]}],
    },
    {
        "name": "s6.47_-1",
        "display": "s6.47^{-1}",
        "equations": "(f^{23}, -f^{26}, f^{36}, f^{36}+f^{46}, -f^{56}, 0)",
    },
    {
        "name": "s6.51_a_0",
        "display": "s6.51^{a,0}",
        "equations": "(f^{23}, a f^{26}, -a f^{36}, f^{56}, -f^{46}, 0)",
        "parameters": [{"name": "a", "admissible": "a>0", "samples": ["1/2", "1", "2"]}],
        "flags": {"complex": ["sub"], "skt": ["sub"], "balanced": []},
        "structures": [
            _sub([[1, 2, "a"], [3, 6, "1"], [4, 5, "1"]], ["complex", "skt"], metric="adapted")
        ],
    },
    {
        "name": "s6.52_0_b",
        "display": "s6.52^{0,b}",
        "equations": "(f^{23}, f^{36}, -f^{26}, b f^{56}, -b f^{46}, 0)",
        "parameters": [{"name": "b", "admissible": "b>0", "samples": ["1/2", "1", "2"]}],
        "flags": {"complex": ["perp"], "skt": ["perp"], "balanced": []},
        "structures": [_perp(["complex", "skt"])],
    },
    # nilradical h5
    {
        "name": "s6.158",
        "display": "s6.158",
        "table": "h5",
        "equations": "(f^{24}+f^{35}, 0, f^{36}, 0, -f^{56}, 0)",
        "flags": {"complex": ["sub"], "skt": ["sub"], "balanced": []},
        "structures": [_sub([[1, 3, "1"], [2, 4, "1"], [5, 6, "1"]], ["complex", "skt"])],
    },
    {
        "name": "s6.159",
        "display": "s6.159",
        "table": "h5",
        "equations": "(f^{24}+f^{35}, 0, f^{56}, 0, -f^{36}, 0)",
        "flags": {"complex": ["perp"], "skt": [], "balanced": ["perp"]},
        "structures": [_perp(["complex", "balanced"], pairs=PERP_H5)],
    },
    {
        "name": "s6.160",
        "display": "s6.160",
        "table": "h5",
        "equations": "(f^{24}+f^{35}, f^{46}, f^{36}, 0, -f^{56}, 0)",
    },
    {
        "name": "s6.161_eps",
        "display": "s6.161^eps",
        "table": "h5",
        "equations": "(f^{24}+f^{35}, eps f^{46}, f^{56}, 0, f^{36}, 0)",
        "parameters": [{"name": "eps", "admissible": "eps=+-1", "samples": ["1", "-1", "1"]}],
    },
    {
        "name": "s6.162_a",
        "display": "s6.162^a",
        "table": "h5",
        "equations": "(f^{24}+f^{35}, f^{26}, a f^{36}, -f^{46}, -a f^{56}, 0)",
        "parameters": [{"name": "a", "admissible": "0<a<=1", "samples": ["1", "1/2", "1/10"]}],
        "flags": {"complex": ["perp@a=1"], "skt": [], "balanced": ["perp@a=1"]},
        "structures": [_perp(["complex", "balanced"], when={"a": "1"})],
    },
    {
        "name": "s6.163",
        "display": "s6.163",
        "table": "h5",
        "equations": "(f^{24}+f^{35}, f^{26}, f^{26}+f^{36}, -f^{46}-f^{56}, -f^{56}, 0)",
    },
    {
        "name": "s6.164_a",
        "display": "s6.164^a",
        "table": "h5",
        "equations": "(f^{24}+f^{35}, a f^{26}, f^{56}, -a f^{46}, -f^{36}, 0)",
        "parameters": [{"name": "a", "admissible": "a>0", "samples": ["1/2", "1", "2"]}],
        "flags": {"complex": ["sub"], "skt": ["sub"], "balanced": []},
        "structures": [
            _sub([[1, 2, "a"], [3, 5, "1"], [4, 6, "1"]], ["complex", "skt"], metric="adapted")
        ],
    },
    {
        "name": "s6.165_a",
        "display": "s6.165^a",
        "table": "h5",
        "equations": "(f^{24}+f^{35}, a f^{26}+f^{36}, -f^{26}+a f^{36}, -a f^{46}+f^{56}, -f^{46}-a f^{56}, 0)",
        "parameters": [{"name": "a", "admissible": "a>0", "samples": ["1/2", "1", "2"]}],
        "flags": {"complex": ["perp"], "skt": [], "balanced": ["perp"]},
        "structures": [_perp(["complex", "balanced"])],
    },
    {
        "name": "s6.166_a",
        "display": "s6.166^a",
        "table": "h5",
        "equations": "(f^{24}+f^{35}, f^{46}, a f^{56}, -f^{26}, -a f^{36}, 0)",
        "parameters": [{"name": "a", "admissible": "0<|a|<=1", "samples": ["1", "-1/2", "1/3"]}],
        "flags": {"complex": ["perp"], "skt": [], "balanced": ["perp"]},
        "structures": [_perp(["complex", "balanced"], pairs=PERP_H5)],
        "notes": "Balanced structures exist on the whole range 0<|a|<=1; a=1 is singled out only for holomorphic forms.",
    },
    {
        "name": "s6.167",
        "display": "s6.167",
        "table": "h5",
        "equations": "(f^{24}+f^{35}, f^{36}, -f^{26}, f^{26}+f^{56}, f^{36}-f^{46}, 0)",
        "flags": {"complex": ["perp"], "skt": [], "balanced": ["perp"]},
        "structures": [_perp(["complex", "balanced"])],
    },
    # families
    {
        "name": "skt-perp-family",
        "display": "df^1 = c f^{23}, rotations b1, b2",
        "table": "family",
        "equations": "(c f^{23}, b1 f^{36}, -b1 f^{26}, b2 f^{56}, -b2 f^{46}, 0)",
        "parameters": [
            {"name": "c", "admissible": "c!=0", "samples": ["1", "2", "-1/2"]},
            {"name": "b1", "admissible": "(b1,b2)!=0", "samples": ["1", "0", "2"]},
            {"name": "b2", "admissible": "(b1,b2)!=0", "samples": ["0", "1", "3"]},
        ],
        "flags": {"complex": ["perp"], "skt": ["perp"], "balanced": []},
        "structures": [_perp(["complex", "skt"])],
    },
    {
        "name": "skt-sub-family",
        "display": "df^2 = -f^{2,2n}, df^3 = f^{3,2n}, rotations b",
        "table": "family",
        "equations": "(f^{23}, -f^{28}, f^{38}, b f^{58}, -b f^{48}, b f^{78}, -b f^{68}, 0)",
        "parameters": [
            {"name": "b", "admissible": "b real", "samples": ["2*pi/ln(2+sqrt(3))", "1", "-1/2"]}
        ],
        "nilradical": [1, 2, 3, 4, 5, 6, 7],
        "nilradical_type": "h3+R4",
        "flags": {"complex": ["sub"], "skt": ["sub"], "balanced": []},
        "structures": [
            _sub([[1, 2, "-1"], [3, 8, "1"], [4, 5, "1"], [6, 7, "1"]], ["complex", "skt"])
        ],
    },
    {
        "name": "kahler-sub-family",
        "display": "s4.8^{-1/2}+R2 and rotations b",
        "table": "family",
        "equations": "(f^{23}+1/2 f^{16}, -1/2 f^{26}, f^{36}, b f^{56}, -b f^{46}, 0)",
        "parameters": [{"name": "b", "admissible": "b real", "samples": ["0", "1", "2"]}],
        "flags": {"complex": ["sub"], "skt": ["sub"], "balanced": ["sub"]},
        "structures": [
            _sub(
                [[1, 2, "-1"], [3, 6, "1"], [4, 5, "1"]],
                ["complex", "skt", "balanced", "kahler"],
            )
        ],
        "strongly_unimodular": False,
        "notes": "Kahler but not unimodular: tr ad f_6 = 1.",
    },
    {
        "name": "gtheta-family",
        "display": "df^1 = f^{23}, rotations b1, b2, tilted metric g_theta",
        "table": "family",
        "equations": "(f^{23}, b1 f^{36}, -b1 f^{26}, b2 f^{56}, -b2 f^{46}, 0)",
        "parameters": [
            {"name": "b1", "admissible": "(b1,b2)!=0", "samples": ["1", "0", "2"]},
            {"name": "b2", "admissible": "(b1,b2)!=0", "samples": ["0", "1", "3"]},
            {"name": "theta", "admissible": "0<=theta<pi/2", "samples": ["0", "pi/6", "pi/3"]},
        ],
        "flags": {"complex": ["perp"], "skt": ["perp"], "balanced": []},
        "structures": [
            _perp(["complex", "skt"]),
            {
                "label": "tilted",
                "pairs": PERP,
                "claims": ["complex", "skt"],
                "metric": [
                    ["1", "0", "0", "0", "sin(theta)", "0"],
                    ["0", "1", "0", "0", "0", "0"],
                    ["0", "0", "1", "0", "0", "0"],
                    ["0", "0", "0", "1", "0", "-sin(theta)"],
                    ["sin(theta)", "0", "0", "0", "1", "0"],
                    ["0", "0", "0", "-sin(theta)", "0", "1"],
                ],
            },
        ],
    },
    {
        "name": "gk-family",
        "display": "A^{p,q}_8",
        "table": "family",
        "equations": "(f^{18}, -1/2 f^{28} + p f^{38}, -p f^{28} - 1/2 f^{38}, q f^{58}, -q f^{48}, q f^{78}, -q f^{68}, 0)",
        "parameters": [
            {"name": "p", "admissible": "p real", "samples": ["1", "0", "1/3"]},
            {"name": "q", "admissible": "q real", "samples": ["1", "2", "1/2"]},
        ],
        "nilradical": [1, 2, 3, 4, 5, 6, 7],
        "nilradical_type": "R7",
        "flags": NO_FLAGS,
        "structures": [
            {
                "label": "plus",
                "pairs": [[1, 8, "1"], [2, 3, "1"], [4, 5, "1"], [6, 7, "-1"]],
                "claims": ["complex", "skt"],
            },
            {
                "label": "minus",
                "pairs": [[1, 8, "1"], [2, 3, "-1"], [4, 7, "-1"], [5, 6, "1"]],
                "claims": ["complex", "skt"],
            },
        ],
        "notes": "Generalized Kahler pair J+, J- with the identity metric.",
    },
    # flat Kahler checks
    {
        "name": "R6",
        "display": "R6",
        "table": "extra",
        "equations": "(0, 0, 0, 0, 0, 0)",
        "nilradical": [1, 2, 3, 4, 5, 6],
        "nilradical_type": "R6",
        "structures": [
            {
                "label": "standard",
                "pairs": [[1, 2, "1"], [3, 4, "1"], [5, 6, "1"]],
                "claims": ["complex", "skt", "balanced", "kahler"],
            }
        ],
    },
    {
        "name": "s3.3_0+R3",
        "display": "s3.3^0+R3",
        "table": "extra",
        "equations": "(0, 0, 0, f^{56}, -f^{46}, 0)",
        "nilradical_type": "R5",
        "structures": [
            {
                "label": "standard",
                "pairs": [[1, 2, "1"], [3, 6, "1"], [4, 5, "1"]],
                "claims": ["complex", "skt", "balanced", "kahler"],
            }
        ],
    },
]


def _with_defaults(raw: Dict[str, Any]) -> Dict[str, Any]:
    data = {"nilradical": NIL5, "flags": NO_FLAGS}
    data.update(raw)
    data.setdefault("table", "h3+R2")
    if data["table"] == "h5":
        data.setdefault("nilradical_type", "h5")
    return data


@lru_cache(maxsize=1)
def _catalog() -> tuple:
    return tuple(CatalogEntry.model_validate(_with_defaults(raw)) for raw in catalog_data)


def catalog() -> List[CatalogEntry]:
    """All entries: the two six-dimensional tables, the families and the flat extras."""
    return [entry.model_copy(deep=True) for entry in _catalog()]


def list_entries(table: Optional[str] = None) -> List[str]:
    return sorted(e.name for e in _catalog() if table is None or e.table == table)


def get_entry(name: str) -> CatalogEntry:
    """Entry by ASCII name (case-insensitive) or by its printed name.

    Raises:
        ValidityError: for unknown names.
    """
    key = name.strip().lower()
    for entry in _catalog():
        if key in (entry.name.lower(), entry.display.lower()):
            return entry.model_copy(deep=True)
    raise ValidityError(f"Unknown catalog entry {name!r}")


def catalog_json(entries: Optional[List[CatalogEntry]] = None) -> str:
    return json.dumps([e.model_dump() for e in (entries or catalog())], indent=2)


def catalog_from_json(text: str) -> List[CatalogEntry]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid catalog JSON: {e.msg}", e.lineno, e.colno)
    if not isinstance(data, list):
        raise ParseError("Catalog JSON must be a list of entries")
    try:
        return [CatalogEntry.model_validate(item) for item in data]
    except ValueError as e:
        raise ValidityError(f"Invalid catalog entry: {e}")


# Builders


def default_params(entry: CatalogEntry) -> Dict[str, str]:
    return entry.sample_points()[0]


def resolve_params(entry: CatalogEntry, params: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    binding = dict(default_params(entry))
    binding.update({k: str(v) for k, v in (params or {}).items()})
    unknown = set(binding) - {p.name for p in entry.parameters}
    if unknown:
        raise ValidityError(f"{entry.name} has no parameters {sorted(unknown)}")
    return binding


def evaluate(expression: Any, params: Optional[Mapping[str, Any]] = None) -> float:
    return float(parse_expression(str(expression), params))


def entry_algebra(entry: CatalogEntry, params: Optional[Mapping[str, Any]] = None) -> LieAlgebra:
    """The entry's Lie algebra at ``params``; missing parameters take the first sample.

    Raises:
        ValidityError: unknown parameters or a Jacobi failure.
    """
    binding = resolve_params(entry, params)
    return parse_structure_tuple(entry.equations, params=binding, name=entry.name)


def structure_applies(structure: ExampleStructure, params: Mapping[str, Any]) -> bool:
    return all(
        name in params and abs(evaluate(params[name]) - evaluate(value)) < 1e-12
        for name, value in structure.when.items()
    )


def _adapted_metric(J: np.ndarray, pairs) -> np.ndarray:
    P = np.column_stack(
        [np.eye(J.shape[0])[:, i] for i, _, _ in pairs] + [J[:, i] for i, _, _ in pairs]
    )
    return linalg.inv(P @ P.T)


def entry_structure(
    entry: CatalogEntry,
    structure: ExampleStructure,
    L: LieAlgebra,
    params: Optional[Mapping[str, Any]] = None,
) -> HermitianStructure:
    """(J, g) of an attached structure at ``params``.

    Raises:
        ValidityError: J^2 != -1, a metric that is not J-Hermitian or not positive.
    """
    binding = resolve_params(entry, params)
    pairs = [(i - 1, j - 1, evaluate(s, binding)) for i, j, s in structure.pairs]
    J = AlmostComplexStructure.from_pairs(L.dim, pairs)
    if structure.metric == "identity":
        g = np.eye(L.dim)
    elif structure.metric == "adapted":
        g = _adapted_metric(J.matrix, pairs)
    else:
        g = np.array([[evaluate(x, binding) for x in row] for row in structure.metric])
    return HermitianStructure(L, J, g)

import numpy as np
import pytest

from utils.catalog_data import (
    catalog,
    catalog_from_json,
    catalog_json,
    entry_algebra,
    entry_structure,
    get_entry,
    list_entries,
    resolve_params,
    structure_applies,
)
from utils.errors import ParseError, ValidityError


def test_table_sizes():
    assert len(list_entries("h3+R2")) == 19
    assert len(list_entries("h5")) == 10
    assert len(list_entries("family")) == 5
    assert len(list_entries("extra")) == 2
    assert len(catalog()) == 36


def test_get_entry_by_name_or_display():
    assert get_entry("S6.52_0_B").name == "s6.52_0_b"
    assert get_entry("s6.52^{0,b}").name == "s6.52_0_b"
    with pytest.raises(ValidityError):
        get_entry("s7.1")


def test_entry_copies_are_independent():
    entry = get_entry("s6.44")
    entry.flags["skt"].append("perp")
    assert get_entry("s6.44").flags["skt"] == []


def test_flags():
    assert get_entry("s6.44").flags == {"complex": ["perp"], "skt": [], "balanced": []}
    assert get_entry("s6.162_a").flags["balanced"] == ["perp@a=1"]
    assert get_entry("s5.16+R").flags == {"complex": ["sub"], "skt": [], "balanced": ["sub"]}
    assert get_entry("s6.158").nilradical_type == "h5"


def test_conditional_structure():
    entry = get_entry("s6.162_a")
    (structure,) = entry.structures
    assert structure_applies(structure, {"a": "1"})
    assert not structure_applies(structure, {"a": "1/2"})
    assert not structure_applies(structure, {})


def test_every_entry_builds_at_its_samples():
    for entry in catalog():
        for point in entry.sample_points():
            L = entry_algebra(entry, point)
            assert L.dim == len(entry.equations.split(","))
            assert L.jacobi_residual() < 1e-10


def test_resolve_params():
    entry = get_entry("skt-perp-family")
    assert resolve_params(entry, None) == {"c": "1", "b1": "1", "b2": "0"}
    assert resolve_params(entry, {"b2": 3})["b2"] == "3"
    with pytest.raises(ValidityError):
        resolve_params(entry, {"z": "1"})


def test_skt_sub_family_default_rotation():
    L = entry_algebra(get_entry("skt-sub-family"))
    assert L.dim == 8
    assert L.constants[4, 7, 3] == pytest.approx(-2 * np.pi / np.log(2 + np.sqrt(3)))


def test_adapted_metric():
    entry = get_entry("s6.51_a_0")
    params = {"a": "1/2"}
    H = entry_structure(entry, entry.structures[0], entry_algebra(entry, params), params)
    assert H.metric.g[1, 1] == pytest.approx(4.0)
    assert H.metric.g[0, 0] == pytest.approx(1.0)


def test_tilted_metric():
    entry = get_entry("gtheta-family")
    params = {"theta": "pi/6"}
    tilted = entry.structures[1]
    H = entry_structure(entry, tilted, entry_algebra(entry, params), params)
    assert H.metric.g[0, 4] == pytest.approx(0.5)
    assert H.metric.g[3, 5] == pytest.approx(-0.5)


def test_catalog_json_round_trip():
    assert catalog_from_json(catalog_json()) == catalog()


def test_catalog_json_errors():
    with pytest.raises(ParseError) as info:
        catalog_from_json("[\n  {,}\n]")
    assert info.value.line == 2
    with pytest.raises(ParseError):
        catalog_from_json("{}")
    with pytest.raises(ValidityError):
        catalog_from_json('[{"name": "x"}]')

import numpy as np
import pytest

from graph.graph import nilradical_type, verify_catalog, verify_entry
from models.model import CatalogEntry
from utils.catalog_data import entry_algebra, get_entry


@pytest.mark.parametrize(
    "name,params",
    [("R6", None), ("s6.52_0_b", {"b": "1"}), ("s5.16+R", None)],
)
def test_verified_entries(name, params):
    report = verify_entry(get_entry(name), params)
    assert report.passed, [c.name for c in report.failures()]
    names = {c.name for c in report.checks}
    assert {"jacobi", "strongly_unimodular", "nilradical"} <= names


def test_report_carries_binding_and_flags():
    report = verify_entry(get_entry("s6.52_0_b"), {"b": "2"})
    assert report.params == {"b": "2"}
    names = {c.name for c in report.checks}
    assert {"perp:complex", "perp:skt", "flag:complex:perp", "flag:skt:perp"} <= names


def test_wrong_flag_is_reported():
    entry = get_entry("s6.44")
    entry.flags["skt"] = ["perp"]
    report = verify_entry(entry)
    assert not report.passed
    assert "flag:skt:perp" in {c.name for c in report.failures()}


def test_build_failure_is_reported():
    entry = CatalogEntry(name="broken", equations="(f^{23}, f^{12}, 0)", nilradical=[1, 2])
    report = verify_entry(entry)
    assert [c.name for c in report.checks] == ["build"]
    assert not report.passed


def test_verify_catalog_runs_every_sample():
    reports = verify_catalog([get_entry("s6.52_0_b")])
    assert [r.params["b"] for r in reports] == ["1/2", "1", "2"]


@pytest.mark.parametrize(
    "name,expected",
    [("s4.7+R2", "h3+R2"), ("s6.158", "h5"), ("R6", "R6"), ("s3.3_0+R3", "R5")],
)
def test_nilradical_type(name, expected):
    entry = get_entry(name)
    L = entry_algebra(entry)
    basis = np.eye(L.dim)[:, [i - 1 for i in entry.nilradical]]
    found, dims = nilradical_type(L, basis)
    assert found == expected
    assert dims[-1] == 0

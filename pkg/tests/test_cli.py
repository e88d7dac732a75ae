import json

import pandas as pd
import pytest
from pydantic import ValidationError

from main import build_parser, main
from models.model import RunConfig
from tools.flows import pluriclosed_c


def test_help_and_usage_errors():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    assert main(["--help"]) == 0
    assert main(["no-such-command"]) == 2
    assert main(["gk-verify", "--p", "1"]) == 2


def test_check_catalog_entry():
    assert main(["check", "s4.7+R2"]) == 0
    assert main(["--json", "check", "s5.16+R"]) == 0


def test_check_exit_codes(tmp_path):
    assert main(["check", "(f^{23}"]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("(f^{23}, f^{77}, 0)")
    assert main(["check", str(bad)]) == 2
    jacobi = tmp_path / "jacobi.txt"
    jacobi.write_text("(f^{23}, f^{12}, 0)")
    assert main(["check", str(jacobi)]) == 3
    assert main(["check", "s6.45_a_-1", "--params", "a"]) == 2


def test_export_then_check(tmp_path):
    path = tmp_path / "s47.json"
    assert main(["export", "--algebra", "s4.7+R2", "--out", str(path)]) == 0
    data = json.loads(path.read_text())
    assert data["dim"] == 6
    assert main(["check", str(path), "--nilradical", "1,2,3,4,5"]) == 0


def test_lattice_commands():
    assert main(["lattice", "--entry", "skt-sub-family", "--t0", "auto"]) == 0
    assert main(["lattice", "--entry", "s6.52_0_b", "--t0", "auto"]) == 3
    assert main(["lattice", "--entry", "s7.1"]) == 3
    assert main(["lattice", "--solve", "2,0"]) == 0
    assert main(["lattice", "--solve", "0,0"]) == 4
    assert main(["lattice", "--solve", "two"]) == 2


def test_gk_verify():
    assert main(["gk-verify", "--p", "1", "--q", "1"]) == 0
    assert main(["gk-verify", "--n", "3", "--p", "1", "--q", "1"]) == 3


def test_pluriclosed_flow_to_csv(tmp_path):
    path = tmp_path / "flow.csv"
    code = main(
        ["flow", "pluriclosed", "--algebra", "skt-perp-family", "--t-max", "0.5", "--tolerance", "1e-10", "--out", str(path)]
    )
    assert code == 0
    frame = pd.read_csv(path)
    assert frame["t"].iloc[-1] == pytest.approx(0.5)
    assert frame["c"].iloc[-1] == pytest.approx(float(pluriclosed_c(0.5, 1.0)), abs=1e-6)


def test_flow_configuration_errors():
    assert main(["flow", "pluriclosed", "--algebra", "skt-perp-family", "--t-max", "-1"]) == 3
    assert main(["flow", "pluriclosed"]) == 3
    assert main(["flow", "pluriclosed", "--reduced"]) == 3


def test_search_on_abelian_algebra(monkeypatch):
    monkeypatch.setenv("HERMLIE_SEED", "3")
    assert main(["search", "--algebra", "R6", "--target", "skt", "--restarts", "1", "--iterations", "5"]) == 0


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("HERMLIE_SEED", "11")
    assert RunConfig.from_env(command="search", seed=0).seed == 11
    monkeypatch.setenv("HERMLIE_SEED", "eleven")
    with pytest.raises(ValueError):
        RunConfig.from_env(command="search")
    assert main(["search", "--algebra", "R6", "--target", "skt"]) == 2


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig(command="flow", tolerance=1.0)
    with pytest.raises(ValidationError):
        RunConfig(command="search", restarts=0)

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from models.model import Case1Data, FlowSettings
from models.state import (
    BalancedFlowState,
    BracketPoint,
    FlowSample,
    FlowTrajectory,
    PluriclosedCase2State,
)
from tools.almost_nilpotent import build_case1, pair_complex_structure, rotation_blocks, streq_skt
from tools.flows import (
    abelian_k3_gauge,
    balanced_case1_state,
    balanced_case2_rhs,
    balanced_example,
    balanced_example_limit,
    balanced_state_constants,
    bracket_points,
    constants_from_state,
    describe_constants,
    hermitian_at,
    integrate_bracket_flow,
    integrate_reduced,
    metric_flow_direct,
    monotone_violations,
    normalized_pluriclosed_rhs,
    pluriclosed_c,
    pluriclosed_case2_rhs,
    pluriclosed_state_constants,
    readout_case1,
    readout_case2,
    sub2_projected_rhs,
)
from tools.hermitian import balanced_residual
from tools.lie_core import LieAlgebra
from utils.errors import ValidityError
from utils.utils import parse_structure_tuple, save_trajectory_csv


def balanced_example_bracket(q0, r0, s0):
    E = np.zeros((4, 4))
    E[0, 1], E[1, 0] = q0, -q0
    E[2, 3], E[3, 2] = -q0, q0
    L, H = build_case1(Case1Data(n=3, A=rotation_blocks([r0, s0]).tolist(), eta=E.tolist()))
    return L, H


def test_pluriclosed_closed_form():
    assert pluriclosed_c(4.0, 1.0) == pytest.approx(1.0 / 3.0)
    assert np.allclose(pluriclosed_c(np.array([0.0, 4.0]), 1.0), [1.0, 1.0 / 3.0])


def test_pluriclosed_bracket_flow_matches_closed_form():
    L, H = streq_skt(1.0, [1.0, 0.0])
    trajectory = integrate_bracket_flow(
        L, H.J, "pluriclosed", FlowSettings(t_max=4.0, tolerance=1e-10), readout=readout_case1
    )
    final = trajectory.final
    assert final.t == pytest.approx(4.0)
    assert final.state["c"] == pytest.approx(1.0 / 3.0, abs=1e-6)
    assert final.state["a"] == pytest.approx(0.0, abs=1e-10)
    assert max(trajectory.column("jacobi")) < 1e-7
    assert not monotone_violations(trajectory, ["c"])


def test_pluriclosed_metric_flow_scales_eta_block():
    _, H = streq_skt(1.0, [1.0, 0.5])
    trajectory = metric_flow_direct(H, "pluriclosed", FlowSettings(t_max=1.5, tolerance=1e-10))
    final = trajectory.final.state
    assert final["omega_23"] == pytest.approx(2.0, abs=1e-6)
    assert final["omega_16"] == pytest.approx(1.0, abs=1e-8)
    assert final["omega_45"] == pytest.approx(1.0, abs=1e-8)


def test_balanced_example_closed_form():
    values = balanced_example(1.0, 1.0, 2.0, 0.0)
    assert values["q"] == pytest.approx(4.0**-0.25)
    assert values["r"] == pytest.approx(2.0 * 4.0 ** (1.0 / 12.0))
    assert values["s"] == 0.0
    assert values["u1"] * values["u2"] == pytest.approx(1.0)


def test_balanced_example_limit():
    limit = balanced_example_limit(1.0, 2.0, 0.0)
    assert limit == pytest.approx({"q": 0.0, "r": np.sqrt(5.0), "s": 0.0})
    with pytest.raises(ValidityError):
        balanced_example_limit(1.0, 0.0, 0.0)


def test_reduced_balanced_case1_flow():
    L, _ = balanced_example_bracket(1.0, 2.0, 0.0)
    state = balanced_case1_state(L.constants)
    assert state.A_matrix[0, 1] == pytest.approx(2.0)
    trajectory = integrate_reduced(state, FlowSettings(t_max=1.0, tolerance=1e-10))
    final = trajectory.final.state
    expected = balanced_example(1.0, 1.0, 2.0, 0.0)
    assert final["eta_01"] == pytest.approx(expected["q"], abs=1e-7)
    assert final["eta_23"] == pytest.approx(-expected["q"], abs=1e-7)
    assert final["A_01"] == pytest.approx(expected["r"], abs=1e-7)
    assert final["a"] == 0.0
    assert not monotone_violations(trajectory, ["eta_01"])
    assert monotone_violations(trajectory, ["A_01"])


def test_balanced_case1_state_rejects_other_layouts():
    with pytest.raises(ValidityError):
        balanced_case1_state(streq_skt(1.0, [1.0])[0].constants)
    with pytest.raises(ValidityError):
        balanced_case1_state(parse_structure_tuple("(0, 0, 0, 0, 0, f^{12})").constants)


def test_reduced_balanced_flow_has_no_normalized_variant():
    with pytest.raises(ValidityError):
        integrate_reduced(BalancedFlowState(case=2, b=1.0, c=1.0), FlowSettings(t_max=1.0), normalized=True)


def test_describe_constants_round_trip(s47):
    state = describe_constants(s47.constants)
    assert state["c_2_3_1"] == pytest.approx(-1.0)
    assert np.allclose(constants_from_state(state, 6), s47.constants)


def test_flow_settings_validation():
    with pytest.raises(ValidationError):
        FlowSettings(t_max=0.0)
    with pytest.raises(ValidationError):
        FlowSettings(t_max=1.0, tolerance=-1.0)
    assert FlowSettings(t_max=2.0).step_cap == pytest.approx(0.1)


def test_trajectory_times_must_increase():
    with pytest.raises(ValidationError):
        FlowTrajectory(flow="x", samples=[FlowSample(t=1.0), FlowSample(t=0.5)])


def test_save_trajectory_csv(tmp_path):
    trajectory = integrate_reduced(
        BalancedFlowState(case=2, b=1.0, c=1.0, p=0.5), FlowSettings(t_max=0.5)
    )
    path = tmp_path / "runs" / "balanced.csv"
    save_trajectory_csv(trajectory, str(path))
    frame = pd.read_csv(path)
    assert list(frame.columns[:5]) == ["t", "b", "c", "p", "q"]
    assert len(frame) == len(trajectory.samples)
    assert frame["t"].iloc[-1] == pytest.approx(0.5)


def test_balanced_metric_flow_matches_closed_form():
    _, H = balanced_example_bracket(1.0, 2.0, 0.0)
    trajectory = metric_flow_direct(H, "balanced", FlowSettings(t_max=1.0, tolerance=1e-10))
    final = trajectory.final.state
    assert trajectory.final.t == pytest.approx(1.0)
    assert final["omega_16"] == pytest.approx(4.0 ** (-1.0 / 6.0), abs=1e-6)
    assert final["omega_23"] == pytest.approx(4.0 ** (1.0 / 6.0), abs=1e-6)
    assert final["omega_45"] == pytest.approx(4.0 ** (1.0 / 6.0), abs=1e-6)
    assert max(trajectory.column("balanced_residual")) < 1e-8


SUB2_POINT = PluriclosedCase2State(branch="sub2", a=0.3, q=0.7, v2=0.2, c=1.1, alpha=[0.4, -0.5])


def test_sub2_rhs_values():
    expected = [-0.1448182, -0.3379091, -0.2110909, -1.782, -1.2105909, 1.6208636]
    assert np.allclose(pluriclosed_case2_rhs(SUB2_POINT), expected, atol=1e-6)


def test_sub2_rhs_agrees_with_gauged_bracket_flow():
    assert np.allclose(pluriclosed_case2_rhs(SUB2_POINT), sub2_projected_rhs(SUB2_POINT), atol=1e-9)


def test_sub2_flow_without_alpha_matches_closed_form():
    state = PluriclosedCase2State(branch="sub2", q=1.0, c=1.0)
    trajectory = integrate_reduced(state, FlowSettings(t_max=1.0, tolerance=1e-10))
    final = trajectory.final.state
    assert final["c"] == pytest.approx(1.0 / np.sqrt(3.0), abs=1e-7)
    assert final["q"] == pytest.approx(1.0, abs=1e-12)
    assert max(trajectory.column("skt_residual")) < 1e-8


def test_sub2_flow_is_monotone():
    trajectory = integrate_reduced(SUB2_POINT, FlowSettings(t_max=5.0))
    assert not monotone_violations(trajectory, ["c_sq", "alpha_sq"])
    squares = {name: trajectory.column(name) ** 2 for name in ("a", "q", "v2")}
    for name, values in squares.items():
        assert np.all(np.diff(values) <= 1e-12), name


def test_sub2_rejects_normalized_flow():
    with pytest.raises(ValidityError):
        normalized_pluriclosed_rhs(SUB2_POINT)
    with pytest.raises(ValidityError):
        integrate_reduced(SUB2_POINT, FlowSettings(t_max=1.0), normalized=True)


def abelian_state(rng, m):
    return PluriclosedCase2State(
        branch="abelian_k3",
        a=float(rng.uniform(0.5, 1.5)),
        v1=float(rng.normal()),
        v2=float(rng.normal()),
        v=rng.normal(size=m).tolist(),
        A=rotation_blocks(0.8 * rng.normal(size=m // 2)).tolist(),
    )


@pytest.mark.parametrize("m", [2, 4])
def test_abelian_k3_flow_is_monotone(m):
    rng = np.random.default_rng(2024 + m)
    names = ["a_sq", "v1_sq", "v2_sq", "v_sq", "A_sq"]
    for _ in range(20):
        trajectory = integrate_reduced(abelian_state(rng, m), FlowSettings(t_max=100.0, max_step=1.0))
        assert trajectory.final.t == pytest.approx(100.0)
        assert not monotone_violations(trajectory, names)


def test_abelian_k3_reduced_flow_matches_bracket_flow():
    state = PluriclosedCase2State(
        branch="abelian_k3", a=1.0, v1=0.5, v2=0.3, v=[0.2, -0.1], A=[[0.0, 0.7], [-0.7, 0.0]]
    )
    settings = FlowSettings(t_max=5.0, tolerance=1e-10)
    reduced = integrate_reduced(state, settings).final.state
    full = integrate_bracket_flow(
        pluriclosed_state_constants(state),
        pair_complex_structure(6),
        "pluriclosed",
        settings,
        gauge=abelian_k3_gauge,
        readout=readout_case2,
    ).final.state
    assert full["a"] == pytest.approx(reduced["a"], abs=1e-7)
    assert full["a2"] == pytest.approx(-reduced["a"], abs=1e-7)
    assert full["v1"] == pytest.approx(reduced["v1"], abs=1e-7)
    assert full["v2"] == pytest.approx(reduced["v2"], abs=1e-7)
    assert full["v_norm"] == pytest.approx(np.hypot(reduced["v_0"], reduced["v_1"]), abs=1e-7)
    A = np.array([[reduced["A_00"], reduced["A_01"]], [reduced["A_10"], reduced["A_11"]]])
    assert full["A_norm"] == pytest.approx(np.linalg.norm(A), abs=1e-7)


def test_normalized_abelian_k3_rhs_fixes_a():
    state = PluriclosedCase2State(
        branch="abelian_k3", a=1.0, v1=0.5, v2=0.3, v=[0.2, -0.1], A=[[0.0, 0.7], [-0.7, 0.0]]
    )
    plain = pluriclosed_case2_rhs(state)
    normalized = normalized_pluriclosed_rhs(state)
    assert plain[0] < 0.0
    assert normalized[0] == pytest.approx(0.0, abs=1e-14)
    trajectory = integrate_reduced(state, FlowSettings(t_max=20.0), normalized=True)
    assert np.allclose(trajectory.column("a"), 1.0, atol=1e-10)


def test_balanced_case2_rhs():
    rhs = balanced_case2_rhs(BalancedFlowState(case=2, b=1.0, c=1.0))
    assert np.allclose(rhs, [-0.25, -0.75, 0.0, 0.0])
    with pytest.raises(ValidityError):
        balanced_case2_rhs(BalancedFlowState(case=1))


def test_balanced_case2_flow_stays_balanced():
    start = BalancedFlowState(case=2, b=1.0, c=0.8, p=0.5, q=-0.3)
    trajectory = integrate_reduced(start, FlowSettings(t_max=3.0))
    J = pair_complex_structure(6)
    for sample in trajectory.samples:
        state = start.with_vector([sample.state[name] for name in start.columns()])
        H = hermitian_at(balanced_state_constants(state), J)
        assert balanced_residual(H) < 1e-8
    assert not monotone_violations(trajectory, ["size"])


def test_bracket_points_of_full_run():
    L, H = streq_skt(1.0, [1.0, 0.0])
    trajectory = integrate_bracket_flow(L, H.J, "pluriclosed", FlowSettings(t_max=1.0))
    points = bracket_points(trajectory, L.dim)
    assert [p.t for p in points] == [s.t for s in trajectory.samples]
    assert np.allclose(points[0].array(), L.constants)
    assert all(LieAlgebra(p.array(), check=False).jacobi_residual() < 1e-7 for p in points)
    with pytest.raises(ValidityError):
        bracket_points(integrate_reduced(BalancedFlowState(case=2, b=1.0, c=1.0), FlowSettings(t_max=0.1)), 6)


def test_bracket_point_size_validation():
    with pytest.raises(ValidationError):
        BracketPoint(t=0.0, dim=2, constants=[0.0] * 7)
    point = BracketPoint.from_array(0.5, np.zeros((3, 3, 3)))
    assert point.array().shape == (3, 3, 3)

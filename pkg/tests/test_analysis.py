import itertools
from typing import Tuple

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis.strategies import DrawFn, composite

from hawkdove import (
    STRATEGIES,
    AnalysisError,
    Label,
    PayoffMatrix,
    ScenarioConfig,
    Strategy,
    Trajectory,
    asymmetry_report,
    classify,
    empirical_payoff,
    format_payoff_table,
    pure_nash,
    rollout,
    scripted_strategy,
)

from .strategies import assert_close, payoff_matrices, payoff_values

S, A = Strategy.STRAIGHT, Strategy.AVOID


def play(config: ScenarioConfig, a: Strategy, b: Strategy) -> Trajectory:
    return rollout(config, [scripted_strategy(a, 0, config), scripted_strategy(b, 1, config)])


def symmetric(r_s: float, r_a: float, r_d: float, r_aa: float) -> PayoffMatrix:
    "Row and column player see the same game: S/A payoffs with `r_aa` for mutual avoidance."
    return PayoffMatrix.from_cells(
        [
            [(r_d, r_d), (r_s, r_a)],
            [(r_a, r_s), (r_aa, r_aa)],
        ]
    )


# ## Labels


@pytest.mark.analysis
def test_classify_straight_and_sidestep(parallel9: ScenarioConfig) -> None:
    traj = play(parallel9, S, A)
    straight = classify(traj, 0, parallel9)
    avoid = classify(traj, 1, parallel9)
    assert (straight.label, straight.extra_steps, straight.waited) == (Label.STRAIGHT, 0, False)
    assert (avoid.label, avoid.extra_steps, avoid.waited) == (Label.AVOID, 2, False)


@pytest.mark.analysis
def test_classify_collision(parallel9: ScenarioConfig) -> None:
    traj = play(parallel9, S, S)
    assert classify(traj, 0, parallel9).label is Label.COLLIDE
    assert classify(traj, 1, parallel9).label is Label.COLLIDE


@pytest.mark.analysis
def test_classify_wait(perpendicular9: ScenarioConfig) -> None:
    traj = play(perpendicular9, S, A)
    label = classify(traj, 1, perpendicular9)
    assert label.label is Label.AVOID
    assert label.waited
    assert label.extra_steps == 1


@pytest.mark.analysis
def test_classify_absent_agent_fails() -> None:
    config = ScenarioConfig.make("parallel", 9, solo=0)
    traj = rollout(config, [scripted_strategy(S, 0, config), None])
    assert classify(traj, 0, config).label is Label.STRAIGHT
    assert classify(traj, 1, config).label is Label.FAIL
    with pytest.raises(AnalysisError):
        classify(traj, 2, config)


EXPECTED = {
    (S, S): (Label.COLLIDE, Label.COLLIDE),
    (S, A): (Label.STRAIGHT, Label.AVOID),
    (A, S): (Label.AVOID, Label.STRAIGHT),
    (A, A): (Label.AVOID, Label.AVOID),
}


@pytest.mark.analysis
@pytest.mark.parametrize("scenario", ["parallel", "perpendicular"])
@pytest.mark.parametrize("size", [9, 13, 17])
def test_scripted_strategies_earn_their_labels(scenario: str, size: int) -> None:
    config = ScenarioConfig.make(scenario, size)
    for (a, b), expected in EXPECTED.items():
        traj = play(config, a, b)
        assert (classify(traj, 0, config).label, classify(traj, 1, config).label) == expected


@pytest.mark.analysis
def test_scripted_strategies_repeat(perpendicular9: ScenarioConfig) -> None:
    "The waiting policy keeps per-episode memory; a second episode must match the first."
    policies = [scripted_strategy(A, 0, perpendicular9), scripted_strategy(A, 1, perpendicular9)]
    first = rollout(perpendicular9, policies)
    second = rollout(perpendicular9, policies)
    assert first.returns() == second.returns()
    assert first.moves(0) == second.moves(0)


# ## Payoff matrices


@pytest.mark.analysis
def test_parallel_payoff(parallel9: ScenarioConfig) -> None:
    matrix = empirical_payoff(parallel9)
    expected = {
        (0, 0): (-1.04, -1.04),
        (0, 1): (0.92, 0.90),
        (1, 0): (0.90, 0.92),
        (1, 1): (0.90, 0.90),
    }
    for (i, j), (a, b) in expected.items():
        assert_close(matrix.cell(i, j)[0], a)
        assert_close(matrix.cell(i, j)[1], b)
    order = matrix.ordering()
    assert order["ordered"]
    assert_close(order["r_s"], 0.92)
    assert_close(order["r_a"], 0.90)
    assert_close(order["r_d"], -1.04)
    assert pure_nash(matrix).pure_equilibria == {(0, 1), (1, 0)}


@pytest.mark.analysis
def test_perpendicular_payoff(perpendicular9: ScenarioConfig) -> None:
    matrix = empirical_payoff(perpendicular9)
    assert_close(matrix.cell(0, 0)[0], -1.04)
    assert_close(matrix.cell(0, 1)[0], 0.92)
    assert_close(matrix.cell(0, 1)[1], 0.91)
    assert_close(matrix.cell(1, 1)[0], 0.91)
    assert_close(matrix.cell(1, 1)[1], 0.90)
    assert matrix.ordering()["ordered"]
    nash = pure_nash(matrix)
    assert nash.pure_equilibria == {(0, 1), (1, 0)}
    assert not nash.tie


@pytest.mark.analysis
def test_discounted_payoff(parallel9: ScenarioConfig) -> None:
    matrix = empirical_payoff(parallel9, episodes_per_cell=2, discounted=True)
    gamma = parallel9.reward.gamma
    straight = -0.01 * sum(gamma**t for t in range(8)) + gamma**8
    assert_close(matrix.cell(0, 1)[0], straight)
    assert matrix.discounted
    assert matrix.to_dict()["episodes_per_cell"] == 2


@pytest.mark.analysis
def test_payoff_dict(parallel9: ScenarioConfig) -> None:
    data = empirical_payoff(parallel9).to_dict()
    assert data["strategies"] == ["straight", "avoid"]
    assert sorted(data["cells"]) == [
        "avoid,avoid",
        "avoid,straight",
        "straight,avoid",
        "straight,straight",
    ]
    assert_close(data["cells"]["straight,avoid"][0], 0.92)


@pytest.mark.analysis
def test_payoff_rejects_bad_input() -> None:
    with pytest.raises(AnalysisError):
        PayoffMatrix(np.zeros((2, 2)))
    with pytest.raises(AnalysisError):
        PayoffMatrix(np.full((2, 2, 2), np.nan))
    with pytest.raises(AnalysisError):
        empirical_payoff(ScenarioConfig.make("parallel", 9, solo=1))
    with pytest.raises(AnalysisError):
        empirical_payoff(ScenarioConfig.make("parallel", 9), episodes_per_cell=0)


# ## Equilibria


@pytest.mark.analysis
def test_hawk_dove_arrows() -> None:
    nash = pure_nash(symmetric(1.0, 0.5, -1.0, 0.5))
    assert nash.pure_equilibria == {(0, 1), (1, 0)}
    assert not nash.weak
    assert len(nash.arrows) == 4
    sources = sorted(a.source for a in nash.arrows)
    assert sources == [(0, 0), (0, 0), (1, 1), (1, 1)]
    for arrow in nash.arrows:
        assert arrow.gain > 0


@pytest.mark.analysis
def test_all_equal_is_a_tie() -> None:
    nash = pure_nash(PayoffMatrix(np.ones((2, 2, 2))))
    assert len(nash.pure_equilibria) == 4
    assert nash.weak == nash.pure_equilibria
    assert nash.tie
    assert nash.arrows == ()


@pytest.mark.analysis
def test_matching_pennies_has_no_pure_equilibrium() -> None:
    matrix = PayoffMatrix.from_cells([[(1, -1), (-1, 1)], [(-1, 1), (1, -1)]])
    nash = pure_nash(matrix)
    assert nash.pure_equilibria == frozenset()
    assert len(nash.arrows) == 4
    assert nash.to_dict()["pure_equilibria"] == []


@composite
def hawk_dove_payoffs(draw: DrawFn) -> Tuple[float, float, float, float]:
    r_d, r_a, r_aa, r_s = (draw(payoff_values) for _ in range(4))
    assume(r_d < r_a and r_aa < r_s)
    return r_s, r_a, r_d, r_aa


@pytest.mark.analysis
@given(hawk_dove_payoffs())
def test_hawk_dove_structure(values: Tuple[float, float, float, float]) -> None:
    "Yielding beats colliding and going straight beats mutual avoidance."
    assert pure_nash(symmetric(*values)).pure_equilibria == {(0, 1), (1, 0)}


@pytest.mark.analysis
@given(payoff_matrices())
def test_equilibria_have_no_outgoing_arrows(matrix: PayoffMatrix) -> None:
    nash = pure_nash(matrix)
    sources = {a.source for a in nash.arrows}
    for profile in itertools.product(range(2), repeat=2):
        assert (profile in nash.pure_equilibria) == (profile not in sources)
    assert nash.weak <= nash.pure_equilibria


@pytest.mark.analysis
def test_payoff_table_marks_equilibria(parallel9: ScenarioConfig) -> None:
    matrix = empirical_payoff(parallel9)
    text = format_payoff_table(matrix, pure_nash(matrix))
    lines = text.splitlines()
    assert lines[0].split() == [s.value for s in STRATEGIES]
    assert text.count("*") == 2
    assert "ordered=True" in lines[-1]
    assert lines[1].startswith("straight")


# ## Asymmetry


@pytest.mark.analysis
def test_asymmetry_report() -> None:
    report = asymmetry_report(
        {
            0: (Label.STRAIGHT, Label.AVOID),
            1: (Label.AVOID, Label.STRAIGHT),
            2: (Label.STRAIGHT, Label.AVOID),
            3: (Label.AVOID, Label.AVOID),
        }
    )
    assert report.asymmetric_fraction == 0.75
    assert report.straight_split == (2, 1)
    assert not report.collide
    data = report.to_dict()
    assert data["joint_labels"]["1"] == ["avoid", "straight"]


@pytest.mark.analysis
def test_asymmetry_report_collisions() -> None:
    report = asymmetry_report({5: (Label.COLLIDE, Label.COLLIDE), 6: (Label.STRAIGHT, Label.FAIL)})
    assert report.asymmetric_fraction == 0.0
    assert report.collide
    with pytest.raises(AnalysisError):
        asymmetry_report({})

from pathlib import Path
from typing import Sequence

import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis.strategies import (
    DrawFn,
    SearchStrategy,
    composite,
    floats,
    integers,
    lists,
    sampled_from,
    tuples,
)

import hawkdove
from hawkdove import JointState, Move, PayoffMatrix, Scenario, ScenarioConfig, Status

settings.register_profile(
    "ci", deadline=None, suppress_health_check=[HealthCheck.filter_too_much]
)
settings.load_profile("ci")


moves: SearchStrategy[Move] = sampled_from(list(Move))
joint_actions = tuples(moves, moves)
small_floats = floats(min_value=-100, max_value=100, allow_nan=False)
payoff_values = floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


@composite
def scenarios(draw: DrawFn, sizes: Sequence[int] = (5, 7, 9)) -> ScenarioConfig:
    size = draw(sampled_from(list(sizes)))
    return ScenarioConfig.make(draw(sampled_from(list(Scenario))), size)


@composite
def states(draw: DrawFn, config: ScenarioConfig) -> JointState:
    "Any state with both agents active on distinct cells before the time limit."
    cells = [(x, y) for y in range(config.height) for x in range(config.width)]
    a = draw(sampled_from(cells))
    b = draw(sampled_from([c for c in cells if c != a]))
    t = draw(integers(min_value=0, max_value=config.max_steps - 1))
    return JointState((a, b), t, (Status.ACTIVE, Status.ACTIVE))


@composite
def payoff_matrices(draw: DrawFn) -> PayoffMatrix:
    values = draw(lists(payoff_values, min_size=8, max_size=8))
    return PayoffMatrix(np.array(values, dtype=np.float64).reshape(2, 2, 2))


def assert_close(a: float, b: float, tol: float = 1e-9) -> None:
    assert abs(a - b) <= tol * max(1.0, abs(a), abs(b)), "Failure x=%f y=%f" % (a, b)


def zero_parameters(module: hawkdove.Module) -> None:
    for p in module.parameters():
        p.update(np.zeros_like(p.value))


def tiny_run(output_dir: Path, **overrides: str) -> hawkdove.RunConfig:
    "Tabular run on a 5 x 5 parallel grid, a few episodes, every episode audited."
    raw = {
        "width": "5",
        "episodes": "4",
        "eval_every": "2",
        "eval_episodes": "1",
        "seeds": "1",
        "output_dir": str(output_dir),
        "audit_every": "1",
    }
    raw.update(overrides)
    return hawkdove.build_run_config(raw)

import pytest

from hawkdove import AgentConfig, ScenarioConfig

from . import strategies  # noqa: F401  registers the hypothesis profile


@pytest.fixture
def parallel9() -> ScenarioConfig:
    return ScenarioConfig.make("parallel", 9)


@pytest.fixture
def perpendicular9() -> ScenarioConfig:
    return ScenarioConfig.make("perpendicular", 9)


@pytest.fixture
def small_dqn() -> AgentConfig:
    "A network small enough for 5 x 5 grids and quick tests."
    return AgentConfig(
        learning_rate=1e-2,
        buffer_capacity=64,
        batch_size=4,
        sync_period=2,
        conv=((2, 3, 1),),
        hidden=(8,),
    )


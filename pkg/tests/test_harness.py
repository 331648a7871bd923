import json
from pathlib import Path

import numpy as np
import pytest

from hawkdove import (
    AgentConfig,
    CheckpointError,
    ConfigError,
    DqnAgent,
    Event,
    Label,
    Mode,
    ParseError,
    ScenarioConfig,
    SeedStreams,
    Strategy,
    TabularAgent,
    checkpoint_paths,
    evaluate,
    evaluate_policies,
    read_metrics_csv,
    read_summary_labels,
    run_episode,
    scripted_strategy,
    seed_dir,
    train,
    train_seed,
    worker_count,
)

from .strategies import assert_close, tiny_run


def quiet(seed: int, episode: int, record: object) -> None:
    pass


# ## Episodes


@pytest.mark.harness
def test_seed_streams_are_reproducible() -> None:
    a, b = SeedStreams(7), SeedStreams(7)
    assert a.agents[0].random() == b.agents[0].random()
    assert a.eval.random() == b.eval.random()
    c = SeedStreams(7)
    assert c.agents[0].random() != c.agents[1].random()


@pytest.mark.harness
def test_eval_leaves_tabular_learners_alone() -> None:
    config = ScenarioConfig.make("parallel", 5)
    learners = [TabularAgent(i, config, AgentConfig()) for i in range(2)]
    rngs = SeedStreams(0).agents
    for _ in range(3):
        run_episode(config, learners, Mode.TRAIN, rngs)
    tables = [l.table.copy() for l in learners]
    steps = [l.steps for l in learners]
    traj = run_episode(config, learners, Mode.EVAL, [np.random.default_rng(0)])
    assert len(traj) >= 1
    for learner, table, n in zip(learners, tables, steps):
        assert learner.table.max_abs_diff(table) == 0.0
        assert len(learner.table) == len(table)
        assert learner.steps == n


@pytest.mark.harness
def test_eval_leaves_dqn_learners_alone(small_dqn: AgentConfig) -> None:
    config = ScenarioConfig.make("parallel", 5)
    rngs = SeedStreams(0).agents
    learners = [DqnAgent(i, config, small_dqn, rngs[i]) for i in range(2)]
    for _ in range(2):
        run_episode(config, learners, Mode.TRAIN, rngs)
    params = [l.online.parameter_values() for l in learners]
    sizes = [len(l.buffer) for l in learners]
    counters = [(l.steps, l.train_steps) for l in learners]
    run_episode(config, learners, Mode.EVAL, [np.random.default_rng(0)])
    for learner, before, size, counter in zip(learners, params, sizes, counters):
        for a, b in zip(before, learner.online.parameter_values()):
            np.testing.assert_array_equal(a, b)
        assert len(learner.buffer) == size
        assert (learner.steps, learner.train_steps) == counter


@pytest.mark.harness
def test_one_push_per_active_step(small_dqn: AgentConfig) -> None:
    config = ScenarioConfig.make("parallel", 5)
    rngs = SeedStreams(3).agents
    learners = [DqnAgent(i, config, small_dqn, rngs[i]) for i in range(2)]
    traj = run_episode(config, learners, Mode.TRAIN, rngs)
    for i, learner in enumerate(learners):
        assert len(learner.buffer) == traj.path_length(i)
        assert learner.steps == traj.path_length(i)


@pytest.mark.harness
def test_straight_against_straight_collides(parallel9: ScenarioConfig) -> None:
    policies = [scripted_strategy(Strategy.STRAIGHT, i, parallel9) for i in range(2)]
    summary = evaluate_policies(parallel9, policies, 3)
    assert summary.collisions == 3
    assert summary.joint_label == (Label.COLLIDE, Label.COLLIDE)
    assert summary.events[0] == {"collision": 3}
    assert_close(summary.mean_return[0], -1.04)


@pytest.mark.harness
def test_straight_against_avoid(parallel9: ScenarioConfig) -> None:
    policies = [
        scripted_strategy(Strategy.STRAIGHT, 0, parallel9),
        scripted_strategy(Strategy.AVOID, 1, parallel9),
    ]
    summary = evaluate_policies(parallel9, policies, 2)
    assert summary.collisions == 0
    assert summary.joint_label == (Label.STRAIGHT, Label.AVOID)
    assert summary.mean_return[0] > summary.mean_return[1]
    assert summary.label_counts[1] == {"avoid": 2}
    with pytest.raises(ConfigError):
        evaluate_policies(parallel9, policies, 0)


# ## Seed runs


@pytest.mark.harness
def test_train_writes_every_seed(tmp_path: Path) -> None:
    run = tiny_run(tmp_path / "run", seeds="1,2")
    results = train(run, quiet, workers=1)
    assert sorted(results) == [1, 2]
    for seed in (1, 2):
        out = seed_dir(run, seed)
        assert (out / "metrics.csv").read_text().startswith("episode,return_a,return_b,")
        eval_lines = (out / "eval.csv").read_text().splitlines()
        assert [line.split(",")[0] for line in eval_lines] == ["episode", "2", "4"]
        for path in checkpoint_paths(run, seed):
            assert path.exists()
            assert path.suffix == ".qtable"
        assert results[seed].error is None
        assert len(results[seed].evals) == 2

    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert sorted(summary["seeds"]) == ["1", "2"]
    assert summary["config"]["width"] == 5
    assert summary["config"]["seeds"] == [1, 2]
    assert summary["seeds"]["1"]["episodes"] == 4
    labels = read_summary_labels(tmp_path / "run" / "summary.json")
    assert sorted(labels) == [1, 2]
    assert all(isinstance(l, Label) for pair in labels.values() for l in pair)


@pytest.mark.harness
def test_train_is_reproducible(tmp_path: Path) -> None:
    first = tiny_run(tmp_path / "first", episodes="6")
    second = tiny_run(tmp_path / "second", episodes="6")
    train(first, quiet, workers=1)
    train(second, quiet, workers=1)
    for name in ("metrics.csv", "eval.csv", "agent_a.qtable", "agent_b.qtable"):
        assert (seed_dir(first, 1) / name).read_bytes() == (
            seed_dir(second, 1) / name
        ).read_bytes()


@pytest.mark.harness
def test_metrics_file_matches_records(tmp_path: Path) -> None:
    run = tiny_run(tmp_path)
    metrics = train_seed(run, 1, quiet)
    records = read_metrics_csv(seed_dir(run, 1) / "metrics.csv")
    assert records == metrics.episodes
    assert [r.episode for r in records] == [1, 2, 3, 4]
    assert len(metrics.audits) == 4
    assert all(a.ok for a in metrics.audits)
    for r in records:
        assert r.events[0] is not Event.NONE


@pytest.mark.harness
def test_evaluate_checkpoints(tmp_path: Path) -> None:
    run = tiny_run(tmp_path)
    train_seed(run, 1, quiet)
    paths = checkpoint_paths(run, 1)
    once = evaluate(paths, run, 3, tmp_path / "rollouts")
    twice = evaluate(paths, run, 3)
    assert once == twice
    assert once.episodes == 3
    written = sorted(p.name for p in (tmp_path / "rollouts").iterdir())
    assert written == ["episode_1.csv", "episode_2.csv", "episode_3.csv"]
    with pytest.raises(CheckpointError):
        evaluate(["", str(paths[1])], run, 1)
    with pytest.raises(CheckpointError):
        evaluate(paths[:1], run, 1)


DQN_SETTINGS = dict(
    agent_kind="dqn",
    episodes="2",
    learning_rate="0.01",
    buffer_capacity="64",
    batch_size="4",
    sync_period="2",
    conv="2:3:1",
    hidden="8",
)


@pytest.mark.harness
def test_dqn_run(tmp_path: Path) -> None:
    run = tiny_run(tmp_path, **DQN_SETTINGS)
    metrics = train_seed(run, 1, quiet)
    assert metrics.error is None
    for path in checkpoint_paths(run, 1):
        assert path.suffix == ".ckpt"
        meta = json.loads(Path(f"{path}.json").read_text())
        assert meta["seed"] == 1
        assert meta["steps"] > 0
    summary = evaluate(checkpoint_paths(run, 1), run, 1)
    assert summary.episodes == 1


@pytest.mark.harness
def test_dqn_run_is_reproducible(tmp_path: Path) -> None:
    first = tiny_run(tmp_path / "first", **DQN_SETTINGS)
    second = tiny_run(tmp_path / "second", **DQN_SETTINGS)
    train_seed(first, 1, quiet)
    train_seed(second, 1, quiet)
    for a, b in zip(checkpoint_paths(first, 1), checkpoint_paths(second, 1)):
        assert a.read_bytes() == b.read_bytes()
    assert (seed_dir(first, 1) / "metrics.csv").read_bytes() == (
        seed_dir(second, 1) / "metrics.csv"
    ).read_bytes()


@pytest.mark.harness
def test_io_failure_is_recorded(tmp_path: Path) -> None:
    blocker = tmp_path / "not_a_dir"
    blocker.write_text("")
    metrics = train_seed(tiny_run(blocker), 1, quiet)
    assert metrics.error is not None
    assert metrics.episodes == []


@pytest.mark.harness
def test_read_metrics_rejects_bad_files(tmp_path: Path) -> None:
    path = tmp_path / "metrics.csv"
    path.write_text("episode,return_a,return_b,length,event_a,event_b\n")
    with pytest.raises(ParseError):
        read_metrics_csv(path)
    path.write_text("episode,return\n1,2\n")
    with pytest.raises(ParseError):
        read_metrics_csv(path)
    path.write_text(
        "episode,return_a,return_b,length,event_a,event_b\n1,0.5,x,3,goal,goal\n"
    )
    with pytest.raises(ParseError) as e:
        read_metrics_csv(path)
    assert e.value.line == 2


# ## Workers


@pytest.mark.harness
def test_worker_count(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("HAWKDOVE_THREADS", "3")
    assert worker_count(10) == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("HAWKDOVE_THREADS", "0")
    with pytest.raises(ConfigError):
        worker_count(4)
    monkeypatch.setenv("HAWKDOVE_THREADS", "many")
    with pytest.raises(ConfigError):
        worker_count(4)
    monkeypatch.delenv("HAWKDOVE_THREADS")
    assert 1 <= worker_count(4) <= 4

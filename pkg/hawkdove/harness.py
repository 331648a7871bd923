"""
Episode loop, seed sweeps, metric files and checkpoints.

Per seed, all randomness comes from one `SeedSequence` split into named
streams: one generator per agent (initialization, exploration, replay
sampling) and one for greedy evaluation. The environment itself is
deterministic and draws nothing.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numba
import numpy as np

from .analysis import Label, StrategyLabel, classify, label_counts
from .checkpoint import CheckpointError
from .config import AgentKind, RunConfig
from .dqn import DqnAgent
from .gridworld import ConfigError, Event, Move, ScenarioConfig, reset, step
from .policy import Learner, Policy
from .tabular import TabularAgent
from .trajectory import ParseError, StepRecord, Trajectory, rollout

logger = logging.getLogger(__name__)

METRIC_FIELDS = ("episode", "return_a", "return_b", "length", "event_a", "event_b")
EVAL_FIELDS = (
    "episode",
    "return_a",
    "return_b",
    "collision",
    "length_a",
    "length_b",
    "label_a",
    "label_b",
)
CHECKPOINT_SUFFIX = {AgentKind.TABULAR: ".qtable", AgentKind.DQN: ".ckpt"}
AGENT_NAMES = ("a", "b")


class Mode(Enum):
    TRAIN = "train"
    EVAL = "eval"


class SeedStreams:
    "Named generators derived from one root seed."

    def __init__(self, seed: int):
        agent_a, agent_b, evaluation = np.random.SeedSequence(seed).spawn(3)
        self.seed = seed
        self.agents = (np.random.default_rng(agent_a), np.random.default_rng(agent_b))
        self.eval = np.random.default_rng(evaluation)


def make_learners(run: RunConfig, streams: SeedStreams) -> List[Optional[Learner]]:
    "Fresh learners for the agents in play; `None` for an absent agent."
    learners: List[Optional[Learner]] = [None, None]
    for i in run.scenario.agents():
        if run.agent_kind is AgentKind.TABULAR:
            learners[i] = TabularAgent(i, run.scenario, run.agents[i])
        else:
            learners[i] = DqnAgent(
                i, run.scenario, run.agents[i], streams.agents[i], run.train_ratio
            )
    return learners


def greedy_policies(
    learners: Sequence[Optional[Learner]], rng: Optional[np.random.Generator] = None
) -> List[Optional[Policy]]:
    return [None if l is None else l.greedy_policy(rng) for l in learners]


def run_episode(
    config: ScenarioConfig,
    learners: Sequence[Optional[Learner]],
    mode: Mode,
    rngs: Sequence[np.random.Generator],
) -> Trajectory:
    """
    Play one episode.

    In `TRAIN` mode every active learner picks an epsilon-greedy move and
    learns from its own transition after each frame. In `EVAL` mode the
    learners' greedy policies play and nothing is updated.

    Args:
        rngs : one generator per agent in `TRAIN` mode; `rngs[0]` feeds random
            tie-breaks in `EVAL` mode
    """
    if Mode(mode) is Mode.EVAL:
        return rollout(config, greedy_policies(learners, rngs[0] if rngs else None))

    state = reset(config)
    trajectory = Trajectory(config)
    for i, learner in enumerate(learners):
        if learner is not None and state.active(i):
            learner.start(state)
    while not state.terminal:
        moves = [Move.STAY, Move.STAY]
        for i, learner in enumerate(learners):
            if learner is not None and state.active(i):
                moves[i] = learner.act(state, rngs[i])
        actions = (moves[0], moves[1])
        outcome = step(state, actions, config)
        for i, learner in enumerate(learners):
            if learner is not None and state.active(i):
                learner.learn(state, actions[i], outcome, rngs[i])
        trajectory.steps.append(StepRecord(state, actions, outcome.reward, outcome.events))
        state = outcome.next
    trajectory.final = state
    return trajectory


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    returns: Tuple[float, float]
    length: int
    events: Tuple[Event, Event]

    @classmethod
    def from_trajectory(cls, episode: int, traj: Trajectory) -> EpisodeRecord:
        return cls(episode, traj.returns(), len(traj), (traj.event(0), traj.event(1)))

    def row(self) -> List[Any]:
        return [
            self.episode,
            repr(self.returns[0]),
            repr(self.returns[1]),
            self.length,
            self.events[0].value,
            self.events[1].value,
        ]


@dataclass(frozen=True)
class EvalSummary:
    """
    Greedy evaluation over `episodes` rollouts. `labels` are those of the last
    rollout; `label_counts` tally all of them.
    """

    episodes: int
    mean_return: Tuple[float, float]
    mean_path_length: Tuple[float, float]
    events: Tuple[Dict[str, int], Dict[str, int]]
    labels: Tuple[StrategyLabel, StrategyLabel]
    label_counts: Tuple[Dict[str, int], Dict[str, int]]
    collisions: int

    @property
    def joint_label(self) -> Tuple[Label, Label]:
        return (self.labels[0].label, self.labels[1].label)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "episodes": self.episodes,
            "mean_return": list(self.mean_return),
            "mean_path_length": list(self.mean_path_length),
            "events": list(self.events),
            "labels": [
                {"label": l.label.value, "extra_steps": l.extra_steps, "waited": l.waited}
                for l in self.labels
            ],
            "label_counts": list(self.label_counts),
            "collisions": self.collisions,
        }


def evaluate_policies(
    config: ScenarioConfig,
    policies: Sequence[Optional[Policy]],
    episodes: int,
    trajectory_dir: Optional[Path] = None,
) -> EvalSummary:
    if episodes < 1:
        raise ConfigError("eval_episodes", "must be >= 1")
    if trajectory_dir is not None:
        trajectory_dir.mkdir(parents=True, exist_ok=True)
    returns = np.zeros(2)
    lengths = np.zeros(2)
    events: Tuple[Dict[str, int], Dict[str, int]] = ({}, {})
    history: Tuple[List[StrategyLabel], List[StrategyLabel]] = ([], [])
    collisions = 0
    for k in range(episodes):
        traj = rollout(config, policies)
        if trajectory_dir is not None:
            traj.write_csv(trajectory_dir / f"episode_{k + 1}.csv")
        returns += traj.returns()
        for i in range(2):
            lengths[i] += traj.path_length(i)
            event = traj.event(i).value
            events[i][event] = events[i].get(event, 0) + 1
            history[i].append(classify(traj, i, config))
        collisions += any(traj.event(i) is Event.COLLISION for i in range(2))
    return EvalSummary(
        episodes=episodes,
        mean_return=(float(returns[0] / episodes), float(returns[1] / episodes)),
        mean_path_length=(float(lengths[0] / episodes), float(lengths[1] / episodes)),
        events=events,
        labels=(history[0][-1], history[1][-1]),
        label_counts=(label_counts(history[0]), label_counts(history[1])),
        collisions=collisions,
    )


@dataclass(frozen=True)
class EvalRecord:
    episode: int
    summary: EvalSummary

    def row(self) -> List[Any]:
        s = self.summary
        return [
            self.episode,
            repr(s.mean_return[0]),
            repr(s.mean_return[1]),
            int(s.collisions > 0),
            repr(s.mean_path_length[0]),
            repr(s.mean_path_length[1]),
            s.labels[0].label.value,
            s.labels[1].label.value,
        ]


@dataclass(frozen=True)
class AuditRecord:
    episode: int
    recorded: Tuple[float, float]
    recomputed: Tuple[float, float]

    @property
    def ok(self) -> bool:
        return self.recorded == self.recomputed


def audit_episode(row: Sequence[Any], traj: Trajectory) -> AuditRecord:
    "Re-add the trajectory's step rewards and compare them with the metric row as written."
    recomputed = [0.0, 0.0]
    for record in traj.steps:
        recomputed[0] += record.rewards[0]
        recomputed[1] += record.rewards[1]
    return AuditRecord(
        int(row[0]), (float(row[1]), float(row[2])), (recomputed[0], recomputed[1])
    )


@dataclass
class RunMetrics:
    seed: int
    episodes: List[EpisodeRecord] = field(default_factory=list)
    evals: List[EvalRecord] = field(default_factory=list)
    audits: List[AuditRecord] = field(default_factory=list)
    error: Optional[str] = None
    wall_time: float = 0.0

    @property
    def final_eval(self) -> Optional[EvalSummary]:
        return self.evals[-1].summary if self.evals else None

    def summary(self) -> Dict[str, Any]:
        final = self.final_eval
        return {
            "episodes": len(self.episodes),
            "final_labels": None if final is None else [l.value for l in final.joint_label],
            "final_eval": None if final is None else final.to_dict(),
            "audits": len(self.audits),
            "audit_failures": sum(not a.ok for a in self.audits),
            "error": self.error,
            "wall_time": round(self.wall_time, 3),
        }


LogFn = Callable[[int, int, EvalRecord], None]


def default_log_fn(seed: int, episode: int, record: EvalRecord) -> None:
    s = record.summary
    logger.info(
        "seed %d episode %d: greedy returns %.3f / %.3f, labels %s / %s, collisions %d",
        seed,
        episode,
        s.mean_return[0],
        s.mean_return[1],
        s.labels[0].label.value,
        s.labels[1].label.value,
        s.collisions,
    )


def seed_dir(run: RunConfig, seed: int) -> Path:
    return Path(run.output_dir) / f"seed_{seed}"


def checkpoint_paths(run: RunConfig, seed: int) -> List[Path]:
    suffix = CHECKPOINT_SUFFIX[run.agent_kind]
    return [seed_dir(run, seed) / f"agent_{name}{suffix}" for name in AGENT_NAMES]


def save_learners(run: RunConfig, seed: int, learners: Sequence[Optional[Learner]]) -> None:
    for learner, path in zip(learners, checkpoint_paths(run, seed)):
        if isinstance(learner, TabularAgent):
            learner.save(path)
        elif isinstance(learner, DqnAgent):
            learner.save(path, seed)


def train_seed(run: RunConfig, seed: int, log_fn: LogFn = default_log_fn) -> RunMetrics:
    """
    Train fresh learners for one seed and write `metrics.csv`, `eval.csv` and
    final checkpoints under `<output_dir>/seed_<seed>/`.

    I/O failures are recorded in `RunMetrics.error` instead of raised.
    """
    start = time.perf_counter()
    metrics = RunMetrics(seed)
    config = run.scenario
    out = seed_dir(run, seed)
    try:
        out.mkdir(parents=True, exist_ok=True)
        streams = SeedStreams(seed)
        learners = make_learners(run, streams)
        with open(out / "metrics.csv", "w", newline="") as mf, open(
            out / "eval.csv", "w", newline=""
        ) as ef:
            metric_writer = csv.writer(mf, lineterminator="\n")
            eval_writer = csv.writer(ef, lineterminator="\n")
            metric_writer.writerow(METRIC_FIELDS)
            eval_writer.writerow(EVAL_FIELDS)
            for episode in range(1, run.episodes + 1):
                traj = run_episode(config, learners, Mode.TRAIN, streams.agents)
                record = EpisodeRecord.from_trajectory(episode, traj)
                row = record.row()
                metric_writer.writerow(row)
                metrics.episodes.append(record)
                if run.audit_every and episode % run.audit_every == 0:
                    audit = audit_episode(row, traj)
                    if not audit.ok:
                        logger.error("seed %d: metric audit failed %s", seed, audit)
                    metrics.audits.append(audit)
                if episode % run.eval_every == 0 or episode == run.episodes:
                    summary = evaluate_policies(
                        config, greedy_policies(learners, streams.eval), run.eval_episodes
                    )
                    evaluation = EvalRecord(episode, summary)
                    eval_writer.writerow(evaluation.row())
                    metrics.evals.append(evaluation)
                    log_fn(seed, episode, evaluation)
        save_learners(run, seed, learners)
    except OSError as e:
        metrics.error = f"{type(e).__name__}: {e}"
        logger.error("seed %d aborted: %s", seed, metrics.error)
    metrics.wall_time = time.perf_counter() - start
    return metrics


def worker_count(n_seeds: int) -> int:
    "Seed workers: `HAWKDOVE_THREADS` if set, else the number of cores; never more than the seeds."
    env = os.environ.get("HAWKDOVE_THREADS")
    if env is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError("HAWKDOVE_THREADS", f"must be an integer, got {env!r}") from None
        if cap < 1:
            raise ConfigError("HAWKDOVE_THREADS", "must be >= 1")
    return max(1, min(cap, n_seeds))


def _init_worker() -> None:
    # One kernel thread per seed worker.
    numba.set_num_threads(1)


def train(
    run: RunConfig, log_fn: LogFn = default_log_fn, workers: Optional[int] = None
) -> Dict[int, RunMetrics]:
    """
    Train every seed of `run`, in parallel worker processes when more than one
    worker is allowed, and write `<output_dir>/summary.json`.

    Returns:
        Metrics per seed, in seed order.
    """
    out = Path(run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = len(run.seeds)
    workers = worker_count(n) if workers is None else workers
    logger.info("training %d seed(s) with %d worker(s) into %s", n, workers, out)
    if workers <= 1:
        results = [train_seed(run, seed, log_fn) for seed in run.seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
            results = list(pool.map(train_seed, [run] * n, run.seeds, [log_fn] * n))
    by_seed = {m.seed: m for m in results}
    write_summary(out / "summary.json", run, by_seed)
    return by_seed


def write_summary(path: Path, run: RunConfig, metrics: Dict[int, RunMetrics]) -> None:
    summary = {
        "config": run.to_dict(),
        "seeds": {str(seed): m.summary() for seed, m in metrics.items()},
        "wall_time": round(sum(m.wall_time for m in metrics.values()), 3),
    }
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def read_summary_labels(path: Union[str, Path]) -> Dict[int, Tuple[Label, Label]]:
    "Final joint labels per seed from a run's `summary.json`; seeds without one are skipped."
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ParseError(path, 0, e.strerror or str(e)) from e
    except json.JSONDecodeError as e:
        raise ParseError(path, e.lineno, e.msg) from e
    labels = {}
    for seed, entry in data.get("seeds", {}).items():
        final = entry.get("final_labels")
        if final:
            labels[int(seed)] = (Label(final[0]), Label(final[1]))
    return labels


def load_learners(
    paths: Sequence[Union[str, Path]], run: RunConfig
) -> List[Optional[Learner]]:
    """
    Learners restored from one checkpoint per agent in play.

    Raises:
        CheckpointError : for a missing, empty, corrupt or incompatible path.
    """
    config = run.scenario
    players = config.agents()
    if len(paths) != len(players):
        raise CheckpointError(
            ",".join(str(p) for p in paths), f"expected {len(players)} checkpoint path(s)"
        )
    learners: List[Optional[Learner]] = [None, None]
    for i, path in zip(players, paths):
        if not str(path):
            raise CheckpointError(path, "empty checkpoint path")
        if run.agent_kind is AgentKind.TABULAR:
            tabular = TabularAgent(i, config, run.agents[i])
            tabular.load(path)
            learners[i] = tabular
        else:
            dqn = DqnAgent(i, config, run.agents[i], np.random.default_rng(0))
            dqn.load(path)
            learners[i] = dqn
    return learners


def evaluate(
    paths: Sequence[Union[str, Path]],
    run: RunConfig,
    episodes: int,
    trajectory_dir: Optional[Path] = None,
) -> EvalSummary:
    """
    Greedy evaluation of checkpointed learners on `run.scenario`. With
    `trajectory_dir`, every rollout is also written there as `episode_<k>.csv`.
    """
    learners = load_learners(paths, run)
    rng = SeedStreams(run.seeds[0]).eval
    policies = greedy_policies(learners, rng)
    return evaluate_policies(run.scenario, policies, episodes, trajectory_dir)


def read_metrics_csv(path: Union[str, Path]) -> List[EpisodeRecord]:
    "Parse a `metrics.csv`; a file with no episode rows is an error."
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ParseError(path, 0, e.strerror or str(e)) from e
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(header) != METRIC_FIELDS:
        raise ParseError(path, 1, f"expected columns {','.join(METRIC_FIELDS)}")
    records = []
    for n, row in enumerate(reader, start=2):
        try:
            if len(row) != len(METRIC_FIELDS):
                raise ValueError(f"{len(row)} fields")
            records.append(
                EpisodeRecord(
                    int(row[0]),
                    (float(row[1]), float(row[2])),
                    int(row[3]),
                    (Event(row[4]), Event(row[5])),
                )
            )
        except ValueError as e:
            raise ParseError(path, n, f"bad record ({e})") from None
    if not records:
        raise ParseError(path, 2, "no episode rows")
    return records

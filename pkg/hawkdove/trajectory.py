from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .gridworld import (
    Cell,
    Edge,
    Event,
    JointAction,
    JointState,
    Move,
    ScenarioConfig,
    Status,
    reset,
    step,
)
from .policy import Policy

TRAJECTORY_FIELDS = (
    "t",
    "x_a",
    "y_a",
    "x_b",
    "y_b",
    "move_a",
    "move_b",
    "reward_a",
    "reward_b",
    "event_a",
    "event_b",
)


class ParseError(ValueError):
    "Exception raised for a malformed input file."

    def __init__(self, path: Union[str, Path], line: int, reason: str):
        self.path = str(path)
        self.line = line
        self.reason = reason
        super().__init__(f"{self.path}:{line}: {reason}")


@dataclass(frozen=True)
class StepRecord:
    state: JointState
    actions: JointAction
    rewards: Tuple[float, float]
    events: Tuple[Event, Event]


@dataclass
class Trajectory:
    """
    One episode: the pre-step state, joint move, rewards and events of every
    frame, plus the final state. Returns are always recomputed from the records.
    """

    config: ScenarioConfig
    steps: List[StepRecord] = field(default_factory=list)
    final: Optional[JointState] = None

    def __len__(self) -> int:
        return len(self.steps)

    def returns(self) -> Tuple[float, float]:
        totals = [0.0, 0.0]
        for record in self.steps:
            for i in range(2):
                totals[i] += record.rewards[i]
        return (totals[0], totals[1])

    def discounted_returns(self, gamma: Optional[float] = None) -> Tuple[float, float]:
        "Sum of `gamma ** t * r_t` per agent, `t` counted from 0."
        gamma = self.config.reward.gamma if gamma is None else gamma
        totals = [0.0, 0.0]
        discount = 1.0
        for record in self.steps:
            for i in range(2):
                totals[i] += discount * record.rewards[i]
            discount *= gamma
        return (totals[0], totals[1])

    def moves(self, agent: int) -> List[Move]:
        "Moves the agent made while in play, exit move included."
        return [r.actions[agent] for r in self.steps if r.state.active(agent)]

    def path_length(self, agent: int) -> int:
        return len(self.moves(agent))

    def cells(self, agent: int) -> List[Cell]:
        "Cells occupied while in play, spawn first."
        out = []
        for r in self.steps:
            p = r.state.pos[agent]
            if r.state.active(agent) and p is not None:
                out.append(p)
        return out

    def event(self, agent: int) -> Event:
        "The event that took the agent out of play, or `NONE`."
        for record in reversed(self.steps):
            if record.events[agent] is not Event.NONE:
                return record.events[agent]
        return Event.NONE

    def status(self, agent: int) -> Status:
        assert self.final is not None
        return self.final.status[agent]

    def write_csv(self, path: Union[str, Path]) -> None:
        """
        Header line `# width=.. height=.. target_a=.. target_b=..`, then one CSV
        row per frame. Off-grid positions are `-1`.
        """
        c = self.config
        with open(path, "w", newline="") as f:
            f.write(
                f"# width={c.width} height={c.height} "
                f"target_a={c.target_edge[0].value} target_b={c.target_edge[1].value}\n"
            )
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TRAJECTORY_FIELDS)
            for t, r in enumerate(self.steps):
                (xa, ya), (xb, yb) = (_cell_or_missing(r.state, i) for i in range(2))
                writer.writerow(
                    [
                        t,
                        xa,
                        ya,
                        xb,
                        yb,
                        r.actions[0].name.lower(),
                        r.actions[1].name.lower(),
                        repr(r.rewards[0]),
                        repr(r.rewards[1]),
                        r.events[0].value,
                        r.events[1].value,
                    ]
                )


def _cell_or_missing(state: JointState, agent: int) -> Cell:
    p = state.pos[agent]
    if not state.active(agent) or p is None:
        return (-1, -1)
    return p


@dataclass(frozen=True)
class TrajectoryRow:
    t: int
    cells: Tuple[Optional[Cell], Optional[Cell]]
    moves: Tuple[Move, Move]
    rewards: Tuple[float, float]
    events: Tuple[Event, Event]


@dataclass(frozen=True)
class TrajectoryFile:
    width: int
    height: int
    targets: Tuple[Edge, Edge]
    rows: List[TrajectoryRow]


def read_trajectory_csv(path: Union[str, Path]) -> TrajectoryFile:
    "Parse a file written by `Trajectory.write_csv`."
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ParseError(path, 0, e.strerror or str(e)) from e
    if not lines or not lines[0].startswith("#"):
        raise ParseError(path, 1, "missing '# width=.. height=..' header")
    try:
        meta: Dict[str, str] = dict(item.split("=", 1) for item in lines[0][1:].split())
        width, height = int(meta["width"]), int(meta["height"])
        targets = (Edge(meta["target_a"]), Edge(meta["target_b"]))
    except (KeyError, ValueError) as e:
        raise ParseError(path, 1, f"bad header ({e})") from None
    reader = csv.reader(lines[1:])
    header = next(reader, None)
    if header is None or tuple(header) != TRAJECTORY_FIELDS:
        raise ParseError(path, 2, f"expected columns {','.join(TRAJECTORY_FIELDS)}")
    rows = []
    for n, record in enumerate(reader, start=3):
        try:
            if len(record) != len(TRAJECTORY_FIELDS):
                raise ValueError(f"{len(record)} fields")
            xa, ya, xb, yb = (int(v) for v in record[1:5])
            rows.append(
                TrajectoryRow(
                    t=int(record[0]),
                    cells=(None if xa < 0 else (xa, ya), None if xb < 0 else (xb, yb)),
                    moves=(Move[record[5].upper()], Move[record[6].upper()]),
                    rewards=(float(record[7]), float(record[8])),
                    events=(Event(record[9]), Event(record[10])),
                )
            )
        except (KeyError, ValueError) as e:
            raise ParseError(path, n, f"bad record ({e})") from None
    if not rows:
        raise ParseError(path, 3, "no steps")
    return TrajectoryFile(width, height, targets, rows)


def rollout(config: ScenarioConfig, policies: Sequence[Optional[Policy]]) -> Trajectory:
    """
    Play one episode from the initial state. Each active agent's move comes
    from its policy; agents out of play (or without a policy) send `STAY`.
    """
    state = reset(config)
    trajectory = Trajectory(config)
    while not state.terminal:
        moves: List[Move] = []
        for i in range(2):
            policy = policies[i]
            moves.append(policy(state) if state.active(i) and policy is not None else Move.STAY)
        actions = (moves[0], moves[1])
        outcome = step(state, actions, config)
        trajectory.steps.append(StepRecord(state, actions, outcome.reward, outcome.events))
        state = outcome.next
    trajectory.final = state
    return trajectory

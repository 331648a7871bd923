"""
Deterministic two-agent crossing game on a `width x height` grid.

Cells are `(x, y)` with `x` the column and `y = 0` the North row. Agents move
simultaneously; an agent wins by stepping across its target edge, any other
edge crossing is a wrong exit, and entering the same cell or swapping cells
is a collision that ends the episode for both.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union, overload


Cell = Tuple[int, int]
Vector = Tuple[int, int]


class ConfigError(ValueError):
    "Exception raised when a configuration violates one of its constraints."

    def __init__(self, key: str, constraint: str):
        self.key = key
        self.constraint = constraint
        super().__init__(f"{key}: {constraint}")


class UsageError(RuntimeError):
    "Exception raised when an operation is called outside its precondition."


class Move(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    STAY = 4


MOVES: Tuple[Move, ...] = tuple(Move)

MOVE_DELTAS: Dict[Move, Vector] = {
    Move.UP: (0, -1),
    Move.DOWN: (0, 1),
    Move.LEFT: (-1, 0),
    Move.RIGHT: (1, 0),
    Move.STAY: (0, 0),
}
DELTA_MOVES: Dict[Vector, Move] = {d: m for m, d in MOVE_DELTAS.items()}


class Edge(Enum):
    NORTH = "north"
    SOUTH = "south"
    EAST = "east"
    WEST = "west"


# Outward normal of each edge.
EDGE_NORMALS: Dict[Edge, Vector] = {
    Edge.NORTH: (0, -1),
    Edge.SOUTH: (0, 1),
    Edge.EAST: (1, 0),
    Edge.WEST: (-1, 0),
}
NORMAL_EDGES: Dict[Vector, Edge] = {n: e for e, n in EDGE_NORMALS.items()}
OPPOSITE: Dict[Edge, Edge] = {
    Edge.NORTH: Edge.SOUTH,
    Edge.SOUTH: Edge.NORTH,
    Edge.EAST: Edge.WEST,
    Edge.WEST: Edge.EAST,
}


class Scenario(Enum):
    PARALLEL = "parallel"
    PERPENDICULAR = "perpendicular"


class Status(Enum):
    ACTIVE = "active"
    REACHED_GOAL = "reached_goal"
    WRONG_EXIT = "wrong_exit"
    COLLIDED = "collided"
    TIMED_OUT = "timed_out"
    ABSENT = "absent"


class Event(Enum):
    NONE = "none"
    GOAL = "goal"
    COLLISION = "collision"
    WRONG_EXIT = "wrong_exit"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class RewardSpec:
    r_goal: float = 1.0
    r_collide: float = -1.0
    r_wrong: float = -1.0
    r_step: float = -0.01
    gamma: float = 0.99


@dataclass(frozen=True)
class Isometry:
    """
    Grid map `c -> L c + offset` with integer matrix `L`. Only involutions
    (`f(f(c)) = c`) are built, so one map both exchanges the agents and undoes it.
    """

    name: str
    linear: Tuple[Tuple[int, int], Tuple[int, int]]
    offset: Vector

    def vector(self, v: Vector) -> Vector:
        (a, b), (c, d) = self.linear
        return (a * v[0] + b * v[1], c * v[0] + d * v[1])

    def cell(self, p: Cell) -> Cell:
        x, y = self.vector(p)
        return (x + self.offset[0], y + self.offset[1])

    def move(self, m: Move) -> Move:
        return DELTA_MOVES[self.vector(MOVE_DELTAS[m])]

    def edge(self, e: Edge) -> Edge:
        return NORMAL_EDGES[self.vector(EDGE_NORMALS[e])]


def candidate_isometries(width: int, height: int) -> List[Isometry]:
    w, h = width - 1, height - 1
    out = [
        Isometry("flip_x", ((-1, 0), (0, 1)), (w, 0)),
        Isometry("flip_y", ((1, 0), (0, -1)), (0, h)),
    ]
    if width == height:
        out.append(Isometry("transpose", ((0, 1), (1, 0)), (0, 0)))
        out.append(Isometry("anti_transpose", ((0, -1), (-1, 0)), (w, w)))
    out.append(Isometry("rot180", ((-1, 0), (0, -1)), (w, h)))
    return out


def find_isometry(
    width: int, height: int, spawn: Sequence[Cell], target_edge: Sequence[Edge]
) -> Optional[Isometry]:
    "First involutive grid symmetry mapping agent 0's (spawn, target) onto agent 1's."
    for iso in candidate_isometries(width, height):
        if iso.cell(spawn[0]) == spawn[1] and iso.edge(target_edge[0]) == target_edge[1]:
            return iso
    return None


def edge_midpoint(edge: Edge, width: int, height: int) -> Cell:
    mx, my = (width - 1) // 2, (height - 1) // 2
    return {
        Edge.NORTH: (mx, 0),
        Edge.SOUTH: (mx, height - 1),
        Edge.EAST: (width - 1, my),
        Edge.WEST: (0, my),
    }[edge]


def edge_cells(edge: Edge, width: int, height: int) -> List[Cell]:
    "Cells of the grid row or column along `edge`."
    if edge in (Edge.EAST, Edge.WEST):
        x = width - 1 if edge is Edge.EAST else 0
        return [(x, y) for y in range(height)]
    y = height - 1 if edge is Edge.SOUTH else 0
    return [(x, y) for x in range(width)]


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Grid geometry, spawns, targets, rewards and episode limits.

    Construction validates every constraint and raises `ConfigError` naming the
    first one violated. Use `ScenarioConfig.make` to derive the midpoint spawns.

    Attributes:
        solo : if set, only that agent plays; the other is `ABSENT` throughout.
    """

    width: int
    height: int
    scenario: Scenario
    spawn: Tuple[Cell, Cell]
    target_edge: Tuple[Edge, Edge]
    max_steps: int
    reward: RewardSpec = field(default_factory=RewardSpec)
    frame_stack: int = 4
    seed: int = 0
    solo: Optional[int] = None

    @classmethod
    def make(
        cls,
        scenario: Union[Scenario, str],
        width: int,
        height: Optional[int] = None,
        *,
        reward: Optional[RewardSpec] = None,
        max_steps: Optional[int] = None,
        frame_stack: int = 4,
        seed: int = 0,
        solo: Optional[int] = None,
    ) -> ScenarioConfig:
        scenario = Scenario(scenario)
        height = width if height is None else height
        if scenario is Scenario.PARALLEL:
            targets = (Edge.EAST, Edge.WEST)
        else:
            targets = (Edge.EAST, Edge.SOUTH)
        spawn = (
            edge_midpoint(OPPOSITE[targets[0]], width, height),
            edge_midpoint(OPPOSITE[targets[1]], width, height),
        )
        return cls(
            width=width,
            height=height,
            scenario=scenario,
            spawn=spawn,
            target_edge=targets,
            max_steps=2 * (width + height) if max_steps is None else max_steps,
            reward=RewardSpec() if reward is None else reward,
            frame_stack=frame_stack,
            seed=seed,
            solo=solo,
        )

    def __post_init__(self) -> None:
        w, h = self.width, self.height
        if w < 5:
            raise ConfigError("width", f"must be >= 5, got {w}")
        if h < 5:
            raise ConfigError("height", f"must be >= 5, got {h}")
        for i in range(2):
            if not self.contains(self.spawn[i]):
                raise ConfigError(f"spawn[{i}]", f"{self.spawn[i]} is outside the {w}x{h} grid")
            source = OPPOSITE[self.target_edge[i]]
            if self.spawn[i] not in edge_cells(source, w, h):
                raise ConfigError(
                    f"spawn[{i}]",
                    f"{self.spawn[i]} is not on the {source.value} edge opposite its target",
                )
            if self.spawn[i] != edge_midpoint(source, w, h):
                raise ConfigError(
                    f"spawn[{i}]", f"{self.spawn[i]} is not the {source.value} midpoint"
                )
        t0, t1 = self.target_edge
        if self.scenario is Scenario.PARALLEL and t1 is not OPPOSITE[t0]:
            raise ConfigError("target_edge", "parallel targets must be opposite edges")
        if self.scenario is Scenario.PERPENDICULAR and t1 in (t0, OPPOSITE[t0]):
            raise ConfigError("target_edge", "perpendicular targets must be adjacent edges")
        if self.max_steps < 2 * (w + h):
            raise ConfigError("max_steps", f"must be >= 2*(width+height) = {2 * (w + h)}")
        if self.frame_stack < 1:
            raise ConfigError("frame_stack", "must be >= 1")
        if self.solo not in (None, 0, 1):
            raise ConfigError("solo", f"must be 0 or 1, got {self.solo}")
        if self.seed < 0:
            raise ConfigError("seed", "must be non-negative")
        self._check_reward()
        if self.isometry is None:
            raise ConfigError("scenario", "no grid symmetry exchanges the two agents")

    def _check_reward(self) -> None:
        r = self.reward
        if not r.r_goal > 0:
            raise ConfigError("r_goal", "must be > 0")
        if not r.r_collide < 0:
            raise ConfigError("r_collide", "must be < 0")
        if not r.r_wrong < 0:
            raise ConfigError("r_wrong", "must be < 0")
        if not r.r_step < 0:
            raise ConfigError("r_step", "must be < 0")
        if not abs(r.r_step) * self.max_steps < r.r_goal:
            raise ConfigError("r_step", "|r_step| * max_steps must stay below r_goal")
        if not 0 < r.gamma < 1:
            raise ConfigError("gamma", "must be in (0, 1)")

    @cached_property
    def isometry(self) -> Optional[Isometry]:
        return find_isometry(self.width, self.height, self.spawn, self.target_edge)

    def contains(self, p: Cell) -> bool:
        return 0 <= p[0] < self.width and 0 <= p[1] < self.height

    def crossed_edge(self, p: Cell) -> Edge:
        "Edge crossed to reach the off-grid position `p` in one move."
        x, y = p
        if x < 0:
            return Edge.WEST
        if x >= self.width:
            return Edge.EAST
        if y < 0:
            return Edge.NORTH
        return Edge.SOUTH

    def agents(self) -> Tuple[int, ...]:
        "Indices of the agents that take part."
        return (0, 1) if self.solo is None else (self.solo,)


@dataclass(frozen=True)
class JointState:
    pos: Tuple[Optional[Cell], Optional[Cell]]
    t: int
    status: Tuple[Status, Status]

    def active(self, agent: int) -> bool:
        return self.status[agent] is Status.ACTIVE

    @property
    def terminal(self) -> bool:
        return not (self.active(0) or self.active(1))


@dataclass(frozen=True)
class StepOutcome:
    next: JointState
    reward: Tuple[float, float]
    terminal: bool
    events: Tuple[Event, Event]


JointAction = Tuple[Move, Move]


def reset(config: ScenarioConfig) -> JointState:
    "The unique initial state: both agents on their spawns at `t = 0`."
    pos: List[Optional[Cell]] = [config.spawn[0], config.spawn[1]]
    status = [Status.ACTIVE, Status.ACTIVE]
    if config.solo is not None:
        other = 1 - config.solo
        pos[other] = None
        status[other] = Status.ABSENT
    return JointState((pos[0], pos[1]), 0, (status[0], status[1]))


def step(state: JointState, actions: Sequence[int], config: ScenarioConfig) -> StepOutcome:
    """
    Simultaneous-move transition.

    Args:
        state : a non-terminal state
        actions : one move per agent; moves of inactive agents are ignored
        config : scenario

    Returns:
        Next state, per-agent rewards, terminal flag and per-agent events.

    Raises:
        UsageError : if no agent is active.
    """
    if state.terminal:
        raise UsageError(f"step called on a terminal state (t={state.t}, status={state.status})")
    r = config.reward
    moves = (Move(actions[0]), Move(actions[1]))
    tentative: List[Optional[Cell]] = [None, None]
    for i in range(2):
        p = state.pos[i]
        if state.active(i) and p is not None:
            dx, dy = MOVE_DELTAS[moves[i]]
            tentative[i] = (p[0] + dx, p[1] + dy)

    t0, t1 = tentative
    if (
        t0 is not None
        and t1 is not None
        and config.contains(t0)
        and config.contains(t1)
        and (t0 == t1 or (t0 == state.pos[1] and t1 == state.pos[0]))
    ):
        penalty = r.r_collide + r.r_step
        return StepOutcome(
            JointState(state.pos, state.t + 1, (Status.COLLIDED, Status.COLLIDED)),
            (penalty, penalty),
            True,
            (Event.COLLISION, Event.COLLISION),
        )

    pos = list(state.pos)
    status = list(state.status)
    reward = [0.0, 0.0]
    events = [Event.NONE, Event.NONE]
    t = state.t + 1
    for i in range(2):
        p = tentative[i]
        if p is None:
            continue
        if config.contains(p):
            pos[i] = p
            reward[i] = r.r_step
            if t >= config.max_steps:
                status[i] = Status.TIMED_OUT
                events[i] = Event.TIMEOUT
        elif config.crossed_edge(p) is config.target_edge[i]:
            pos[i] = None
            reward[i] = r.r_goal
            status[i] = Status.REACHED_GOAL
            events[i] = Event.GOAL
        else:
            pos[i] = None
            reward[i] = r.r_wrong
            status[i] = Status.WRONG_EXIT
            events[i] = Event.WRONG_EXIT

    nxt = JointState((pos[0], pos[1]), t, (status[0], status[1]))
    return StepOutcome(nxt, (reward[0], reward[1]), nxt.terminal, (events[0], events[1]))


def shortest_path_len(spawn: Cell, target_edge: Edge, config: ScenarioConfig) -> int:
    "Moves needed from `spawn` to cross `target_edge`, including the exit move."
    x, y = spawn
    return {
        Edge.EAST: config.width - x,
        Edge.WEST: x + 1,
        Edge.SOUTH: config.height - y,
        Edge.NORTH: y + 1,
    }[target_edge]


def _isometry(config: ScenarioConfig) -> Isometry:
    iso = config.isometry
    if iso is None:
        raise UsageError("scenario has no agent-exchanging symmetry")
    return iso


@overload
def mirror(obj: JointState, config: ScenarioConfig) -> JointState:
    ...


@overload
def mirror(obj: StepOutcome, config: ScenarioConfig) -> StepOutcome:
    ...


@overload
def mirror(obj: Sequence[int], config: ScenarioConfig) -> JointAction:
    ...


def mirror(
    obj: Union[JointState, StepOutcome, Sequence[int]], config: ScenarioConfig
) -> Union[JointState, StepOutcome, JointAction]:
    """
    Exchange the agents' roles through the scenario's symmetry: geometry is
    mapped by the isometry and agent indices are swapped. `mirror` is an
    involution and `step` commutes with it.
    """
    iso = _isometry(config)
    if isinstance(obj, JointState):
        p0, p1 = (None if p is None else iso.cell(p) for p in obj.pos)
        return JointState((p1, p0), obj.t, (obj.status[1], obj.status[0]))
    if isinstance(obj, StepOutcome):
        return StepOutcome(
            mirror(obj.next, config),
            (obj.reward[1], obj.reward[0]),
            obj.terminal,
            (obj.events[1], obj.events[0]),
        )
    return (iso.move(Move(obj[1])), iso.move(Move(obj[0])))

"""
Strategy labels, scripted reference strategies, empirical payoff matrices and
pure Nash enumeration over the 2 x 2 straight / avoid game.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .gridworld import (
    EDGE_NORMALS,
    DELTA_MOVES,
    Cell,
    Event,
    JointState,
    Move,
    Scenario,
    ScenarioConfig,
    Vector,
    shortest_path_len,
)
from .policy import Policy
from .trajectory import Trajectory, rollout


class AnalysisError(ValueError):
    "Exception raised for empty or inconsistent analysis input."


class Label(Enum):
    STRAIGHT = "straight"
    AVOID = "avoid"
    COLLIDE = "collide"
    FAIL = "fail"


class Strategy(Enum):
    STRAIGHT = "straight"
    AVOID = "avoid"


STRATEGIES = (Strategy.STRAIGHT, Strategy.AVOID)


@dataclass(frozen=True)
class StrategyLabel:
    label: Label
    extra_steps: int
    waited: bool


def classify(traj: Trajectory, agent: int, config: ScenarioConfig) -> StrategyLabel:
    """
    Label how `agent` played a finished episode.

    `STRAIGHT` is a goal in exactly the shortest number of moves (which rules
    out waits and detours), `AVOID` any other goal, `COLLIDE` a collision and
    `FAIL` everything else.
    """
    if agent not in (0, 1):
        raise AnalysisError(f"agent index must be 0 or 1, got {agent}")
    moves = traj.moves(agent)
    waited = Move.STAY in moves
    shortest = shortest_path_len(config.spawn[agent], config.target_edge[agent], config)
    extra = max(len(moves) - shortest, 0)
    event = traj.event(agent)
    if event is Event.GOAL:
        label = Label.STRAIGHT if extra == 0 else Label.AVOID
    elif event is Event.COLLISION:
        label = Label.COLLIDE
    else:
        label = Label.FAIL
    return StrategyLabel(label, extra, waited)


def _heading(config: ScenarioConfig, agent: int) -> Vector:
    return EDGE_NORMALS[config.target_edge[agent]]


def _right_of(h: Vector) -> Vector:
    # y grows southwards, so turning right maps (dx, dy) to (-dy, dx).
    return (-h[1], h[0])


def _dot(u: Vector, v: Vector) -> int:
    return u[0] * v[0] + u[1] * v[1]


def _sub(p: Cell, q: Cell) -> Vector:
    return (p[0] - q[0], p[1] - q[1])


def _add(p: Cell, v: Vector) -> Cell:
    return (p[0] + v[0], p[1] + v[1])


def _opponent(state: JointState, agent: int) -> Optional[Cell]:
    other = 1 - agent
    return state.pos[other] if state.active(other) else None


def _straight(config: ScenarioConfig, agent: int) -> Policy:
    move = DELTA_MOVES[_heading(config, agent)]

    def policy(state: JointState) -> Move:
        return move

    return policy


def _sidestep(config: ScenarioConfig, agent: int, lookahead: int = 2) -> Policy:
    """
    Head-on avoidance: leave the lane to the right when the opponent is ahead in
    the same lane within `lookahead` cells, keep going, and return to the lane
    once the opponent is behind.
    """
    h = _heading(config, agent)
    right = _right_of(h)
    spawn = config.spawn[agent]
    forward = DELTA_MOVES[h]
    aside = DELTA_MOVES[right]
    back = DELTA_MOVES[(-right[0], -right[1])]

    def policy(state: JointState) -> Move:
        me = state.pos[agent]
        assert me is not None
        opp = _opponent(state, agent)
        in_lane = _dot(_sub(me, spawn), right) == 0
        if in_lane:
            if opp is not None:
                d = _sub(opp, me)
                if _dot(d, right) == 0 and 1 <= _dot(d, h) <= lookahead:
                    return aside
            return forward
        if opp is None or _dot(_sub(opp, me), h) < 0:
            return back
        return forward

    return policy


def _wait(config: ScenarioConfig, agent: int) -> Policy:
    """
    Crossing avoidance: `STAY` while the next cell is contested by the
    opponent's straight-line move. When both agents held back in the previous
    frame, the one that does not have the opponent on its right goes first.
    """
    h = _heading(config, agent)
    right = _right_of(h)
    forward = DELTA_MOVES[h]
    h_other = _heading(config, 1 - agent)
    last_opp: Optional[Cell] = None
    waited = False

    def policy(state: JointState) -> Move:
        nonlocal last_opp, waited
        if state.t == 0:
            last_opp, waited = None, False
        me = state.pos[agent]
        assert me is not None
        opp = _opponent(state, agent)
        opp_waited = opp is not None and opp == last_opp
        last_opp = opp
        if opp is None:
            waited = False
            return forward
        mine = _add(me, h)
        theirs = _add(opp, h_other)
        contested = mine == theirs or (mine == opp and theirs == me)
        if contested and not (waited and opp_waited and _dot(_sub(opp, me), right) <= 0):
            waited = True
            return Move.STAY
        waited = False
        return forward

    return policy


def scripted_strategy(kind: Strategy, agent: int, config: ScenarioConfig) -> Policy:
    """
    Reference policy for one strategy. `STRAIGHT` always heads for the target
    edge. `AVOID` sidesteps in the parallel scenario and waits in the
    perpendicular one.

    The returned closure may keep per-episode memory; it resets on `t == 0`.
    """
    kind = Strategy(kind)
    if kind is Strategy.STRAIGHT:
        return _straight(config, agent)
    if config.scenario is Scenario.PARALLEL:
        return _sidestep(config, agent)
    return _wait(config, agent)


@dataclass(frozen=True)
class PayoffMatrix:
    """
    Attributes:
        payoff : `payoff[i, j, k]` is player `k`'s mean return when agent 0 plays
            `STRATEGIES[i]` and agent 1 plays `STRATEGIES[j]`
    """

    payoff: np.ndarray
    episodes_per_cell: int = 1
    discounted: bool = False
    strategies: Tuple[Strategy, Strategy] = STRATEGIES

    def __post_init__(self) -> None:
        if self.payoff.shape != (2, 2, 2):
            raise AnalysisError(f"payoff must be 2x2x2, got {self.payoff.shape}")
        if not np.all(np.isfinite(self.payoff)):
            raise AnalysisError("payoff entries must be finite")

    @classmethod
    def from_cells(cls, cells: Sequence[Sequence[Tuple[float, float]]], **kw: Any) -> PayoffMatrix:
        return cls(np.array(cells, dtype=np.float64), **kw)

    def cell(self, i: int, j: int) -> Tuple[float, float]:
        return (float(self.payoff[i, j, 0]), float(self.payoff[i, j, 1]))

    def ordering(self) -> Dict[str, Any]:
        "Straight-vs-avoid, avoid-vs-straight and straight-vs-straight returns of agent 0."
        r_s = float(self.payoff[0, 1, 0])
        r_a = float(self.payoff[1, 0, 0])
        r_d = float(self.payoff[0, 0, 0])
        return {"r_s": r_s, "r_a": r_a, "r_d": r_d, "ordered": r_s > r_a > r_d}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "strategies": [s.value for s in self.strategies],
            "episodes_per_cell": self.episodes_per_cell,
            "discounted": self.discounted,
            "cells": {
                f"{a.value},{b.value}": list(self.cell(i, j))
                for (i, a), (j, b) in itertools.product(enumerate(self.strategies), repeat=2)
            },
            "ordering": self.ordering(),
        }


def empirical_payoff(
    config: ScenarioConfig,
    episodes_per_cell: int = 1,
    discounted: bool = False,
    trajectory_dir: Optional[Path] = None,
) -> PayoffMatrix:
    """
    Roll out the four scripted strategy pairs and tabulate mean returns. With
    `trajectory_dir`, each rollout is written there as `<a>_<b>_<k>.csv`.
    """
    if episodes_per_cell < 1:
        raise AnalysisError("episodes_per_cell must be >= 1")
    if config.solo is not None:
        raise AnalysisError("payoff needs both agents in play")
    if trajectory_dir is not None:
        trajectory_dir.mkdir(parents=True, exist_ok=True)
    payoff = np.zeros((2, 2, 2))
    for (i, a), (j, b) in itertools.product(enumerate(STRATEGIES), repeat=2):
        total = np.zeros(2)
        for k in range(episodes_per_cell):
            policies = [scripted_strategy(a, 0, config), scripted_strategy(b, 1, config)]
            traj = rollout(config, policies)
            if trajectory_dir is not None:
                traj.write_csv(trajectory_dir / f"{a.value}_{b.value}_{k + 1}.csv")
            total += traj.discounted_returns() if discounted else traj.returns()
        payoff[i, j] = total / episodes_per_cell
    return PayoffMatrix(payoff, episodes_per_cell, discounted)


Profile = Tuple[int, int]


@dataclass(frozen=True)
class Arrow:
    "A strictly improving unilateral deviation of `player` from `source` to `target`."

    player: int
    source: Profile
    target: Profile
    gain: float


@dataclass(frozen=True)
class NashResult:
    pure_equilibria: FrozenSet[Profile]
    weak: FrozenSet[Profile]
    arrows: Tuple[Arrow, ...]

    @property
    def tie(self) -> bool:
        return bool(self.weak)

    def to_dict(self, strategies: Sequence[Strategy] = STRATEGIES) -> Dict[str, Any]:
        def name(p: Profile) -> List[str]:
            return [strategies[p[0]].value, strategies[p[1]].value]

        return {
            "pure_equilibria": [name(p) for p in sorted(self.pure_equilibria)],
            "weak": [name(p) for p in sorted(self.weak)],
            "tie": self.tie,
            "arrows": [
                {"player": a.player, "from": name(a.source), "to": name(a.target), "gain": a.gain}
                for a in self.arrows
            ],
        }


def pure_nash(matrix: PayoffMatrix) -> NashResult:
    """
    Enumerate the four pure profiles. A profile is an equilibrium when no
    player gains strictly by switching alone; it is weak when some switch
    leaves that player's payoff unchanged. Arrows point towards higher payoff.
    """
    p = matrix.payoff
    equilibria = set()
    weak = set()
    arrows = []
    for i, j in itertools.product(range(2), repeat=2):
        deviations = [(0, (1 - i, j)), (1, (i, 1 - j))]
        improving = False
        tied = False
        for player, (di, dj) in deviations:
            gain = float(p[di, dj, player] - p[i, j, player])
            if gain > 0:
                improving = True
                arrows.append(Arrow(player, (i, j), (di, dj), gain))
            elif gain == 0:
                tied = True
        if not improving:
            equilibria.add((i, j))
            if tied:
                weak.add((i, j))
    return NashResult(frozenset(equilibria), frozenset(weak), tuple(arrows))


@dataclass(frozen=True)
class AsymmetryReport:
    joint_labels: Dict[int, Tuple[Label, Label]]
    asymmetric_fraction: float
    straight_split: Tuple[int, int]
    collide: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "joint_labels": {str(s): [a.value, b.value] for s, (a, b) in self.joint_labels.items()},
            "asymmetric_fraction": self.asymmetric_fraction,
            "straight_split": list(self.straight_split),
            "collide": self.collide,
        }


def asymmetry_report(labels: Dict[int, Tuple[Label, Label]]) -> AsymmetryReport:
    """
    Args:
        labels : final greedy joint label per seed

    Returns:
        Share of seeds that settled on one straight and one avoid agent, and
        how often each agent took the straight role among them.
    """
    if not labels:
        raise AnalysisError("asymmetry report needs at least one seed")
    labels = {seed: (Label(a), Label(b)) for seed, (a, b) in labels.items()}
    split: Counter[int] = Counter()
    for a, b in labels.values():
        if {a, b} == {Label.STRAIGHT, Label.AVOID}:
            split[0 if a is Label.STRAIGHT else 1] += 1
    asymmetric = split[0] + split[1]
    return AsymmetryReport(
        joint_labels=dict(sorted(labels.items())),
        asymmetric_fraction=asymmetric / len(labels),
        straight_split=(split[0], split[1]),
        collide=any(Label.COLLIDE in pair for pair in labels.values()),
    )


def format_payoff_table(matrix: PayoffMatrix, nash: NashResult) -> str:
    "Plain-text bimatrix; equilibria are starred."
    names = [s.value for s in matrix.strategies]
    width = max(len(n) for n in names) + 2
    lines = [" " * width + "".join(f"{n:>20}" for n in names)]
    for i, row in enumerate(names):
        cells = []
        for j in range(2):
            a, b = matrix.cell(i, j)
            mark = "*" if (i, j) in nash.pure_equilibria else " "
            cells.append(f"{f'({a:+.4f}, {b:+.4f})':>19}{mark}")
        lines.append(f"{row:<{width}}" + "".join(cells))
    order = matrix.ordering()
    lines.append(
        f"r_s={order['r_s']:+.4f} r_a={order['r_a']:+.4f} r_d={order['r_d']:+.4f} "
        f"ordered={order['ordered']}"
    )
    return "\n".join(lines) + "\n"


def label_counts(labels: Sequence[StrategyLabel]) -> Dict[str, int]:
    return dict(Counter(l.label.value for l in labels))


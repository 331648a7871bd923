from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from .checkpoint import CheckpointError
from .config import AgentConfig
from .gridworld import (
    MOVES,
    Cell,
    JointState,
    Move,
    ScenarioConfig,
    Status,
    StepOutcome,
    step,
)
from .policy import Policy, bootstraps, epsilon_greedy, greedy_action
from .tensor_data import Tensor

logger = logging.getLogger(__name__)

StateKey = Tuple[Cell, Optional[Cell]]
"(own cell, other agent's cell or None once it is out of play)"

N_MOVES = len(MOVES)


class QTable:
    "Sparse action-value table; missing rows read as zeros."

    def __init__(self) -> None:
        self.values: Dict[StateKey, Tensor] = {}

    def get(self, key: StateKey) -> Tensor:
        row = self.values.get(key)
        return np.zeros(N_MOVES) if row is None else row

    def row(self, key: StateKey) -> Tensor:
        "Writable row, created on first use."
        if key not in self.values:
            self.values[key] = np.zeros(N_MOVES)
        return self.values[key]

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, key: StateKey) -> bool:
        return key in self.values

    def items(self) -> Iterator[Tuple[StateKey, Tensor]]:
        return iter(sorted(self.values.items(), key=lambda kv: _flat_key(kv[0])))

    def copy(self) -> QTable:
        out = QTable()
        out.values = {k: v.copy() for k, v in self.values.items()}
        return out

    def max_abs_diff(self, other: QTable) -> float:
        keys = set(self.values) | set(other.values)
        if not keys:
            return 0.0
        return max(float(np.max(np.abs(self.get(k) - other.get(k)))) for k in keys)

    def save(self, path: Union[str, Path]) -> None:
        """
        Sorted text table, one line per entry: `x1 y1 x2 y2 action q`.
        An absent other agent is written as `-1 -1`; `q` round-trips exactly.
        """
        lines = []
        for key, values in self.items():
            x1, y1, x2, y2 = _flat_key(key)
            for a in range(N_MOVES):
                lines.append(f"{x1} {y1} {x2} {y2} {a} {float(values[a])!r}")
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load(cls, path: Union[str, Path]) -> QTable:
        if not str(path):
            raise CheckpointError(path, "empty checkpoint path")
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise CheckpointError(path, e.strerror or str(e)) from e
        table = cls()
        for n, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split()
            try:
                x1, y1, x2, y2, a = (int(p) for p in parts[:5])
                q = float(parts[5])
                if len(parts) != 6 or not 0 <= a < N_MOVES:
                    raise ValueError(line)
            except (ValueError, IndexError):
                raise CheckpointError(path, f"line {n}: expected 'x1 y1 x2 y2 action q'") from None
            other = None if (x2, y2) == (-1, -1) else (x2, y2)
            table.row(((x1, y1), other))[a] = q
        return table


def _flat_key(key: StateKey) -> Tuple[int, int, int, int]:
    (x1, y1), other = key
    x2, y2 = (-1, -1) if other is None else other
    return (x1, y1, x2, y2)


def state_key(state: JointState, agent: int) -> StateKey:
    """
    Tabular state of `agent`. The other agent counts while it is still on the
    grid (active, or stopped by the time limit in the same frame).
    """
    own = state.pos[agent]
    if own is None:
        raise ValueError(f"agent {agent} is not on the grid")
    other = state.pos[1 - agent]
    if state.status[1 - agent] not in (Status.ACTIVE, Status.TIMED_OUT):
        other = None
    return (own, other)


@dataclass(frozen=True)
class Transition:
    state: StateKey
    action: int
    reward: float
    next_state: Optional[StateKey]
    terminal: bool


def td_update(table: QTable, transition: Transition, eta: float, gamma: float) -> QTable:
    r"""
    One Q-learning step on a single entry, in place:

    $Q(s,a) \leftarrow Q(s,a) + \eta (r + \gamma \max_{a'} Q(s',a') (1 - terminal) - Q(s,a))$

    Returns:
        `table`, for chaining.
    """
    target = transition.reward
    if not transition.terminal and transition.next_state is not None:
        target += gamma * float(np.max(table.get(transition.next_state)))
    current = float(table.get(transition.state)[transition.action])
    delta = eta * (target - current)
    if delta == 0.0 and transition.state not in table:
        return table
    table.row(transition.state)[transition.action] = current + delta
    return table


def transition_for(
    state: JointState, move: Move, outcome: StepOutcome, agent: int
) -> Transition:
    event = outcome.events[agent]
    terminal = not bootstraps(event)
    return Transition(
        state=state_key(state, agent),
        action=int(move),
        reward=outcome.reward[agent],
        next_state=None if terminal else state_key(outcome.next, agent),
        terminal=terminal,
    )


class TabularAgent:
    """
    Independent tabular Q-learner over `(own cell, other cell)` states.

    Args:
        agent : which player this learner controls
        config : scenario, for the discount
        hp : hyper-parameters (`learning_rate` is the step size eta)
    """

    def __init__(self, agent: int, config: ScenarioConfig, hp: AgentConfig):
        self.agent = agent
        self.config = config
        self.hp = hp
        self.table = QTable()
        self.schedule = hp.schedule()
        self.gamma = config.reward.gamma
        self.steps = 0

    def start(self, state: JointState) -> None:
        pass

    def act(self, state: JointState, rng: np.random.Generator) -> Move:
        key = state_key(state, self.agent)
        return epsilon_greedy(
            lambda: self.table.get(key), self.schedule(self.steps), rng, self.hp.tie_break
        )

    def learn(
        self, state: JointState, move: Move, outcome: StepOutcome, rng: np.random.Generator
    ) -> Optional[float]:
        td_update(
            self.table,
            transition_for(state, move, outcome, self.agent),
            self.hp.learning_rate,
            self.gamma,
        )
        self.steps += 1
        return None

    def greedy_policy(self, rng: Optional[np.random.Generator] = None) -> Policy:
        table = self.table.copy()
        agent, tie_break = self.agent, self.hp.tie_break

        def policy(state: JointState) -> Move:
            return greedy_action(table.get(state_key(state, agent)), tie_break, rng)

        return policy

    def save(self, path: Union[str, Path]) -> None:
        self.table.save(path)

    def load(self, path: Union[str, Path]) -> None:
        self.table = QTable.load(path)


def _solo_state(config: ScenarioConfig, agent: int, cell: Cell) -> JointState:
    pos: List[Optional[Cell]] = [None, None]
    pos[agent] = cell
    status = [Status.ABSENT, Status.ABSENT]
    status[agent] = Status.ACTIVE
    return JointState((pos[0], pos[1]), 0, (status[0], status[1]))


def value_iteration(config: ScenarioConfig, agent: int, tol: float = 1e-6) -> QTable:
    """
    Exact Q* of `agent` alone on the grid (the other agent absent), ignoring
    the time limit. Sweeps until no entry moves by more than `tol`.
    """
    gamma = config.reward.gamma
    cells = [(x, y) for y in range(config.height) for x in range(config.width)]
    model = {}
    for cell in cells:
        for move in MOVES:
            outcome = step(_solo_state(config, agent, cell), [move, move], config)
            nxt = outcome.next.pos[agent]
            terminal = not bootstraps(outcome.events[agent]) or nxt is None
            model[(cell, move)] = (outcome.reward[agent], None if terminal else nxt)

    table = QTable()
    sweeps = 0
    while True:
        sweeps += 1
        worst = 0.0
        for cell in cells:
            row = table.row((cell, None))
            for move in MOVES:
                reward, nxt = model[(cell, move)]
                value = reward
                if nxt is not None:
                    value += gamma * float(np.max(table.get((nxt, None))))
                worst = max(worst, abs(value - row[move]))
                row[move] = value
        if worst < tol:
            logger.debug("value iteration converged after %d sweeps", sweeps)
            return table


def solo_transition(config: ScenarioConfig, agent: int, cell: Cell, move: Move) -> Transition:
    "Single-agent transition from `cell`, used for sweeping updates."
    state = _solo_state(config, agent, cell)
    return transition_for(state, move, step(state, [move, move], config), agent)

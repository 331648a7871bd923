from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from typing_extensions import Protocol

from .gridworld import MOVES, ConfigError, Event, JointState, Move, StepOutcome
from .tensor_data import Tensor

Policy = Callable[[JointState], Move]
"Deterministic map from the current state to one agent's move."


class TieBreak(Enum):
    LOWEST = "lowest"
    RANDOM = "random"


@dataclass(frozen=True)
class EpsilonSchedule:
    "Linear decay from `eps_start` to `eps_end` over `decay_steps`, then constant."

    eps_start: float = 1.0
    eps_end: float = 0.05
    decay_steps: int = 30_000

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ConfigError("eps_start", "need 0 <= eps_end <= eps_start <= 1")
        if self.decay_steps < 0:
            raise ConfigError("eps_decay_steps", "must be >= 0")

    def __call__(self, step: int) -> float:
        if step >= self.decay_steps:
            return self.eps_end
        frac = step / self.decay_steps
        return self.eps_start + frac * (self.eps_end - self.eps_start)


def greedy_action(
    q: Tensor, tie_break: TieBreak = TieBreak.LOWEST, rng: Optional[np.random.Generator] = None
) -> Move:
    "Argmax over the Q-values; ties go to the lowest index unless `tie_break` is random."
    best = np.flatnonzero(q == np.max(q))
    if tie_break is TieBreak.RANDOM and len(best) > 1:
        if rng is None:
            raise ValueError("random tie-breaking needs a generator")
        return Move(int(rng.choice(best)))
    return Move(int(best[0]))


def epsilon_greedy(
    q_fn: Callable[[], Tensor],
    epsilon: float,
    rng: np.random.Generator,
    tie_break: TieBreak = TieBreak.LOWEST,
) -> Move:
    """
    Uniform random move with probability `epsilon`, greedy otherwise.

    The exploration draw is always taken first, so the generator advances the
    same way whichever branch is chosen; `q_fn` is only evaluated when greedy.
    """
    if rng.random() < epsilon:
        return MOVES[int(rng.integers(len(MOVES)))]
    return greedy_action(q_fn(), tie_break, rng)


class Learner(Protocol):
    "One independent learner as driven by the episode loop."

    agent: int
    steps: int

    def start(self, state: JointState) -> None:
        ...

    def act(self, state: JointState, rng: np.random.Generator) -> Move:
        ...

    def learn(
        self, state: JointState, move: Move, outcome: StepOutcome, rng: np.random.Generator
    ) -> Optional[float]:
        ...

    def greedy_policy(self, rng: Optional[np.random.Generator] = None) -> Policy:
        ...


def bootstraps(event: Event) -> bool:
    "Timeouts truncate the episode; only goal, wrong exit and collision end the return."
    return event in (Event.NONE, Event.TIMEOUT)

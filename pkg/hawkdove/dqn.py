from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .checkpoint import load_network, read_meta, save_network
from .config import AgentConfig
from .gridworld import JointState, Move, ScenarioConfig, StepOutcome
from .network import QNetwork, q_values, td_backward
from .observation import FrameStack, observation_shape
from .optim import SGD
from .policy import Policy, bootstraps, epsilon_greedy, greedy_action
from .replay import ReplayBuffer
from .tensor_data import Tensor

logger = logging.getLogger(__name__)


class DqnAgent:
    """
    Deep Q-learner with experience replay and a hard-synced target network.

    Args:
        agent : which player this learner controls
        config : scenario (observation shape, discount)
        hp : hyper-parameters
        rng : this agent's generator; used for initialization here and for
            exploration and replay sampling afterwards
        train_ratio : gradient steps per environment step
    """

    def __init__(
        self,
        agent: int,
        config: ScenarioConfig,
        hp: AgentConfig,
        rng: np.random.Generator,
        train_ratio: int = 1,
    ):
        self.agent = agent
        self.config = config
        self.hp = hp
        shape = observation_shape(config)
        self.online = QNetwork(shape, rng, hp.conv, hp.hidden)
        self.target = self.online.clone()
        self.buffer = ReplayBuffer(hp.buffer_capacity, shape, hp.prioritized, hp.priority_alpha)
        self.optimizer = SGD(self.online.parameters(), lr=hp.learning_rate, momentum=hp.momentum)
        self.schedule = hp.schedule()
        self.gamma = config.reward.gamma
        self.batch_size = hp.batch_size
        self.sync_period = hp.sync_period
        self.train_ratio = train_ratio
        self.steps = 0
        self.train_steps = 0
        self.frames = FrameStack(agent, config)
        self.obs: Optional[Tensor] = None

    def start(self, state: JointState) -> None:
        self.obs = self.frames.reset(state)

    def act(self, state: JointState, rng: np.random.Generator) -> Move:
        obs = self.obs
        if obs is None:
            raise RuntimeError("DqnAgent.act called before start")
        return epsilon_greedy(
            lambda: q_values(self.online, obs[None])[0],
            self.schedule(self.steps),
            rng,
            self.hp.tie_break,
        )

    def learn(
        self, state: JointState, move: Move, outcome: StepOutcome, rng: np.random.Generator
    ) -> Optional[float]:
        "Store the transition, then take `train_ratio` gradient steps. Returns the last loss."
        assert self.obs is not None
        next_obs = self.frames.push(outcome.next)
        done = not bootstraps(outcome.events[self.agent])
        self.buffer.push(self.obs, int(move), outcome.reward[self.agent], next_obs, done)
        self.obs = next_obs
        self.steps += 1
        loss = None
        for _ in range(self.train_ratio):
            result = dqn_train_step(self, rng)
            if result is not None:
                loss = result
        return loss

    def greedy_policy(self, rng: Optional[np.random.Generator] = None) -> Policy:
        net = self.online.clone()
        frames = FrameStack(self.agent, self.config)
        tie_break = self.hp.tie_break
        started = False

        def policy(state: JointState) -> Move:
            nonlocal started
            if state.t == 0 or not started:
                obs = frames.reset(state)
                started = True
            else:
                obs = frames.push(state)
            return greedy_action(q_values(net, obs[None])[0], tie_break, rng)

        return policy

    def meta(self, seed: int) -> Dict[str, Any]:
        return {
            "agent": self.agent,
            "seed": seed,
            "steps": self.steps,
            "train_steps": self.train_steps,
            "epsilon": self.schedule(self.steps),
        }

    def save(self, path: Union[str, Path], seed: int) -> None:
        save_network(path, self.online, self.meta(seed))

    def load(self, path: Union[str, Path]) -> None:
        load_network(path, self.online)
        self.target.copy_from(self.online)
        meta = read_meta(path)
        self.steps = int(meta.get("steps", 0))
        self.train_steps = int(meta.get("train_steps", 0))


def dqn_train_step(agent: DqnAgent, rng: np.random.Generator) -> Optional[float]:
    """
    One replay update of the online network.

    Returns:
        The batch loss, or `None` (nothing changed) while the buffer holds fewer
        than `batch_size` transitions.

    Raises:
        NumericError : if a TD residual is not finite.
    """
    if len(agent.buffer) < agent.batch_size:
        return None
    batch = agent.buffer.sample(agent.batch_size, rng)
    next_q = q_values(agent.target, batch.next_obs).astype(np.float64).max(axis=1)
    targets = batch.rewards + agent.gamma * next_q * (~batch.dones)
    if agent.buffer.prioritized:
        q = q_values(agent.online, batch.obs).astype(np.float64)
        agent.buffer.update_priorities(
            batch.indices, q[np.arange(len(targets)), batch.actions] - targets
        )
    loss, grads = td_backward(agent.online, batch.obs, batch.actions, targets)
    agent.optimizer.step(grads)
    agent.train_steps += 1
    if agent.train_steps % agent.sync_period == 0:
        agent.target.copy_from(agent.online)
        logger.debug("agent %d: target synced at train step %d", agent.agent, agent.train_steps)
    return loss

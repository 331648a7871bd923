"""
Plane encoding of the grid seen by one agent.

A frame is `3 x height x width`: own position, other agent's position, own
target edge. An observation stacks `frame_stack` frames, newest first.
"""
from __future__ import annotations

from collections import deque
from functools import lru_cache
from typing import Deque, Optional, Sequence, Tuple

import numpy as np

from .gridworld import Cell, Edge, JointState, ScenarioConfig, edge_cells
from .tensor_data import Tensor

N_PLANES = 3
SELF, OTHER, BOUNDARY = range(N_PLANES)
OBS_DTYPE = np.float32


@lru_cache(maxsize=64)
def boundary_plane(edge: Edge, width: int, height: int) -> Tensor:
    plane = np.zeros((height, width), dtype=OBS_DTYPE)
    for x, y in edge_cells(edge, width, height):
        plane[y, x] = 1.0
    plane.setflags(write=False)
    return plane


def observation_shape(config: ScenarioConfig) -> Tuple[int, int, int]:
    return (N_PLANES * config.frame_stack, config.height, config.width)


def encode_frame(state: JointState, agent: int, config: ScenarioConfig) -> Tensor:
    "One `3 x H x W` frame. Position planes are empty for agents that are not active."
    frame = np.zeros((N_PLANES, config.height, config.width), dtype=OBS_DTYPE)
    for plane, who in ((SELF, agent), (OTHER, 1 - agent)):
        p = state.pos[who]
        if state.active(who) and p is not None:
            frame[plane, p[1], p[0]] = 1.0
    frame[BOUNDARY] = boundary_plane(config.target_edge[agent], config.width, config.height)
    return frame


def observe(
    state: JointState, history: Sequence[Tensor], agent: int, config: ScenarioConfig
) -> Tensor:
    """
    Args:
        state : current state
        history : up to `frame_stack - 1` earlier frames of this agent, newest first;
            missing frames are filled with the oldest one available
        agent : 0 or 1
        config : scenario

    Returns:
        `(3 * frame_stack) x H x W` observation, newest frame first.
    """
    frames = [encode_frame(state, agent, config)]
    frames.extend(history[: config.frame_stack - 1])
    while len(frames) < config.frame_stack:
        frames.append(frames[-1])
    return np.concatenate(frames, axis=0)


def initial_history(state: JointState, agent: int, config: ScenarioConfig) -> Sequence[Tensor]:
    frame = encode_frame(state, agent, config)
    return [frame] * (config.frame_stack - 1)


def decode_positions(obs: Tensor) -> Tuple[Optional[Cell], Optional[Cell]]:
    "Own and other position read back from the newest frame."

    def find(plane: Tensor) -> Optional[Cell]:
        ys, xs = np.nonzero(plane)
        if len(xs) == 0:
            return None
        return (int(xs[0]), int(ys[0]))

    return find(obs[SELF]), find(obs[OTHER])


class FrameStack:
    "Rolling frame history of one agent across an episode."

    def __init__(self, agent: int, config: ScenarioConfig):
        self.agent = agent
        self.config = config
        self.history: Deque[Tensor] = deque(maxlen=max(config.frame_stack - 1, 0))

    def reset(self, state: JointState) -> Tensor:
        self.history.clear()
        self.history.extend(initial_history(state, self.agent, self.config))
        return observe(state, list(self.history), self.agent, self.config)

    def push(self, state: JointState) -> Tensor:
        obs = observe(state, list(self.history), self.agent, self.config)
        self.history.appendleft(obs[:N_PLANES])
        return obs

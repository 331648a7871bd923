from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import numpy.typing as npt

from .gridworld import ConfigError
from .tensor_data import Tensor, check_shape

PRIORITY_EPS = 1e-6


@dataclass(frozen=True)
class Batch:
    obs: Tensor
    actions: npt.NDArray[np.int64]
    rewards: npt.NDArray[np.float64]
    next_obs: Tensor
    dones: npt.NDArray[np.bool_]
    indices: npt.NDArray[np.int64]


class ReplayBuffer:
    """
    Fixed-capacity ring of transitions with oldest-first eviction.

    Observations are binary planes and are kept bit-packed. Sampling draws
    distinct slots within a batch, uniformly or, when `prioritized`, in
    proportion to `priority ** alpha`.
    """

    def __init__(
        self,
        capacity: int,
        obs_shape: Sequence[int],
        prioritized: bool = False,
        alpha: float = 0.6,
        obs_dtype: npt.DTypeLike = np.float32,
    ):
        if capacity < 1:
            raise ConfigError("buffer_capacity", "must be >= 1")
        self.capacity = capacity
        self.obs_shape: Tuple[int, ...] = tuple(obs_shape)
        self.obs_size = int(np.prod(self.obs_shape))
        self.obs_dtype = np.dtype(obs_dtype)
        packed = (self.obs_size + 7) // 8
        self._obs = np.zeros((capacity, packed), dtype=np.uint8)
        self._next_obs = np.zeros((capacity, packed), dtype=np.uint8)
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity, dtype=np.float64)
        self._dones = np.zeros(capacity, dtype=np.bool_)
        self.prioritized = prioritized
        self.alpha = alpha
        self._priorities = np.zeros(capacity, dtype=np.float64)
        self._max_priority = 1.0
        self._next_index = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def _pack(self, obs: Tensor) -> npt.NDArray[np.uint8]:
        check_shape("ReplayBuffer observation", self.obs_shape, obs.shape)
        return np.packbits(obs.reshape(-1) != 0)

    def _unpack(self, rows: npt.NDArray[np.uint8]) -> Tensor:
        bits = np.unpackbits(rows, axis=1, count=self.obs_size)
        return bits.astype(self.obs_dtype).reshape((len(rows), *self.obs_shape))

    def push(self, obs: Tensor, action: int, reward: float, next_obs: Tensor, done: bool) -> None:
        i = self._next_index
        self._obs[i] = self._pack(obs)
        self._next_obs[i] = self._pack(next_obs)
        self._actions[i] = action
        self._rewards[i] = reward
        self._dones[i] = done
        self._priorities[i] = self._max_priority
        self._next_index = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def slot_order(self) -> npt.NDArray[np.int64]:
        "Occupied slots from oldest to newest."
        if self._size < self.capacity:
            return np.arange(self._size)
        return (np.arange(self.capacity) + self._next_index) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if batch_size > self._size:
            raise ValueError(f"cannot sample {batch_size} from {self._size} transitions")
        p = None
        if self.prioritized:
            weights = self._priorities[: self._size] ** self.alpha
            p = weights / weights.sum()
        idx = rng.choice(self._size, size=batch_size, replace=False, p=p)
        return Batch(
            obs=self._unpack(self._obs[idx]),
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_obs=self._unpack(self._next_obs[idx]),
            dones=self._dones[idx],
            indices=idx,
        )

    def update_priorities(self, indices: npt.NDArray[np.int64], td_errors: Tensor) -> None:
        priorities = np.abs(td_errors).astype(np.float64) + PRIORITY_EPS
        self._priorities[indices] = priorities
        self._max_priority = max(self._max_priority, float(priorities.max()))

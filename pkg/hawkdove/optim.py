from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from .module import Parameter
from .tensor_data import Tensor, check_shape


def sgd_update(
    params: Sequence[Tensor],
    grads: Sequence[Tensor],
    velocities: Sequence[Tensor],
    lr: float,
    momentum: float = 0.0,
) -> Tuple[List[Tensor], List[Tensor]]:
    r"""
    One SGD step with heavy-ball momentum, as a pure function.

    $v \leftarrow \mu v + g$, $p \leftarrow p - \eta v$

    Returns:
        New parameter values and new velocities. Inputs are not modified.
    """
    if not (len(params) == len(grads) == len(velocities)):
        raise ValueError(
            f"sgd_update: {len(params)} params, {len(grads)} grads, {len(velocities)} velocities"
        )
    new_params = []
    new_velocities = []
    for i, (p, g, v) in enumerate(zip(params, grads, velocities)):
        check_shape(f"sgd_update grad {i}", p.shape, g.shape)
        v = (momentum * v + g).astype(p.dtype)
        new_params.append((p - lr * v).astype(p.dtype))
        new_velocities.append(v)
    return new_params, new_velocities


class Optimizer:
    def __init__(self, parameters: Sequence[Parameter]):
        self.parameters = parameters


class SGD(Optimizer):
    """
    Per-agent optimizer owning the momentum buffers of one network.

    Args:
        parameters : the network parameters, in `Module.parameters()` order
        lr : learning rate, must be positive
        momentum : in `[0, 1)`; 0 is plain SGD
    """

    def __init__(self, parameters: Sequence[Parameter], lr: float = 1e-3, momentum: float = 0.0):
        super().__init__(parameters)
        if not lr > 0:
            raise ValueError(f"SGD learning rate must be positive, got {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ValueError(f"SGD momentum must be in [0, 1), got {momentum}")
        self.lr = lr
        self.momentum = momentum
        self.velocities = [np.zeros_like(p.value) for p in parameters]

    def step(self, grads: Sequence[Tensor]) -> None:
        new_params, self.velocities = sgd_update(
            [p.value for p in self.parameters], grads, self.velocities, self.lr, self.momentum
        )
        for p, value in zip(self.parameters, new_params):
            p.update(value)

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Tuple

import numpy as np

from .tensor_data import Tensor


def central_difference(
    f: Callable[[Tensor], float], x: Tensor, index: Tuple[int, ...], epsilon: float = 1e-6
) -> float:
    r"""
    Computes an approximation to the derivative of scalar `f` with respect to one
    coordinate of `x`.

    Args:
        f : function from a tensor to one value
        x : point of evaluation (not modified)
        index : coordinate $i$ to perturb
        epsilon : a small constant

    Returns:
        An approximation of $\partial f / \partial x_i$
    """
    up = np.array(x, copy=True)
    down = np.array(x, copy=True)
    up[index] += epsilon
    down[index] -= epsilon
    return (f(up) - f(down)) / (2.0 * epsilon)


@dataclass
class Context:
    """
    Context class is used by `Function` to store information during the forward pass.
    """

    no_grad: bool = False
    saved_values: Tuple[Any, ...] = ()

    def save_for_backward(self, *values: Any) -> None:
        "Store the given `values` if they need to be used during backpropagation."
        if self.no_grad:
            return
        self.saved_values = values


class Function:
    """
    A layer kernel with a hand-written derivative.

    `forward(ctx, input, *params)` returns the output; `backward(ctx, grad_output)`
    returns `(grad_input, *grad_params)` in the order the parameters were given.
    """

    @staticmethod
    def forward(ctx: Context, *inputs: Any) -> Tensor:
        raise NotImplementedError

    @staticmethod
    def backward(ctx: Context, grad_output: Tensor) -> Tuple[Tensor, ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Any) -> Tensor:
        "Run the forward pass only."
        return cls.forward(Context(no_grad=True), *inputs)

from __future__ import annotations

from typing import List, Tuple

import numpy as np
import numpy.typing as npt

from .autodiff import Context, Function
from .fast_conv import Conv2dFun
from .fast_ops import LinearFun
from .module import Module, Parameter
from .tensor_data import Tensor, check_finite, check_shape


def he_uniform(
    shape: Tuple[int, ...], fan_in: int, rng: np.random.Generator, dtype: npt.DTypeLike
) -> Tensor:
    r"He-uniform initialization, $U(-\sqrt{6 / fan_{in}}, \sqrt{6 / fan_{in}})$."
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class ReLUFun(Function):
    @staticmethod
    def forward(ctx: Context, input: Tensor) -> Tensor:
        ctx.save_for_backward(input)
        return np.maximum(input, 0)

    @staticmethod
    def backward(ctx: Context, grad_output: Tensor) -> Tuple[Tensor]:
        (input,) = ctx.saved_values
        check_shape("ReLU grad_output", input.shape, grad_output.shape)
        return (np.where(input > 0, grad_output, 0).astype(grad_output.dtype),)


class FlattenFun(Function):
    @staticmethod
    def forward(ctx: Context, input: Tensor) -> Tensor:
        "batch x ... -> batch x features"
        ctx.save_for_backward(input.shape)
        return input.reshape(input.shape[0], -1)

    @staticmethod
    def backward(ctx: Context, grad_output: Tensor) -> Tuple[Tensor]:
        (shape,) = ctx.saved_values
        check_shape("Flatten grad_output", (shape[0], int(np.prod(shape[1:]))), grad_output.shape)
        return (grad_output.reshape(shape),)


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: int,
        stride: int,
        rng: np.random.Generator,
        dtype: npt.DTypeLike = np.float32,
    ):
        super().__init__()
        fan_in = in_channels * kernel * kernel
        self.weights = Parameter(
            he_uniform((out_channels, in_channels, kernel, kernel), fan_in, rng, dtype),
            "weights",
        )
        self.bias = Parameter(np.zeros(out_channels, dtype=dtype), "bias")
        self.stride = stride

    def forward(self, ctx: Context, x: Tensor) -> Tensor:
        return Conv2dFun.forward(ctx, x, self.weights.value, self.bias.value, self.stride)

    def backward(self, ctx: Context, grad_output: Tensor) -> Tuple[Tensor, List[Tensor]]:
        grad_input, grad_weights, grad_bias = Conv2dFun.backward(ctx, grad_output)
        return grad_input, [grad_weights, grad_bias]

    def __repr__(self) -> str:
        o, i, k, _ = self.weights.value.shape
        return f"Conv2d({i}, {o}, kernel={k}, stride={self.stride})"


class Linear(Module):
    def __init__(
        self,
        in_size: int,
        out_size: int,
        rng: np.random.Generator,
        dtype: npt.DTypeLike = np.float32,
    ):
        super().__init__()
        self.weights = Parameter(he_uniform((in_size, out_size), in_size, rng, dtype), "weights")
        self.bias = Parameter(np.zeros(out_size, dtype=dtype), "bias")
        self.out_size = out_size

    def forward(self, ctx: Context, x: Tensor) -> Tensor:
        return LinearFun.forward(ctx, x, self.weights.value, self.bias.value)

    def backward(self, ctx: Context, grad_output: Tensor) -> Tuple[Tensor, List[Tensor]]:
        grad_input, grad_weights, grad_bias = LinearFun.backward(ctx, grad_output)
        return grad_input, [grad_weights, grad_bias]

    def __repr__(self) -> str:
        return f"Linear({self.weights.value.shape[0]}, {self.out_size})"


class ReLU(Module):
    def forward(self, ctx: Context, x: Tensor) -> Tensor:
        return ReLUFun.forward(ctx, x)

    def backward(self, ctx: Context, grad_output: Tensor) -> Tuple[Tensor, List[Tensor]]:
        return ReLUFun.backward(ctx, grad_output)[0], []


class Flatten(Module):
    def forward(self, ctx: Context, x: Tensor) -> Tensor:
        return FlattenFun.forward(ctx, x)

    def backward(self, ctx: Context, grad_output: Tensor) -> Tuple[Tensor, List[Tensor]]:
        return FlattenFun.backward(ctx, grad_output)[0], []


def td_loss(q: Tensor, actions: npt.NDArray[np.int64], targets: Tensor) -> Tuple[float, Tensor]:
    r"""
    Mean squared TD error over a batch.

    $L = \frac{1}{B} \sum_b (Q(s_b)[a_b] - y_b)^2$

    Args:
        q : batch x actions Q-values
        actions : batch action indices
        targets : batch TD targets

    Returns:
        The loss and its derivative with respect to `q` (zero outside the taken actions).

    Raises:
        NumericError : naming the first batch item with a non-finite residual.
    """
    batch = q.shape[0]
    check_shape("td_loss actions", (batch,), actions.shape)
    check_shape("td_loss targets", (batch,), targets.shape)
    rows = np.arange(batch)
    residual = q[rows, actions].astype(np.float64) - targets
    check_finite("td_loss", residual)
    loss = float(np.mean(residual * residual))
    grad = np.zeros_like(q)
    grad[rows, actions] = 2.0 * residual / batch
    return loss, grad

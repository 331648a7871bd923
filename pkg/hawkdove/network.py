from __future__ import annotations

import copy
from typing import List, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from .autodiff import Context
from .fast_conv import conv_output_size
from .module import Module
from .nn import Conv2d, Flatten, Linear, ReLU, td_loss
from .tensor_data import ShapeError, Tensor, check_finite, check_shape

N_ACTIONS = 5

ConvSpec = Tuple[int, int, int]
"(channels, kernel, stride) of one convolution layer"

DEFAULT_CONV: Tuple[ConvSpec, ...] = ((8, 3, 1), (16, 3, 2))
DEFAULT_HIDDEN: Tuple[int, ...] = (128,)


class QNetwork(Module):
    """
    Convolutional Q-function: `conv -> ReLU` blocks, `Flatten`, then
    `Linear -> ReLU` hidden layers and a final `Linear` with one output per move.

    Layers are registered as children `layer0, layer1, ...` so that
    `named_parameters()` lists parameters in evaluation order.
    """

    def __init__(
        self,
        input_shape: Sequence[int],
        rng: np.random.Generator,
        conv: Sequence[ConvSpec] = DEFAULT_CONV,
        hidden: Sequence[int] = DEFAULT_HIDDEN,
        n_actions: int = N_ACTIONS,
        dtype: npt.DTypeLike = np.float32,
    ):
        super().__init__()
        self.input_shape = tuple(int(s) for s in input_shape)
        self.dtype = np.dtype(dtype)
        self.n_actions = n_actions
        channels, height, width = self.input_shape

        layers: List[Module] = []
        for out_channels, kernel, stride in conv:
            if height < kernel or width < kernel:
                raise ShapeError("QNetwork conv chain", (kernel, kernel), (height, width))
            layers.append(Conv2d(channels, out_channels, kernel, stride, rng, dtype))
            layers.append(ReLU())
            channels = out_channels
            height = conv_output_size(height, kernel, stride)
            width = conv_output_size(width, kernel, stride)
        layers.append(Flatten())
        features = channels * height * width
        for size in hidden:
            layers.append(Linear(features, size, rng, dtype))
            layers.append(ReLU())
            features = size
        layers.append(Linear(features, n_actions, rng, dtype))

        self.depth = len(layers)
        for i, layer in enumerate(layers):
            setattr(self, f"layer{i}", layer)

    @property
    def layers(self) -> List[Module]:
        return self.modules()  # type: ignore[return-value]

    def forward(self, ctx: Context, x: Tensor) -> Tensor:
        """
        Args:
            ctx : receives one child context per layer (the tape)
            x : batch x (3 * frame_stack) x height x width

        Returns:
            batch x n_actions Q-values
        """
        check_shape("QNetwork input", (None, *self.input_shape), x.shape)
        out = np.asarray(x, dtype=self.dtype)
        tape = []
        for layer in self.layers:
            layer_ctx = Context(no_grad=ctx.no_grad)
            out = layer.forward(layer_ctx, out)
            tape.append(layer_ctx)
        check_finite("QNetwork output", out)
        ctx.save_for_backward(*tape)
        return out

    def backward(self, ctx: Context, grad_output: Tensor) -> Tuple[Tensor, List[Tensor]]:
        "Replay the tape in reverse; gradients come back in `parameters()` order."
        tape = ctx.saved_values
        if len(tape) != self.depth:
            raise RuntimeError("QNetwork.backward needs a context filled by forward")
        grad = grad_output
        per_layer: List[List[Tensor]] = []
        for layer, layer_ctx in zip(reversed(self.layers), reversed(tape)):
            grad, param_grads = layer.backward(layer_ctx, grad)
            per_layer.append(param_grads)
        grads = [g for param_grads in reversed(per_layer) for g in param_grads]
        return grad, grads

    def copy_from(self, other: QNetwork) -> None:
        "Overwrite every parameter with a copy of `other`'s."
        for (_, mine), (_, theirs) in zip(self.named_parameters(), other.named_parameters()):
            mine.update(theirs.value.copy())

    def clone(self) -> QNetwork:
        return copy.deepcopy(self)

    def parameter_values(self) -> List[Tensor]:
        return [p.value for p in self.parameters()]


def q_values(net: QNetwork, obs: Tensor) -> Tensor:
    "Inference-only forward pass."
    return net.forward(Context(no_grad=True), obs)


def td_backward(
    net: QNetwork, obs: Tensor, actions: npt.NDArray[np.int64], targets: Tensor
) -> Tuple[float, List[Tensor]]:
    """
    Gradient of the mean squared TD error `mean((Q(obs)[a] - y)^2)`.

    Returns:
        The loss and one gradient per parameter, same shapes and order as
        `net.parameters()`.

    Raises:
        ShapeError : if `obs` does not match the network input.
        NumericError : with the index of a batch item whose residual is not finite.
    """
    ctx = Context()
    q = net.forward(ctx, obs)
    loss, grad_q = td_loss(q, np.asarray(actions, dtype=np.int64), np.asarray(targets, np.float64))
    _, grads = net.backward(ctx, grad_q)
    return loss, grads

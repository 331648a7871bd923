"Gradient-check helpers shared by the numerics tests."
from __future__ import annotations

from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from .autodiff import Context, central_difference
from .module import Module, Parameter
from .network import QNetwork, td_backward
from .nn import td_loss
from .tensor_data import Tensor


def relative_error(analytic: float, numeric: float, floor: float = 1e-4) -> float:
    "`|a - n| / max(|a|, |n|, floor)`; the floor keeps near-zero coordinates comparable."
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def away_from_kink(x: Tensor, margin: float = 0.05) -> Tensor:
    "Push values away from 0 so ReLU stays differentiable within a finite-difference step."
    return np.where(x >= 0, x + margin, x - margin)


def _sample_indices(
    shape: Tuple[int, ...], rng: Optional[np.random.Generator], limit: Optional[int]
) -> Iterable[Tuple[int, ...]]:
    indices = list(np.ndindex(*shape))
    if limit is None or rng is None or len(indices) <= limit:
        return indices
    chosen = rng.choice(len(indices), size=limit, replace=False)
    return [indices[i] for i in sorted(chosen)]


def _param_error(
    f: Callable[[], float],
    param: Parameter,
    analytic: Tensor,
    epsilon: float,
    rng: Optional[np.random.Generator],
    limit: Optional[int],
) -> float:
    original = param.value

    def g(v: Tensor) -> float:
        param.value = v
        return f()

    worst = 0.0
    try:
        for idx in _sample_indices(original.shape, rng, limit):
            numeric = central_difference(g, original, idx, epsilon)
            worst = max(worst, relative_error(float(analytic[idx]), numeric))
    finally:
        param.value = original
    return worst


def check_layer_gradients(
    layer: Module, x: Tensor, probe: Tensor, epsilon: float = 1e-3
) -> List[float]:
    """
    Compare `layer.backward` against central differences of `sum(layer(x) * probe)`.

    Returns:
        The worst relative error for the input, then for each parameter.
    """

    def loss_of_input(v: Tensor) -> float:
        return float(np.sum(layer.forward(Context(no_grad=True), v) * probe))

    def loss() -> float:
        return loss_of_input(x)

    ctx = Context()
    layer.forward(ctx, x)
    grad_input, grad_params = layer.backward(ctx, probe)

    errors = [
        max(
            relative_error(
                float(grad_input[idx]), central_difference(loss_of_input, x, idx, epsilon)
            )
            for idx in np.ndindex(*x.shape)
        )
    ]
    for param, grad in zip(layer.parameters(), grad_params):
        errors.append(_param_error(loss, param, grad, epsilon, None, None))
    return errors


def check_network_gradients(
    net: QNetwork,
    obs: Tensor,
    actions: npt.NDArray[np.int64],
    targets: Tensor,
    rng: np.random.Generator,
    epsilon: float = 1e-6,
    per_param: int = 20,
) -> float:
    "Worst relative error of `td_backward` over up to `per_param` sampled coordinates per tensor."

    def loss() -> float:
        q = net.forward(Context(no_grad=True), obs)
        return td_loss(q, actions, targets)[0]

    _, grads = td_backward(net, obs, actions, targets)
    return max(
        _param_error(loss, param, grad, epsilon, rng, per_param)
        for param, grad in zip(net.parameters(), grads)
    )

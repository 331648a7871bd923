from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .autodiff import Context
from .tensor_data import Tensor


class Module:
    """
    Modules form a tree that store parameters and other
    submodules. They make up the basis of neural network stacks.

    Attributes:
        _modules : Storage of the child modules, in registration order
        _parameters : Storage of the module's parameters, in registration order
    """

    _modules: Dict[str, Module]
    _parameters: Dict[str, Parameter]

    def __init__(self) -> None:
        self._modules = {}
        self._parameters = {}

    def modules(self) -> Sequence[Module]:
        "Return the direct child modules of this module."
        m: Dict[str, Module] = self.__dict__["_modules"]
        return list(m.values())

    def named_parameters(self) -> Sequence[Tuple[str, Parameter]]:
        """
        Collect all the parameters of this module and its descendents.

        Returns:
            The dotted name and `Parameter` of each parameter, depth first.
        """
        name_params: List[Tuple[str, Parameter]] = list(self._parameters.items())
        for name_module, module in self._modules.items():
            for name, param in module.named_parameters():
                name_params.append((name_module + "." + name, param))
        return name_params

    def parameters(self) -> Sequence[Parameter]:
        "Enumerate over all the parameters of this module and its descendents."
        return [param for _, param in self.named_parameters()]

    def __setattr__(self, key: str, val: Any) -> None:
        if isinstance(val, Parameter):
            self.__dict__["_parameters"][key] = val
        elif isinstance(val, Module):
            self.__dict__["_modules"][key] = val
        else:
            super().__setattr__(key, val)

    def __getattr__(self, key: str) -> Any:
        params = self.__dict__.get("_parameters", {})
        if key in params:
            return params[key]
        modules = self.__dict__.get("_modules", {})
        if key in modules:
            return modules[key]
        raise AttributeError(key)

    def forward(self, ctx: Context, x: Tensor) -> Tensor:
        raise NotImplementedError

    def backward(self, ctx: Context, grad_output: Tensor) -> Tuple[Tensor, List[Tensor]]:
        """
        Args:
            ctx : the context filled by `forward`
            grad_output : derivative of the loss with respect to the output

        Returns:
            Input gradient and one gradient per own parameter, in `_parameters` order.
        """
        raise NotImplementedError

    def __repr__(self) -> str:
        def _addindent(s_: str, numSpaces: int) -> str:
            s2 = s_.split("\n")
            if len(s2) == 1:
                return s_
            first = s2.pop(0)
            s2 = [(numSpaces * " ") + line for line in s2]
            return first + "\n" + "\n".join(s2)

        child_lines = []
        for key, module in self._modules.items():
            child_lines.append("(" + key + "): " + _addindent(repr(module), 2))

        main_str = self.__class__.__name__ + "("
        if child_lines:
            main_str += "\n  " + "\n  ".join(child_lines) + "\n"
        return main_str + ")"


class Parameter:
    """
    A Parameter is a named array stored in a `Module`.
    """

    def __init__(self, x: Tensor, name: Optional[str] = None) -> None:
        self.value = x
        self.name = name

    def update(self, x: Tensor) -> None:
        "Replace the parameter value, keeping shape and dtype."
        if x.shape != self.value.shape:
            raise ValueError(f"Parameter {self.name}: shape {x.shape} != {self.value.shape}")
        self.value = np.asarray(x, dtype=self.value.dtype)

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.value.shape})"

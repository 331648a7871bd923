from __future__ import annotations

from typing import Tuple

from numba import njit, prange

from .autodiff import Context, Function
from .tensor_data import Shape, ShapeError, Storage, Strides, Tensor, TensorData, check_shape


def _tensor_matrix_multiply(
    out: Storage,
    out_shape: Shape,
    out_strides: Strides,
    a_storage: Storage,
    a_shape: Shape,
    a_strides: Strides,
    b_storage: Storage,
    b_shape: Shape,
    b_strides: Strides,
) -> None:
    """
    NUMBA matrix multiply ::

        for i:
          for j:
            for k:
              out[i, j] += a[i, k] * b[k, j]

    Operands may be permuted views (any strides). Each output cell is summed by
    one thread in `k` order, so the result does not depend on the thread count.

    Args:
        out (Storage): storage for `out` tensor
        out_shape (Shape): shape for `out` tensor
        out_strides (Strides): strides for `out` tensor
        a_storage (Storage): storage for `a` tensor
        a_shape (Shape): shape for `a` tensor
        a_strides (Strides): strides for `a` tensor
        b_storage (Storage): storage for `b` tensor
        b_shape (Shape): shape for `b` tensor
        b_strides (Strides): strides for `b` tensor

    Returns:
        None : Fills in `out`
    """
    rows = out_shape[0]
    cols = out_shape[1]
    inner = a_shape[1]
    for ordinal in prange(rows * cols):
        i = ordinal // cols
        j = ordinal - i * cols
        a_pos = i * a_strides[0]
        b_pos = j * b_strides[1]
        acc = 0.0
        for k in range(inner):
            acc += a_storage[a_pos + k * a_strides[1]] * b_storage[b_pos + k * b_strides[0]]
        out[i * out_strides[0] + j * out_strides[1]] = acc


tensor_matrix_multiply = njit(parallel=True)(_tensor_matrix_multiply)


def matrix_multiply(a: TensorData, b: TensorData) -> Tensor:
    "2D product of two (possibly permuted) layouts, returned as a row-major array."
    if a.dims != 2 or b.dims != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matrix_multiply", (a.shape[0], a.shape[1]), b.shape)
    out = TensorData.zeros((a.shape[0], b.shape[1]), a.tuple()[0].dtype)
    tensor_matrix_multiply(*out.tuple(), *a.tuple(), *b.tuple())
    return out.to_array()


class LinearFun(Function):
    @staticmethod
    def forward(ctx: Context, input: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
        """
        Dense layer.

        Args:
            ctx : Context
            input : batch x in_size
            weights : in_size x out_size
            bias : out_size

        Returns:
            batch x out_size
        """
        in_size, out_size = weights.shape
        check_shape("Linear input", (None, in_size), input.shape)
        check_shape("Linear bias", (out_size,), bias.shape)
        ctx.save_for_backward(input, weights)
        out = matrix_multiply(TensorData.from_array(input), TensorData.from_array(weights))
        return out + bias

    @staticmethod
    def backward(ctx: Context, grad_output: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
        input, weights = ctx.saved_values
        check_shape("Linear grad_output", (input.shape[0], weights.shape[1]), grad_output.shape)
        grad = TensorData.from_array(grad_output)
        grad_input = matrix_multiply(grad, TensorData.from_array(weights).permute(1, 0))
        grad_weights = matrix_multiply(TensorData.from_array(input).permute(1, 0), grad)
        grad_bias = grad_output.sum(axis=0)
        return grad_input, grad_weights, grad_bias

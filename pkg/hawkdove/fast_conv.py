from typing import Tuple

import numpy as np
from numba import njit, prange

from .autodiff import Context, Function
from .tensor_data import (
    Shape,
    ShapeError,
    Storage,
    Strides,
    Tensor,
    TensorData,
    check_shape,
    index_to_position,
    to_index,
)

# This code will JIT compile fast versions of the tensor_data functions.
to_index = njit(inline="always")(to_index)
index_to_position = njit(inline="always")(index_to_position)


def conv_output_size(size: int, kernel: int, stride: int) -> int:
    "Output length of an unpadded convolution."
    return (size - kernel) // stride + 1


def _tensor_conv2d(
    out: Storage,
    out_shape: Shape,
    out_strides: Strides,
    out_size: int,
    input: Storage,
    input_shape: Shape,
    input_strides: Strides,
    weight: Storage,
    weight_shape: Shape,
    weight_strides: Strides,
    stride: int,
) -> None:
    """
    2D Convolution implementation (no padding).

    Given input tensor of

       `batch, in_channels, height, width`

    and weight tensor

       `out_channels, in_channels, k_height, k_width`

    Computes output of

       `batch, out_channels, (height - k_height) // stride + 1, (width - k_width) // stride + 1`

    Args:
        out (Storage): storage for `out` tensor.
        out_shape (Shape): shape for `out` tensor.
        out_strides (Strides): strides for `out` tensor.
        out_size (int): size of the `out` tensor.
        input (Storage): storage for `input` tensor.
        input_shape (Shape): shape for `input` tensor.
        input_strides (Strides): strides for `input` tensor.
        weight (Storage): storage for `weight` tensor.
        weight_shape (Shape): shape for `weight` tensor.
        weight_strides (Strides): strides for `weight` tensor.
        stride (int): step between two receptive fields
    """
    in_channels = input_shape[1]
    kh = weight_shape[2]
    kw = weight_shape[3]

    s1 = input_strides
    s2 = weight_strides
    # inners
    s10, s11, s12, s13 = s1[0], s1[1], s1[2], s1[3]
    s20, s21, s22, s23 = s2[0], s2[1], s2[2], s2[3]

    for ordinal in prange(out_size):
        out_index = np.empty(4, np.int32)
        to_index(ordinal, out_shape, out_index)
        b = out_index[0]
        o = out_index[1]
        top = out_index[2] * stride
        left = out_index[3] * stride
        acc = 0.0
        for c in range(in_channels):
            for di in range(kh):
                for dj in range(kw):
                    acc += (
                        input[b * s10 + c * s11 + (top + di) * s12 + (left + dj) * s13]
                        * weight[o * s20 + c * s21 + di * s22 + dj * s23]
                    )
        out[index_to_position(out_index, out_strides)] = acc


def _tensor_conv2d_grad_weight(
    out: Storage,
    out_shape: Shape,
    out_strides: Strides,
    out_size: int,
    input: Storage,
    input_shape: Shape,
    input_strides: Strides,
    grad: Storage,
    grad_shape: Shape,
    grad_strides: Strides,
    stride: int,
) -> None:
    """
    Weight gradient of `_tensor_conv2d` ::

        out[o, c, di, dj] = sum_{b, i, j} grad[b, o, i, j] * input[b, c, i * stride + di, j * stride + dj]
    """
    batch = input_shape[0]
    out_h = grad_shape[2]
    out_w = grad_shape[3]
    s1 = input_strides
    s2 = grad_strides
    s10, s11, s12, s13 = s1[0], s1[1], s1[2], s1[3]
    s20, s21, s22, s23 = s2[0], s2[1], s2[2], s2[3]

    for ordinal in prange(out_size):
        out_index = np.empty(4, np.int32)
        to_index(ordinal, out_shape, out_index)
        o = out_index[0]
        c = out_index[1]
        di = out_index[2]
        dj = out_index[3]
        acc = 0.0
        for b in range(batch):
            for i in range(out_h):
                for j in range(out_w):
                    acc += (
                        grad[b * s20 + o * s21 + i * s22 + j * s23]
                        * input[b * s10 + c * s11 + (i * stride + di) * s12 + (j * stride + dj) * s13]
                    )
        out[index_to_position(out_index, out_strides)] = acc


def _tensor_conv2d_grad_input(
    out: Storage,
    out_shape: Shape,
    out_strides: Strides,
    out_size: int,
    grad: Storage,
    grad_shape: Shape,
    grad_strides: Strides,
    weight: Storage,
    weight_shape: Shape,
    weight_strides: Strides,
    stride: int,
) -> None:
    """
    Input gradient of `_tensor_conv2d`: every input cell gathers the output cells
    whose receptive field covers it.
    """
    out_channels = weight_shape[0]
    kh = weight_shape[2]
    kw = weight_shape[3]
    out_h = grad_shape[2]
    out_w = grad_shape[3]
    s1 = grad_strides
    s2 = weight_strides
    s10, s11, s12, s13 = s1[0], s1[1], s1[2], s1[3]
    s20, s21, s22, s23 = s2[0], s2[1], s2[2], s2[3]

    for ordinal in prange(out_size):
        out_index = np.empty(4, np.int32)
        to_index(ordinal, out_shape, out_index)
        b = out_index[0]
        c = out_index[1]
        y = out_index[2]
        x = out_index[3]
        acc = 0.0
        for o in range(out_channels):
            for di in range(kh):
                row = y - di
                if row < 0 or row % stride != 0 or row // stride >= out_h:
                    continue
                i = row // stride
                for dj in range(kw):
                    col = x - dj
                    if col < 0 or col % stride != 0 or col // stride >= out_w:
                        continue
                    j = col // stride
                    acc += (
                        grad[b * s10 + o * s11 + i * s12 + j * s13]
                        * weight[o * s20 + c * s21 + di * s22 + dj * s23]
                    )
        out[index_to_position(out_index, out_strides)] = acc


tensor_conv2d = njit(parallel=True)(_tensor_conv2d)
tensor_conv2d_grad_weight = njit(parallel=True)(_tensor_conv2d_grad_weight)
tensor_conv2d_grad_input = njit(parallel=True)(_tensor_conv2d_grad_input)


class Conv2dFun(Function):
    @staticmethod
    def forward(
        ctx: Context, input: Tensor, weight: Tensor, bias: Tensor, stride: int = 1
    ) -> Tensor:
        """
        Compute a 2D Convolution

        Args:
            ctx : Context
            input : batch x in_channel x h x w
            weight  : out_channel x in_channel x kh x kw
            bias : out_channel
            stride : step between receptive fields

        Returns:
            batch x out_channel x out_h x out_w
        """
        out_channels, in_channels, kh, kw = weight.shape
        check_shape("Conv2d input", (None, in_channels, None, None), input.shape)
        check_shape("Conv2d bias", (out_channels,), bias.shape)
        batch, _, h, w = input.shape
        if h < kh or w < kw:
            raise ShapeError("Conv2d kernel", (kh, kw), (h, w))
        ctx.save_for_backward(input, weight, stride)

        out_shape = (
            batch,
            out_channels,
            conv_output_size(h, kh, stride),
            conv_output_size(w, kw, stride),
        )
        output = TensorData.zeros(out_shape, input.dtype)
        tensor_conv2d(
            *output.tuple(),
            output.size,
            *TensorData.from_array(input).tuple(),
            *TensorData.from_array(weight).tuple(),
            stride,
        )
        return output.to_array() + bias.reshape(1, out_channels, 1, 1)

    @staticmethod
    def backward(ctx: Context, grad_output: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
        input, weight, stride = ctx.saved_values
        batch, in_channels, h, w = input.shape
        out_channels = weight.shape[0]
        check_shape(
            "Conv2d grad_output",
            (
                batch,
                out_channels,
                conv_output_size(h, weight.shape[2], stride),
                conv_output_size(w, weight.shape[3], stride),
            ),
            grad_output.shape,
        )
        grad = TensorData.from_array(grad_output)

        grad_weight = TensorData.zeros(weight.shape, weight.dtype)
        tensor_conv2d_grad_weight(
            *grad_weight.tuple(),
            grad_weight.size,
            *TensorData.from_array(input).tuple(),
            *grad.tuple(),
            stride,
        )

        grad_input = TensorData.zeros(input.shape, input.dtype)
        tensor_conv2d_grad_input(
            *grad_input.tuple(),
            grad_input.size,
            *grad.tuple(),
            *TensorData.from_array(weight).tuple(),
            stride,
        )
        grad_bias = grad_output.sum(axis=(0, 2, 3))
        return grad_input.to_array(), grad_weight.to_array(), grad_bias


conv2d = Conv2dFun.apply

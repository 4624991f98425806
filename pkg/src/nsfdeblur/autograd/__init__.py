"""Differentiable tensor engine: ops, layers, gradient checking, file IO."""

from .conv import conv2d, conv2d_im2col, conv2d_transposed
from .gradcheck import grad_check
from .module import (Conv2d, ConvTranspose2d, LayerNorm, Linear, Module,
                     ResBlock, zero_module)
from .patches import fold, patch_count, patch_grid, resize_bilinear, unfold
from .serialize import (load_checkpoint, load_tensor, read_tensor_record,
                        save_checkpoint, save_tensor, write_tensor_record)
from .tensor import (Tensor, abs_, add, astype, check_finite, clip, concat,
                     concat_channels, div, exp, gather_rows, gelu, grad_enabled,
                     layer_norm, log, matmul, max_, mean, mul, neg, no_grad,
                     pad2d, reshape, roll, scale, sigmoid, softmax, sqrt, sub,
                     sum_, tanh, transpose)

__all__ = [
    "Tensor", "no_grad", "grad_enabled", "grad_check",
    "add", "sub", "mul", "div", "neg", "scale", "abs_", "clip", "astype",
    "sigmoid", "tanh", "gelu", "exp", "log", "sqrt", "check_finite",
    "matmul", "sum_", "mean", "max_", "reshape", "transpose", "concat",
    "concat_channels", "pad2d", "roll", "gather_rows", "softmax", "layer_norm",
    "conv2d", "conv2d_transposed", "conv2d_im2col",
    "unfold", "fold", "patch_count", "patch_grid", "resize_bilinear",
    "Module", "Linear", "Conv2d", "ConvTranspose2d", "LayerNorm", "ResBlock",
    "zero_module",
    "save_tensor", "load_tensor", "save_checkpoint", "load_checkpoint",
    "write_tensor_record", "read_tensor_record",
]

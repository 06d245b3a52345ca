"""Named wrappers around apply_primitive, the vocabulary models and meta-algorithms are written in."""
from typing import Sequence, Tuple

import numpy as np

from pymodaq_plugins_hypermaml.autodiff.primitives import apply_primitive
from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor


def add(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive('add', (a, b))


def mul(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive('mul', (a, b))


def scale(x: Tensor, factor: float) -> Tensor:
    return apply_primitive('scale', (x,), factor=float(factor))


def pow(x: Tensor, exponent: float) -> Tensor:
    return apply_primitive('pow', (x,), exponent=float(exponent))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive('matmul', (a, b))


def transpose(x: Tensor) -> Tensor:
    return apply_primitive('transpose', (x,))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return apply_primitive('reshape', (x,), shape=tuple(int(s) for s in shape))


def relu(x: Tensor) -> Tensor:
    return apply_primitive('relu', (x,))


def conv2d(x: Tensor, w: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    return apply_primitive('conv2d', (x, w), stride=int(stride), padding=int(padding))


def maxpool2x2(x: Tensor) -> Tensor:
    return apply_primitive('maxpool2x2', (x,))


def global_avg_pool(x: Tensor) -> Tensor:
    return apply_primitive('global_avg_pool', (x,))


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    return apply_primitive('batch_norm', (x, gamma, beta), eps=float(eps))


def concat_last_axis(*tensors: Tensor) -> Tensor:
    return apply_primitive('concat_last_axis', tensors)


def mean_rows(x: Tensor, groups, n_groups: int) -> Tensor:
    return apply_primitive('mean_rows', (x,), groups=np.asarray(groups, dtype=np.int64), n_groups=int(n_groups))


def softmax(x: Tensor) -> Tensor:
    return apply_primitive('softmax', (x,))


def softmax_xent(logits: Tensor, labels) -> Tensor:
    return apply_primitive('softmax_xent', (logits,), labels=np.asarray(labels, dtype=np.int64))


def sum_to_shape(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    return apply_primitive('sum_to_shape', (x,), shape=tuple(shape))


def broadcast_to(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    return apply_primitive('broadcast_to', (x,), shape=tuple(shape))


def slice_last_axis(x: Tensor, start: int, stop: int) -> Tensor:
    return apply_primitive('slice_last_axis', (x,), start=int(start), stop=int(stop))


def pad_last_axis(x: Tensor, before: int, total: int) -> Tensor:
    return apply_primitive('pad_last_axis', (x,), before=int(before), total=int(total))


def total(x: Tensor) -> Tensor:
    """Sum of all elements as a scalar tensor."""
    return reshape(sum_to_shape(x, (1,) * x.ndim), ())

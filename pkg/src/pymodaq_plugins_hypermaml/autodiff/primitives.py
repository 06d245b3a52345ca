"""Primitive kinds with forward kernels and backward rules.

Backward rules are written with primitives themselves, so running them on a
recording tape (create_graph) yields gradients that can be differentiated again.
Saved arrays (relu masks, pooling indices) are treated as constants, which makes
the second derivative of relu and maxpool zero almost everywhere.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import GradientError, NonFiniteError, ShapeError

PUBLIC_KINDS = ('matmul', 'add', 'scale', 'relu', 'conv2d', 'maxpool2x2', 'global_avg_pool',
                'batch_norm', 'concat_last_axis', 'mean_rows', 'softmax_xent', 'reshape')

PRIMITIVES: Dict[str, 'Primitive'] = {}


@dataclass
class Context:
    inputs: Tuple[Tensor, ...]
    attrs: Dict[str, Any]
    saved: Dict[str, Any] = field(default_factory=dict)


def register(cls):
    PRIMITIVES[cls.kind] = cls()
    return cls


def apply_primitive(kind: str, inputs: Sequence, **attrs) -> Tensor:
    """Run primitive ``kind`` on ``inputs`` and record it on their tape if it is recording."""
    try:
        primitive = PRIMITIVES[kind]
    except KeyError:
        raise GradientError(f"unknown primitive kind {kind!r}") from None
    tensors = tuple(x if isinstance(x, Tensor) else Tensor(x) for x in inputs)
    tape = None
    for tensor in tensors:
        if tensor.node is None:
            continue
        if tape is not None and tensor.tape is not tape:
            raise GradientError(f"{kind}: operands live on different tapes")
        tape = tensor.tape
    arrays = [t.data for t in tensors]
    primitive.check(arrays, attrs)
    out, saved = primitive.forward(arrays, attrs)
    out = np.asarray(out)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"{kind} produced non-finite values")
    result = Tensor(out)
    if tape is not None and tape.recording:
        ctx = Context(tensors, attrs, saved)
        result.node = tape.record(kind, tuple(t.node for t in tensors), ctx)
        result.tape = tape
    return result


def _op(kind, *inputs, **attrs) -> Tensor:
    return apply_primitive(kind, inputs, **attrs)


def _const(value, like: Tensor) -> Tensor:
    return Tensor(np.asarray(value, dtype=like.dtype))


def _reduce_to(grad: Tensor, shape: Tuple[int, ...]) -> Tensor:
    if grad.shape == tuple(shape):
        return grad
    return _op('sum_to_shape', grad, shape=tuple(shape))


def _sum_to(x: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    lead = x.ndim - len(shape)
    axes = tuple(range(lead)) + tuple(i + lead for i, size in enumerate(shape)
                                      if size == 1 and x.shape[i + lead] != 1)
    out = x.sum(axis=axes, keepdims=True) if axes else x
    return out.reshape(shape)


class Primitive:
    kind = ''
    n_inputs: Optional[int] = 1

    def check(self, arrays, attrs):
        if self.n_inputs is not None and len(arrays) != self.n_inputs:
            raise ShapeError(f"{self.kind} expects {self.n_inputs} inputs, got {len(arrays)}")

    def forward(self, arrays, attrs) -> Tuple[np.ndarray, dict]:
        raise NotImplementedError

    def backward(self, ctx: Context, grad: Tensor, needs: Tuple[bool, ...]) -> Sequence[Optional[Tensor]]:
        raise NotImplementedError


# elementwise and shape primitives

@register
class Add(Primitive):
    kind = 'add'
    n_inputs = 2

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        try:
            np.broadcast_shapes(arrays[0].shape, arrays[1].shape)
        except ValueError:
            raise ShapeError(f"add: shapes {arrays[0].shape} and {arrays[1].shape} do not broadcast") from None

    def forward(self, arrays, attrs):
        return arrays[0] + arrays[1], {}

    def backward(self, ctx, grad, needs):
        a, b = ctx.inputs
        return (_reduce_to(grad, a.shape) if needs[0] else None,
                _reduce_to(grad, b.shape) if needs[1] else None)


@register
class Mul(Add):
    kind = 'mul'

    def forward(self, arrays, attrs):
        return arrays[0] * arrays[1], {}

    def backward(self, ctx, grad, needs):
        a, b = ctx.inputs
        return (_reduce_to(_op('mul', grad, b), a.shape) if needs[0] else None,
                _reduce_to(_op('mul', grad, a), b.shape) if needs[1] else None)


@register
class Scale(Primitive):
    kind = 'scale'

    def forward(self, arrays, attrs):
        x = arrays[0]
        return x * np.asarray(attrs['factor'], dtype=x.dtype), {}

    def backward(self, ctx, grad, needs):
        return (_op('scale', grad, factor=ctx.attrs['factor']),)


@register
class Pow(Primitive):
    kind = 'pow'

    def forward(self, arrays, attrs):
        x = arrays[0]
        with np.errstate(all='ignore'):
            return np.power(x, np.asarray(attrs['exponent'], dtype=x.dtype)), {}

    def backward(self, ctx, grad, needs):
        x, = ctx.inputs
        exponent = ctx.attrs['exponent']
        local = _op('scale', _op('pow', x, exponent=exponent - 1.0), factor=exponent)
        return (_op('mul', grad, local),)


@register
class Relu(Primitive):
    kind = 'relu'

    def forward(self, arrays, attrs):
        x = arrays[0]
        mask = (x > 0).astype(x.dtype)
        return np.where(x > 0, x, np.zeros_like(x)), {'mask': mask}

    def backward(self, ctx, grad, needs):
        return (_op('mul', grad, _const(ctx.saved['mask'], grad)),)


@register
class Reshape(Primitive):
    kind = 'reshape'

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        shape = tuple(attrs['shape'])
        known = int(np.prod([s for s in shape if s != -1]))
        size = arrays[0].size
        if (-1 not in shape and known != size) or (-1 in shape and (known == 0 or size % known)):
            raise ShapeError(f"reshape: cannot reshape {arrays[0].shape} into {shape}")

    def forward(self, arrays, attrs):
        x = arrays[0]
        return x.reshape(tuple(attrs['shape'])), {'shape': x.shape}

    def backward(self, ctx, grad, needs):
        return (_op('reshape', grad, shape=ctx.saved['shape']),)


@register
class Transpose(Primitive):
    kind = 'transpose'

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        if arrays[0].ndim != 2:
            raise ShapeError(f"transpose: expected a matrix, got shape {arrays[0].shape}")

    def forward(self, arrays, attrs):
        return np.ascontiguousarray(arrays[0].T), {}

    def backward(self, ctx, grad, needs):
        return (_op('transpose', grad),)


@register
class SumToShape(Primitive):
    kind = 'sum_to_shape'

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        shape = tuple(attrs['shape'])
        try:
            ok = np.broadcast_shapes(shape, arrays[0].shape) == arrays[0].shape
        except ValueError:
            ok = False
        if not ok:
            raise ShapeError(f"sum_to_shape: {arrays[0].shape} cannot be reduced to {shape}")

    def forward(self, arrays, attrs):
        return _sum_to(arrays[0], tuple(attrs['shape'])), {}

    def backward(self, ctx, grad, needs):
        return (_op('broadcast_to', grad, shape=ctx.inputs[0].shape),)


@register
class BroadcastTo(Primitive):
    kind = 'broadcast_to'

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        try:
            np.broadcast_to(arrays[0], tuple(attrs['shape']))
        except ValueError:
            raise ShapeError(f"broadcast_to: {arrays[0].shape} does not broadcast to "
                             f"{tuple(attrs['shape'])}") from None

    def forward(self, arrays, attrs):
        return np.array(np.broadcast_to(arrays[0], tuple(attrs['shape']))), {}

    def backward(self, ctx, grad, needs):
        return (_op('sum_to_shape', grad, shape=ctx.inputs[0].shape),)


@register
class SliceLastAxis(Primitive):
    kind = 'slice_last_axis'

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        width = arrays[0].shape[-1] if arrays[0].ndim else 0
        if not 0 <= attrs['start'] < attrs['stop'] <= width:
            raise ShapeError(f"slice_last_axis: [{attrs['start']}:{attrs['stop']}] out of range "
                             f"for shape {arrays[0].shape}")

    def forward(self, arrays, attrs):
        return np.array(arrays[0][..., attrs['start']:attrs['stop']]), {}

    def backward(self, ctx, grad, needs):
        return (_op('pad_last_axis', grad, before=ctx.attrs['start'], total=ctx.inputs[0].shape[-1]),)


@register
class PadLastAxis(Primitive):
    kind = 'pad_last_axis'

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        if attrs['before'] < 0 or attrs['before'] + arrays[0].shape[-1] > attrs['total']:
            raise ShapeError(f"pad_last_axis: shape {arrays[0].shape} does not fit at offset "
                             f"{attrs['before']} in width {attrs['total']}")

    def forward(self, arrays, attrs):
        x = arrays[0]
        out = np.zeros(x.shape[:-1] + (attrs['total'],), dtype=x.dtype)
        out[..., attrs['before']:attrs['before'] + x.shape[-1]] = x
        return out, {}

    def backward(self, ctx, grad, needs):
        start = ctx.attrs['before']
        return (_op('slice_last_axis', grad, start=start, stop=start + ctx.inputs[0].shape[-1]),)


@register
class ConcatLastAxis(Primitive):
    kind = 'concat_last_axis'
    n_inputs = None

    def check(self, arrays, attrs):
        if not arrays:
            raise ShapeError("concat_last_axis: nothing to concatenate")
        lead = arrays[0].shape[:-1]
        for array in arrays[1:]:
            if array.shape[:-1] != lead:
                raise ShapeError(f"concat_last_axis: shapes {arrays[0].shape} and {array.shape} differ "
                                 f"outside the last axis")

    def forward(self, arrays, attrs):
        return np.concatenate(arrays, axis=-1), {}

    def backward(self, ctx, grad, needs):
        grads = []
        start = 0
        for tensor, need in zip(ctx.inputs, needs):
            stop = start + tensor.shape[-1]
            grads.append(_op('slice_last_axis', grad, start=start, stop=stop) if need else None)
            start = stop
        return grads


# dense algebra

@register
class Matmul(Primitive):
    kind = 'matmul'
    n_inputs = 2

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        a, b = arrays
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} are not aligned")

    def forward(self, arrays, attrs):
        return arrays[0] @ arrays[1], {}

    def backward(self, ctx, grad, needs):
        a, b = ctx.inputs
        return (_op('matmul', grad, _op('transpose', b)) if needs[0] else None,
                _op('matmul', _op('transpose', a), grad) if needs[1] else None)


@register
class MeanRows(Primitive):
    """Per-group mean of matrix rows: row g of the output averages rows i with groups[i] == g."""
    kind = 'mean_rows'

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        x = arrays[0]
        groups = np.asarray(attrs['groups'])
        if x.ndim != 2 or groups.shape != (x.shape[0],):
            raise ShapeError(f"mean_rows: shapes {x.shape} and {groups.shape} do not match")
        counts = np.bincount(groups, minlength=attrs['n_groups'])
        if len(counts) != attrs['n_groups'] or np.any(counts == 0):
            raise ShapeError(f"mean_rows: every group in [0, {attrs['n_groups']}) needs at least one row")

    def forward(self, arrays, attrs):
        x = arrays[0]
        groups = np.asarray(attrs['groups'])
        onehot = (groups[None, :] == np.arange(attrs['n_groups'])[:, None]).astype(x.dtype)
        averaging = onehot / onehot.sum(axis=1, keepdims=True)
        return averaging @ x, {'averaging': averaging}

    def backward(self, ctx, grad, needs):
        return (_op('matmul', _const(ctx.saved['averaging'].T, grad), grad),)


@register
class Softmax(Primitive):
    kind = 'softmax'

    def forward(self, arrays, attrs):
        x = arrays[0]
        shifted = np.exp(x - x.max(axis=-1, keepdims=True))
        return shifted / shifted.sum(axis=-1, keepdims=True), {}

    def backward(self, ctx, grad, needs):
        x, = ctx.inputs
        probs = _op('softmax', x)
        weighted = _op('sum_to_shape', _op('mul', grad, probs), shape=x.shape[:-1] + (1,))
        return (_op('mul', probs, _op('add', grad, _op('scale', weighted, factor=-1.0))),)


@register
class SoftmaxXent(Primitive):
    """Mean cross-entropy of rows of logits against integer labels."""
    kind = 'softmax_xent'

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        logits = arrays[0]
        labels = np.asarray(attrs['labels'])
        if logits.ndim != 2 or labels.shape != (logits.shape[0],):
            raise ShapeError(f"softmax_xent: logits {logits.shape} and labels {labels.shape} do not match")
        if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
            raise ShapeError(f"softmax_xent: labels outside [0, {logits.shape[1]})")

    def forward(self, arrays, attrs):
        logits = arrays[0]
        labels = np.asarray(attrs['labels'])
        top = logits.max(axis=1, keepdims=True)
        lse = top[:, 0] + np.log(np.exp(logits - top).sum(axis=1))
        picked = logits[np.arange(len(labels)), labels]
        return np.asarray(np.mean(lse - picked), dtype=logits.dtype), {}

    def backward(self, ctx, grad, needs):
        logits, = ctx.inputs
        labels = np.asarray(ctx.attrs['labels'])
        onehot = np.zeros(logits.shape, dtype=logits.dtype)
        onehot[np.arange(len(labels)), labels] = 1
        diff = _op('add', _op('softmax', logits), _const(-onehot, logits))
        return (_op('mul', _op('scale', diff, factor=1.0 / len(labels)), grad),)


# convolutional primitives, NCHW layout

def _conv_windows(x: np.ndarray, kh: int, kw: int, stride: int, padding: int) -> np.ndarray:
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    return sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]


def _conv_out_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def _conv_forward(x, w, stride, padding):
    windows = _conv_windows(x, w.shape[2], w.shape[3], stride, padding)
    out = np.tensordot(windows, w, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def _conv_input_grad(grad, w, x_shape, stride, padding):
    n, c, h, wd = x_shape
    kh, kw = w.shape[2:]
    ho, wo = grad.shape[2:]
    cols = np.tensordot(grad, w, axes=([1], [0]))  # N, Ho, Wo, C, kh, kw
    padded = np.zeros((n, c, h + 2 * padding, wd + 2 * padding), dtype=grad.dtype)
    for i in range(kh):
        for j in range(kw):
            padded[:, :, i:i + stride * (ho - 1) + 1:stride, j:j + stride * (wo - 1) + 1:stride] += \
                cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return np.ascontiguousarray(padded[:, :, padding:padding + h, padding:padding + wd])


def _conv_weight_grad(x, grad, w_shape, stride, padding):
    windows = _conv_windows(x, w_shape[2], w_shape[3], stride, padding)
    return np.tensordot(grad, windows, axes=([0, 2, 3], [0, 2, 3]))


@register
class Conv2d(Primitive):
    kind = 'conv2d'
    n_inputs = 2

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        x, w = arrays
        if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
            raise ShapeError(f"conv2d: input {x.shape} and kernel {w.shape} do not conform")
        stride, padding = attrs.get('stride', 1), attrs.get('padding', 0)
        if min(_conv_out_size(x.shape[2], w.shape[2], stride, padding),
               _conv_out_size(x.shape[3], w.shape[3], stride, padding)) < 1:
            raise ShapeError(f"conv2d: kernel {w.shape} larger than padded input {x.shape}")

    def forward(self, arrays, attrs):
        return _conv_forward(arrays[0], arrays[1], attrs.get('stride', 1), attrs.get('padding', 0)), {}

    def backward(self, ctx, grad, needs):
        x, w = ctx.inputs
        geometry = dict(stride=ctx.attrs.get('stride', 1), padding=ctx.attrs.get('padding', 0))
        return (_op('conv2d_input_grad', grad, w, x_shape=x.shape, **geometry) if needs[0] else None,
                _op('conv2d_weight_grad', x, grad, w_shape=w.shape, **geometry) if needs[1] else None)


@register
class Conv2dInputGrad(Primitive):
    kind = 'conv2d_input_grad'
    n_inputs = 2

    def forward(self, arrays, attrs):
        grad, w = arrays
        return _conv_input_grad(grad, w, tuple(attrs['x_shape']), attrs['stride'], attrs['padding']), {}

    def backward(self, ctx, grad, needs):
        g, w = ctx.inputs
        geometry = dict(stride=ctx.attrs['stride'], padding=ctx.attrs['padding'])
        return (_op('conv2d', grad, w, **geometry) if needs[0] else None,
                _op('conv2d_weight_grad', grad, g, w_shape=w.shape, **geometry) if needs[1] else None)


@register
class Conv2dWeightGrad(Primitive):
    kind = 'conv2d_weight_grad'
    n_inputs = 2

    def forward(self, arrays, attrs):
        x, grad = arrays
        return _conv_weight_grad(x, grad, tuple(attrs['w_shape']), attrs['stride'], attrs['padding']), {}

    def backward(self, ctx, grad, needs):
        x, g = ctx.inputs
        geometry = dict(stride=ctx.attrs['stride'], padding=ctx.attrs['padding'])
        return (_op('conv2d_input_grad', g, grad, x_shape=x.shape, **geometry) if needs[0] else None,
                _op('conv2d', x, grad, **geometry) if needs[1] else None)


def _pool_windows(x: np.ndarray) -> np.ndarray:
    n, c, h, w = x.shape
    ho, wo = h // 2, w // 2
    cropped = x[:, :, :2 * ho, :2 * wo]
    return cropped.reshape(n, c, ho, 2, wo, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho, wo, 4)


def _pool_gather(x: np.ndarray, index: np.ndarray) -> np.ndarray:
    return np.take_along_axis(_pool_windows(x), index[..., None], axis=-1)[..., 0]


def _pool_scatter(grad: np.ndarray, index: np.ndarray, x_shape) -> np.ndarray:
    n, c, ho, wo = grad.shape
    windows = np.zeros((n, c, ho, wo, 4), dtype=grad.dtype)
    np.put_along_axis(windows, index[..., None], grad[..., None], axis=-1)
    out = np.zeros(tuple(x_shape), dtype=grad.dtype)
    out[:, :, :2 * ho, :2 * wo] = windows.reshape(n, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5) \
        .reshape(n, c, 2 * ho, 2 * wo)
    return out


@register
class MaxPool2x2(Primitive):
    """2x2 max pooling, stride 2, trailing odd row/column dropped. Ties go to the lowest window index."""
    kind = 'maxpool2x2'

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        x = arrays[0]
        if x.ndim != 4 or x.shape[2] < 2 or x.shape[3] < 2:
            raise ShapeError(f"maxpool2x2: expected N×C×H×W with H, W >= 2, got {x.shape}")

    def forward(self, arrays, attrs):
        x = arrays[0]
        index = _pool_windows(x).argmax(axis=-1)
        return _pool_gather(x, index), {'index': index}

    def backward(self, ctx, grad, needs):
        return (_op('unpool2x2', grad, index=ctx.saved['index'], x_shape=ctx.inputs[0].shape),)


@register
class Select2x2(Primitive):
    kind = 'select2x2'

    def forward(self, arrays, attrs):
        return _pool_gather(arrays[0], attrs['index']), {}

    def backward(self, ctx, grad, needs):
        return (_op('unpool2x2', grad, index=ctx.attrs['index'], x_shape=ctx.inputs[0].shape),)


@register
class Unpool2x2(Primitive):
    kind = 'unpool2x2'

    def forward(self, arrays, attrs):
        return _pool_scatter(arrays[0], attrs['index'], attrs['x_shape']), {}

    def backward(self, ctx, grad, needs):
        return (_op('select2x2', grad, index=ctx.attrs['index']),)


@register
class GlobalAvgPool(Primitive):
    kind = 'global_avg_pool'

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        if arrays[0].ndim != 4:
            raise ShapeError(f"global_avg_pool: expected N×C×H×W, got {arrays[0].shape}")

    def forward(self, arrays, attrs):
        return arrays[0].mean(axis=(2, 3)), {}

    def backward(self, ctx, grad, needs):
        x, = ctx.inputs
        n, c, h, w = x.shape
        spread = _op('broadcast_to', _op('reshape', grad, shape=(n, c, 1, 1)), shape=x.shape)
        return (_op('scale', spread, factor=1.0 / (h * w)),)


@register
class BatchNorm(Primitive):
    """Batch normalization over axis 1 using the statistics of the current batch."""
    kind = 'batch_norm'
    n_inputs = 3

    def check(self, arrays, attrs):
        super().check(arrays, attrs)
        x, gamma, beta = arrays
        if x.ndim not in (2, 4) or gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
            raise ShapeError(f"batch_norm: input {x.shape}, scale {gamma.shape} and shift {beta.shape} "
                             f"do not conform")
        if x.shape[0] < 2:
            raise ShapeError(f"batch_norm: batch dimension must be >= 2, got shape {x.shape}")

    @staticmethod
    def _axes(x):
        return (0,) if x.ndim == 2 else (0, 2, 3)

    @staticmethod
    def _keep(x):
        return (1, x.shape[1]) if x.ndim == 2 else (1, x.shape[1], 1, 1)

    def forward(self, arrays, attrs):
        x, gamma, beta = arrays
        axes, keep = self._axes(x), self._keep(x)
        eps = np.asarray(attrs.get('eps', 1e-5), dtype=x.dtype)
        centered = x - x.mean(axis=axes, keepdims=True)
        inv = 1.0 / np.sqrt((centered * centered).mean(axis=axes, keepdims=True) + eps)
        return gamma.reshape(keep) * (centered * inv) + beta.reshape(keep), {}

    def backward(self, ctx, grad, needs):
        x, gamma, beta = ctx.inputs
        keep = self._keep(x)
        count = x.size // x.shape[1]

        def mean(t):
            return _op('scale', _op('sum_to_shape', t, shape=keep), factor=1.0 / count)

        centered = _op('add', x, _op('scale', mean(x), factor=-1.0))
        var = mean(_op('mul', centered, centered))
        inv = _op('pow', _op('add', var, _const(ctx.attrs.get('eps', 1e-5), x)), exponent=-0.5)
        xhat = _op('mul', centered, inv)
        grads = [None, None, None]
        if needs[2]:
            grads[2] = _op('reshape', _op('sum_to_shape', grad, shape=keep), shape=beta.shape)
        if needs[1]:
            grads[1] = _op('reshape', _op('sum_to_shape', _op('mul', grad, xhat), shape=keep),
                           shape=gamma.shape)
        if needs[0]:
            inner = _op('add', _op('add', grad, _op('scale', mean(grad), factor=-1.0)),
                        _op('scale', _op('mul', xhat, mean(_op('mul', grad, xhat))), factor=-1.0))
            grads[0] = _op('mul', _op('mul', _op('reshape', gamma, shape=keep), inv), inner)
        return grads

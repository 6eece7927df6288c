# Copyright 2026 The spgnet developers.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

# http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Dense tensor core with reverse-mode automatic differentiation.

Values are numpy arrays wrapped in :class:`Tensor`. Operations are :class:`Function` subclasses; while a
:class:`ComputationTape` is active every operation whose inputs carry gradient state is appended to the tape,
and :meth:`ComputationTape.backward` walks the records once in reverse order.
"""

import logging
import threading

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import ShapeError


LOGGER = logging.getLogger(__name__)


DEFAULT_DTYPE = np.float32
NORM_EPS = 1e-5
BN_MOMENTUM = 0.1
LEAKY_SLOPE = 0.2


_STATE = threading.local()


def _tape_stack():
    stack = getattr(_STATE, "tapes", None)
    if stack is None:
        stack = _STATE.tapes = []
    return stack


def active_tape():
    """Return the innermost tape of the calling thread, or None."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor(object):
    """
    Dense array carrying optional gradient state.

    Most tensors are rank 4 (batch, channel, height, width); losses are rank 0.

    Attributes
    ----------
    data : numpy.ndarray
        The values, row-major.
    grad_enabled : bool
        Whether gradients flow into this value.
    grad : numpy.ndarray or None
        Accumulated gradient with the same dims as ``data``.
    record : TapeRecord or None
        The tape record that produced this value.
    """

    __array_priority__ = 100

    def __init__(self, data, grad_enabled=False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        array = np.asarray(data, dtype=dtype)
        if dtype is None and not np.issubdtype(array.dtype, np.floating):
            array = array.astype(DEFAULT_DTYPE)
        self.data = array
        self.grad_enabled = grad_enabled
        self.grad = None
        self.record = None

    @property
    def shape(self):
        return self.data.shape

    dims = shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data)

    def detach(self):
        """A new leaf sharing the values but cut from the tape."""
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self):
        self.grad = None

    def __add__(self, other):
        if isinstance(other, Tensor):
            return Add.apply(self, other)
        return Shift.apply(self, value=other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return Sub.apply(self, other)
        return Shift.apply(self, value=-other)

    def __rsub__(self, other):
        return Shift.apply(Scale.apply(self, factor=-1.0), value=other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return Mul.apply(self, other)
        return Scale.apply(self, factor=other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return Div.apply(self, other)
        return Scale.apply(self, factor=1.0 / other)

    def __neg__(self):
        return Scale.apply(self, factor=-1.0)

    def __repr__(self):
        return "Tensor(dims=%s, dtype=%s, grad_enabled=%s)" % (self.shape, self.dtype, self.grad_enabled)


def as_tensor(value, dtype=None):
    """Wrap ``value`` as a constant tensor unless it already is one."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


class TapeRecord(object):
    """One executed operation: the function object holds the saved activations."""

    __slots__ = ("index", "tape", "function", "inputs", "output")

    def __init__(self, index, tape, function, inputs, output):
        self.index = index
        self.tape = tape
        self.function = function
        self.inputs = inputs
        self.output = output


class ComputationTape(object):
    """
    Ordered record of differentiable operations.

    Use as a context manager; operations executed inside the ``with`` block on tensors with gradient state are
    recorded in execution order, which is a topological order of the graph.

    Examples
    --------
    >>> with ComputationTape() as tape:
    ...     loss = mean(square(w))
    >>> tape.backward(loss)
    """

    def __init__(self):
        self.records = []

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False

    def __len__(self):
        return len(self.records)

    def add(self, function, inputs, output):
        record = TapeRecord(len(self.records), self, function, inputs, output)
        output.record = record
        self.records.append(record)
        return record

    def _owns(self, tensor):
        return tensor.record is not None and tensor.record.tape is self

    def backward(self, loss, seed_grad=None):
        """
        Propagate d(loss)/d(value) to every leaf tensor with gradient state.

        Gradients accumulate into ``Tensor.grad`` of the leaves.

        Parameters
        ----------
        loss : Tensor
            Usually a scalar.
        seed_grad : numpy.ndarray, optional
            Gradient of the output; ones when omitted.
        """
        if seed_grad is None:
            seed_grad = np.ones_like(loss.data)
        if not self._owns(loss):
            if loss.grad_enabled:
                _accumulate(loss, seed_grad)
            return

        grads = {id(loss): seed_grad}
        leaves = {}
        for record in reversed(self.records):
            grad = grads.pop(id(record.output), None)
            if grad is None:
                continue
            input_grads = record.function.backward(grad)
            for tensor, input_grad in zip(record.inputs, input_grads):
                if input_grad is None or not tensor.grad_enabled:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + input_grad
                else:
                    grads[key] = input_grad
                if not self._owns(tensor):
                    leaves[key] = tensor

        for key, tensor in leaves.items():
            _accumulate(tensor, grads[key])

    def branch_pattern(self):
        """Concatenated branch choices of all non-smooth records, in tape order."""
        parts = []
        for record in self.records:
            branches = record.function.branches()
            if branches is not None:
                parts.append(np.asarray(branches).ravel())
        if not parts:
            return np.zeros(0, dtype=np.int8)
        return np.concatenate(parts)


def _accumulate(tensor, grad):
    grad = np.asarray(grad, dtype=tensor.dtype).reshape(tensor.shape)
    if tensor.grad is None:
        tensor.grad = grad.copy()
    else:
        tensor.grad = tensor.grad + grad


class Function(object):
    """
    Base class of differentiable operations.

    ``forward`` receives the numpy arrays of the input tensors plus keyword options and stores on ``self``
    whatever ``backward`` needs. ``backward`` receives d(loss)/d(output) and returns one gradient (or None)
    per tensor input.
    """

    def forward(self, *arrays, **options):
        raise NotImplementedError("forward not implemented for %s" % type(self).__name__)

    def backward(self, grad):
        raise NotImplementedError("backward not implemented for %s" % type(self).__name__)

    def branches(self):
        """Branch choices taken by a non-smooth op, None for smooth ops."""
        return None

    @classmethod
    def apply(cls, *tensors, **options):
        function = cls()
        out = function.forward(*(t.data for t in tensors), **options)
        result = Tensor(out, dtype=out.dtype)
        tape = active_tape()
        if tape is not None and any(t.grad_enabled for t in tensors):
            result.grad_enabled = True
            tape.add(function, tensors, result)
        return result


def unbroadcast(grad, shape):
    """Sum ``grad`` over the axes that numpy broadcasting expanded from ``shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError("cannot combine dims %s and %s" % (a.shape, b.shape))


# Elementwise arithmetic


class Add(Function):

    def forward(self, a, b):
        _check_broadcast(a, b)
        self.shapes = a.shape, b.shape
        return a + b

    def backward(self, grad):
        return unbroadcast(grad, self.shapes[0]), unbroadcast(grad, self.shapes[1])


class Sub(Function):

    def forward(self, a, b):
        _check_broadcast(a, b)
        self.shapes = a.shape, b.shape
        return a - b

    def backward(self, grad):
        return unbroadcast(grad, self.shapes[0]), unbroadcast(-grad, self.shapes[1])


class Mul(Function):

    def forward(self, a, b):
        _check_broadcast(a, b)
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return unbroadcast(grad * self.b, self.a.shape), unbroadcast(grad * self.a, self.b.shape)


class Div(Function):

    def forward(self, a, b):
        _check_broadcast(a, b)
        self.a, self.b = a, b
        return a / b

    def backward(self, grad):
        grad_a = grad / self.b
        grad_b = -grad * self.a / (self.b * self.b)
        return unbroadcast(grad_a, self.a.shape), unbroadcast(grad_b, self.b.shape)


class Scale(Function):

    def forward(self, x, factor=1.0):
        self.factor = factor
        return (x * factor).astype(x.dtype, copy=False)

    def backward(self, grad):
        return (grad * self.factor,)


class Shift(Function):

    def forward(self, x, value=0.0):
        return (x + value).astype(x.dtype, copy=False)

    def backward(self, grad):
        return (grad,)


class Square(Function):

    def forward(self, x):
        self.x = x
        return x * x

    def backward(self, grad):
        return (2 * grad * self.x,)


class Sqrt(Function):

    def forward(self, x):
        self.out = np.sqrt(x)
        return self.out

    def backward(self, grad):
        return (grad / (2 * self.out),)


class Exp(Function):

    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):

    def forward(self, x):
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


class Abs(Function):

    def forward(self, x):
        self.sign = np.sign(x)
        return np.abs(x)

    def backward(self, grad):
        return (grad * self.sign,)

    def branches(self):
        return self.sign.astype(np.int8)


class Clip(Function):

    def forward(self, x, low=None, high=None):
        below = x < low if low is not None else np.zeros(x.shape, dtype=bool)
        above = x > high if high is not None else np.zeros(x.shape, dtype=bool)
        self.below, self.above = below, above
        return np.clip(x, low, high).astype(x.dtype, copy=False)

    def backward(self, grad):
        return (np.where(self.below | self.above, 0, grad).astype(grad.dtype, copy=False),)

    def branches(self):
        return self.below.astype(np.int8) - self.above.astype(np.int8)


# Activations


class Relu(Function):

    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0).astype(x.dtype, copy=False)

    def backward(self, grad):
        return (np.where(self.mask, grad, 0).astype(grad.dtype, copy=False),)

    def branches(self):
        return self.mask


class LeakyRelu(Function):

    def forward(self, x, slope=LEAKY_SLOPE):
        self.mask = x > 0
        self.slope = slope
        return np.where(self.mask, x, x * slope).astype(x.dtype, copy=False)

    def backward(self, grad):
        return (np.where(self.mask, grad, grad * self.slope).astype(grad.dtype, copy=False),)

    def branches(self):
        return self.mask


class Tanh(Function):

    def forward(self, x):
        self.out = np.tanh(x)
        return self.out

    def backward(self, grad):
        return (grad * (1 - self.out * self.out),)


class Sigmoid(Function):

    def forward(self, x):
        # tanh form is stable for large |x|
        self.out = (0.5 * (1 + np.tanh(0.5 * x))).astype(x.dtype, copy=False)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1 - self.out),)


class Softmax(Function):

    def forward(self, x, axis=1):
        self.axis = axis
        shifted = x - x.max(axis=axis, keepdims=True)
        exps = np.exp(shifted)
        self.out = exps / exps.sum(axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        dot = (grad * self.out).sum(axis=self.axis, keepdims=True)
        return (self.out * (grad - dot),)


# Reductions and shape


class Sum(Function):

    def forward(self, x, axis=None, keepdims=False):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        return np.asarray(x.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Mean(Function):

    def forward(self, x, axis=None, keepdims=False):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        if axis is None:
            self.count = x.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            self.count = int(np.prod([x.shape[a] for a in axes]))
        return np.asarray(x.mean(axis=axis, keepdims=keepdims))

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad / self.count, self.shape).copy(),)


class Reshape(Function):

    def forward(self, x, shape=None):
        self.shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class Concat(Function):

    def forward(self, *arrays, **options):
        axis = options.get("axis", 1)
        reference = arrays[0].shape
        for array in arrays[1:]:
            if array.ndim != len(reference) or any(
                    s != r for i, (s, r) in enumerate(zip(array.shape, reference)) if i != axis):
                raise ShapeError("cannot concatenate dims %s and %s along axis %i" % (reference, array.shape, axis))
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


# Convolutions


def _conv_output_size(size, kernel, stride, pad):
    return (size + 2 * pad - kernel) // stride + 1


def _windows(padded, kernel, stride):
    view = sliding_window_view(padded, (kernel, kernel), axis=(2, 3))
    return view[:, :, ::stride, ::stride]


class Conv2d(Function):

    def forward(self, x, weight, bias, stride=1, pad=0):
        if x.ndim != 4 or weight.ndim != 4:
            raise ShapeError("conv2d expects rank-4 input and weight, got %s and %s" % (x.shape, weight.shape))
        c_out, c_in, kernel, kernel_w = weight.shape
        if kernel != kernel_w:
            raise ShapeError("conv2d expects square kernels, got %s" % (weight.shape,))
        if x.shape[1] != c_in:
            raise ShapeError("conv2d input has %i channels, weight expects %i" % (x.shape[1], c_in))
        if stride < 1 or pad < 0:
            raise ShapeError("conv2d needs stride >= 1 and pad >= 0")
        n, _, h, w = x.shape
        out_h = _conv_output_size(h, kernel, stride, pad)
        out_w = _conv_output_size(w, kernel, stride, pad)
        if out_h <= 0 or out_w <= 0:
            raise ShapeError("conv2d output would be %ix%i for input %ix%i" % (out_h, out_w, h, w))

        padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
        cols = _windows(padded, kernel, stride)
        out = np.einsum("nchwij,ocij->nohw", cols, weight, optimize=True)
        out += bias.reshape(1, -1, 1, 1)

        self.cols, self.weight = cols, weight
        self.x_shape, self.padded_shape = x.shape, padded.shape
        self.stride, self.pad, self.kernel = stride, pad, kernel
        return out.astype(x.dtype, copy=False)

    def backward(self, grad):
        kernel, stride, pad = self.kernel, self.stride, self.pad
        _, _, out_h, out_w = grad.shape
        grad_weight = np.einsum("nchwij,nohw->ocij", self.cols, grad, optimize=True)
        grad_bias = grad.sum(axis=(0, 2, 3))
        grad_cols = np.einsum("nohw,ocij->nchwij", grad, self.weight, optimize=True)

        grad_padded = np.zeros(self.padded_shape, dtype=grad.dtype)
        for i in range(kernel):
            for j in range(kernel):
                grad_padded[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += grad_cols[..., i, j]
        _, _, h, w = self.x_shape
        grad_x = grad_padded[:, :, pad:pad + h, pad:pad + w]
        return grad_x, grad_weight, grad_bias


class ConvTranspose2d(Function):

    def forward(self, x, weight, bias, stride=1, pad=0, output_pad=0):
        if x.ndim != 4 or weight.ndim != 4:
            raise ShapeError("conv_transpose2d expects rank-4 input and weight")
        c_in, c_out, kernel, _ = weight.shape
        if x.shape[1] != c_in:
            raise ShapeError("conv_transpose2d input has %i channels, weight expects %i" % (x.shape[1], c_in))
        n, _, h, w = x.shape
        out_h = (h - 1) * stride - 2 * pad + kernel + output_pad
        out_w = (w - 1) * stride - 2 * pad + kernel + output_pad
        if out_h <= 0 or out_w <= 0:
            raise ShapeError("conv_transpose2d output would be %ix%i" % (out_h, out_w))

        canvas_h = max((h - 1) * stride + kernel, pad + out_h)
        canvas_w = max((w - 1) * stride + kernel, pad + out_w)
        cols = np.einsum("nihw,ioab->nohwab", x, weight, optimize=True)
        canvas = np.zeros((n, c_out, canvas_h, canvas_w), dtype=x.dtype)
        for a in range(kernel):
            for b in range(kernel):
                canvas[:, :, a:a + stride * h:stride, b:b + stride * w:stride] += cols[..., a, b]
        out = canvas[:, :, pad:pad + out_h, pad:pad + out_w] + bias.reshape(1, -1, 1, 1)

        self.x, self.weight = x, weight
        self.canvas_shape = canvas.shape
        self.stride, self.pad, self.kernel = stride, pad, kernel
        return out.astype(x.dtype, copy=False)

    def backward(self, grad):
        kernel, stride, pad = self.kernel, self.stride, self.pad
        n, _, h, w = self.x.shape
        canvas = np.zeros(self.canvas_shape, dtype=grad.dtype)
        canvas[:, :, pad:pad + grad.shape[2], pad:pad + grad.shape[3]] = grad
        cols = np.empty(grad.shape[:2] + (h, w, kernel, kernel), dtype=grad.dtype)
        for a in range(kernel):
            for b in range(kernel):
                cols[..., a, b] = canvas[:, :, a:a + stride * h:stride, b:b + stride * w:stride]
        grad_x = np.einsum("nohwab,ioab->nihw", cols, self.weight, optimize=True)
        grad_weight = np.einsum("nihw,nohwab->ioab", self.x, cols, optimize=True)
        grad_bias = grad.sum(axis=(0, 2, 3))
        return grad_x, grad_weight, grad_bias


# Resampling


class PixelShuffle(Function):

    def forward(self, x, factor=2):
        n, c, h, w = x.shape
        if c % (factor * factor):
            raise ShapeError("pixel_shuffle needs channels divisible by %i, got %i" % (factor * factor, c))
        self.factor = factor
        out_c = c // (factor * factor)
        return x.reshape(n, out_c, factor, factor, h, w).transpose(0, 1, 4, 2, 5, 3).reshape(
            n, out_c, h * factor, w * factor)

    def backward(self, grad):
        return (_unshuffle(grad, self.factor),)


def _unshuffle(x, factor):
    n, c, h, w = x.shape
    return x.reshape(n, c, h // factor, factor, w // factor, factor).transpose(0, 1, 3, 5, 2, 4).reshape(
        n, c * factor * factor, h // factor, w // factor)


class PixelUnshuffle(Function):

    def forward(self, x, factor=2):
        if x.shape[2] % factor or x.shape[3] % factor:
            raise ShapeError("pixel_unshuffle needs spatial dims divisible by %i" % factor)
        self.factor = factor
        return _unshuffle(x, factor)

    def backward(self, grad):
        return (PixelShuffle().forward(grad, factor=self.factor),)


class AvgPool2d(Function):

    def forward(self, x, kernel=2):
        n, c, h, w = x.shape
        if h % kernel or w % kernel:
            raise ShapeError("avg_pool2d kernel %i does not divide %ix%i" % (kernel, h, w))
        self.kernel = kernel
        return x.reshape(n, c, h // kernel, kernel, w // kernel, kernel).mean(axis=(3, 5))

    def backward(self, grad):
        k = self.kernel
        return (np.repeat(np.repeat(grad, k, axis=2), k, axis=3) / (k * k),)


class NearestDownsample(Function):

    def forward(self, x, factor=2):
        if x.shape[2] % factor or x.shape[3] % factor:
            raise ShapeError("nearest downsample factor %i does not divide %ix%i" % (factor, x.shape[2], x.shape[3]))
        self.shape, self.factor = x.shape, factor
        return x[:, :, ::factor, ::factor]

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=grad.dtype)
        out[:, :, ::self.factor, ::self.factor] = grad
        return (out,)


class NearestUpsample(Function):

    def forward(self, x, factor=2):
        self.factor = factor
        return np.repeat(np.repeat(x, factor, axis=2), factor, axis=3)

    def backward(self, grad):
        n, c, h, w = grad.shape
        f = self.factor
        return (grad.reshape(n, c, h // f, f, w // f, f).sum(axis=(3, 5)),)


class GridSample(Function):
    """
    Bilinear backward warp: output (y, x) reads input at (x + flow_x, y + flow_y), zero outside.
    """

    def forward(self, x, flow):
        if flow.ndim != 4 or flow.shape[1] != 2:
            raise ShapeError("flow must have 2 channels, got dims %s" % (flow.shape,))
        n, c, h, w = x.shape
        if flow.shape[0] != n or flow.shape[2:] != (h, w):
            raise ShapeError("flow dims %s do not match input dims %s" % (flow.shape, x.shape))

        grid_y, grid_x = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        sample_x = grid_x[None] + flow[:, 0]
        sample_y = grid_y[None] + flow[:, 1]
        x0 = np.floor(sample_x).astype(np.int64)
        y0 = np.floor(sample_y).astype(np.int64)
        wx1 = (sample_x - x0).astype(x.dtype)
        wy1 = (sample_y - y0).astype(x.dtype)
        wx0 = 1 - wx1
        wy0 = 1 - wy1

        corners = {}
        for dy in (0, 1):
            for dx in (0, 1):
                yy, xx = y0 + dy, x0 + dx
                inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
                yc, xc = np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)
                values = x[np.arange(n)[:, None, None, None], np.arange(c)[None, :, None, None],
                           yc[:, None], xc[:, None]]
                values = np.where(inside[:, None], values, 0).astype(x.dtype, copy=False)
                corners[dy, dx] = (values, inside, yc, xc)

        v00, v01 = corners[0, 0][0], corners[0, 1][0]
        v10, v11 = corners[1, 0][0], corners[1, 1][0]
        out = wy0[:, None] * (wx0[:, None] * v00 + wx1[:, None] * v01) + \
            wy1[:, None] * (wx0[:, None] * v10 + wx1[:, None] * v11)

        self.shape = x.shape
        self.corners = corners
        self.weights = wx0, wx1, wy0, wy1
        self.floors = x0, y0
        return out.astype(x.dtype, copy=False)

    def backward(self, grad):
        n, c, h, w = self.shape
        wx0, wx1, wy0, wy1 = self.weights
        corner_weights = {(0, 0): wy0 * wx0, (0, 1): wy0 * wx1, (1, 0): wy1 * wx0, (1, 1): wy1 * wx1}

        grad_x = np.zeros(n * c * h * w, dtype=np.float64)
        base = (np.arange(n)[:, None, None, None] * c + np.arange(c)[None, :, None, None]) * h
        for key, (values, inside, yc, xc) in self.corners.items():
            contribution = grad * (corner_weights[key] * inside)[:, None]
            flat = ((base + yc[:, None]) * w + xc[:, None])
            grad_x += np.bincount(flat.ravel(), weights=contribution.ravel(), minlength=grad_x.size)
        grad_x = grad_x.reshape(self.shape).astype(grad.dtype)

        v00, v01 = self.corners[0, 0][0], self.corners[0, 1][0]
        v10, v11 = self.corners[1, 0][0], self.corners[1, 1][0]
        d_sample_x = wy0[:, None] * (v01 - v00) + wy1[:, None] * (v11 - v10)
        d_sample_y = wx0[:, None] * (v10 - v00) + wx1[:, None] * (v11 - v01)
        grad_flow = np.stack([(grad * d_sample_x).sum(axis=1), (grad * d_sample_y).sum(axis=1)], axis=1)
        return grad_x, grad_flow.astype(grad.dtype)

    def branches(self):
        return np.concatenate([self.floors[0].ravel(), self.floors[1].ravel()])


# Functional surface


def add(a, b):
    return Add.apply(a, b)


def sub(a, b):
    return Sub.apply(a, b)


def mul(a, b):
    return Mul.apply(a, b)


def div(a, b):
    return Div.apply(a, b)


def scale(x, factor):
    return Scale.apply(x, factor=factor)


def square(x):
    return Square.apply(x)


def sqrt(x):
    return Sqrt.apply(x)


def exp(x):
    return Exp.apply(x)


def log(x):
    return Log.apply(x)


def absolute(x):
    return Abs.apply(x)


def clip(x, low=None, high=None):
    return Clip.apply(x, low=low, high=high)


def relu(x):
    return Relu.apply(x)


def leaky_relu(x, slope=LEAKY_SLOPE):
    """max(x, 0) + slope * min(x, 0)."""
    return LeakyRelu.apply(x, slope=slope)


def tanh(x):
    return Tanh.apply(x)


def sigmoid(x):
    return Sigmoid.apply(x)


def softmax(x, axis=1):
    """Softmax over the channel dimension."""
    return Softmax.apply(x, axis=axis)


def sum(x, axis=None, keepdims=False):  # noqa: A001
    return Sum.apply(x, axis=axis, keepdims=keepdims)


def mean(x, axis=None, keepdims=False):
    return Mean.apply(x, axis=axis, keepdims=keepdims)


def reshape(x, shape):
    return Reshape.apply(x, shape=tuple(shape))


def concat(tensors, axis=1):
    """Concatenate along the channel dimension (or ``axis``)."""
    return Concat.apply(*tensors, axis=axis)


def conv2d(x, weight, bias=None, stride=1, pad=0):
    """
    2D cross-correlation with zero padding.

    Parameters
    ----------
    x : Tensor
        Input of dims (n, c_in, h, w).
    weight : Tensor
        Kernel of dims (c_out, c_in, k, k).
    bias : Tensor, optional
        Vector of length c_out; zeros when omitted.
    stride : int
    pad : int

    Returns
    -------
    Tensor
        Dims (n, c_out, (h + 2 pad - k) // stride + 1, (w + 2 pad - k) // stride + 1).

    Raises
    ------
    ShapeError
        On channel mismatch or an empty output.
    """
    if bias is None:
        bias = Tensor(np.zeros(weight.shape[0], dtype=weight.dtype))
    return Conv2d.apply(x, weight, bias, stride=stride, pad=pad)


def conv_transpose2d(x, weight, bias=None, stride=1, pad=0, output_pad=0):
    """
    Transposed convolution, the adjoint of :func:`conv2d`; weight dims (c_in, c_out, k, k).

    Output spatial size is (h - 1) * stride - 2 pad + k + output_pad.
    """
    if bias is None:
        bias = Tensor(np.zeros(weight.shape[1], dtype=weight.dtype))
    return ConvTranspose2d.apply(x, weight, bias, stride=stride, pad=pad, output_pad=output_pad)


def pixel_shuffle(x, factor):
    """
    Depth to space: output[n, c, y r + a, x r + b] = input[n, c r^2 + a r + b, y, x].

    Raises
    ------
    ShapeError
        If the channel count is not divisible by ``factor ** 2``.
    """
    if factor == 1:
        return x
    return PixelShuffle.apply(x, factor=factor)


def pixel_unshuffle(x, factor):
    if factor == 1:
        return x
    return PixelUnshuffle.apply(x, factor=factor)


def grid_sample_bilinear(x, flow):
    """
    Backward-warp ``x`` by a pixel-offset flow.

    Output (y, x) samples the input at (x + flow[:, 0], y + flow[:, 1]) with bilinear interpolation; samples
    outside the image read zero.

    Raises
    ------
    ShapeError
        If ``flow`` does not have 2 channels or its dims do not match ``x``.
    """
    return GridSample.apply(x, flow)


def avg_pool2d(x, kernel):
    if kernel == 1:
        return x
    return AvgPool2d.apply(x, kernel=kernel)


def downsample_average(x, factor):
    return avg_pool2d(x, factor)


def downsample_nearest(x, factor):
    if factor == 1:
        return x
    return NearestDownsample.apply(x, factor=factor)


def upsample_nearest(x, factor):
    if factor == 1:
        return x
    return NearestUpsample.apply(x, factor=factor)


def resize_factor(size, target):
    if target > size or size % target:
        raise ShapeError("cannot resize %i to %i by an integer factor" % (size, target))
    return size // target


def instance_norm_stats(x, eps=NORM_EPS):
    """
    Per (sample, channel) mean and standard deviation over spatial positions.

    Returns
    -------
    mu, sigma : Tensor
        Dims (n, c, 1, 1); sigma = sqrt(variance + eps).
    """
    mu = mean(x, axis=(2, 3), keepdims=True)
    variance = mean(square(x - mu), axis=(2, 3), keepdims=True)
    return mu, sqrt(variance + eps)


def instance_norm(x, eps=NORM_EPS):
    mu, sigma = instance_norm_stats(x, eps)
    return (x - mu) / sigma


def batch_norm(x, gamma, beta, running_mean, running_var, training=True, momentum=BN_MOMENTUM, eps=NORM_EPS):
    """
    Per-channel batch normalization.

    In training mode the batch statistics normalize ``x`` and the running buffers (plain tensors) are updated in
    place; in evaluation mode the running statistics are used.
    """
    if training:
        mu = mean(x, axis=(0, 2, 3), keepdims=True)
        variance = mean(square(x - mu), axis=(0, 2, 3), keepdims=True)
        count = x.shape[0] * x.shape[2] * x.shape[3]
        unbiased = variance.data * (count / max(count - 1, 1))
        running_mean.data[...] = (1 - momentum) * running_mean.data + momentum * mu.data
        running_var.data[...] = (1 - momentum) * running_var.data + momentum * unbiased
        normalized = (x - mu) / sqrt(variance + eps)
    else:
        normalized = (x - Tensor(running_mean.data, dtype=x.dtype)) / \
            Tensor(np.sqrt(running_var.data + eps), dtype=x.dtype)
    return normalized * gamma + beta


# Parameters


def kaiming_uniform(rng, shape, fan_in, dtype=DEFAULT_DTYPE):
    """Uniform fan-in scaled initialization, bound 1 / sqrt(fan_in)."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class ParamStore(object):
    """
    Named learnable tensors plus non-learnable buffers.

    Iteration is in name order, which is also the checkpoint order.

    Attributes
    ----------
    dtype : numpy.dtype
        Dtype of every stored value.
    training : bool
        Mode flag read by batch-norm layers.
    """

    def __init__(self, dtype=DEFAULT_DTYPE):
        self.dtype = np.dtype(dtype)
        self.training = True
        self._params = {}
        self._buffers = {}

    def _check_new(self, name):
        if name in self._params or name in self._buffers:
            raise ValueError("duplicate parameter name %s" % name)

    def add(self, name, array):
        self._check_new(name)
        tensor = Tensor(np.array(array, dtype=self.dtype), grad_enabled=True)
        self._params[name] = tensor
        return tensor

    def add_buffer(self, name, array):
        self._check_new(name)
        tensor = Tensor(np.array(array, dtype=self.dtype))
        self._buffers[name] = tensor
        return tensor

    def __getitem__(self, name):
        if name in self._params:
            return self._params[name]
        return self._buffers[name]

    def __contains__(self, name):
        return name in self._params or name in self._buffers

    def __len__(self):
        return len(self._params)

    def __iter__(self):
        return iter(sorted(self._params))

    def names(self):
        return sorted(self._params)

    def items(self):
        return [(name, self._params[name]) for name in sorted(self._params)]

    def buffers(self):
        return [(name, self._buffers[name]) for name in sorted(self._buffers)]

    def state(self):
        """Params and buffers together, by name."""
        merged = dict(self._params)
        merged.update(self._buffers)
        return [(name, merged[name]) for name in sorted(merged)]

    def count(self):
        return int(np.sum([t.size for t in self._params.values()]))

    def zero_grad(self):
        for tensor in self._params.values():
            tensor.grad = None

    def astype(self, dtype):
        """Cast every value in place (tensor objects are kept)."""
        self.dtype = np.dtype(dtype)
        for tensor in list(self._params.values()) + list(self._buffers.values()):
            tensor.data = tensor.data.astype(dtype)
            tensor.grad = None
        return self

    def train(self):
        self.training = True
        return self

    def eval(self):
        self.training = False
        return self

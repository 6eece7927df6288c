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
"""Parameterized building blocks shared by the networks."""

import numpy as np

from . import tensor as T
from .tensor import kaiming_uniform


class Module(object):
    """
    A block whose parameters live in a shared ParamStore under a name prefix.

    Attributes
    ----------
    store : ParamStore
    prefix : str
        Dotted name prefix, ending with "." unless empty.
    rng : numpy.random.Generator
        Initialization source; blocks draw from it in construction order.
    """

    def __init__(self, store, prefix, rng):
        self.store = store
        self.prefix = prefix
        self.rng = rng

    def add_param(self, name, array):
        return self.store.add(self.prefix + name, array)

    def add_buffer(self, name, array):
        return self.store.add_buffer(self.prefix + name, array)

    def child(self, name):
        return self.prefix + name + "."


class Conv2d(Module):

    def __init__(self, store, prefix, rng, c_in, c_out, kernel, stride=1, pad=None):
        super(Conv2d, self).__init__(store, prefix, rng)
        fan_in = c_in * kernel * kernel
        self.weight = self.add_param("weight", kaiming_uniform(rng, (c_out, c_in, kernel, kernel), fan_in))
        self.bias = self.add_param("bias", kaiming_uniform(rng, (c_out,), fan_in))
        self.stride = stride
        self.pad = kernel // 2 if pad is None else pad
        self.c_in, self.c_out = c_in, c_out

    def __call__(self, x):
        return T.conv2d(x, self.weight, self.bias, stride=self.stride, pad=self.pad)

    def zero_(self):
        """Zero the kernel and bias (turns a residual branch into an identity)."""
        self.weight.data[...] = 0
        self.bias.data[...] = 0


class ConvTranspose2d(Module):
    """Transposed convolution; with stride s it multiplies the spatial size by s."""

    def __init__(self, store, prefix, rng, c_in, c_out, kernel, stride=1):
        super(ConvTranspose2d, self).__init__(store, prefix, rng)
        fan_in = c_out * kernel * kernel
        self.weight = self.add_param("weight", kaiming_uniform(rng, (c_in, c_out, kernel, kernel), fan_in))
        self.bias = self.add_param("bias", kaiming_uniform(rng, (c_out,), fan_in))
        self.stride = stride
        self.pad = kernel // 2
        self.output_pad = stride - 1

    def __call__(self, x):
        return T.conv_transpose2d(x, self.weight, self.bias, stride=self.stride, pad=self.pad,
                                  output_pad=self.output_pad)


class BatchNorm2d(Module):

    def __init__(self, store, prefix, rng, channels):
        super(BatchNorm2d, self).__init__(store, prefix, rng)
        shape = (1, channels, 1, 1)
        self.gamma = self.add_param("gamma", np.ones(shape))
        self.beta = self.add_param("beta", np.zeros(shape))
        self.running_mean = self.add_buffer("running_mean", np.zeros(shape))
        self.running_var = self.add_buffer("running_var", np.ones(shape))

    def __call__(self, x):
        return T.batch_norm(x, self.gamma, self.beta, self.running_mean, self.running_var,
                            training=self.store.training)


class InstanceNorm2d(Module):
    """Instance normalization with a learned per-channel affine."""

    def __init__(self, store, prefix, rng, channels):
        super(InstanceNorm2d, self).__init__(store, prefix, rng)
        shape = (1, channels, 1, 1)
        self.gamma = self.add_param("gamma", np.ones(shape))
        self.beta = self.add_param("beta", np.zeros(shape))

    def __call__(self, x):
        return T.instance_norm(x) * self.gamma + self.beta


class ResidualBlock(Module):
    """
    conv3x3 -> BN -> ReLU -> conv3x3 -> BN, plus the input.

    A 1x1 projection carries the skip when the channel counts differ. Zeroing ``conv2`` makes the block the
    identity (or the projection).
    """

    def __init__(self, store, prefix, rng, c_in, c_out=None):
        super(ResidualBlock, self).__init__(store, prefix, rng)
        c_out = c_in if c_out is None else c_out
        self.conv1 = Conv2d(store, self.child("conv1"), rng, c_in, c_out, 3)
        self.bn1 = BatchNorm2d(store, self.child("bn1"), rng, c_out)
        self.conv2 = Conv2d(store, self.child("conv2"), rng, c_out, c_out, 3)
        self.bn2 = BatchNorm2d(store, self.child("bn2"), rng, c_out)
        self.skip = Conv2d(store, self.child("skip"), rng, c_in, c_out, 1) if c_in != c_out else None

    def branch(self, x):
        """The residual branch alone."""
        return self.bn2(self.conv2(T.relu(self.bn1(self.conv1(x)))))

    def __call__(self, x):
        shortcut = x if self.skip is None else self.skip(x)
        return self.branch(x) + shortcut


class ConvBlock(Module):
    """conv -> norm -> activation, the stem/stage unit of the encoders."""

    def __init__(self, store, prefix, rng, c_in, c_out, kernel=3, stride=1, norm="batch", activation="relu",
                 transpose=False, pad=None):
        super(ConvBlock, self).__init__(store, prefix, rng)
        if transpose:
            self.conv = ConvTranspose2d(store, self.child("conv"), rng, c_in, c_out, kernel, stride)
        else:
            self.conv = Conv2d(store, self.child("conv"), rng, c_in, c_out, kernel, stride, pad)
        if norm == "batch":
            self.norm = BatchNorm2d(store, self.child("bn"), rng, c_out)
        elif norm == "instance":
            self.norm = InstanceNorm2d(store, self.child("in"), rng, c_out)
        else:
            self.norm = None
        self.activation = activation

    def __call__(self, x):
        out = self.conv(x)
        if self.norm is not None:
            out = self.norm(out)
        if self.activation == "relu":
            out = T.relu(out)
        elif self.activation == "leaky_relu":
            out = T.leaky_relu(out)
        elif self.activation == "tanh":
            out = T.tanh(out)
        return out

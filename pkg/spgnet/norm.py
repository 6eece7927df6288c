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
Region-adaptive normalization.

``out = alpha * (h - mu) / sigma + beta`` with per-sample, per-channel instance statistics. In SEAN the
modulation blends a semantic-layout path and a style-map path,
``alpha = s(theta_alpha) alpha_s + (1 - s(theta_alpha)) alpha_c`` (same for beta, s the logistic function);
the SPADE variant uses the semantic path alone and the plain variant a learned per-channel affine.
"""

import logging

import numpy as np

from .exceptions import ShapeError
from .layers import Conv2d, InstanceNorm2d, Module
from .semantics import as_layout
from . import tensor as T


LOGGER = logging.getLogger(__name__)


SEAN = "sean"
SPADE = "spade"
PLAIN = "none"
VARIANTS = (SEAN, SPADE, PLAIN)


class ModulationPath(Module):
    """
    Shared conv + ReLU followed by 1x1 heads predicting alpha and beta.

    The alpha head starts with bias 1 so the modulation begins near the identity.
    """

    def __init__(self, store, prefix, rng, c_in, channels, hidden, kernel=3):
        super(ModulationPath, self).__init__(store, prefix, rng)
        self.shared = Conv2d(store, self.child("shared"), rng, c_in, hidden, kernel)
        self.alpha = Conv2d(store, self.child("alpha"), rng, hidden, channels, 1)
        self.beta = Conv2d(store, self.child("beta"), rng, hidden, channels, 1)
        self.alpha.bias.data[...] = 1

    def __call__(self, condition):
        hidden = T.relu(self.shared(condition))
        return self.alpha(hidden), self.beta(hidden)

    def set_constant(self, alpha, beta):
        """Force alpha and beta to constants (zero weights, constant biases)."""
        for head, value in ((self.alpha, alpha), (self.beta, beta)):
            head.weight.data[...] = 0
            head.bias.data[...] = value


class SEANParams(Module):
    """
    Parameters of one SEAN layer.

    Attributes
    ----------
    semantic : ModulationPath
        Maps the one-hot target layout to (alpha_s, beta_s).
    style : ModulationPath
        Maps the style map to (alpha_c, beta_c).
    theta_alpha, theta_beta : Tensor
        Unconstrained blend scalars, squashed by the logistic function; 0 gives an even blend.
    """

    def __init__(self, store, prefix, rng, channels, num_classes, style_dim, hidden=32, kernel=3):
        super(SEANParams, self).__init__(store, prefix, rng)
        self.channels = channels
        self.semantic = ModulationPath(store, self.child("semantic"), rng, num_classes, channels, hidden, kernel)
        self.style = ModulationPath(store, self.child("style"), rng, style_dim, channels, hidden, kernel)
        self.theta_alpha = self.add_param("theta_alpha", np.zeros((1, 1, 1, 1)))
        self.theta_beta = self.add_param("theta_beta", np.zeros((1, 1, 1, 1)))

    def __call__(self, h, semantic, style_map):
        return sean(h, semantic, style_map, self)


class SPADEParams(Module):
    """Semantic path only."""

    def __init__(self, store, prefix, rng, channels, num_classes, hidden=32, kernel=3):
        super(SPADEParams, self).__init__(store, prefix, rng)
        self.channels = channels
        self.semantic = ModulationPath(store, self.child("semantic"), rng, num_classes, channels, hidden, kernel)

    def __call__(self, h, semantic, style_map=None):
        return spade_variant(h, semantic, self)


class PlainNorm(Module):
    """Unconditional instance normalization, the baseline without region modulation."""

    def __init__(self, store, prefix, rng, channels):
        super(PlainNorm, self).__init__(store, prefix, rng)
        self.channels = channels
        self.norm = InstanceNorm2d(store, self.child("in"), rng, channels)

    def __call__(self, h, semantic=None, style_map=None):
        return self.norm(h)


def make_norm(variant, store, prefix, rng, channels, num_classes, style_dim, hidden=32, kernel=3):
    if variant == SEAN:
        return SEANParams(store, prefix, rng, channels, num_classes, style_dim, hidden, kernel)
    if variant == SPADE:
        return SPADEParams(store, prefix, rng, channels, num_classes, hidden, kernel)
    if variant == PLAIN:
        return PlainNorm(store, prefix, rng, channels)
    raise ValueError("unknown normalization variant %r" % variant)


def resize_layout(layout, height, width):
    """Nearest-neighbour resize of a (n, C, H, W) layout to the feature size."""
    factor = T.resize_factor(layout.shape[2], height)
    if T.resize_factor(layout.shape[3], width) != factor:
        raise ShapeError("layout %s cannot be resized to %ix%i" % (layout.shape, height, width))
    return T.downsample_nearest(layout, factor)


def resize_style(style_map, height, width):
    """Average-pool a style map to the feature size."""
    factor = T.resize_factor(style_map.shape[2], height)
    if T.resize_factor(style_map.shape[3], width) != factor:
        raise ShapeError("style map %s cannot be resized to %ix%i" % (style_map.shape, height, width))
    return T.downsample_average(style_map, factor)


def normalize(h):
    """(h - mu) / sigma with per-(n, c) spatial statistics."""
    return T.instance_norm(h)


def _check_channels(alpha, h):
    if alpha.shape[1] != h.shape[1]:
        raise ShapeError("modulation has %i channels, feature has %i" % (alpha.shape[1], h.shape[1]))


def sean(h, semantic, style_map, params):
    """
    Semantic region-adaptive normalization.

    Parameters
    ----------
    h : Tensor
        (n, c, y, x) feature.
    semantic : SemanticMap or Tensor
        Target labels, or (n, C, H, W) soft class probabilities; resized by nearest neighbour.
    style_map : Tensor
        (n, D, H, W) broadcast style codes; resized by average pooling.
    params : SEANParams

    Returns
    -------
    Tensor
        ``alpha * (h - mu) / sigma + beta``, same dims as ``h``.

    Raises
    ------
    ShapeError
        If the conditions cannot be resized to the feature dims.
    """
    height, width = h.shape[2:]
    layout = resize_layout(as_layout(semantic, h.dtype), height, width)
    style = resize_style(style_map, height, width)

    alpha_s, beta_s = params.semantic(layout)
    alpha_c, beta_c = params.style(style)
    _check_channels(alpha_s, h)

    blend_alpha = T.sigmoid(params.theta_alpha)
    blend_beta = T.sigmoid(params.theta_beta)
    alpha = blend_alpha * alpha_s + (1 - blend_alpha) * alpha_c
    beta = blend_beta * beta_s + (1 - blend_beta) * beta_c
    return alpha * normalize(h) + beta


def spade_variant(h, semantic, params):
    """
    SPADE-style normalization: alpha and beta from the semantic path only.

    ``params`` may be SPADEParams or SEANParams (its semantic path is used).
    """
    height, width = h.shape[2:]
    layout = resize_layout(as_layout(semantic, h.dtype), height, width)
    alpha, beta = params.semantic(layout)
    _check_channels(alpha, h)
    return alpha * normalize(h) + beta

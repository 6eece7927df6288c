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
Flow-guided feature deformation.

Flows are backward offsets: target pixel (y, x) reads the source at (x + phi_x, y + phi_y).
"""

import logging

import numpy as np

from .exceptions import ShapeError, ValidationError
from .io import load_tensor, save_tensor
from .layers import Module, ResidualBlock
from . import tensor as T
from .tensor import Tensor


LOGGER = logging.getLogger(__name__)


PHI_SUFFIX = ".phi.spgt"
VIS_SUFFIX = ".vis.spgt"


class FlowField(object):
    """
    Sampling offsets plus a visibility mask.

    Attributes
    ----------
    phi : Tensor
        (n, 2, H, W) offsets in pixels, x first.
    vis : Tensor
        (n, 1, H, W) binary mask; 1 where the target pixel is visible in the source.

    Raises
    ------
    ValidationError
        If ``vis`` is not binary or ``phi`` is not finite.
    ShapeError
        If the dims do not fit together.
    """

    def __init__(self, phi, vis):
        phi = phi if isinstance(phi, Tensor) else Tensor(np.asarray(phi, dtype=np.float32))
        vis = vis if isinstance(vis, Tensor) else Tensor(np.asarray(vis, dtype=np.float32))
        if phi.ndim != 4 or phi.shape[1] != 2:
            raise ShapeError("flow offsets must be (n, 2, H, W), got %s" % (phi.shape,))
        if vis.shape != (phi.shape[0], 1) + phi.shape[2:]:
            raise ShapeError("visibility dims %s do not match offsets %s" % (vis.shape, phi.shape))
        if not np.all(np.isfinite(phi.data)):
            raise ValidationError("flow offsets contain non-finite values")
        if not np.all((vis.data == 0) | (vis.data == 1)):
            raise ValidationError("visibility mask must be binary")
        self.phi = phi
        self.vis = vis

    @classmethod
    def identity(cls, batch, height, width):
        """Zero offsets, everything visible."""
        return cls(np.zeros((batch, 2, height, width), dtype=np.float32),
                   np.ones((batch, 1, height, width), dtype=np.float32))

    @classmethod
    def stack(cls, flows):
        return cls(np.concatenate([f.phi.data for f in flows]), np.concatenate([f.vis.data for f in flows]))

    @classmethod
    def load(cls, prefix):
        return cls(load_tensor(prefix + PHI_SUFFIX), load_tensor(prefix + VIS_SUFFIX))

    def save(self, prefix):
        save_tensor(prefix + PHI_SUFFIX, self.phi.data)
        save_tensor(prefix + VIS_SUFFIX, self.vis.data)

    @property
    def height(self):
        return self.phi.shape[2]

    @property
    def width(self):
        return self.phi.shape[3]

    def __getitem__(self, index):
        return FlowField(self.phi.data[index:index + 1], self.vis.data[index:index + 1])

    def __repr__(self):
        return "FlowField(n=%i, %ix%i, %.1f%% visible)" % (
            self.phi.shape[0], self.height, self.width, 100.0 * self.vis.data.mean())


def scale_flow(flow, target_h, target_w):
    """
    Resample a full-resolution flow to a coarser feature scale.

    Offsets are average-pooled and rescaled to the coarse pixel units; the visibility mask is subsampled by
    nearest neighbour so it stays binary.

    Raises
    ------
    ShapeError
        If the target dims do not divide the flow dims by one common factor.
    """
    if (target_h, target_w) == (flow.height, flow.width):
        return flow
    factor = T.resize_factor(flow.height, target_h)
    if T.resize_factor(flow.width, target_w) != factor:
        raise ShapeError("flow %ix%i cannot be scaled to %ix%i" % (flow.height, flow.width, target_h, target_w))
    pooled = T.downsample_average(flow.phi, factor).data
    units = np.array([target_w / float(flow.width), target_h / float(flow.height)], dtype=pooled.dtype)
    phi = pooled * units[None, :, None, None]
    vis = T.downsample_nearest(flow.vis, factor).data
    return FlowField(phi, vis)


def gate(warped, vis):
    """Split warped features into the visible and invisible branches."""
    return warped * vis, warped * (1 - vis)


class FeatureWarp(Module):
    """Warp, gate by visibility, fuse the two branches back to ``channels`` with a residual block."""

    def __init__(self, store, prefix, rng, channels):
        super(FeatureWarp, self).__init__(store, prefix, rng)
        self.channels = channels
        self.residual = ResidualBlock(store, self.child("residual"), rng, 2 * channels, channels)

    def __call__(self, features, flow):
        return feature_warp(features, flow, self)


def feature_warp(features, flow, params):
    """
    Deform appearance features by a flow.

    Parameters
    ----------
    features : Tensor
        (n, c, h, w) appearance features.
    flow : FlowField
        Full-resolution or already scaled flow; scaled to (h, w) when needed.
    params : FeatureWarp

    Returns
    -------
    Tensor
        Warped features with the dims of ``features``.

    Raises
    ------
    ShapeError
        If the batch sizes differ or the flow cannot be scaled to the feature dims.
    """
    if flow is None:
        raise ValidationError("feature deformation needs a flow field")
    n, _, height, width = features.shape
    flow = scale_flow(flow, height, width)
    if flow.phi.shape[0] != n:
        raise ShapeError("flow batch %i does not match feature batch %i" % (flow.phi.shape[0], n))
    vis = Tensor(flow.vis.data.astype(features.dtype))
    warped = T.grid_sample_bilinear(features, Tensor(flow.phi.data.astype(features.dtype)))
    visible, invisible = gate(warped, vis)
    return params.residual(T.concat([visible, invisible]))

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
Network assemblies.

* :class:`SPATNModel` predicts the target parsing map from the two poses and the source parsing map.
* :class:`StyleEncoder` turns the source image into per-region style codes.
* :class:`SPGNetModel` renders the target image with a dual-path (appearance, pose) UNet whose decoder is a
  stack of :class:`SPGBlock` residual blocks with region-adaptive normalization.
* :class:`Discriminator` scores image patches given the source image and target pose.
"""

import logging

import numpy as np

from .deform import FeatureWarp
from .exceptions import ConfigError, ShapeError, ValidationError
from .io import load_checkpoint, save_checkpoint
from .layers import Conv2d, ConvBlock, Module, ResidualBlock
from .norm import VARIANTS, make_norm, resize_layout, resize_style
from .pose import pose_channels
from .semantics import SemanticMap, as_layout, one_hot, region_average_pool, style_broadcast
from . import tensor as T
from .tensor import DEFAULT_DTYPE, ParamStore, Tensor


LOGGER = logging.getLogger(__name__)


MAX_WIDTH_MULTIPLIER = 8
MAX_WARP_LEVELS = 5
STYLE_STAGES = 3
SPATN_INPUTS = ("parsing", "image")


class ModelConfig(object):
    """
    Architecture hyper-parameters shared by the four networks.

    Raises
    ------
    ConfigError
        If the image size is not divisible by ``2 ** depth`` or by 8, ``depth < 2`` or a choice is unknown.
    """

    FIELDS = ("image_size", "num_classes", "style_dim", "base_width", "depth", "spatn_blocks", "disc_depth",
              "sean_hidden", "sean_kernel", "norm", "spatn_input", "distance_maps", "seed")

    def __init__(self, image_size=64, num_classes=8, style_dim=32, base_width=32, depth=4, spatn_blocks=3,
                 disc_depth=3, sean_hidden=32, sean_kernel=3, norm="sean", spatn_input="parsing",
                 distance_maps=True, seed=0):
        if depth < 2:
            raise ConfigError("depth must be at least 2, got %i" % depth)
        if image_size % (2 ** depth):
            raise ConfigError("image size %i is not divisible by 2^%i" % (image_size, depth))
        if image_size % (2 ** disc_depth):
            raise ConfigError("image size %i is not divisible by 2^%i" % (image_size, disc_depth))
        if image_size % (2 ** STYLE_STAGES):
            raise ConfigError("image size %i is not divisible by 2^%i" % (image_size, STYLE_STAGES))
        if norm not in VARIANTS:
            raise ConfigError("norm must be one of %s, got %r" % (", ".join(VARIANTS), norm))
        if spatn_input not in SPATN_INPUTS:
            raise ConfigError("spatn_input must be one of %s, got %r" % (", ".join(SPATN_INPUTS), spatn_input))
        if sean_kernel not in (1, 3):
            raise ConfigError("sean_kernel must be 1 or 3, got %i" % sean_kernel)
        self.image_size = image_size
        self.num_classes = num_classes
        self.style_dim = style_dim
        self.base_width = base_width
        self.depth = depth
        self.spatn_blocks = spatn_blocks
        self.disc_depth = disc_depth
        self.sean_hidden = sean_hidden
        self.sean_kernel = sean_kernel
        self.norm = norm
        self.spatn_input = spatn_input
        self.distance_maps = bool(distance_maps)
        self.seed = seed

    @classmethod
    def from_config(cls, config):
        """Pick the architecture keys out of a RunConfig (or any mapping)."""
        return cls(**{field: config[field] for field in cls.FIELDS})

    @classmethod
    def full_scale(cls, seed=0):
        """256x256 images, 20 classes, 128-d style codes, seven decoder blocks."""
        return cls(image_size=256, num_classes=20, style_dim=128, base_width=64, depth=7, spatn_blocks=6,
                   disc_depth=3, sean_hidden=128, sean_kernel=3, seed=seed)

    @property
    def pose_channels(self):
        return pose_channels(self.distance_maps)

    @property
    def source_channels(self):
        return self.num_classes if self.spatn_input == "parsing" else 3

    @property
    def warp_levels(self):
        return min(self.depth, MAX_WARP_LEVELS)

    def width(self, level):
        return self.base_width * min(2 ** level, MAX_WIDTH_MULTIPLIER)

    def as_dict(self):
        return {field: getattr(self, field) for field in self.FIELDS}

    def __eq__(self, other):
        return isinstance(other, ModelConfig) and self.as_dict() == other.as_dict()

    def __repr__(self):
        return "ModelConfig(%s)" % ", ".join("%s=%r" % item for item in sorted(self.as_dict().items()))


def _input(x, dtype):
    """Constant inputs become tensors of the model dtype; recorded tensors of that dtype pass through."""
    if isinstance(x, Tensor):
        if x.dtype == dtype:
            return x
        return Tensor(x.data.astype(dtype))
    return Tensor(np.asarray(x, dtype=dtype))


class Model(object):
    """
    Parameters of one network in their own ParamStore.

    Parameter names are dotted paths fixed by the architecture, so checkpoints of equal configs are
    interchangeable.
    """

    tag = 0

    def __init__(self, config, dtype=DEFAULT_DTYPE):
        self.config = config
        self.store = ParamStore(dtype)
        self.rng = np.random.default_rng(np.random.SeedSequence([config.seed, self.tag]))
        self.build()
        LOGGER.debug("Built %s with %i parameters", type(self).__name__, self.store.count())

    def build(self):
        raise NotImplementedError("build not implemented for %s" % type(self).__name__)

    @property
    def dtype(self):
        return self.store.dtype

    def train(self):
        self.store.train()
        return self

    def eval(self):
        self.store.eval()
        return self

    def astype(self, dtype):
        self.store.astype(dtype)
        return self

    def save(self, path):
        save_checkpoint(self.store, path)

    def load(self, path):
        load_checkpoint(self.store, path)
        return self


# Stage one


class PATBlock(Module):
    """
    Pose-attentional transfer block.

    The pose pathway's residual branch, squashed by the logistic function, gates the semantic pathway's
    residual branch; both pathways keep their skip connections.
    """

    def __init__(self, store, prefix, rng, channels):
        super(PATBlock, self).__init__(store, prefix, rng)
        self.semantic = ResidualBlock(store, self.child("semantic"), rng, channels)
        self.pose = ResidualBlock(store, self.child("pose"), rng, channels)

    def __call__(self, semantic, pose):
        pose_branch = self.pose.branch(pose)
        attention = T.sigmoid(pose_branch)
        return semantic + self.semantic.branch(semantic) * attention, pose + pose_branch


class SPATNModel(Model):

    tag = 1

    def build(self):
        c = self.config
        rng, store = self.rng, self.store
        widths = [c.width(0), c.width(1), c.width(2)]

        def stem(name, c_in):
            return [ConvBlock(store, "%s.%i." % (name, i), rng, c_prev, width, 3, 1 if i == 0 else 2)
                    for i, (c_prev, width) in enumerate(zip([c_in] + widths[:-1], widths))]

        self.pose_stem = stem("pose_stem", 2 * c.pose_channels)
        self.source_stem = stem("source_stem", c.source_channels)
        self.blocks = [PATBlock(store, "block.%i." % i, rng, widths[2]) for i in range(c.spatn_blocks)]
        self.up = [ConvBlock(store, "up.0.", rng, widths[2], widths[1], 3, 2, transpose=True),
                   ConvBlock(store, "up.1.", rng, widths[1], widths[0], 3, 2, transpose=True)]
        self.head = Conv2d(store, "head.", rng, widths[0], c.num_classes, 3)

    def __call__(self, source_pose, target_pose, source):
        return spatn_forward(self, source_pose, target_pose, source)


def _check_pose(pose, config, name):
    if pose.ndim != 4 or pose.shape[1] != config.pose_channels:
        raise ShapeError("%s must have %i channels, got dims %s" % (name, config.pose_channels, pose.shape))


def spatn_forward(model, source_pose, target_pose, source):
    """
    Predict target parsing probabilities.

    Parameters
    ----------
    model : SPATNModel
    source_pose, target_pose : Tensor
        (n, P, H, W) pose tensors, P = 30 (or 18 without distance maps).
    source : SemanticMap or Tensor
        The source parsing map (one-hot, C channels) or, with ``spatn_input=image``, the RGB source image.

    Returns
    -------
    Tensor
        (n, C, H, W) softmax over classes.

    Raises
    ------
    ShapeError
        If a channel count does not match the model configuration.
    """
    config, dtype = model.config, model.dtype
    if isinstance(source, SemanticMap):
        source = one_hot(source, dtype)
    source = _input(source, dtype)
    source_pose, target_pose = _input(source_pose, dtype), _input(target_pose, dtype)
    _check_pose(source_pose, config, "source pose")
    _check_pose(target_pose, config, "target pose")
    if source.shape[1] != config.source_channels:
        raise ShapeError("SPATN in %s mode expects %i source channels, got %i"
                         % (config.spatn_input, config.source_channels, source.shape[1]))

    pose = T.concat([source_pose, target_pose])
    for layer in model.pose_stem:
        pose = layer(pose)
    semantic = source
    for layer in model.source_stem:
        semantic = layer(semantic)
    for block in model.blocks:
        semantic, pose = block(semantic, pose)
    for layer in model.up:
        semantic = layer(semantic)
    return T.softmax(model.head(semantic))


# Stage two


class StyleEncoder(Module):
    """Encoder-decoder from the source image to a D-channel map, pooled per source region."""

    def __init__(self, store, prefix, rng, config):
        super(StyleEncoder, self).__init__(store, prefix, rng)
        widths = [config.width(level) for level in range(STYLE_STAGES + 1)]
        self.config = config

        def block(name, c_in, c_out, stride, transpose=False, norm="instance", activation="leaky_relu"):
            return ConvBlock(store, self.child(name), rng, c_in, c_out, 3, stride, norm, activation, transpose)

        self.layers = [block("down.0", 3, widths[0], 1)]
        self.layers += [block("down.%i" % (i + 1), widths[i], widths[i + 1], 2) for i in range(STYLE_STAGES)]
        self.layers += [block("up.%i" % i, widths[STYLE_STAGES - i], widths[STYLE_STAGES - i - 1], 2, transpose=True)
                        for i in range(STYLE_STAGES)]
        self.layers += [block("out", widths[0], config.style_dim, 1, transpose=True, norm=None, activation="tanh")]

    def features(self, image):
        out = image
        for layer in self.layers:
            out = layer(out)
        return out

    def __call__(self, image, semantic_map):
        return style_encode(self, image, semantic_map)


def style_encode(encoder, image, semantic_map):
    """
    Per-region style codes of a source image.

    Returns
    -------
    StyleCodes
        (n, C, D) codes in (-1, 1); regions absent from ``semantic_map`` get zero codes.
    """
    if image.ndim != 4 or image.shape[1] != 3:
        raise ShapeError("style encoder expects an RGB image, got dims %s" % (image.shape,))
    return region_average_pool(encoder.features(_input(image, encoder.store.dtype)), semantic_map)


class SPGBlock(Module):
    """
    Decoder residual block with two region-adaptive normalizations.

    ``a = conv1x1(relu(norm(concat(f_a, f_p))))``, ``out = f_prev + conv3x3(relu(norm(concat(a, f_prev))))``.
    """

    def __init__(self, store, prefix, rng, channels, config):
        super(SPGBlock, self).__init__(store, prefix, rng)
        self.channels = channels

        def norm(name):
            return make_norm(config.norm, store, self.child(name), rng, 2 * channels, config.num_classes,
                             config.style_dim, config.sean_hidden, config.sean_kernel)

        self.norm_fuse = norm("norm_fuse")
        self.conv_fuse = Conv2d(store, self.child("conv_fuse"), rng, 2 * channels, channels, 1)
        self.norm_out = norm("norm_out")
        self.conv_out = Conv2d(store, self.child("conv_out"), rng, 2 * channels, channels, 3)

    def __call__(self, previous, appearance, pose, layout, style_map):
        for name, feature in (("appearance", appearance), ("pose", pose)):
            if feature.shape != previous.shape:
                raise ShapeError("%s feature %s does not match decoder feature %s"
                                 % (name, feature.shape, previous.shape))
        fused = self.conv_fuse(T.relu(self.norm_fuse(T.concat([appearance, pose]), layout, style_map)))
        out = self.conv_out(T.relu(self.norm_out(T.concat([fused, previous]), layout, style_map)))
        return out + previous


def spg_block(previous, appearance, pose, codes, target, params):
    """
    Apply one SPGBlock.

    Parameters
    ----------
    previous : Tensor
        Decoder feature f_{t-1}.
    appearance, pose : Tensor
        Warped appearance and pose skip features at the same scale.
    codes : StyleCodes
    target : SemanticMap or Tensor
        Target layout (labels or class probabilities).
    params : SPGBlock

    Returns
    -------
    Tensor
        Same dims as ``previous``.
    """
    layout = as_layout(target, previous.dtype)
    return params(previous, appearance, pose, layout, style_broadcast(codes, layout))


class SPGNetModel(Model):

    tag = 2

    def build(self):
        c = self.config
        rng, store = self.rng, self.store
        widths = [c.width(level) for level in range(c.depth + 1)]

        self.style = StyleEncoder(store, "style.", rng, c)
        self.appearance_stem = ConvBlock(store, "appearance.stem.", rng, 3, widths[0], 3)
        self.pose_stem = ConvBlock(store, "pose.stem.", rng, c.pose_channels, widths[0], 3)
        self.appearance_blocks, self.pose_blocks, self.warps = [], [], []
        self.appearance_down, self.pose_down = [], []
        for level, width in enumerate(widths):
            self.appearance_blocks.append(ResidualBlock(store, "appearance.res.%i." % level, rng, width))
            self.pose_blocks.append(ResidualBlock(store, "pose.res.%i." % level, rng, width))
            if level < c.warp_levels:
                self.warps.append(FeatureWarp(store, "appearance.warp.%i." % level, rng, width))
            if level < c.depth:
                self.appearance_down.append(
                    ConvBlock(store, "appearance.down.%i." % level, rng, width, widths[level + 1], 3, 2))
                self.pose_down.append(ConvBlock(store, "pose.down.%i." % level, rng, width, widths[level + 1], 3, 2))
        self.fuse = Conv2d(store, "bottleneck.", rng, 2 * widths[-1], widths[-1], 1)
        self.up, self.blocks = [], []
        for level in range(c.depth):
            self.up.append(Conv2d(store, "decoder.up.%i." % level, rng, widths[level + 1], 4 * widths[level], 3))
            self.blocks.append(SPGBlock(store, "decoder.block.%i." % level, rng, widths[level], c))
        self.head = Conv2d(store, "head.", rng, widths[0], 3, 7)

    def __call__(self, target_pose, source_image, source_map, target, flow):
        return spgnet_forward(self, target_pose, source_image, source_map, target, flow)


def spgnet_forward(model, target_pose, source_image, source_map, target, flow):
    """
    Render the source person in the target pose.

    Parameters
    ----------
    model : SPGNetModel
    target_pose : Tensor
        (n, P, H, W) target pose tensor.
    source_image : Tensor
        (n, 3, H, W) in [0, 1].
    source_map : SemanticMap
        Source parsing, the regions the style codes are pooled over.
    target : SemanticMap or Tensor
        Target parsing: ground truth or SPATN argmax, or softmax probabilities when both stages train jointly.
    flow : FlowField
        Source-to-target flow at full resolution.

    Returns
    -------
    Tensor
        (n, 3, H, W) image in [0, 1].

    Raises
    ------
    ValidationError
        If ``flow`` is missing.
    ShapeError
        On mismatched dims.
    """
    if flow is None:
        raise ValidationError("the generator needs a flow field")
    config, dtype = model.config, model.dtype
    target_pose = _input(target_pose, dtype)
    source_image = _input(source_image, dtype)
    _check_pose(target_pose, config, "target pose")
    size = source_image.shape[2]
    if source_image.shape[2:] != (config.image_size, config.image_size) or target_pose.shape[2:] != (size, size):
        raise ShapeError("inputs must be %ix%i" % (config.image_size, config.image_size))

    codes = model.style(source_image, source_map)
    layout = _input(as_layout(target, dtype), dtype)
    style_map = style_broadcast(codes, layout)

    appearance = model.appearance_stem(source_image)
    pose = model.pose_stem(target_pose)
    skips = []
    for level in range(config.depth + 1):
        appearance = model.appearance_blocks[level](appearance)
        pose = model.pose_blocks[level](pose)
        if level < config.warp_levels:
            appearance = model.warps[level](appearance, flow)
        skips.append((appearance, pose))
        if level < config.depth:
            appearance = model.appearance_down[level](appearance)
            pose = model.pose_down[level](pose)

    h = model.fuse(T.concat(skips[-1]))
    for level in reversed(range(config.depth)):
        h = T.pixel_shuffle(model.up[level](T.relu(h)), 2)
        height, width = h.shape[2:]
        level_layout = resize_layout(layout, height, width)
        level_style = resize_style(style_map, height, width)
        appearance, pose = skips[level]
        h = model.blocks[level](h, appearance, pose, level_layout, level_style)
    return (T.tanh(model.head(h)) + 1) * 0.5


# Adversary


class Discriminator(Model):
    """Patch discriminator conditioned on the source image and the target pose."""

    tag = 3

    def build(self):
        c = self.config
        rng, store = self.rng, self.store
        channels = 6 + c.pose_channels
        self.stages = []
        for i in range(c.disc_depth):
            width = c.width(i)
            self.stages.append(ConvBlock(store, "stage.%i." % i, rng, channels, width, 4, 2,
                                         norm=None if i == 0 else "batch", activation="leaky_relu", pad=1))
            channels = width
        self.head = Conv2d(store, "head.", rng, channels, 1, 3)

    def __call__(self, image, source_image, target_pose):
        return discriminate(self, image, source_image, target_pose)


def discriminate(model, image, source_image, target_pose):
    """
    Patch logits (no sigmoid) of dims (n, 1, H / 2^k, W / 2^k) for ``disc_depth`` k.

    Raises
    ------
    ShapeError
        If the three inputs do not align.
    """
    dtype = model.dtype
    image, source_image = _input(image, dtype), _input(source_image, dtype)
    target_pose = _input(target_pose, dtype)
    _check_pose(target_pose, model.config, "target pose")
    out = T.concat([image, source_image, target_pose])
    for stage in model.stages:
        out = stage(out)
    return model.head(out)

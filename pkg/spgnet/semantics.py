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
Semantic parsing maps, per-region style codes and the parsing cross-entropy.
"""

import logging

import numpy as np

from .exceptions import ShapeError, ValidationError
from .io import read_pgm, write_pgm
from . import tensor as T
from .tensor import Function, Tensor


LOGGER = logging.getLogger(__name__)


BACKGROUND = 0
MAX_CLASSES = 256
PROBABILITY_FLOOR = 1e-12
NORMALIZATION_TOLERANCE = 1e-3


class SemanticMap(object):
    """
    A batch of integer label maps.

    Attributes
    ----------
    labels : numpy.ndarray
        (n, H, W) uint8 labels in [0, num_classes); a single (H, W) map is promoted to n=1.
    num_classes : int
    """

    def __init__(self, labels, num_classes):
        labels = np.asarray(labels)
        if labels.ndim == 2:
            labels = labels[None]
        if labels.ndim != 3:
            raise ShapeError("label maps must be (H, W) or (n, H, W), got dims %s" % (labels.shape,))
        if not 1 <= num_classes <= MAX_CLASSES:
            raise ValidationError("class count must be in [1, %i], got %i" % (MAX_CLASSES, num_classes))
        if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
            bad = labels.min() if labels.min() < 0 else labels.max()
            raise ValidationError("label %i outside [0, %i)" % (bad, num_classes))
        self.labels = labels.astype(np.uint8)
        self.num_classes = num_classes

    @classmethod
    def stack(cls, maps):
        return cls(np.concatenate([m.labels for m in maps]), maps[0].num_classes)

    @classmethod
    def from_probabilities(cls, probabilities):
        """Argmax over the channel dimension of a (n, C, H, W) tensor."""
        data = probabilities.data if isinstance(probabilities, Tensor) else np.asarray(probabilities)
        return cls(data.argmax(axis=1), data.shape[1])

    @classmethod
    def read(cls, path, num_classes):
        return cls(read_pgm(path), num_classes)

    def write(self, path, index=0):
        write_pgm(path, self.labels[index])

    @property
    def batch(self):
        return self.labels.shape[0]

    @property
    def height(self):
        return self.labels.shape[1]

    @property
    def width(self):
        return self.labels.shape[2]

    def __getitem__(self, index):
        return SemanticMap(self.labels[index:index + 1], self.num_classes)

    def foreground(self):
        """(n, 1, H, W) float32 mask of all non-background labels."""
        return (self.labels != BACKGROUND)[:, None].astype(np.float32)

    def histogram(self):
        return np.bincount(self.labels.ravel(), minlength=self.num_classes)

    def __repr__(self):
        return "SemanticMap(n=%i, %ix%i, C=%i)" % (self.batch, self.height, self.width, self.num_classes)


class StyleCodes(object):
    """
    Per-region style vectors.

    Attributes
    ----------
    codes : Tensor
        (n, C, D) region codes; rows of absent regions are zero.
    present : numpy.ndarray
        (n, C) booleans, regions occupied in the source map.
    """

    def __init__(self, codes, present):
        self.codes = codes
        self.present = np.asarray(present, dtype=bool)

    @property
    def num_classes(self):
        return self.codes.shape[1]

    @property
    def dim(self):
        return self.codes.shape[2]

    def to_array(self, index=0):
        """Codes of one sample as a (C, D, 1, 1) array, the SPGT layout."""
        return self.codes.data[index][:, :, None, None]


def one_hot(semantic_map, dtype=np.float32):
    """
    Indicator channels of a label map.

    Returns
    -------
    Tensor
        (n, C, H, W); channel l is 1 where the label is l.
    """
    labels = semantic_map.labels
    if labels.size and labels.max() >= semantic_map.num_classes:
        raise ValidationError("label %i outside [0, %i)" % (labels.max(), semantic_map.num_classes))
    classes = np.arange(semantic_map.num_classes, dtype=labels.dtype)[None, :, None, None]
    return Tensor((labels[:, None] == classes).astype(dtype))


def as_layout(target, dtype=np.float32):
    """A label map as one-hot channels; soft (n, C, H, W) probabilities pass through."""
    if isinstance(target, SemanticMap):
        return one_hot(target, dtype)
    return target


class RegionPool(Function):

    def forward(self, features, masks):
        if features.shape[0] != masks.shape[0] or features.shape[2:] != masks.shape[2:]:
            raise ShapeError("features %s and label map %s do not align" % (features.shape, masks.shape))
        self.masks = masks
        self.counts = masks.sum(axis=(2, 3))
        sums = np.einsum("ndhw,nchw->ncd", features, masks, optimize=True)
        self.scale = (1.0 / np.maximum(self.counts, 1))[:, :, None].astype(features.dtype)
        return (sums * self.scale).astype(features.dtype, copy=False)

    def backward(self, grad):
        grad_features = np.einsum("ncd,nchw->ndhw", grad * self.scale, self.masks, optimize=True)
        return grad_features, None


class StyleBroadcast(Function):

    def forward(self, codes, layout):
        if codes.shape[:2] != layout.shape[:2]:
            raise ShapeError("codes for %i classes cannot fill a %i-class layout" % (codes.shape[1], layout.shape[1]))
        self.codes, self.layout = codes, layout
        return np.einsum("ncd,nchw->ndhw", codes, layout, optimize=True)

    def backward(self, grad):
        grad_codes = np.einsum("ndhw,nchw->ncd", grad, self.layout, optimize=True)
        grad_layout = np.einsum("ndhw,ncd->nchw", grad, self.codes, optimize=True)
        return grad_codes, grad_layout


def region_average_pool(features, semantic_map):
    """
    Region-wise average pooling.

    Parameters
    ----------
    features : Tensor
        (n, D, H, W) feature map.
    semantic_map : SemanticMap
        Labels with the same spatial dims.

    Returns
    -------
    StyleCodes
        ``code[l]`` is the mean feature over pixels labelled l; absent regions get zero codes.

    Raises
    ------
    ShapeError
        If the spatial dims differ.
    """
    masks = one_hot(semantic_map, features.dtype)
    if features.shape[2:] != masks.shape[2:] or features.shape[0] != masks.shape[0]:
        raise ShapeError("features %s and label map %s do not align" % (features.shape, masks.shape))
    codes = RegionPool.apply(features, masks)
    return StyleCodes(codes, masks.data.sum(axis=(2, 3)) > 0)


def style_broadcast(codes, target):
    """
    Spread style codes over a target layout.

    Parameters
    ----------
    codes : StyleCodes
    target : SemanticMap or Tensor
        Target labels, or (n, C, H, W) class probabilities for a soft layout.

    Returns
    -------
    Tensor
        (n, D, H, W) style map; each pixel carries the code of its target label.

    Raises
    ------
    ShapeError
        If the class counts differ.
    """
    layout = as_layout(target, codes.codes.dtype)
    if layout.shape[1] != codes.num_classes:
        raise ShapeError("codes for %i classes cannot fill a %i-class layout"
                         % (codes.num_classes, layout.shape[1]))
    return StyleBroadcast.apply(codes.codes, layout)


def cross_entropy(prediction, truth):
    """
    Mean per-pixel parsing cross-entropy ``-mean log p(truth)``.

    Parameters
    ----------
    prediction : Tensor
        (n, C, H, W) softmax outputs, clamped to >= 1e-12 before the log.
    truth : SemanticMap

    Returns
    -------
    Tensor
        Scalar loss.

    Raises
    ------
    ValidationError
        If channel sums deviate from 1 by more than 1e-3.
    ShapeError
        If the dims do not match.
    """
    if prediction.shape[1] != truth.num_classes or prediction.shape[2:] != (truth.height, truth.width) \
            or prediction.shape[0] != truth.batch:
        raise ShapeError("prediction %s does not match label map %r" % (prediction.shape, truth))
    sums = prediction.data.sum(axis=1)
    if np.abs(sums - 1).max() > NORMALIZATION_TOLERANCE:
        raise ValidationError("prediction is not normalized over classes (max deviation %.3g)"
                              % np.abs(sums - 1).max())
    target = one_hot(truth, prediction.dtype)
    picked = T.sum(T.clip(prediction, low=PROBABILITY_FLOOR) * target, axis=1)
    return -T.mean(T.log(picked))

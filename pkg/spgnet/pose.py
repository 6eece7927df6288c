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
Pose representation: 18 keypoints, joint heat maps and per-limb distance maps.

A pose tensor has 30 channels: 18 Gaussian joint heat maps followed by 12 skeleton distance maps
``M_m(x, y) = exp(kappa * d((x, y), L_m))`` where ``d`` is the Euclidean distance to limb segment ``L_m``.
Pixel (x, y) sits at integer coordinates (column, row).
"""

import logging

import numpy as np
from cachetools import LRUCache, cached

from .exceptions import FormatError, ValidationError
from .io import atomic_open
from .tensor import Tensor


LOGGER = logging.getLogger(__name__)


JOINT_NAMES = ("nose", "neck",
               "r_shoulder", "r_elbow", "r_wrist",
               "l_shoulder", "l_elbow", "l_wrist",
               "r_hip", "r_knee", "r_ankle",
               "l_hip", "l_knee", "l_ankle",
               "r_eye", "l_eye", "r_ear", "l_ear")
NUM_JOINTS = len(JOINT_NAMES)
JOINT_INDEX = {name: index for index, name in enumerate(JOINT_NAMES)}

# COCO-style skeleton without the nose-neck segment
DEFAULT_LIMBS = ((1, 2), (1, 5),
                 (2, 3), (3, 4), (5, 6), (6, 7),
                 (1, 8), (8, 9), (9, 10),
                 (1, 11), (11, 12), (12, 13))
NUM_LIMBS = 12

KAPPA = -0.1
SIGMA_DIVISOR = 42.0
POSE_CHANNELS = NUM_JOINTS + NUM_LIMBS


LRU_CACHE = LRUCache(maxsize=32)


class Keypoints(object):
    """
    The 18 joints of one pose.

    Attributes
    ----------
    coords : numpy.ndarray
        (18, 2) float64 positions (x, y) in pixels.
    visible : numpy.ndarray
        (18,) booleans.
    """

    def __init__(self, coords, visible=None):
        coords = np.array(coords, dtype=np.float64)
        if coords.shape != (NUM_JOINTS, 2):
            raise ValidationError("expected %i joints with (x, y), got dims %s" % (NUM_JOINTS, coords.shape))
        if visible is None:
            visible = np.ones(NUM_JOINTS, dtype=bool)
        visible = np.array(visible, dtype=bool)
        if visible.shape != (NUM_JOINTS,):
            raise ValidationError("expected %i visibility flags" % NUM_JOINTS)
        self.coords = coords
        self.visible = visible

    @classmethod
    def from_array(cls, array):
        array = np.asarray(array, dtype=np.float64)
        return cls(array[:, :2], array[:, 2] > 0)

    def to_array(self):
        return np.column_stack([self.coords, self.visible.astype(np.float64)])

    def translate(self, dx, dy):
        return Keypoints(self.coords + np.array([dx, dy]), self.visible)

    def in_bounds(self, height, width):
        """Whether every visible joint lies inside a height x width image."""
        x, y = self.coords[self.visible].T
        return bool(np.all((x >= 0) & (x <= width - 1) & (y >= 0) & (y <= height - 1)))

    def __eq__(self, other):
        return isinstance(other, Keypoints) and np.array_equal(self.to_array(), other.to_array())

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return "Keypoints(%i visible)" % self.visible.sum()


class LimbSet(object):
    """
    The 12 ordered joint pairs forming the skeleton.

    Raises
    ------
    ValidationError
        If there are not exactly 12 pairs, an index is out of range or a pair repeats.
    """

    def __init__(self, pairs=DEFAULT_LIMBS):
        pairs = tuple((int(a), int(b)) for a, b in pairs)
        if len(pairs) != NUM_LIMBS:
            raise ValidationError("a skeleton has %i limbs, got %i" % (NUM_LIMBS, len(pairs)))
        seen = set()
        for a, b in pairs:
            if not (0 <= a < NUM_JOINTS and 0 <= b < NUM_JOINTS):
                raise ValidationError("limb (%i, %i) references a joint outside [0, %i)" % (a, b, NUM_JOINTS))
            key = frozenset((a, b))
            if key in seen:
                raise ValidationError("limb (%i, %i) is listed twice" % (a, b))
            seen.add(key)
        self.pairs = pairs

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)


@cached(LRU_CACHE)
def pixel_grid(height, width):
    """Read-only (ys, xs) float64 coordinate grids of an image."""
    ys, xs = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    ys.flags.writeable = False
    xs.flags.writeable = False
    return ys, xs


def default_sigma(height):
    return height / SIGMA_DIVISOR


def segment_distance(xs, ys, start, end):
    """Exact Euclidean distance from points (xs, ys) to the closed segment start-end."""
    ax, ay = start
    dx, dy = end[0] - ax, end[1] - ay
    length2 = dx * dx + dy * dy
    if length2 > 0:
        t = np.clip(((xs - ax) * dx + (ys - ay) * dy) / length2, 0.0, 1.0)
    else:
        t = np.zeros_like(xs)
    return np.hypot(xs - (ax + t * dx), ys - (ay + t * dy))


def render_heatmaps(keypoints, height, width, sigma=None):
    """
    Gaussian joint heat maps.

    Parameters
    ----------
    keypoints : Keypoints
    height, width : int
    sigma : float, optional
        Gaussian width in pixels; ``height / 42`` by default.

    Returns
    -------
    Tensor
        Dims (1, 18, height, width); channel j peaks at 1 on joint j, invisible joints give zero channels.
    """
    if sigma is None:
        sigma = default_sigma(height)
    if sigma <= 0:
        raise ValidationError("heat map sigma must be positive, got %r" % sigma)
    ys, xs = pixel_grid(height, width)
    maps = np.zeros((1, NUM_JOINTS, height, width), dtype=np.float32)
    for joint in np.flatnonzero(keypoints.visible):
        x, y = keypoints.coords[joint]
        maps[0, joint] = np.exp(-((xs - x) ** 2 + (ys - y) ** 2) / (2 * sigma * sigma))
    return Tensor(maps)


def distance_map(keypoints, limbs, height, width, kappa=KAPPA):
    """
    Skeleton distance maps ``exp(kappa * distance to limb)``.

    Parameters
    ----------
    keypoints : Keypoints
    limbs : LimbSet
    height, width : int
    kappa : float
        Negative decay; -0.1 by default.

    Returns
    -------
    Tensor
        Dims (1, 12, height, width); a limb with an invisible endpoint gives a zero channel.

    Raises
    ------
    ValidationError
        If ``kappa`` is not negative.
    """
    if kappa >= 0:
        raise ValidationError("kappa must be negative, got %r" % kappa)
    if limbs is None:
        limbs = LimbSet()
    ys, xs = pixel_grid(height, width)
    maps = np.zeros((1, len(limbs), height, width), dtype=np.float32)
    for m, (a, b) in enumerate(limbs):
        if not (keypoints.visible[a] and keypoints.visible[b]):
            continue
        maps[0, m] = np.exp(kappa * segment_distance(xs, ys, keypoints.coords[a], keypoints.coords[b]))
    return Tensor(maps)


def pose_channels(distance_maps=True):
    return POSE_CHANNELS if distance_maps else NUM_JOINTS


def build_pose_tensor(keypoints, limbs=None, height=64, width=64, sigma=None, kappa=KAPPA, distance_maps=True):
    """
    The 30-channel pose tensor: 18 heat maps then 12 distance maps.

    With ``distance_maps=False`` only the 18 heat-map channels are returned.
    """
    heatmaps = render_heatmaps(keypoints, height, width, sigma)
    if not distance_maps:
        return heatmaps
    distances = distance_map(keypoints, limbs, height, width, kappa)
    return Tensor(np.concatenate([heatmaps.data, distances.data], axis=1))


def read_keypoints(path):
    """
    Parse a keypoint file: 18 lines ``x y v`` with v in {0, 1}.

    Raises
    ------
    FormatError
        Naming the offending line on a wrong line count or a malformed field.
    """
    with open(path) as handle:
        lines = [line for line in handle.read().splitlines() if line.strip()]
    if len(lines) != NUM_JOINTS:
        raise FormatError("%s: expected %i keypoint lines, found %i" % (path, NUM_JOINTS, len(lines)))
    rows = []
    for number, line in enumerate(lines, 1):
        fields = line.split()
        if len(fields) != 3:
            raise FormatError("%s line %i: expected 'x y v', got %r" % (path, number, line))
        try:
            x, y, v = float(fields[0]), float(fields[1]), int(fields[2])
        except ValueError:
            raise FormatError("%s line %i: non-numeric field in %r" % (path, number, line))
        if v not in (0, 1):
            raise FormatError("%s line %i: visibility must be 0 or 1" % (path, number))
        rows.append((x, y, v))
    return Keypoints.from_array(rows)


def write_keypoints(path, keypoints):
    with atomic_open(path, "w") as handle:
        for (x, y), v in zip(keypoints.coords, keypoints.visible):
            handle.write("%r %r %i\n" % (float(x), float(y), int(v)))

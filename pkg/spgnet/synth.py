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
Synthetic stick-person pairs with exact parsing maps and ground-truth flow.

A person is eleven rigid parts (capsules and discs) painted in a fixed order. Each identity has its own body
scale and a texture per part, defined in the part's local frame, so the same part looks identical under any
rigid motion. The flow of a target pixel is the rigid map of its part back to the source; it is visible
when all four bilinear neighbours of the source sample belong to the same part.
"""

import logging
import os

import numpy as np
from pandas import DataFrame, read_csv

from .deform import FlowField
from .exceptions import ConfigError, FormatError
from .io import read_ppm, write_ppm
from .pose import JOINT_INDEX, NUM_JOINTS, Keypoints, pixel_grid, read_keypoints, segment_distance, \
    write_keypoints
from .semantics import SemanticMap
from .tensor import Tensor


LOGGER = logging.getLogger(__name__)


IMAGE_SIZES = (32, 64, 128)
MIN_CLASSES = 5
MAX_CLASSES = 12

PARTS = ("hair", "head", "torso",
         "r_upper", "r_fore", "l_upper", "l_fore",
         "r_thigh", "r_shin", "l_thigh", "l_shin")
PART_INDEX = {name: index + 1 for index, name in enumerate(PARTS)}
PAINT_ORDER = ("l_thigh", "l_shin", "r_thigh", "r_shin", "torso", "hair", "head",
               "l_upper", "l_fore", "r_upper", "r_fore")
# applied in order until the requested class count is reached
MERGES = (("l_upper", "r_upper"), ("l_fore", "r_fore"), ("l_thigh", "r_thigh"), ("l_shin", "r_shin"),
          ("r_fore", "r_upper"), ("r_shin", "r_thigh"), ("hair", "head"))

LIMBS = {"r_upper": ("r_shoulder", "r_elbow", "arm"), "r_fore": ("r_elbow", "r_wrist", "forearm"),
         "l_upper": ("l_shoulder", "l_elbow", "arm"), "l_fore": ("l_elbow", "l_wrist", "forearm"),
         "r_thigh": ("r_hip", "r_knee", "thigh"), "r_shin": ("r_knee", "r_ankle", "shin"),
         "l_thigh": ("l_hip", "l_knee", "thigh"), "l_shin": ("l_knee", "l_ankle", "shin")}

# fractions of the image size at body scale 1
PROPORTIONS = {"shoulder": 0.11, "hip": 0.07, "torso": 0.28, "upper_arm": 0.15, "forearm": 0.13,
               "thigh": 0.18, "shin": 0.16, "nose": 0.09, "eye": 0.025, "ear": 0.05}
RADII = {"arm": 0.035, "forearm": 0.03, "thigh": 0.045, "shin": 0.04, "torso": 0.095, "head": 0.065,
         "hair": 0.072}
HAIR_OFFSET = 0.03
NECK_Y = 0.22
MAX_POSE_DRAWS = 100
MANIFEST = "manifest.csv"


def class_table(num_classes):
    """
    Map part indices (0 = background) to labels in [0, num_classes).

    Raises
    ------
    ConfigError
        If ``num_classes`` is outside [5, 12].
    """
    if not MIN_CLASSES <= num_classes <= MAX_CLASSES:
        raise ConfigError("synthetic persons support %i to %i classes, got %i"
                          % (MIN_CLASSES, MAX_CLASSES, num_classes))
    owner = {name: name for name in PARTS}
    for source, into in MERGES[:MAX_CLASSES - num_classes]:
        for name in PARTS:
            if owner[name] == source:
                owner[name] = owner[into]
    representatives = []
    for name in PARTS:
        if owner[name] not in representatives:
            representatives.append(owner[name])
    table = np.zeros(len(PARTS) + 1, dtype=np.uint8)
    for name in PARTS:
        table[PART_INDEX[name]] = 1 + representatives.index(owner[name])
    return table


class Identity(object):
    """Body scale and per-part texture of one synthetic person."""

    def __init__(self, rng, size):
        self.size = size
        self.scale = rng.uniform(0.9, 1.05)
        self.background = rng.uniform(0.05, 0.95, 3)
        self.textures = {}
        for name in PARTS:
            self.textures[name] = {"base": rng.uniform(0.15, 0.85, 3),
                                   "amplitude": rng.uniform(-0.12, 0.12, 3),
                                   "period": size * rng.uniform(0.3, 0.6),
                                   "angle": rng.uniform(0, np.pi),
                                   "phase": rng.uniform(0, 2 * np.pi)}

    def length(self, key):
        return PROPORTIONS[key] * self.size * self.scale

    def radius(self, key):
        return RADII[key] * self.size * self.scale

    def colour(self, name, u, v):
        """Texture of part ``name`` at local coordinates (u, v), shape (..., 3)."""
        texture = self.textures[name]
        phase = 2 * np.pi * (u * np.cos(texture["angle"]) + v * np.sin(texture["angle"])) / texture["period"] \
            + texture["phase"]
        return np.clip(texture["base"] + texture["amplitude"] * np.sin(phase)[..., None], 0, 1)


def _direction(side, angle):
    return np.array([side * np.sin(angle), np.cos(angle)])


def sample_pose(rng, identity, crossed=False):
    """
    Draw a pose inside the image.

    Arm and leg angles are measured from straight down, positive away from the body midline. Crossed poses
    fold both forearms across the torso.
    """
    size = identity.size
    for _ in range(MAX_POSE_DRAWS):
        coords = np.zeros((NUM_JOINTS, 2))
        neck = np.array([size * (0.5 + rng.uniform(-0.05, 0.05)), size * (NECK_Y + rng.uniform(-0.02, 0.02))])
        joints = {"neck": neck}
        nose = neck + [0, -identity.length("nose")]
        joints.update(nose=nose,
                      r_eye=nose + [-identity.length("eye"), -identity.length("eye")],
                      l_eye=nose + [identity.length("eye"), -identity.length("eye")],
                      r_ear=nose + [-identity.length("ear"), 0], l_ear=nose + [identity.length("ear"), 0])
        for prefix, side in (("r", -1), ("l", 1)):
            shoulder = neck + [side * identity.length("shoulder"), 0]
            if crossed:
                upper = rng.uniform(0.0, 0.35)
                fore = upper - rng.uniform(1.7, 2.3)
            else:
                upper = rng.uniform(0.15, 1.7)
                fore = upper + rng.uniform(-0.4, 1.2)
            elbow = shoulder + identity.length("upper_arm") * _direction(side, upper)
            hip = neck + [side * identity.length("hip"), identity.length("torso")]
            thigh = rng.uniform(-0.1, 0.4)
            knee = hip + identity.length("thigh") * _direction(side, thigh)
            joints.update({prefix + "_shoulder": shoulder, prefix + "_elbow": elbow,
                           prefix + "_wrist": elbow + identity.length("forearm") * _direction(side, fore),
                           prefix + "_hip": hip, prefix + "_knee": knee,
                           prefix + "_ankle": knee + identity.length("shin") * _direction(
                               side, thigh + rng.uniform(-0.35, 0.1))})
        for name, position in joints.items():
            coords[JOINT_INDEX[name]] = position
        keypoints = Keypoints(coords)
        if keypoints.in_bounds(size, size):
            return keypoints
    raise ConfigError("could not draw an in-bounds pose at size %i" % size)


def part_frame(name, keypoints, identity):
    """Origin and rotation (columns: along-part axis, normal) of a part in image coordinates."""
    coords = keypoints.coords
    if name in LIMBS:
        start, end, _ = LIMBS[name]
        origin = coords[JOINT_INDEX[start]]
        axis = coords[JOINT_INDEX[end]] - origin
        axis = axis / np.hypot(*axis)
        return origin, np.array([[axis[0], -axis[1]], [axis[1], axis[0]]])
    return coords[JOINT_INDEX["neck"]], np.eye(2)


def part_mask(name, keypoints, identity, xs, ys):
    coords = keypoints.coords
    if name in LIMBS:
        start, end, kind = LIMBS[name]
        return segment_distance(xs, ys, coords[JOINT_INDEX[start]], coords[JOINT_INDEX[end]]) \
            <= identity.radius(kind)
    neck = coords[JOINT_INDEX["neck"]]
    if name == "torso":
        top = neck + [0, 0.04 * identity.size * identity.scale]
        bottom = neck + [0, identity.length("torso") - 0.03 * identity.size * identity.scale]
        return segment_distance(xs, ys, top, bottom) <= identity.radius("torso")
    centre = coords[JOINT_INDEX["nose"]]
    if name == "hair":
        centre = centre + [0, -HAIR_OFFSET * identity.size * identity.scale]
    return segment_distance(xs, ys, centre, centre) <= identity.radius(name)


def render_parts(keypoints, identity):
    """(S, S) part indices, background 0, painted in occlusion order."""
    ys, xs = pixel_grid(identity.size, identity.size)
    parts = np.zeros((identity.size, identity.size), dtype=np.uint8)
    for name in PAINT_ORDER:
        parts[part_mask(name, keypoints, identity, xs, ys)] = PART_INDEX[name]
    return parts


def render_image(keypoints, parts, identity):
    """(1, 3, S, S) float32 image in [0, 1]."""
    ys, xs = pixel_grid(identity.size, identity.size)
    image = np.empty((identity.size, identity.size, 3))
    image[...] = identity.background
    for name in PARTS:
        inside = parts == PART_INDEX[name]
        if not inside.any():
            continue
        origin, rotation = part_frame(name, keypoints, identity)
        dx, dy = xs[inside] - origin[0], ys[inside] - origin[1]
        u = rotation[0, 0] * dx + rotation[1, 0] * dy
        v = rotation[0, 1] * dx + rotation[1, 1] * dy
        image[inside] = identity.colour(name, u, v)
    return image.transpose(2, 0, 1)[None].astype(np.float32)


def rigid_flow(source, target, source_parts, target_parts, identity):
    """
    Backward flow from target to source with the visibility of each target pixel.

    Returns
    -------
    FlowField
    """
    size = identity.size
    ys, xs = pixel_grid(size, size)
    phi = np.zeros((2, size, size))
    vis = np.zeros((size, size), dtype=bool)
    for name in PARTS:
        index = PART_INDEX[name]
        inside = target_parts == index
        if not inside.any():
            continue
        origin_t, rotation_t = part_frame(name, target, identity)
        origin_s, rotation_s = part_frame(name, source, identity)
        transform = rotation_s.dot(rotation_t.T)
        offsets = np.stack([xs[inside] - origin_t[0], ys[inside] - origin_t[1]])
        sample = origin_s[:, None] + transform.dot(offsets)
        phi[0][inside] = sample[0] - xs[inside]
        phi[1][inside] = sample[1] - ys[inside]

        x0, y0 = np.floor(sample[0]).astype(np.int64), np.floor(sample[1]).astype(np.int64)
        visible = np.ones(x0.shape, dtype=bool)
        for dy in (0, 1):
            for dx in (0, 1):
                xx, yy = x0 + dx, y0 + dy
                within = (xx >= 0) & (xx < size) & (yy >= 0) & (yy < size)
                same = np.zeros(x0.shape, dtype=bool)
                same[within] = source_parts[yy[within], xx[within]] == index
                visible &= same
        vis[inside] = visible
    return FlowField(phi[None].astype(np.float32), vis[None, None].astype(np.float32))


class SyntheticSample(object):
    """
    One source/target pair of the same identity.

    Attributes
    ----------
    index, identity : int
    source_keypoints, target_keypoints : Keypoints
    source_map, target_map : SemanticMap
    source_image, target_image : Tensor
        (1, 3, S, S) in [0, 1].
    flow : FlowField
        Backward flow target -> source with visibility.
    crossed : bool
        Whether the target pose folds the arms across the torso.
    """

    def __init__(self, index, identity, source_keypoints, target_keypoints, source_map, target_map, source_image,
                 target_image, flow, crossed=False):
        self.index = index
        self.identity = identity
        self.source_keypoints = source_keypoints
        self.target_keypoints = target_keypoints
        self.source_map = source_map
        self.target_map = target_map
        self.source_image = source_image
        self.target_image = target_image
        self.flow = flow
        self.crossed = crossed

    @property
    def size(self):
        return self.target_map.height

    @property
    def num_classes(self):
        return self.target_map.num_classes

    def __repr__(self):
        return "SyntheticSample(%i, identity=%i, %ix%i)" % (self.index, self.identity, self.size, self.size)


def _check_request(size, num_classes):
    if size not in IMAGE_SIZES:
        raise ConfigError("synthetic images must be one of %s pixels, got %i" % (IMAGE_SIZES, size))
    class_table(num_classes)


def make_identity(identity, size, seed):
    return Identity(np.random.default_rng(np.random.SeedSequence([seed, 0, identity])), size)


def make_sample(index, size, num_classes, seed=0, pairs_per_identity=4, crossed_fraction=0.2, identity=None):
    """Generate sample ``index`` of a dataset; samples are independent of each other given the seed."""
    _check_request(size, num_classes)
    identity_id = index // pairs_per_identity
    if identity is None:
        identity = make_identity(identity_id, size, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1, index]))
    crossed = bool(rng.random() < crossed_fraction)
    source = sample_pose(rng, identity, crossed=bool(rng.random() < crossed_fraction))
    target = sample_pose(rng, identity, crossed=crossed)
    source_parts = render_parts(source, identity)
    target_parts = render_parts(target, identity)
    table = class_table(num_classes)
    return SyntheticSample(
        index, identity_id, source, target,
        SemanticMap(table[source_parts], num_classes), SemanticMap(table[target_parts], num_classes),
        Tensor(render_image(source, source_parts, identity)), Tensor(render_image(target, target_parts, identity)),
        rigid_flow(source, target, source_parts, target_parts, identity), crossed)


def synth_dataset(n, size=64, num_classes=8, seed=0, pairs_per_identity=4, crossed_fraction=0.2):
    """
    Generate ``n`` synthetic pairs; consecutive groups of ``pairs_per_identity`` share an identity.

    Raises
    ------
    ConfigError
        If the size is not 32, 64 or 128 or the class count is outside [5, 12].
    """
    _check_request(size, num_classes)
    if n < 1 or pairs_per_identity < 1:
        raise ConfigError("need at least one sample and one pair per identity")
    if not 0 <= crossed_fraction <= 1:
        raise ConfigError("crossed_fraction must be in [0, 1], got %r" % crossed_fraction)
    identities = {}
    samples = []
    for index in range(n):
        identity_id = index // pairs_per_identity
        if identity_id not in identities:
            identities[identity_id] = make_identity(identity_id, size, seed)
        samples.append(make_sample(index, size, num_classes, seed, pairs_per_identity, crossed_fraction,
                                   identities[identity_id]))
    LOGGER.info("Generated %i synthetic pairs of %i identities (%ix%i, %i classes)",
                n, len(identities), size, size, num_classes)
    return samples


def split_by_identity(samples, val_fraction=0.1):
    """
    Hold out the last ``val_fraction`` of identities.

    Returns
    -------
    (list, list)
        Training and validation samples with disjoint identities; both are non-empty when there are at least
        two identities.
    """
    identities = sorted({sample.identity for sample in samples})
    if len(identities) < 2:
        return list(samples), list(samples)
    held_out = min(max(1, int(round(val_fraction * len(identities)))), len(identities) - 1)
    validation = set(identities[-held_out:])
    return [s for s in samples if s.identity not in validation], [s for s in samples if s.identity in validation]


def _stem(directory, index):
    return os.path.join(directory, "%06i" % index)


def write_dataset(samples, directory):
    """
    Write every sample as PPM/PGM/keypoint/SPGT files plus a manifest.

    Returns
    -------
    DataFrame
        The manifest (sample, identity, crossed, size, num_classes).
    """
    for sample in samples:
        stem = _stem(directory, sample.index)
        write_ppm(stem + "_source.ppm", sample.source_image.data)
        write_ppm(stem + "_target.ppm", sample.target_image.data)
        sample.source_map.write(stem + "_source.pgm")
        sample.target_map.write(stem + "_target.pgm")
        write_keypoints(stem + "_source.pose.txt", sample.source_keypoints)
        write_keypoints(stem + "_target.pose.txt", sample.target_keypoints)
        sample.flow.save(stem + "_flow")
    manifest = DataFrame([(s.index, s.identity, s.crossed, s.size, s.num_classes) for s in samples],
                         columns=["sample", "identity", "crossed", "size", "num_classes"])
    manifest.to_csv(os.path.join(directory, MANIFEST), index=False)
    LOGGER.info("Wrote %i samples to %s", len(samples), directory)
    return manifest


def read_dataset(directory):
    """
    Load samples written by :func:`write_dataset`.

    Images are re-quantized to 8 bits by the PPM round trip.

    Raises
    ------
    FormatError
        If the manifest is missing or malformed.
    """
    path = os.path.join(directory, MANIFEST)
    if not os.path.exists(path):
        raise FormatError("no %s in %s" % (MANIFEST, directory))
    manifest = read_csv(path)
    missing = {"sample", "identity", "crossed", "size", "num_classes"} - set(manifest.columns)
    if missing:
        raise FormatError("%s lacks column %s" % (path, sorted(missing)[0]))
    samples = []
    for row in manifest.itertuples(index=False):
        stem = _stem(directory, row.sample)
        samples.append(SyntheticSample(
            int(row.sample), int(row.identity),
            read_keypoints(stem + "_source.pose.txt"), read_keypoints(stem + "_target.pose.txt"),
            SemanticMap.read(stem + "_source.pgm", int(row.num_classes)),
            SemanticMap.read(stem + "_target.pgm", int(row.num_classes)),
            Tensor(read_ppm(stem + "_source.ppm")), Tensor(read_ppm(stem + "_target.ppm")),
            FlowField.load(stem + "_flow"), bool(row.crossed)))
    LOGGER.info("Read %i samples from %s", len(samples), directory)
    return samples

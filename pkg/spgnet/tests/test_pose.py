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

import numpy as np
import pytest

from spgnet.exceptions import FormatError, ValidationError
from spgnet.pose import JOINT_INDEX, KAPPA, NUM_JOINTS, NUM_LIMBS, POSE_CHANNELS, Keypoints, LimbSet, \
    build_pose_tensor, default_sigma, distance_map, pixel_grid, read_keypoints, render_heatmaps, \
    segment_distance, write_keypoints


def test_read_keypoints(keypoints):
    assert keypoints.coords.shape == (NUM_JOINTS, 2)
    assert keypoints.visible.sum() == 16
    assert tuple(keypoints.coords[JOINT_INDEX["neck"]]) == (32.0, 16.0)
    assert not keypoints.visible[JOINT_INDEX["r_ear"]]


def test_keypoint_file_round_trip(keypoints, tmpdir):
    path = str(tmpdir.join("pose.txt"))
    write_keypoints(path, keypoints)
    assert read_keypoints(path) == keypoints


def test_malformed_keypoint_line_is_named(keypoints_path, tmpdir):
    with open(keypoints_path) as handle:
        lines = handle.read().splitlines()
    lines[4] = "23.0 oops 1"
    path = tmpdir.join("bad.txt")
    path.write("\n".join(lines))
    with pytest.raises(FormatError) as error:
        read_keypoints(str(path))
    assert "line 5" in str(error.value)


def test_wrong_joint_count(tmpdir):
    path = tmpdir.join("short.txt")
    path.write("1 2 1\n")
    with pytest.raises(FormatError):
        read_keypoints(str(path))


def test_translate_and_bounds(keypoints):
    assert keypoints.in_bounds(64, 64)
    moved = keypoints.translate(40, 0)
    assert not moved.in_bounds(64, 64)
    np.testing.assert_array_equal(moved.coords[:, 0], keypoints.coords[:, 0] + 40)


def test_limb_set_validation():
    assert len(LimbSet()) == NUM_LIMBS
    with pytest.raises(ValidationError):
        LimbSet(((0, 1),))
    with pytest.raises(ValidationError):
        LimbSet(((0, 1), (1, 0)) + LimbSet().pairs[2:])


def test_segment_distance(segment):
    start = (segment.start_x, segment.start_y)
    end = (segment.end_x, segment.end_y)
    value = segment_distance(np.array(segment.point_x), np.array(segment.point_y), start, end)
    assert float(value) == pytest.approx(segment.distance, abs=1e-12)


def test_pixel_grid_is_cached_and_read_only():
    ys, xs = pixel_grid(4, 6)
    assert pixel_grid(4, 6)[0] is ys
    assert xs.shape == (4, 6)
    with pytest.raises(ValueError):
        xs[0, 0] = 1


def test_heatmaps_peak_on_joints(keypoints):
    maps = render_heatmaps(keypoints, 64, 64).data
    assert maps.shape == (1, NUM_JOINTS, 64, 64)
    neck = JOINT_INDEX["neck"]
    assert maps[0, neck, 16, 32] == pytest.approx(1.0)
    assert maps[0, neck].max() == maps[0, neck, 16, 32]
    assert not maps[0, JOINT_INDEX["r_ear"]].any()
    assert default_sigma(64) == pytest.approx(64 / 42.0)


def test_distance_map_values():
    coords = np.zeros((NUM_JOINTS, 2))
    coords[1], coords[2] = (5.0, 20.0), (25.0, 20.0)
    visible = np.zeros(NUM_JOINTS, dtype=bool)
    visible[[1, 2]] = True
    maps = distance_map(Keypoints(coords, visible), LimbSet(), 32, 32).data
    assert maps[0, 0, 20, 15] == pytest.approx(1.0)
    assert maps[0, 0, 30, 15] == pytest.approx(0.367879, abs=1e-6)
    assert not maps[0, 1:].any()


def test_distance_map_needs_negative_kappa(keypoints):
    with pytest.raises(ValidationError):
        distance_map(keypoints, LimbSet(), 16, 16, kappa=0.1)


def test_pose_tensor_channels(keypoints):
    full = build_pose_tensor(keypoints, height=32, width=32)
    assert full.shape == (1, POSE_CHANNELS, 32, 32)
    heatmaps_only = build_pose_tensor(keypoints, height=32, width=32, distance_maps=False)
    assert heatmaps_only.shape == (1, NUM_JOINTS, 32, 32)
    np.testing.assert_array_equal(full.data[:, :NUM_JOINTS], heatmaps_only.data)
    assert 0 < full.data.max() <= 1
    assert KAPPA == -0.1

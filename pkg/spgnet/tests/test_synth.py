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

from spgnet import tensor as T
from spgnet.exceptions import ConfigError, FormatError
from spgnet.synth import PARTS, class_table, make_sample, read_dataset, split_by_identity, synth_dataset, \
    write_dataset
from spgnet.tensor import Tensor


def test_class_table_without_merges():
    table = class_table(12)
    assert table[0] == 0
    assert sorted(table[1:]) == list(range(1, len(PARTS) + 1))


@pytest.mark.parametrize("num_classes", range(5, 13))
def test_class_table_uses_every_label(num_classes):
    assert set(class_table(num_classes)) == set(range(num_classes))


@pytest.mark.parametrize("num_classes", [4, 13])
def test_class_count_range(num_classes):
    with pytest.raises(ConfigError):
        class_table(num_classes)


def test_invalid_requests():
    with pytest.raises(ConfigError):
        synth_dataset(2, size=48)
    with pytest.raises(ConfigError):
        synth_dataset(0, size=32)
    with pytest.raises(ConfigError):
        synth_dataset(2, size=32, crossed_fraction=1.5)


def test_samples_are_reproducible(toy_samples):
    again = make_sample(5, 32, 5, seed=0, pairs_per_identity=4, crossed_fraction=0.5)
    original = toy_samples[5]
    assert again.identity == original.identity == 1
    assert again.target_keypoints == original.target_keypoints
    np.testing.assert_array_equal(again.target_image.data, original.target_image.data)
    np.testing.assert_array_equal(again.flow.phi.data, original.flow.phi.data)


def test_seed_changes_the_data():
    first = make_sample(0, 32, 5, seed=0)
    second = make_sample(0, 32, 5, seed=1)
    assert not np.array_equal(first.target_image.data, second.target_image.data)


def test_sample_contents(toy_samples):
    for sample in toy_samples:
        assert sample.size == 32
        assert sample.source_keypoints.in_bounds(32, 32)
        assert sample.target_keypoints.in_bounds(32, 32)
        assert sample.target_image.shape == (1, 3, 32, 32)
        assert 0 <= sample.target_image.data.min() and sample.target_image.data.max() <= 1
        assert sample.flow.phi.shape == (1, 2, 32, 32)
        background = sample.target_map.labels[0] == 0
        assert not sample.flow.vis.data[0, 0][background].any()


def test_every_class_appears(toy_samples):
    labels = np.concatenate([sample.target_map.labels.ravel() for sample in toy_samples])
    assert set(np.unique(labels)) == set(range(5))


def test_flow_reconstructs_visible_pixels(toy_samples):
    for sample in toy_samples:
        warped = T.grid_sample_bilinear(sample.source_image, sample.flow.phi).data
        visible = sample.flow.vis.data[:, 0] > 0
        if not visible.any():
            continue
        error = np.abs(warped - sample.target_image.data).transpose(1, 0, 2, 3)[:, visible]
        assert error.mean() <= 0.02


@pytest.mark.parametrize("fraction, expected", [(0.0, False), (1.0, True)])
def test_crossed_fraction_extremes(fraction, expected):
    samples = synth_dataset(3, size=32, num_classes=5, crossed_fraction=fraction)
    assert all(sample.crossed is expected for sample in samples)


def test_split_by_identity(toy_samples):
    train, validation = split_by_identity(toy_samples, 0.25)
    assert {s.identity for s in train} == {0}
    assert {s.identity for s in validation} == {1}
    assert len(train) + len(validation) == len(toy_samples)


def test_split_with_one_identity(toy_samples):
    train, validation = split_by_identity(toy_samples[:4])
    assert len(train) == len(validation) == 4


def test_dataset_files(toy_samples, tmpdir):
    directory = str(tmpdir.join("data"))
    manifest = write_dataset(toy_samples[:2], directory)
    assert list(manifest.columns) == ["sample", "identity", "crossed", "size", "num_classes"]
    loaded = read_dataset(directory)
    assert len(loaded) == 2
    for original, restored in zip(toy_samples, loaded):
        assert restored.index == original.index
        assert restored.crossed == original.crossed
        assert restored.target_keypoints == original.target_keypoints
        np.testing.assert_array_equal(restored.target_map.labels, original.target_map.labels)
        np.testing.assert_allclose(restored.source_image.data, original.source_image.data, atol=0.5 / 255 + 1e-6)
        np.testing.assert_array_equal(restored.flow.vis.data, original.flow.vis.data)


def test_missing_manifest(tmpdir):
    with pytest.raises(FormatError):
        read_dataset(str(tmpdir))


def test_stacked_images_are_tensors(toy_samples):
    assert isinstance(toy_samples[0].source_image, Tensor)

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
from spgnet.exceptions import ShapeError, ValidationError
from spgnet.semantics import SemanticMap, StyleCodes, cross_entropy, one_hot, region_average_pool, \
    style_broadcast
from spgnet.tensor import ComputationTape, Tensor


@pytest.fixture()
def halves():
    labels = np.zeros((4, 4), dtype=np.uint8)
    labels[:, 2:] = 2
    return SemanticMap(labels, 3)


def test_single_map_is_promoted(halves):
    assert halves.labels.shape == (1, 4, 4)
    assert (halves.batch, halves.height, halves.width) == (1, 4, 4)
    np.testing.assert_array_equal(halves.histogram(), [8, 0, 8])


def test_out_of_range_label():
    with pytest.raises(ValidationError) as error:
        SemanticMap(np.full((2, 2), 5), 5)
    assert "label 5 outside" in str(error.value)
    with pytest.raises(ValidationError) as error:
        SemanticMap(np.array([[0, 3], [-2, 4]]), 5)
    assert "label -2 outside" in str(error.value)
    with pytest.raises(ValidationError):
        SemanticMap(np.zeros((2, 2)), 0)


def test_one_hot_partitions_the_image(halves):
    layout = one_hot(halves).data
    assert layout.shape == (1, 3, 4, 4)
    np.testing.assert_array_equal(layout.sum(axis=1), 1)
    assert not layout[0, 1].any()


def test_from_probabilities_takes_argmax(halves):
    probabilities = one_hot(halves).data * 0.8 + 0.1
    np.testing.assert_array_equal(SemanticMap.from_probabilities(probabilities).labels, halves.labels)


def test_pgm_round_trip(halves, tmpdir):
    path = str(tmpdir.join("map.pgm"))
    halves.write(path)
    np.testing.assert_array_equal(SemanticMap.read(path, 3).labels, halves.labels)


def test_region_pool_averages_each_region(halves):
    features = np.zeros((1, 2, 4, 4))
    features[0, 0, :, :2] = 3.0
    features[0, 1] = np.arange(16).reshape(4, 4)
    codes = region_average_pool(Tensor(features), halves)
    np.testing.assert_allclose(codes.codes.data[0, 0], [3.0, np.mean([0, 1, 4, 5, 8, 9, 12, 13])])
    np.testing.assert_allclose(codes.codes.data[0, 1], [0.0, 0.0])
    np.testing.assert_array_equal(codes.present, [[True, False, True]])
    assert codes.to_array().shape == (3, 2, 1, 1)


def test_region_pool_dims_must_align(halves):
    with pytest.raises(ShapeError):
        region_average_pool(Tensor(np.zeros((1, 2, 8, 8))), halves)


def test_broadcast_is_piecewise_constant(halves):
    codes = StyleCodes(Tensor(np.array([[[1.0, 2.0], [5.0, 5.0], [-1.0, 0.5]]])), [[True, False, True]])
    style = style_broadcast(codes, halves).data
    np.testing.assert_array_equal(style[0, :, 0, 0], [1.0, 2.0])
    np.testing.assert_array_equal(style[0, :, 3, 3], [-1.0, 0.5])


def test_broadcast_class_mismatch(halves):
    codes = StyleCodes(Tensor(np.zeros((1, 4, 2))), np.zeros((1, 4)))
    with pytest.raises(ShapeError):
        style_broadcast(codes, halves)


def test_soft_layout_mixes_codes(halves):
    codes = StyleCodes(Tensor(np.array([[[2.0], [0.0], [4.0]]])), np.ones((1, 3)))
    soft = Tensor(np.full((1, 3, 4, 4), 1 / 3.0))
    np.testing.assert_allclose(style_broadcast(codes, soft).data, 2.0)


def test_cross_entropy_of_a_perfect_prediction(halves):
    prediction = one_hot(halves, np.float64)
    assert cross_entropy(prediction, halves).item() == pytest.approx(0.0, abs=1e-9)


def test_cross_entropy_of_a_uniform_prediction(halves):
    prediction = Tensor(np.full((1, 3, 4, 4), 1 / 3.0))
    assert cross_entropy(prediction, halves).item() == pytest.approx(np.log(3.0))


def test_cross_entropy_rejects_unnormalized(halves):
    with pytest.raises(ValidationError):
        cross_entropy(Tensor(np.full((1, 3, 4, 4), 0.5)), halves)


def test_cross_entropy_gradient_flows_through_softmax(halves, double_store):
    logits = double_store.add("logits", np.zeros((1, 3, 4, 4)))
    with ComputationTape() as tape:
        loss = cross_entropy(T.softmax(logits), halves)
    tape.backward(loss)
    # d/dz of -log softmax is p - onehot
    expected = (1 / 3.0 - one_hot(halves, np.float64).data) / 16
    np.testing.assert_allclose(logits.grad, expected, atol=1e-12)

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

from spgnet.deform import FlowField
from spgnet.exceptions import ConfigError, ShapeError, ValidationError
from spgnet.layers import Conv2d
from spgnet.models import Discriminator, ModelConfig, SPATNModel, SPGNetModel, StyleEncoder
from spgnet.semantics import SemanticMap, one_hot
from spgnet.tensor import ParamStore, Tensor


@pytest.fixture()
def inputs(rng):
    return {
        "source_pose": Tensor(rng.random((2, 30, 16, 16))),
        "target_pose": Tensor(rng.random((2, 30, 16, 16))),
        "source_image": Tensor(rng.random((2, 3, 16, 16))),
        "source_map": SemanticMap(rng.integers(0, 4, size=(2, 16, 16)), 5),
        "target_map": SemanticMap(rng.integers(0, 5, size=(2, 16, 16)), 5),
        "flow": FlowField.identity(2, 16, 16),
    }


def _config(tiny_model_config, **changes):
    fields = tiny_model_config.as_dict()
    fields.update(changes)
    return ModelConfig(**fields)


@pytest.mark.parametrize("changes", [
    {"image_size": 20},
    {"image_size": 12, "disc_depth": 2},
    {"depth": 1},
    {"disc_depth": 5},
    {"norm": "batch"},
    {"spatn_input": "pose"},
    {"sean_kernel": 2},
])
def test_invalid_model_config(tiny_model_config, changes):
    with pytest.raises(ConfigError):
        _config(tiny_model_config, **changes)


def test_model_config_from_mapping(tiny_model_config):
    assert ModelConfig.from_config(tiny_model_config.as_dict()) == tiny_model_config
    assert [tiny_model_config.width(level) for level in range(6)] == [4, 8, 16, 32, 32, 32]
    assert tiny_model_config.pose_channels == 30
    assert _config(tiny_model_config, distance_maps=False).pose_channels == 18


def test_full_scale_config():
    config = ModelConfig.full_scale()
    assert (config.image_size, config.num_classes, config.style_dim, config.depth) == (256, 20, 128, 7)
    assert config.warp_levels == 5


def test_spatn_predicts_a_distribution(tiny_model_config, inputs):
    model = SPATNModel(tiny_model_config)
    out = model(inputs["source_pose"], inputs["target_pose"], inputs["source_map"])
    assert out.shape == (2, 5, 16, 16)
    np.testing.assert_allclose(out.data.sum(axis=1), 1, atol=1e-5)


def test_spatn_image_mode(tiny_model_config, inputs):
    model = SPATNModel(_config(tiny_model_config, spatn_input="image"))
    out = model(inputs["source_pose"], inputs["target_pose"], inputs["source_image"])
    assert out.shape == (2, 5, 16, 16)
    with pytest.raises(ShapeError):
        model(inputs["source_pose"], inputs["target_pose"], inputs["source_map"])


def test_spatn_checks_pose_channels(tiny_model_config, inputs):
    model = SPATNModel(_config(tiny_model_config, distance_maps=False))
    with pytest.raises(ShapeError):
        model(inputs["source_pose"], inputs["target_pose"], inputs["source_map"])
    heatmaps = Tensor(inputs["source_pose"].data[:, :18])
    assert model(heatmaps, heatmaps, inputs["source_map"]).shape == (2, 5, 16, 16)


def test_initialization_follows_the_seed(tiny_model_config):
    first, second = SPATNModel(tiny_model_config), SPATNModel(tiny_model_config)
    other = SPATNModel(_config(tiny_model_config, seed=1))
    for (name, a), (_, b), (_, c) in zip(first.store.items(), second.store.items(), other.store.items()):
        np.testing.assert_array_equal(a.data, b.data)
    assert any(not np.array_equal(a.data, c.data)
               for (_, a), (_, c) in zip(first.store.items(), other.store.items()))


def test_checkpoint_restores_outputs(tiny_model_config, inputs, tmpdir):
    path = str(tmpdir.join("spatn.ckpt"))
    model = SPATNModel(tiny_model_config).eval()
    model.save(path)
    restored = SPATNModel(_config(tiny_model_config, seed=3)).load(path).eval()
    args = inputs["source_pose"], inputs["target_pose"], inputs["source_map"]
    np.testing.assert_array_equal(model(*args).data, restored(*args).data)


def test_style_codes(tiny_model_config, inputs, rng):
    encoder = StyleEncoder(ParamStore(), "style.", rng, tiny_model_config)
    codes = encoder(inputs["source_image"], inputs["source_map"])
    assert codes.codes.shape == (2, 5, 4)
    assert np.all(np.abs(codes.codes.data) < 1)
    assert not codes.present[:, 4].any()
    assert not codes.codes.data[:, 4].any()
    with pytest.raises(ShapeError):
        encoder(Tensor(np.zeros((2, 1, 16, 16))), inputs["source_map"])


def test_style_encoder_reaches_an_eighth_of_the_image(tiny_model_config, inputs, rng):
    encoder = StyleEncoder(ParamStore(), "style.", rng, tiny_model_config)
    downs = [layer for layer in encoder.layers if layer.conv.stride == 2 and isinstance(layer.conv, Conv2d)]
    assert len(downs) == 3
    out = inputs["source_image"]
    sizes = []
    for layer in encoder.layers:
        out = layer(out)
        sizes.append(out.shape[2])
    assert min(sizes) == 2
    assert out.shape == (2, 4, 16, 16)


def test_generator_renders_an_image(tiny_model_config, norm_variant, inputs):
    model = SPGNetModel(_config(tiny_model_config, norm=norm_variant))
    out = model(inputs["target_pose"], inputs["source_image"], inputs["source_map"], inputs["target_map"],
                inputs["flow"])
    assert out.shape == (2, 3, 16, 16)
    assert np.all((out.data >= 0) & (out.data <= 1))


def test_generator_accepts_soft_layouts(tiny_model_config, inputs):
    model = SPGNetModel(tiny_model_config).eval()
    args = inputs["target_pose"], inputs["source_image"], inputs["source_map"]
    hard = model(*(args + (inputs["target_map"], inputs["flow"])))
    soft = model(*(args + (one_hot(inputs["target_map"]), inputs["flow"])))
    np.testing.assert_allclose(hard.data, soft.data, atol=1e-6)


def test_generator_needs_a_flow(tiny_model_config, inputs):
    model = SPGNetModel(tiny_model_config)
    with pytest.raises(ValidationError):
        model(inputs["target_pose"], inputs["source_image"], inputs["source_map"], inputs["target_map"], None)


def test_generator_checks_image_size(tiny_model_config, inputs):
    model = SPGNetModel(_config(tiny_model_config, image_size=32))
    with pytest.raises(ShapeError):
        model(inputs["target_pose"], inputs["source_image"], inputs["source_map"], inputs["target_map"],
              inputs["flow"])


def test_discriminator_patch_logits(tiny_model_config, inputs):
    model = Discriminator(tiny_model_config)
    out = model(inputs["source_image"], inputs["source_image"], inputs["target_pose"])
    assert out.shape == (2, 1, 4, 4)

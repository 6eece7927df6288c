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
from spgnet.exceptions import ShapeError
from spgnet.norm import SEAN, PlainNorm, SEANParams, make_norm, resize_layout, sean, spade_variant
from spgnet.semantics import SemanticMap, one_hot
from spgnet.tensor import Tensor


@pytest.fixture()
def conditions(rng):
    h = Tensor(rng.normal(size=(2, 4, 8, 8)))
    semantic = SemanticMap(rng.integers(0, 5, size=(2, 16, 16)), 5)
    style = Tensor(rng.normal(size=(2, 3, 16, 16)))
    return h, semantic, style


@pytest.fixture()
def sean_params(double_store, rng):
    return SEANParams(double_store, "sean.", rng, 4, 5, 3, hidden=6)


def test_variants_keep_feature_dims(norm_variant, double_store, rng, conditions):
    h, semantic, style = conditions
    layer = make_norm(norm_variant, double_store, "norm.", rng, 4, 5, 3, hidden=6)
    assert layer(h, semantic, style).shape == h.shape


def test_unknown_variant(double_store, rng):
    with pytest.raises(ValueError):
        make_norm("batch", double_store, "norm.", rng, 4, 5, 3)


def test_plain_variant_ignores_conditions(double_store, rng, conditions):
    h, semantic, style = conditions
    layer = make_norm("none", double_store, "norm.", rng, 4, 5, 3)
    assert isinstance(layer, PlainNorm)
    np.testing.assert_allclose(layer(h, semantic, style).data, layer(h).data)


def test_identity_modulation_is_instance_norm(sean_params, conditions):
    h, semantic, style = conditions
    sean_params.semantic.set_constant(1, 0)
    sean_params.style.set_constant(1, 0)
    np.testing.assert_allclose(sean(h, semantic, style, sean_params).data, T.instance_norm(h).data)


def test_saturated_blend_selects_semantic_path(sean_params, conditions):
    h, semantic, style = conditions
    sean_params.theta_alpha.data[...] = 50
    sean_params.theta_beta.data[...] = 50
    np.testing.assert_allclose(sean(h, semantic, style, sean_params).data,
                               spade_variant(h, semantic, sean_params).data, atol=1e-12)


def test_saturated_blend_selects_style_path(sean_params, conditions):
    h, semantic, style = conditions
    sean_params.theta_alpha.data[...] = -50
    sean_params.theta_beta.data[...] = -50
    alpha, beta = sean_params.style(T.downsample_average(style, 2))
    expected = alpha.data * T.instance_norm(h).data + beta.data
    np.testing.assert_allclose(sean(h, semantic, style, sean_params).data, expected, atol=1e-12)


def test_soft_layout_matches_hard_labels(sean_params, conditions):
    h, semantic, style = conditions
    soft = one_hot(semantic, np.float64)
    np.testing.assert_allclose(sean(h, soft, style, sean_params).data,
                               sean(h, semantic, style, sean_params).data)


def test_layout_needs_an_integer_factor(conditions):
    _, semantic, _ = conditions
    with pytest.raises(ShapeError):
        resize_layout(one_hot(semantic), 6, 6)


def test_channel_mismatch(double_store, rng, conditions):
    h, semantic, style = conditions
    params = make_norm(SEAN, double_store, "wide.", rng, 7, 5, 3, hidden=6)
    with pytest.raises(ShapeError):
        params(h, semantic, style)

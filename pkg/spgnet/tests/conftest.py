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
import importlib_resources

from pandas import read_csv

from spgnet.config import RunConfig
from spgnet.models import ModelConfig
from spgnet.pose import read_keypoints
from spgnet.synth import synth_dataset
from spgnet.tensor import ParamStore


FIXTURES = "spgnet.tests.fixtures"


@pytest.fixture()
def rng():
    return np.random.default_rng(7)


@pytest.fixture()
def double_store():
    return ParamStore(np.float64)


@pytest.fixture()
def tiny_model_config():
    return ModelConfig(image_size=16, num_classes=5, style_dim=4, base_width=4, depth=2, spatn_blocks=1,
                       disc_depth=2, sean_hidden=4)


@pytest.fixture(params=["sean", "spade", "none"])
def norm_variant(request):
    return request.param


@pytest.fixture()
def toy_config_path():
    with importlib_resources.path(FIXTURES, "toy.cfg") as path:
        yield str(path)


@pytest.fixture()
def toy_config(toy_config_path):
    return RunConfig.from_file(toy_config_path, environ={})


@pytest.fixture(scope="session")
def toy_samples():
    return synth_dataset(8, 32, 5, seed=0, pairs_per_identity=4, crossed_fraction=0.5)


@pytest.fixture()
def keypoints_path():
    with importlib_resources.path(FIXTURES, "pose.txt") as path:
        yield str(path)


@pytest.fixture()
def keypoints(keypoints_path):
    return read_keypoints(keypoints_path)


with importlib_resources.open_text(FIXTURES, "segments.tsv") as handle:
    segments = read_csv(handle, sep="\t", index_col=0)


@pytest.fixture(params=segments.index)
def segment(request):
    return segments.loc[request.param]


with importlib_resources.open_text(FIXTURES, "objectives.tsv") as handle:
    objectives = read_csv(handle, sep="\t", index_col=0)


@pytest.fixture(params=objectives.index)
def objective(request):
    return objectives.loc[request.param]

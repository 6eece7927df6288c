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

import pytest

from spgnet.config import DEFAULTS, RunConfig, parse_assignment, read_config_file, sidecar_path
from spgnet.exceptions import ConfigError


def test_defaults():
    config = RunConfig(environ={})
    assert config["lr"] == 2e-4
    assert config.lambda_ce == 10.0
    assert config.sigma is None
    assert [key for key, _ in config.items()] == list(DEFAULTS)


def test_seed_from_environment():
    assert RunConfig(environ={"SPG_SEED": "17"}).seed == 17
    assert RunConfig(environ={"SPG_SEED": ""}).seed == 0


def test_file_beats_environment_and_overrides_beat_file(toy_config_path):
    config = RunConfig.from_file(toy_config_path, [("batch_size", "3")], environ={"SPG_SEED": "5"})
    assert config.image_size == 32
    assert config.batch_size == 3
    assert config.seed == 5


def test_toy_config(toy_config):
    assert (toy_config.num_classes, toy_config.depth, toy_config.iterations) == (5, 2, 2)
    assert toy_config.validate() is toy_config


@pytest.mark.parametrize("key, value, expected", [
    ("distance_maps", "off", False),
    ("distance_maps", "Yes", True),
    ("iterations", "1e3", 1000),
    ("lr", "0.5", 0.5),
    ("norm", " spade ", "spade"),
])
def test_coercion(key, value, expected):
    assert RunConfig([(key, value)], environ={})[key] == expected


@pytest.mark.parametrize("key, value", [
    ("distance_maps", "maybe"),
    ("iterations", "2.5"),
    ("lr", "fast"),
])
def test_bad_values(key, value):
    with pytest.raises(ConfigError):
        RunConfig([(key, value)], environ={})


def test_unknown_key():
    with pytest.raises(ConfigError):
        RunConfig({"learning_rate": 1}, environ={})
    with pytest.raises(ConfigError):
        RunConfig(environ={})["learning_rate"]
    with pytest.raises(AttributeError):
        RunConfig(environ={}).learning_rate


def test_parse_assignment():
    assert parse_assignment("seed = 4") == ("seed", "4")
    with pytest.raises(ConfigError):
        parse_assignment("seed")


def test_malformed_file_line_is_named(tmpdir):
    path = tmpdir.join("bad.cfg")
    path.write("# comment\nseed=1\nlr 0.1\n")
    with pytest.raises(ConfigError) as error:
        read_config_file(str(path))
    assert "line 3" in str(error.value)


@pytest.mark.parametrize("changes", [
    {"image_size": 40},
    {"image_size": 12, "depth": 2},
    {"depth": 1},
    {"kappa": 0.1},
    {"lambda_l1": -1},
    {"batch_size": 0},
    {"val_fraction": 1.5},
])
def test_validation(changes):
    with pytest.raises(ConfigError):
        RunConfig(changes, environ={}).validate()


def test_copy_is_independent(toy_config):
    clone = toy_config.copy(seed=9)
    assert clone.seed == 9
    assert toy_config.seed == 0
    assert clone != toy_config
    assert clone.copy(seed=0) == toy_config


def test_write_and_read_back(toy_config, tmpdir):
    path = str(tmpdir.join("run.ckpt"))
    toy_config.write(sidecar_path(path))
    assert RunConfig.from_file(path + ".cfg", environ={}) == toy_config

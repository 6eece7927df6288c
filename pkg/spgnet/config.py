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
Flat ``key=value`` run configuration.

Precedence, lowest first: built-in defaults, the ``SPG_SEED`` environment variable (seed only), a config file,
explicit overrides.
"""

import logging
import os
from collections import OrderedDict

from .exceptions import ConfigError
from .io import atomic_open


LOGGER = logging.getLogger(__name__)


SEED_VARIABLE = "SPG_SEED"

IMAGE_SIZE = "image_size"
NUM_CLASSES = "num_classes"
STYLE_DIM = "style_dim"
BASE_WIDTH = "base_width"
DEPTH = "depth"
SPATN_BLOCKS = "spatn_blocks"
DISC_DEPTH = "disc_depth"
SEAN_HIDDEN = "sean_hidden"
SEAN_KERNEL = "sean_kernel"
NORM = "norm"
SPATN_INPUT = "spatn_input"
DISTANCE_MAPS = "distance_maps"
HEATMAP_SIGMA = "heatmap_sigma"
KAPPA = "kappa"
LAMBDA_CE = "lambda_ce"
LAMBDA_L1 = "lambda_l1"
LAMBDA_PERC = "lambda_perc"
LAMBDA_ADV = "lambda_adv"
LR = "lr"
LR_DISC = "lr_disc"
BATCH_SIZE = "batch_size"
ITERATIONS = "iterations"
STAGE1_ITERATIONS = "stage1_iterations"
VAL_EVERY = "val_every"
PATIENCE = "patience"
DATASET_SIZE = "dataset_size"
PAIRS_PER_IDENTITY = "pairs_per_identity"
CROSSED_FRACTION = "crossed_fraction"
VAL_FRACTION = "val_fraction"
DATA_DIR = "data_dir"
SEED = "seed"

DEFAULTS = OrderedDict([
    (IMAGE_SIZE, 64),
    (NUM_CLASSES, 8),
    (STYLE_DIM, 32),
    (BASE_WIDTH, 32),
    (DEPTH, 4),
    (SPATN_BLOCKS, 3),
    (DISC_DEPTH, 3),
    (SEAN_HIDDEN, 32),
    (SEAN_KERNEL, 3),
    (NORM, "sean"),
    (SPATN_INPUT, "parsing"),
    (DISTANCE_MAPS, True),
    (HEATMAP_SIGMA, 0.0),
    (KAPPA, -0.1),
    (LAMBDA_CE, 10.0),
    (LAMBDA_L1, 1.0),
    (LAMBDA_PERC, 1.0),
    (LAMBDA_ADV, 0.01),
    (LR, 2e-4),
    (LR_DISC, 2e-5),
    (BATCH_SIZE, 4),
    (ITERATIONS, 4000),
    (STAGE1_ITERATIONS, 2000),
    (VAL_EVERY, 100),
    (PATIENCE, 5),
    (DATASET_SIZE, 500),
    (PAIRS_PER_IDENTITY, 4),
    (CROSSED_FRACTION, 0.2),
    (VAL_FRACTION, 0.1),
    (DATA_DIR, ""),
    (SEED, 0),
])

TRUE_WORDS = ("1", "true", "yes", "on")
FALSE_WORDS = ("0", "false", "no", "off")


def _coerce(key, value):
    default = DEFAULTS[key]
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        word = str(value).strip().lower()
        if word in TRUE_WORDS:
            return True
        if word in FALSE_WORDS:
            return False
        raise ConfigError("%s expects a boolean, got %r" % (key, value))
    try:
        if isinstance(default, int):
            number = float(value)
            if number != int(number):
                raise ValueError(value)
            return int(number)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError("%s expects a %s, got %r" % (key, type(default).__name__, value))
    return str(value).strip()


def parse_assignment(text, origin="override"):
    """
    Split ``key=value``.

    Raises
    ------
    ConfigError
        If there is no ``=`` or the key is unknown.
    """
    if "=" not in text:
        raise ConfigError("%s: expected key=value, got %r" % (origin, text))
    key, value = text.split("=", 1)
    key = key.strip()
    if key not in DEFAULTS:
        raise ConfigError("%s: unknown key %r" % (origin, key))
    return key, value.strip()


class RunConfig(object):
    """
    Resolved settings of one run.

    Values are reachable by item (``config["lr"]``) or attribute (``config.lr``).

    Raises
    ------
    ConfigError
        On unknown keys, values of the wrong type and inconsistent settings.
    """

    def __init__(self, values=None, environ=None):
        self._values = OrderedDict(DEFAULTS)
        environ = os.environ if environ is None else environ
        if environ.get(SEED_VARIABLE):
            self.set(SEED, environ[SEED_VARIABLE])
        if values:
            self.update(values)

    @classmethod
    def from_file(cls, path, overrides=None, environ=None):
        config = cls(environ=environ)
        config.update(read_config_file(path))
        if overrides:
            config.update(overrides)
        return config

    def set(self, key, value):
        if key not in DEFAULTS:
            raise ConfigError("unknown configuration key %r" % key)
        self._values[key] = _coerce(key, value)

    def update(self, values):
        items = values.items() if hasattr(values, "items") else values
        for key, value in items:
            self.set(key, value)
        return self

    def copy(self, **overrides):
        clone = RunConfig(environ={})
        clone._values = OrderedDict(self._values)
        clone.update(overrides)
        return clone

    def __getitem__(self, key):
        try:
            return self._values[key]
        except KeyError:
            raise ConfigError("unknown configuration key %r" % key)

    def __getattr__(self, key):
        if key.startswith("_"):
            raise AttributeError(key)
        try:
            return self._values[key]
        except KeyError:
            raise AttributeError(key)

    def __contains__(self, key):
        return key in self._values

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self._values == other._values

    def __ne__(self, other):
        return not self == other

    def items(self):
        return list(self._values.items())

    @property
    def sigma(self):
        """Heat-map width; 0 selects the size-relative default."""
        return self._values[HEATMAP_SIGMA] or None

    def validate(self):
        if self[IMAGE_SIZE] % (2 ** max(self[DEPTH], 3)) or self[DEPTH] < 2:
            raise ConfigError("image_size %i must be divisible by 8 and by 2^depth with depth >= 2 (depth %i)"
                              % (self[IMAGE_SIZE], self[DEPTH]))
        if self[KAPPA] >= 0:
            raise ConfigError("kappa must be negative, got %r" % self[KAPPA])
        for key in (LAMBDA_CE, LAMBDA_L1, LAMBDA_PERC, LAMBDA_ADV, LR, LR_DISC, HEATMAP_SIGMA):
            if self[key] < 0:
                raise ConfigError("%s must be non-negative, got %r" % (key, self[key]))
        for key in (BATCH_SIZE, VAL_EVERY, PATIENCE, DATASET_SIZE, PAIRS_PER_IDENTITY):
            if self[key] < 1:
                raise ConfigError("%s must be at least 1, got %r" % (key, self[key]))
        for key in (CROSSED_FRACTION, VAL_FRACTION):
            if not 0 <= self[key] <= 1:
                raise ConfigError("%s must be in [0, 1], got %r" % (key, self[key]))
        return self

    def log(self):
        LOGGER.info("Resolved configuration: %s", ", ".join("%s=%s" % item for item in self.items()))

    def write(self, path):
        with atomic_open(path, "w") as handle:
            for key, value in self.items():
                handle.write("%s=%s\n" % (key, value))

    def __repr__(self):
        return "RunConfig(%s)" % ", ".join("%s=%r" % item for item in self.items())


def read_config_file(path):
    """
    Parse ``key=value`` lines; blank lines and ``#`` comments are skipped.

    Returns
    -------
    list of (str, str)

    Raises
    ------
    ConfigError
        Naming the line of a malformed assignment or unknown key.
    """
    assignments = []
    with open(path) as handle:
        for number, line in enumerate(handle, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            assignments.append(parse_assignment(line, "%s line %i" % (path, number)))
    return assignments


def sidecar_path(checkpoint):
    return checkpoint + ".cfg"

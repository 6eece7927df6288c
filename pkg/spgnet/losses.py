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
"""Reconstruction, perceptual and adversarial losses and their weighted sum."""

import logging

import numpy as np

from .exceptions import ConfigError, NonFiniteError, ShapeError, ValidationError
from . import tensor as T
from .tensor import Tensor, as_tensor, kaiming_uniform


LOGGER = logging.getLogger(__name__)


PERCEPTUAL_STAGES = 4
PERCEPTUAL_WIDTHS = (8, 16, 32, 64)
PROBABILITY_CLAMP = 1e-7

CE, L1, PERC, ADV = "ce", "l1", "perc", "adv"
PARTS = (CE, L1, PERC, ADV)
REQUIRED_PARTS = (L1, PERC, ADV)


def _check_same(a, b, what):
    if a.shape != b.shape:
        raise ShapeError("%s needs equal dims, got %s and %s" % (what, a.shape, b.shape))


def l1_loss(a, b):
    """Mean absolute difference over channels, pixels and the batch."""
    _check_same(a, b, "l1 loss")
    return T.mean(T.absolute(a - b))


class FeatureExtractor(object):
    """
    Fixed random convolution pyramid standing in for a pretrained perceptual network.

    Stage 1 is a stride-1 3x3 conv + ReLU on the image, each further stage a stride-2 3x3 conv + ReLU. Weights
    are drawn once from ``seed`` and are read-only.
    """

    def __init__(self, seed=0, widths=PERCEPTUAL_WIDTHS, dtype=np.float32):
        if len(widths) != PERCEPTUAL_STAGES:
            raise ValueError("a perceptual extractor has %i stages" % PERCEPTUAL_STAGES)
        rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
        self.stages = []
        c_in = 3
        for index, width in enumerate(widths):
            fan_in = c_in * 9
            weight = kaiming_uniform(rng, (width, c_in, 3, 3), fan_in).astype(dtype)
            bias = kaiming_uniform(rng, (width,), fan_in).astype(dtype)
            weight.flags.writeable = False
            bias.flags.writeable = False
            self.stages.append((Tensor(weight, dtype=dtype), Tensor(bias, dtype=dtype), 1 if index == 0 else 2))
            c_in = width

    @property
    def dtype(self):
        return self.stages[0][0].dtype

    def features(self, image):
        out = image
        features = []
        for weight, bias, stride in self.stages:
            out = T.relu(T.conv2d(out, weight, bias, stride=stride, pad=1))
            features.append(out)
        return features


def perceptual_loss(a, b, extractor):
    """
    Sum over stages of the mean squared feature difference.

    Gradients flow into ``a`` and ``b`` only.
    """
    _check_same(a, b, "perceptual loss")
    total = None
    for fa, fb in zip(extractor.features(a), extractor.features(b)):
        term = T.mean(T.square(fa - fb))
        total = term if total is None else total + term
    return total


def _probabilities(logits):
    return T.clip(T.sigmoid(logits), PROBABILITY_CLAMP, 1 - PROBABILITY_CLAMP)


def discriminator_loss(real_logits, fake_logits):
    """``-mean log D(real) - mean log(1 - D(fake))`` over all patches."""
    real = T.mean(T.log(_probabilities(real_logits)))
    fake = T.mean(T.log(1 - _probabilities(fake_logits)))
    return -(real + fake)


def generator_loss(fake_logits):
    """Non-saturating ``-mean log D(fake)``."""
    return -T.mean(T.log(_probabilities(fake_logits)))


def adversarial_losses(real_logits, fake_logits):
    """
    Returns
    -------
    (Tensor, Tensor)
        Discriminator loss and non-saturating generator loss.
    """
    return discriminator_loss(real_logits, fake_logits), generator_loss(fake_logits)


class LossWeights(object):
    """
    Trade-off weights of the generator objective.

    Raises
    ------
    ConfigError
        If a weight is negative.
    """

    def __init__(self, ce=10.0, l1=1.0, perc=1.0, adv=0.01):
        for name, value in ((CE, ce), (L1, l1), (PERC, perc), (ADV, adv)):
            if value < 0:
                raise ConfigError("loss weight lambda_%s must be non-negative, got %r" % (name, value))
        self.ce, self.l1, self.perc, self.adv = float(ce), float(l1), float(perc), float(adv)

    @classmethod
    def from_config(cls, config):
        return cls(config["lambda_ce"], config["lambda_l1"], config["lambda_perc"], config["lambda_adv"])

    def __getitem__(self, part):
        return getattr(self, part)

    def __repr__(self):
        return "LossWeights(ce=%g, l1=%g, perc=%g, adv=%g)" % (self.ce, self.l1, self.perc, self.adv)


def full_objective(parts, weights):
    """
    Weighted sum of loss parts.

    Parameters
    ----------
    parts : dict
        Scalars (Tensor or float) under "l1", "perc", "adv" and optionally "ce".
    weights : LossWeights

    Returns
    -------
    Tensor

    Raises
    ------
    ValidationError
        If a required part is missing or an unknown part is given.
    NonFiniteError
        If a part is NaN or infinite.
    """
    unknown = sorted(set(parts) - set(PARTS))
    if unknown:
        raise ValidationError("unknown loss part %s" % unknown[0])
    missing = [part for part in REQUIRED_PARTS if part not in parts]
    if missing:
        raise ValidationError("loss part %s is missing" % missing[0])
    total = None
    for name in PARTS:
        if name not in parts:
            continue
        value = as_tensor(parts[name])
        if not np.all(np.isfinite(value.data)):
            raise NonFiniteError(name, "loss part %s is not finite" % name)
        term = value * weights[name]
        total = term if total is None else total + term
    return total

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
"""Adam and the validation-plateau learning-rate schedule."""

import logging

import numpy as np

from .exceptions import NonFiniteError


LOGGER = logging.getLogger(__name__)


BETAS = (0.5, 0.999)
ADAM_EPS = 1e-8
PLATEAU_FACTOR = 0.5
PLATEAU_THRESHOLD = 1e-4
PLATEAU_PATIENCE = 5
MIN_MULTIPLIER = 1.0 / 64


class Adam(object):
    """
    Bias-corrected Adam over every parameter of a ParamStore.

    Moments are kept per parameter name, so the update does not depend on iteration order.

    Attributes
    ----------
    lr : float
        Current learning rate; the plateau schedule rewrites it.
    step_count : int
    """

    def __init__(self, store, lr=2e-4, betas=BETAS, eps=ADAM_EPS):
        self.store = store
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.moments = {}

    def step(self):
        """
        Apply one update from the accumulated ``grad`` of each parameter; parameters without a gradient are left
        alone.

        Raises
        ------
        NonFiniteError
            If any gradient is NaN or infinite; no parameter is changed.
        """
        items = [(name, tensor) for name, tensor in self.store.items() if tensor.grad is not None]
        for name, tensor in items:
            if not np.all(np.isfinite(tensor.grad)):
                raise NonFiniteError(name, "gradient of %s is not finite, refusing the update" % name)

        self.step_count += 1
        t = self.step_count
        correction1 = 1 - self.beta1 ** t
        correction2 = 1 - self.beta2 ** t
        for name, tensor in items:
            grad = tensor.grad.astype(np.float64)
            if name not in self.moments:
                self.moments[name] = (np.zeros_like(grad), np.zeros_like(grad))
            first, second = self.moments[name]
            first = self.beta1 * first + (1 - self.beta1) * grad
            second = self.beta2 * second + (1 - self.beta2) * grad * grad
            self.moments[name] = first, second
            update = self.lr * (first / correction1) / (np.sqrt(second / correction2) + self.eps)
            tensor.data -= update.astype(tensor.dtype)


class PlateauSchedule(object):
    """
    Halve the learning rate when the validation loss stops improving.

    A round improves when it beats the best value so far by at least ``threshold``. After ``patience`` rounds
    without improvement the multiplier is halved (never below ``min_multiplier``) and the count restarts.
    """

    def __init__(self, patience=PLATEAU_PATIENCE, factor=PLATEAU_FACTOR, threshold=PLATEAU_THRESHOLD,
                 min_multiplier=MIN_MULTIPLIER):
        if patience < 1:
            raise ValueError("patience must be at least 1, got %i" % patience)
        self.patience = patience
        self.factor = factor
        self.threshold = threshold
        self.min_multiplier = min_multiplier
        self.multiplier = 1.0
        self.best = np.inf
        self.stale = 0

    def update(self, value):
        if value < self.best - self.threshold:
            self.best = value
            self.stale = 0
        else:
            self.stale += 1
        if self.stale >= self.patience:
            reduced = max(self.multiplier * self.factor, self.min_multiplier)
            if reduced < self.multiplier:
                LOGGER.warning("Validation loss stalled at %.5g for %i rounds, lr multiplier %g -> %g",
                               self.best, self.stale, self.multiplier, reduced)
            self.multiplier = reduced
            self.stale = 0
        return self.multiplier


def plateau_multiplier(history, patience=PLATEAU_PATIENCE):
    """Replay a validation-loss history and return the resulting lr multiplier."""
    schedule = PlateauSchedule(patience)
    for value in history:
        schedule.update(value)
    return schedule.multiplier

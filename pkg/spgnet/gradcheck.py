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
"""Central finite-difference checks of tape gradients."""

import logging

import numpy as np
from pandas import DataFrame

from .exceptions import GradientCheckError
from .tensor import ComputationTape


LOGGER = logging.getLogger(__name__)


SINGLE_EPS = 1e-3
DOUBLE_EPS = 1e-5
SINGLE_TOLERANCE = 1e-3
DOUBLE_TOLERANCE = 1e-5
MIN_COORDINATES = 32

COLUMNS = ["parameter", "index", "autodiff", "numeric", "rel_error"]


def default_eps(dtype):
    return DOUBLE_EPS if np.dtype(dtype) == np.float64 else SINGLE_EPS


def default_tolerance(dtype):
    return DOUBLE_TOLERANCE if np.dtype(dtype) == np.float64 else SINGLE_TOLERANCE


class GradCheckReport(object):
    """
    Outcome of :func:`grad_check`.

    Attributes
    ----------
    table : DataFrame
        One row per checked coordinate: parameter, flat index, autodiff and central-difference values and the
        relative error ``|g_autodiff - g_central| / max(1, |g_central|)``.
    skipped : dict
        Number of coordinates skipped per parameter because the +eps and -eps evaluations crossed a kink.
    dtype : numpy.dtype
    """

    def __init__(self, table, skipped, dtype):
        self.table = table
        self.skipped = skipped
        self.dtype = np.dtype(dtype)

    @property
    def max_error(self):
        if self.table.empty:
            return 0.0
        return float(self.table["rel_error"].max())

    def errors_by_parameter(self):
        return self.table.groupby("parameter")["rel_error"].max()

    def passed(self, tolerance=None):
        if tolerance is None:
            tolerance = default_tolerance(self.dtype)
        return self.max_error < tolerance

    def raise_for_error(self, tolerance=None):
        """
        Raises
        ------
        GradientCheckError
            Naming the parameter with the largest error when the check failed.
        """
        if tolerance is None:
            tolerance = default_tolerance(self.dtype)
        if not self.passed(tolerance):
            worst = self.table.loc[self.table["rel_error"].idxmax()]
            raise GradientCheckError("gradient of %s[%i] off by %.3g (autodiff %.6g, numeric %.6g), tolerance %.1g"
                                     % (worst["parameter"], worst["index"], worst["rel_error"],
                                        worst["autodiff"], worst["numeric"], tolerance))

    def __repr__(self):
        return "GradCheckReport(%i coordinates, max rel. error %.3g)" % (len(self.table), self.max_error)


def _named(params):
    if hasattr(params, "items"):
        items = params.items()
        return list(items() if callable(items) else items)
    return list(params)


def _evaluate(f, params, name):
    with ComputationTape() as tape:
        loss = f(params)
    value = float(np.asarray(loss.data))
    if not np.isfinite(value):
        raise GradientCheckError("non-finite loss while checking %s" % name)
    return value, tape.branch_pattern()


def grad_check(f, params, eps=None, seed=0, coordinates=MIN_COORDINATES):
    """
    Compare tape gradients of a scalar function against central differences.

    Parameters
    ----------
    f : callable
        ``f(params) -> Tensor`` returning a scalar; deterministic.
    params : ParamStore or dict
        Named tensors with gradient state. Values are perturbed in place and restored.
    eps : float, optional
        Perturbation; 1e-3 for single precision, 1e-5 for double precision by default.
    seed : int
        Seed for the coordinate subset.
    coordinates : int
        Coordinates checked per tensor (all of them for smaller tensors).

    Returns
    -------
    report : GradCheckReport

    Raises
    ------
    GradientCheckError
        If a loss evaluation is non-finite; the message names the parameter being perturbed.
    """
    items = _named(params)
    if not items:
        raise GradientCheckError("nothing to check")
    dtype = items[0][1].dtype
    if eps is None:
        eps = default_eps(dtype)

    for _, tensor in items:
        tensor.data = np.ascontiguousarray(tensor.data)
        tensor.grad = None

    with ComputationTape() as tape:
        loss = f(params)
    base_value = float(np.asarray(loss.data))
    if not np.isfinite(base_value):
        raise GradientCheckError("non-finite loss before perturbation")
    base_pattern = tape.branch_pattern()
    tape.backward(loss)
    autodiff = {name: (np.zeros_like(t.data) if t.grad is None else t.grad.copy()) for name, t in items}
    del tape

    rng = np.random.default_rng(seed)
    rows = []
    skipped = {}
    for name, tensor in items:
        flat = tensor.data.reshape(-1)
        analytic = autodiff[name].reshape(-1)
        wanted = min(coordinates, flat.size)
        taken = 0
        for index in rng.permutation(flat.size):
            if taken == wanted:
                break
            original = flat[index]
            flat[index] = original + eps
            plus, plus_pattern = _evaluate(f, params, name)
            flat[index] = original - eps
            minus, minus_pattern = _evaluate(f, params, name)
            flat[index] = original

            if not (np.array_equal(plus_pattern, base_pattern) and np.array_equal(minus_pattern, base_pattern)):
                skipped[name] = skipped.get(name, 0) + 1
                continue
            numeric = (plus - minus) / (2 * eps)
            error = abs(float(analytic[index]) - numeric) / max(1.0, abs(numeric))
            rows.append((name, int(index), float(analytic[index]), numeric, error))
            taken += 1
        if skipped.get(name):
            LOGGER.warning("Skipped %i coordinates of %s at non-smooth points", skipped[name], name)

    table = DataFrame(rows, columns=COLUMNS)
    report = GradCheckReport(table, skipped, dtype)
    LOGGER.debug("%r", report)
    return report

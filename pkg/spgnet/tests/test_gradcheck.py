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
from spgnet.exceptions import GradientCheckError
from spgnet.gradcheck import COLUMNS, default_eps, default_tolerance, grad_check
from spgnet.tensor import Function, ParamStore, Tensor


class WrongSquare(Function):

    def forward(self, x):
        self.x = x
        return x * x

    def backward(self, grad):
        return (grad * self.x,)


def test_defaults_by_precision():
    assert default_eps(np.float32) == 1e-3
    assert default_eps(np.float64) == 1e-5
    assert default_tolerance(np.float32) == 1e-3
    assert default_tolerance(np.float64) == 1e-5


def test_smooth_function_passes(double_store, rng):
    double_store.add("x", rng.standard_normal((2, 3, 4, 4)))
    report = grad_check(lambda p: T.sum(T.tanh(p["x"]) * T.exp(p["x"] * 0.5)), double_store)
    assert list(report.table.columns) == COLUMNS
    assert len(report.table) == 32
    assert report.passed()
    report.raise_for_error()


def test_wrong_backward_is_caught(double_store, rng):
    double_store.add("x", rng.standard_normal(6) + 2)
    report = grad_check(lambda p: T.sum(WrongSquare.apply(p["x"])), double_store)
    assert not report.passed()
    with pytest.raises(GradientCheckError) as error:
        report.raise_for_error()
    assert "x[" in str(error.value)


def test_kinks_are_skipped(double_store):
    double_store.add("x", np.array([0.0, 0.0, 1.0, -1.0, 2.0]))
    report = grad_check(lambda p: T.sum(T.absolute(p["x"])), double_store)
    assert report.skipped == {"x": 2}
    assert len(report.table) == 3
    assert report.passed()


def test_accepts_mappings(rng):
    params = {"w": Tensor(rng.standard_normal(4), grad_enabled=True)}
    assert grad_check(lambda p: T.sum(T.square(p["w"])), params).passed()


def test_single_precision_tolerance(rng):
    store = ParamStore(np.float32)
    store.add("x", rng.standard_normal((2, 2, 4, 4)))
    assert grad_check(lambda p: T.mean(T.sigmoid(p["x"])), store).passed()


def test_values_are_restored(double_store, rng):
    x = double_store.add("x", rng.standard_normal(5))
    before = x.data.copy()
    grad_check(lambda p: T.sum(T.square(p["x"])), double_store)
    np.testing.assert_array_equal(x.data, before)


def test_empty_params_raise():
    with pytest.raises(GradientCheckError):
        grad_check(lambda p: Tensor(0.0), ParamStore())


def test_non_finite_loss_raises(double_store):
    double_store.add("x", np.array([0.0]))
    with pytest.raises(GradientCheckError):
        grad_check(lambda p: T.sum(T.log(p["x"])), double_store)

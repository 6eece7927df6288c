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

from spgnet.exceptions import NonFiniteError
from spgnet.optim import MIN_MULTIPLIER, Adam, PlateauSchedule, plateau_multiplier


def test_first_adam_step_moves_by_the_learning_rate(double_store):
    w = double_store.add("w", np.array([1.0, -1.0]))
    w.grad = np.array([0.3, -2.0])
    Adam(double_store, lr=0.01).step()
    np.testing.assert_allclose(w.data, [0.99, -0.99], rtol=1e-6)


def test_adam_skips_parameters_without_gradient(double_store):
    w = double_store.add("w", np.ones(2))
    v = double_store.add("v", np.ones(2))
    w.grad = np.ones(2)
    optimizer = Adam(double_store, lr=0.1)
    optimizer.step()
    np.testing.assert_array_equal(v.data, 1)
    assert optimizer.step_count == 1
    assert "v" not in optimizer.moments


def test_adam_refuses_non_finite_gradients(double_store):
    w = double_store.add("w", np.ones(2))
    u = double_store.add("u", np.ones(2))
    w.grad = np.array([np.inf, 0.0])
    u.grad = np.ones(2)
    optimizer = Adam(double_store)
    with pytest.raises(NonFiniteError) as error:
        optimizer.step()
    assert error.value.name == "w"
    np.testing.assert_array_equal(u.data, 1)
    assert optimizer.step_count == 0


def test_adam_converges_on_a_quadratic(double_store):
    w = double_store.add("w", np.array([3.0, -2.0]))
    optimizer = Adam(double_store, lr=0.05, betas=(0.9, 0.999))
    for _ in range(500):
        w.grad = 2 * w.data
        optimizer.step()
    np.testing.assert_allclose(w.data, 0, atol=0.05)


def test_plateau_halves_after_patience():
    schedule = PlateauSchedule(patience=3)
    assert schedule.update(1.0) == 1.0
    assert schedule.update(1.0) == 1.0
    assert schedule.update(0.99995) == 1.0
    assert schedule.update(1.2) == 0.5
    assert schedule.update(0.5) == 0.5
    assert schedule.best == 0.5


def test_plateau_floor():
    assert plateau_multiplier([1.0] * 200, patience=1) == MIN_MULTIPLIER
    assert plateau_multiplier(np.linspace(1, 0, 50)) == 1.0


def test_plateau_patience_must_be_positive():
    with pytest.raises(ValueError):
        PlateauSchedule(patience=0)

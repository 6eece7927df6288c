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

from collections import OrderedDict

import pytest

from spgnet.checks import COLUMNS, DEFAULT_SUITES, GENERATOR_GROUPS, GRAD, INVARIANTS, ORACLE, SCALE, SUITES, \
    run_check, run_suite
from spgnet.exceptions import ShapeError
from spgnet.models import ModelConfig, SPGNetModel


@pytest.mark.parametrize("name", list(SUITES[GRAD]))
def test_gradient_checks(name):
    suite, check, passed, detail = run_check(GRAD, name)
    assert passed, detail


@pytest.mark.parametrize("suite", [INVARIANTS, ORACLE])
def test_suite_passes(suite):
    table = run_suite(suite)
    assert list(table.columns) == COLUMNS
    assert table["passed"].all(), table.loc[~table["passed"], "detail"].tolist()
    assert set(table["suite"]) == {suite}


def test_scale_suite_is_opt_in():
    assert SCALE not in DEFAULT_SUITES
    assert "full_scale_forward" in SUITES[SCALE]


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("fuzz")


def test_failures_are_reported_not_raised(monkeypatch):
    def broken():
        raise ShapeError("dims differ")

    def wrong():
        return False, "off by one"

    monkeypatch.setitem(SUITES, "broken", OrderedDict([("broken", broken), ("wrong", wrong)]))
    table = run_suite("broken")
    assert not table["passed"].any()
    assert table.loc[0, "detail"] == "ShapeError: dims differ"
    assert table.loc[1, "detail"] == "off by one"

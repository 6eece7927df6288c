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
"""Errors raised across the package."""


class SpgError(Exception):
    """Base class of every error raised by spgnet."""


class ShapeError(SpgError, ValueError):
    """Operand dimensions do not fit the operation."""


class ValidationError(SpgError, ValueError):
    """A value violates the contract of its type (labels out of range, non-binary visibility...)."""


class FormatError(SpgError, ValueError):
    """A file could not be parsed or a checkpoint does not match the model."""


class ConfigError(SpgError, ValueError):
    """Unknown configuration key or invalid configuration value."""


class NonFiniteError(SpgError, ArithmeticError):
    """
    A loss or gradient became NaN or infinite.

    Attributes
    ----------
    name : str
        The loss part or parameter carrying the non-finite value.
    """

    def __init__(self, name, message=None):
        self.name = name
        super(NonFiniteError, self).__init__(message or "non-finite value in %s" % name)


class GradientCheckError(SpgError, AssertionError):
    """A finite-difference check failed or could not be evaluated."""

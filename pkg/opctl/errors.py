# opctl
# Copyright (C) 2020 The opctl developers
#
# This file is part of opctl.
#
# opctl is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# opctl is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with opctl.  If not, see <https://www.gnu.org/licenses/>.

"""
Exceptions raised by opctl.

Each exception class carries the process exit code the command line
interface uses when the exception reaches the top level.
"""

from typing import Optional


class ModelValidationError(ValueError):
    """A model file or model section is malformed."""

    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None):
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path


class NumericError(ArithmeticError):
    """Base class for failures of a numerical routine."""

    exit_code = 4


class SteinSolutionError(NumericError):
    pass  # intentional


class ThresholdUndefinedError(NumericError):
    pass  # intentional


class NotStabilizableError(Exception):
    """
    The network cannot be steered into the target profile set.

    :param stage: First pipeline stage that failed, one of
        'omega', 'invariant_set', 'restricted_target' and 'bfs'.
    """

    exit_code = 2

    def __init__(self, message: str, stage: str):
        super().__init__(f"{message} (failing stage: {stage})")
        self.reason = message
        self.stage = stage


class LyapunovViolationError(Exception):
    """Simulated trajectories violate the expected-decay inequality."""

    exit_code = 1

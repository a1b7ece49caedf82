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
Miscellaneous utility functions for opctl.
"""

from typing import Type, Iterable, FrozenSet, Union

import enum
import hashlib
import math
import numpy as np

import opctl as oc


def check_enum_key(enum_class: Type[enum.Enum], key: str, param_name: str):
    """
    Raise a ModelValidationError if `key` is not a valid key for
    `enum_class`.
    """
    valid_keys = [m.name for m in enum_class]
    if key not in valid_keys:
        raise oc.ModelValidationError(
            f"must be one of {valid_keys}. \"{key}\" is invalid.",
            path=param_name,
        )


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d != 0 for d in range(2, math.isqrt(n) + 1))


def check_matrix(
        value,
        path: str,
        shape: tuple = None,
        square: bool = False,
) -> np.ndarray:
    """
    Convert `value` (nested lists or a scalar) to a 2-D float array and
    validate its shape.
    Scalars become 1x1 matrices.
    """
    try:
        arr = np.atleast_2d(np.asarray(value, dtype=float))
    except (TypeError, ValueError):
        raise oc.ModelValidationError(
            f"{value!r} is not a real matrix.",
            path=path,
        )
    if arr.ndim != 2:
        raise oc.ModelValidationError(
            f"expected a matrix, got an array with {arr.ndim} dimensions.",
            path=path,
        )
    if not np.all(np.isfinite(arr)):
        raise oc.ModelValidationError("entries must be finite.", path=path)
    if square and arr.shape[0] != arr.shape[1]:
        raise oc.ModelValidationError(
            f"must be square, but has shape {arr.shape}.",
            path=path,
        )
    if shape is not None and arr.shape != tuple(shape):
        raise oc.ModelValidationError(
            f"must have shape {tuple(shape)}, but has shape {arr.shape}.",
            path=path,
        )
    return arr


def check_index_set(
        value: Union[str, Iterable[int]],
        upper: int,
        path: str,
) -> FrozenSet[int]:
    """
    Validate a set of 1-based indices.
    The string 'all' stands for 1..upper.
    """
    if isinstance(value, str):
        if value.strip().lower() == 'all':
            return frozenset(range(1, upper + 1))
        raise oc.ModelValidationError(
            f"\"{value}\" is neither a list of indices nor 'all'.",
            path=path,
        )
    result = set()
    for index in value:
        if isinstance(index, bool) or not isinstance(index, int):
            raise oc.ModelValidationError(
                f"{index!r} is not an integer index.",
                path=path,
            )
        if not 1 <= index <= upper:
            raise oc.ModelValidationError(
                f"index {index} is outside of 1..{upper}.",
                path=path,
            )
        result.add(int(index))
    return frozenset(result)


def check_probabilities(values: np.ndarray, path: str, atol: float = 1e-9):
    """Raise if any entry of `values` lies outside of [0, 1]."""
    if np.any(values < -atol) or np.any(values > 1 + atol):
        raise oc.ModelValidationError(
            "entries must lie in [0, 1].",
            path=path,
        )


SEED_LIMIT = 2 ** 64


def check_seed(seed, path: str) -> int:
    """Seeds are unsigned 64 bit integers."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise oc.ModelValidationError(
            f"must be an integer, got {seed!r}.", path=path)
    if not 0 <= seed < SEED_LIMIT:
        raise oc.ModelValidationError(
            f"must lie in 0..2**64-1, got {seed}.", path=path)
    return int(seed)


def is_positive_definite(matrix: np.ndarray, tol: float = 0.0) -> bool:
    return bool(np.linalg.eigvalsh(0.5 * (matrix + matrix.T)).min() > tol)


def content_hash(*parts) -> str:
    """
    sha256 over the string representation of `parts`.
    Used to record the provenance of each pipeline stage.
    """
    digest = hashlib.sha256()
    for part in parts:
        if isinstance(part, np.ndarray):
            digest.update(np.ascontiguousarray(part).tobytes())
            digest.update(str(part.shape).encode())
        else:
            digest.update(repr(part).encode())
    return digest.hexdigest()

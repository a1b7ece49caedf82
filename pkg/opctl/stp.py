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
Semi-tensor product (STP) kernel.

Logical matrices (one unit entry per column) are stored by their column
indices, written δ_s[i_1 … i_t], with 1-based indices throughout.
A value v of the field D_κ = {0, …, κ-1} is encoded as δ_κ^(v+1).
All logical operations work on index arrays and never expand to dense
matrices; :func:`stp` is the dense reference product.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple, Iterable
import functools
import logging
import re

import numpy as np

import opctl as oc

LOG = logging.getLogger(__name__)

_DELTA_PATTERN = re.compile(
    r'^\s*(?:δ|delta)_?(\d+)\s*\[([\d\s,]*)\]\s*$'
)


@dataclass(frozen=True)
class DeltaIndex:
    """The delta vector δ_base^index."""

    base: int
    index: int

    def __post_init__(self):
        if self.base < 1 or not 1 <= self.index <= self.base:
            raise ValueError(
                f"δ_{self.base}^{self.index} is not a valid delta vector."
            )

    @property
    def value(self) -> int:
        """Field value encoded by this delta vector."""
        return index_to_value(self.index)

    def to_dense(self) -> np.ndarray:
        vector = np.zeros((self.base, 1))
        vector[self.index - 1, 0] = 1.0
        return vector


@dataclass(frozen=True)
class LogicalMatrix:
    """
    The logical matrix δ_rows[cols[0] … cols[-1]].
    A LogicalMatrix with a single column is a delta vector.
    """

    rows: int
    cols: Tuple[int, ...]

    def __post_init__(self):
        cols = tuple(int(c) for c in self.cols)
        object.__setattr__(self, 'cols', cols)
        if self.rows < 1:
            raise ValueError(
                f"A logical matrix needs at least one row, got {self.rows}."
            )
        if len(cols) == 0:
            raise ValueError("A logical matrix needs at least one column.")
        bad = [c for c in cols if not 1 <= c <= self.rows]
        if len(bad) != 0:
            raise ValueError(
                f"Column indices {bad[:5]} lie outside of 1..{self.rows}."
            )

    @property
    def n_cols(self) -> int:
        return len(self.cols)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.n_cols

    def as_array(self) -> np.ndarray:
        """Column indices as an integer array (1-based)."""
        return np.asarray(self.cols, dtype=np.int64)

    def column(self, j: int) -> DeltaIndex:
        """Col_j of this matrix, 1-based."""
        if not 1 <= j <= self.n_cols:
            raise IndexError(
                f"Column {j} is outside of 1..{self.n_cols}."
            )
        return DeltaIndex(self.rows, self.cols[j - 1])

    def block(self, l: int, width: int) -> 'LogicalMatrix':
        """Blk_l: the l-th block of `width` consecutive columns."""
        if width < 1 or self.n_cols % width != 0:
            raise ValueError(
                f"{self.n_cols} columns cannot be split into blocks of "
                f"width {width}."
            )
        if not 1 <= l <= self.n_cols // width:
            raise IndexError(f"Block {l} does not exist.")
        return LogicalMatrix(
            self.rows,
            self.cols[(l - 1) * width:l * width],
        )

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.shape)
        dense[self.as_array() - 1, np.arange(self.n_cols)] = 1.0
        return dense

    @staticmethod
    def from_dense(matrix: np.ndarray) -> 'LogicalMatrix':
        matrix = np.atleast_2d(np.asarray(matrix))
        is_unit = np.isclose(matrix, 1.0)
        is_zero = np.isclose(matrix, 0.0)
        if (
                not np.all(is_unit | is_zero)
                or not np.all(is_unit.sum(axis=0) == 1)
        ):
            raise AssertionError(
                "Matrix is not logical: every column needs exactly one "
                "unit entry."
            )
        return LogicalMatrix(
            matrix.shape[0],
            tuple(np.argmax(is_unit, axis=0) + 1),
        )

    @staticmethod
    def identity(n: int) -> 'LogicalMatrix':
        return LogicalMatrix(n, tuple(range(1, n + 1)))

    @staticmethod
    def delta(base: int, index: int) -> 'LogicalMatrix':
        return LogicalMatrix(base, (index,))

    def to_delta_string(self) -> str:
        return f"δ_{self.rows}[{' '.join(str(c) for c in self.cols)}]"

    def __str__(self):
        return self.to_delta_string()


def parse_delta(text: str) -> LogicalMatrix:
    """
    Parse the bracket notation `δ_s[i_1 … i_t]`.
    `δs[…]`, `delta_s[…]` and `deltas[…]` are accepted as well, and
    indices may be separated by commas.
    """
    match = _DELTA_PATTERN.match(str(text))
    if match is None:
        raise ValueError(
            f"\"{text}\" is not a logical matrix in δ_s[i_1 … i_t] notation."
        )
    indices = [int(i) for i in re.split(r'[\s,]+', match.group(2).strip())
               if i != '']
    return LogicalMatrix(int(match.group(1)), tuple(indices))


def value_to_index(value: int) -> int:
    """v ∈ D_κ is encoded as δ_κ^(v+1)."""
    return value + 1


def index_to_value(index: int) -> int:
    return index - 1


def values_to_index(values: Sequence[int], kappa: int) -> int:
    """
    Index of the delta vector δ^(v_1+1) ⋉ … ⋉ δ^(v_n+1)
    (the first agent is the most significant digit).
    """
    index = 0
    for v in values:
        if not 0 <= v < kappa:
            raise ValueError(f"{v} is not an element of D_{kappa}.")
        index = index * kappa + v
    return index + 1


def index_to_values(index: int, kappa: int, count: int) -> Tuple[int, ...]:
    if not 1 <= index <= kappa ** count:
        raise ValueError(
            f"{index} is outside of 1..{kappa ** count}."
        )
    remainder = index - 1
    values = []
    for _ in range(count):
        values.append(remainder % kappa)
        remainder //= kappa
    return tuple(reversed(values))


def stp(m: np.ndarray, p: np.ndarray) -> np.ndarray:
    """
    Dense semi-tensor product M ⋉ P = (M ⊗ I_{l/n})(P ⊗ I_{l/p}) with
    l = lcm(n, p) for M of size m×n and P of size p×q.
    1-D inputs are treated as column vectors.
    """
    m = np.asarray(m, dtype=float)
    p = np.asarray(p, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if p.ndim == 1:
        p = p.reshape(-1, 1)
    if m.size == 0 or p.size == 0:
        raise ValueError(
            f"STP of matrices with shapes {m.shape} and {p.shape}: "
            "dimensions must not be zero."
        )
    n = m.shape[1]
    rows_p = p.shape[0]
    l = int(np.lcm(n, rows_p))
    return np.kron(m, np.eye(l // n)) @ np.kron(p, np.eye(l // rows_p))


def stp_chain(*matrices: np.ndarray) -> np.ndarray:
    return functools.reduce(stp, matrices)


def kron_identity(m: LogicalMatrix, t: int) -> LogicalMatrix:
    """M ⊗ I_t: column (c-1)t + r maps to (m_c - 1)t + r."""
    if t == 1:
        return m
    cols = (m.as_array()[:, None] - 1) * t + np.arange(1, t + 1)[None, :]
    return LogicalMatrix(m.rows * t, tuple(cols.ravel()))


def identity_kron(t: int, m: LogicalMatrix) -> LogicalMatrix:
    """I_t ⊗ M: column (r-1)n + c maps to (r-1)s + m_c."""
    if t == 1:
        return m
    cols = (np.arange(t)[:, None] * m.rows) + m.as_array()[None, :]
    return LogicalMatrix(m.rows * t, tuple(cols.ravel()))


def kron_logical(m: LogicalMatrix, p: LogicalMatrix) -> LogicalMatrix:
    """M ⊗ P for logical M and P."""
    cols = (m.as_array()[:, None] - 1) * p.rows + p.as_array()[None, :]
    return LogicalMatrix(m.rows * p.rows, tuple(cols.ravel()))


def stp_logical(m: LogicalMatrix, p: LogicalMatrix) -> LogicalMatrix:
    """
    M ⋉ P for logical M and P, computed on column indices.
    Agrees with :func:`stp` on the dense expansions.
    """
    l = int(np.lcm(m.n_cols, p.rows))
    left = kron_identity(m, l // m.n_cols).as_array()
    right = kron_identity(p, l // p.rows).as_array()
    result = left[right - 1]
    return LogicalMatrix(m.rows * (l // m.n_cols), tuple(result))


def stp_logical_chain(*matrices: LogicalMatrix) -> LogicalMatrix:
    return functools.reduce(stp_logical, matrices)


def khatri_rao(m: LogicalMatrix, p: LogicalMatrix) -> LogicalMatrix:
    """
    Column-wise STP: Col_j of the result is Col_j(M) ⋉ Col_j(P).
    Both matrices need the same number of columns.
    """
    if m.n_cols != p.n_cols:
        raise ValueError(
            f"Khatri-Rao product needs equal widths, got {m.n_cols} "
            f"and {p.n_cols}."
        )
    cols = (m.as_array() - 1) * p.rows + p.as_array()
    return LogicalMatrix(m.rows * p.rows, tuple(cols))


@functools.lru_cache(maxsize=None)
def swap_matrix(s: int, t: int) -> LogicalMatrix:
    """
    W_[s,t] with W_[s,t] ⋉ x ⋉ y = y ⋉ x for x ∈ Δ_s and y ∈ Δ_t.
    """
    if s < 1 or t < 1:
        raise ValueError(f"Swap matrix sizes must be positive: ({s}, {t}).")
    i = np.arange(1, s + 1)[:, None]
    j = np.arange(1, t + 1)[None, :]
    return LogicalMatrix(s * t, tuple(((j - 1) * s + i).ravel()))


@functools.lru_cache(maxsize=None)
def power_reducing_matrix(s: int) -> LogicalMatrix:
    """P_r,s = diag{δ_s^1, …, δ_s^s}, so that x ⋉ x = P_r,s ⋉ x."""
    if s < 1:
        raise ValueError(f"Power-reducing matrix size must be positive: {s}.")
    i = np.arange(1, s + 1)
    return LogicalMatrix(s * s, tuple((i - 1) * s + i))


def _check_field_size(kappa: int):
    if not oc.util.is_prime(kappa):
        raise oc.ModelValidationError(
            f"field size must be prime, got {kappa}.",
            path='kappa',
        )


@functools.lru_cache(maxsize=None)
def mod_add_matrix(kappa: int) -> LogicalMatrix:
    """F_+κ with a +_κ b = F_+κ ⋉ a ⋉ b."""
    _check_field_size(kappa)
    a = np.arange(kappa)[:, None]
    b = np.arange(kappa)[None, :]
    return LogicalMatrix(kappa, tuple(((a + b) % kappa + 1).ravel()))


@functools.lru_cache(maxsize=None)
def mod_mul_matrix(kappa: int) -> LogicalMatrix:
    """F_×κ with a ×_κ b = F_×κ ⋉ a ⋉ b."""
    _check_field_size(kappa)
    a = np.arange(kappa)[:, None]
    b = np.arange(kappa)[None, :]
    return LogicalMatrix(kappa, tuple(((a * b) % kappa + 1).ravel()))


def coefficient_matrix(coefficients: Iterable[int], kappa: int) -> LogicalMatrix:
    """
    The κ×w logical matrix whose column σ encodes the coefficient used
    in mode σ.
    """
    return LogicalMatrix(
        kappa,
        tuple(value_to_index(int(c)) for c in coefficients),
    )


def state_projection(j: int, kappa: int, n: int, m: int) -> LogicalMatrix:
    """
    E_j with E_j ⋉ u ⋉ β = β_j, i.e.
    1_M^T ⊗ 1_{κ^(j-1)}^T ⊗ I_κ ⊗ 1_{κ^(n-j)}^T.
    """
    z = np.arange(kappa ** (m + n))
    beta = z % kappa ** n
    digit = (beta // kappa ** (n - j)) % kappa
    return LogicalMatrix(kappa, tuple(digit + 1))


def control_projection(l: int, kappa: int, n: int, m: int) -> LogicalMatrix:
    """G_l with G_l ⋉ u ⋉ β = u_l."""
    z = np.arange(kappa ** (m + n))
    u = z // kappa ** n
    digit = (u // kappa ** (m - l)) % kappa
    return LogicalMatrix(kappa, tuple(digit + 1))


def dense_state_projection(j: int, kappa: int, n: int, m: int) -> np.ndarray:
    """Dense form of :func:`state_projection` built from Kronecker factors."""
    return functools.reduce(np.kron, [
        np.ones((1, kappa ** m)),
        np.ones((1, kappa ** (j - 1))),
        np.eye(kappa),
        np.ones((1, kappa ** (n - j))),
    ])


def dense_control_projection(l: int, kappa: int, n: int, m: int) -> np.ndarray:
    return functools.reduce(np.kron, [
        np.ones((1, kappa ** (l - 1))),
        np.eye(kappa),
        np.ones((1, kappa ** (m - l))),
        np.ones((1, kappa ** n)),
    ])

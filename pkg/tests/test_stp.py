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


import itertools

import numpy as np
import pytest

import opctl as oc
from opctl import stp


TOLERANCE = dict(rtol=1e-12, atol=1e-12)
"""
Tolerances for `np.testing.assert_allclose`.
For the meaning of rtol and atol, also check the documentation of
`pytest.approx`.
"""


def _random_logical(rng, rows, cols) -> oc.LogicalMatrix:
    return oc.LogicalMatrix(rows, tuple(rng.integers(1, rows + 1, cols)))


def test_structural_matrices():
    assert stp.mod_add_matrix(3) == oc.parse_delta("δ_3[1 2 3 2 3 1 3 1 2]")
    assert stp.mod_mul_matrix(3) == oc.parse_delta("δ_3[1 1 1 1 2 3 1 3 2]")


@pytest.mark.parametrize('kappa', [2, 3, 5, 7])
def test_modular_arithmetic(kappa):
    f_add = stp.mod_add_matrix(kappa)
    f_mul = stp.mod_mul_matrix(kappa)
    for a, b in itertools.product(range(kappa), repeat=2):
        x = oc.LogicalMatrix.delta(kappa, stp.value_to_index(a))
        y = oc.LogicalMatrix.delta(kappa, stp.value_to_index(b))
        assert stp.stp_logical_chain(f_add, x, y).cols == ((a + b) % kappa + 1,)
        assert stp.stp_logical_chain(f_mul, x, y).cols == ((a * b) % kappa + 1,)


def test_non_prime_field_size():
    with pytest.raises(oc.ModelValidationError):
        stp.mod_add_matrix(4)


def test_stp_reduces_to_matrix_product():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(4, 2))
    np.testing.assert_allclose(stp.stp(a, b), a @ b, **TOLERANCE)


def test_stp_dimension_mismatch():
    # 1×2 ⋉ 4×1: (M ⊗ I_2)(P) = [m1 I_2, m2 I_2] p
    m = np.array([[2.0, 3.0]])
    p = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(
        stp.stp(m, p), [[2 * 1 + 3 * 3], [2 * 2 + 3 * 4]], **TOLERANCE)


def test_stp_zero_dimension():
    with pytest.raises(ValueError):
        stp.stp(np.zeros((0, 2)), np.ones((2, 1)))


def test_logical_stp_matches_dense():
    rng = np.random.default_rng(7)
    for _ in range(50):
        rows_m, cols_m = rng.integers(1, 5, 2)
        rows_p, cols_p = rng.integers(1, 5, 2)
        m = _random_logical(rng, rows_m, cols_m)
        p = _random_logical(rng, rows_p, cols_p)
        np.testing.assert_allclose(
            stp.stp_logical(m, p).to_dense(),
            stp.stp(m.to_dense(), p.to_dense()),
            **TOLERANCE
        )


def test_kronecker_with_identity():
    rng = np.random.default_rng(11)
    m = _random_logical(rng, 3, 5)
    np.testing.assert_allclose(
        stp.kron_identity(m, 4).to_dense(),
        np.kron(m.to_dense(), np.eye(4)),
        **TOLERANCE
    )
    np.testing.assert_allclose(
        stp.identity_kron(4, m).to_dense(),
        np.kron(np.eye(4), m.to_dense()),
        **TOLERANCE
    )
    p = _random_logical(rng, 2, 3)
    np.testing.assert_allclose(
        stp.kron_logical(m, p).to_dense(),
        np.kron(m.to_dense(), p.to_dense()),
        **TOLERANCE
    )


def test_khatri_rao():
    rng = np.random.default_rng(5)
    m = _random_logical(rng, 3, 6)
    p = _random_logical(rng, 2, 6)
    product = stp.khatri_rao(m, p)
    for j in range(1, 7):
        np.testing.assert_allclose(
            product.column(j).to_dense(),
            stp.stp(m.column(j).to_dense(), p.column(j).to_dense()).ravel(),
            **TOLERANCE
        )
    with pytest.raises(ValueError):
        stp.khatri_rao(m, _random_logical(rng, 2, 5))


def test_swap_and_power_reducing():
    for s, t in [(2, 3), (3, 3), (4, 2)]:
        w = stp.swap_matrix(s, t)
        for i, j in itertools.product(range(1, s + 1), range(1, t + 1)):
            x = oc.LogicalMatrix.delta(s, i)
            y = oc.LogicalMatrix.delta(t, j)
            assert (
                stp.stp_logical_chain(w, x, y)
                == stp.stp_logical(y, x)
            )
    for s in [2, 5]:
        for i in range(1, s + 1):
            x = oc.LogicalMatrix.delta(s, i)
            assert (
                stp.stp_logical(stp.power_reducing_matrix(s), x)
                == stp.stp_logical(x, x)
            )


def test_projections():
    kappa, n, m = 3, 2, 1
    for j in range(1, n + 1):
        np.testing.assert_allclose(
            stp.state_projection(j, kappa, n, m).to_dense(),
            stp.dense_state_projection(j, kappa, n, m),
            **TOLERANCE
        )
    np.testing.assert_allclose(
        stp.control_projection(1, kappa, n, m).to_dense(),
        stp.dense_control_projection(1, kappa, n, m),
        **TOLERANCE
    )
    # u = 2, β = (1, 0) → z = u ⋉ β_1 ⋉ β_2
    z = stp.stp_logical_chain(
        oc.LogicalMatrix.delta(3, 3),
        oc.LogicalMatrix.delta(3, 2),
        oc.LogicalMatrix.delta(3, 1),
    )
    assert stp.stp_logical(
        stp.state_projection(1, kappa, n, m), z).cols == (2,)
    assert stp.stp_logical(
        stp.state_projection(2, kappa, n, m), z).cols == (1,)
    assert stp.stp_logical(
        stp.control_projection(1, kappa, n, m), z).cols == (3,)


def test_value_index_conversion():
    assert stp.values_to_index((1, 0), 3) == 4
    assert stp.values_to_index((2, 2), 3) == 9
    assert stp.values_to_index((), 3) == 1
    for index in range(1, 28):
        assert stp.values_to_index(
            stp.index_to_values(index, 3, 3), 3) == index
    with pytest.raises(ValueError):
        stp.values_to_index((3,), 3)


def test_delta_notation():
    m = oc.parse_delta("delta_9[1, 7, 3]")
    assert m == oc.LogicalMatrix(9, (1, 7, 3))
    assert m.to_delta_string() == "δ_9[1 7 3]"
    assert m.block(2, 1) == oc.LogicalMatrix(9, (7,))
    with pytest.raises(ValueError):
        oc.parse_delta("δ_3[1 4]")
    with pytest.raises(ValueError):
        oc.parse_delta("[1 2 3]")


def test_from_dense():
    m = oc.LogicalMatrix(3, (2, 1, 3, 3))
    assert oc.LogicalMatrix.from_dense(m.to_dense()) == m
    with pytest.raises(AssertionError):
        oc.LogicalMatrix.from_dense(np.array([[1, 1], [1, 0]]))

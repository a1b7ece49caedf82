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
Switched finite-field networks (FFN) and their algebraic state space
representation β(k+1) = F ⋉ u(k) ⋉ β(k).

Profiles are ordered control-first: z = u ⋉ β has the index
(u - 1)·N + β with N = κ^n state profiles and M = κ^m control profiles.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Mapping, Optional, Sequence, Tuple, Union
import logging

import numpy as np

import opctl as oc
from opctl.stp import (
    LogicalMatrix,
    DeltaIndex,
    stp,
    stp_chain,
    stp_logical,
    stp_logical_chain,
    khatri_rao,
    identity_kron,
    power_reducing_matrix,
    mod_add_matrix,
    mod_mul_matrix,
    coefficient_matrix,
    state_projection,
    control_projection,
    dense_state_projection,
    dense_control_projection,
    values_to_index,
    index_to_values,
)

LOG = logging.getLogger(__name__)


def z_index(u_index: int, beta_index: int, n_states: int) -> int:
    return (u_index - 1) * n_states + beta_index


def split_z(z: int, n_states: int) -> Tuple[int, int]:
    """Inverse of :func:`z_index`: returns (u_index, beta_index)."""
    return (z - 1) // n_states + 1, (z - 1) % n_states + 1


@dataclass(frozen=True)
class Profile:
    u_index: int
    beta_index: int
    n_states: int

    @property
    def z_index(self) -> int:
        return z_index(self.u_index, self.beta_index, self.n_states)

    @staticmethod
    def from_z(z: int, n_states: int) -> 'Profile':
        u, beta = split_z(z, n_states)
        return Profile(u, beta, n_states)


@dataclass(frozen=True)
class SwitchingMap:
    """Θ: the mode σ = Θ ⋉ z selected at each joint profile z."""

    theta: LogicalMatrix

    @property
    def w(self) -> int:
        return self.theta.rows

    def mode(self, z: int) -> int:
        return self.theta.cols[z - 1]

    @staticmethod
    def from_modes(modes: Sequence[int], w: int) -> 'SwitchingMap':
        return SwitchingMap(LogicalMatrix(w, tuple(modes)))

    @staticmethod
    def constant(mode: int, w: int, n_profiles: int) -> 'SwitchingMap':
        return SwitchingMap(LogicalMatrix(w, (mode,) * n_profiles))


@dataclass(frozen=True)
class Constraints:
    """
    State constraint C_β and control constraint C_u(β), as 1-based indices.
    """

    n_states: int
    n_controls: int
    states: FrozenSet[int]
    controls: Mapping[int, FrozenSet[int]]

    def __post_init__(self):
        if len(self.states) == 0:
            raise oc.ModelValidationError(
                "C_β must not be empty.",
                path='ffn.state_constraint',
            )
        for beta in self.states:
            if len(self.controls.get(beta, frozenset())) == 0:
                raise oc.ModelValidationError(
                    f"C_u(β{beta}) must not be empty.",
                    path='ffn.control_constraint',
                )

    def controls_for(self, beta: int) -> FrozenSet[int]:
        """C_u(β); empty for states outside of C_β."""
        if beta not in self.states:
            return frozenset()
        return self.controls[beta]

    def admissible_z(self) -> FrozenSet[int]:
        """C_z = {u ⋉ β : β ∈ C_β, u ∈ C_u(β)}."""
        return frozenset(
            z_index(u, beta, self.n_states)
            for beta in self.states
            for u in self.controls[beta]
        )

    @staticmethod
    def unconstrained(n_states: int, n_controls: int) -> 'Constraints':
        all_controls = frozenset(range(1, n_controls + 1))
        return Constraints(
            n_states=n_states,
            n_controls=n_controls,
            states=frozenset(range(1, n_states + 1)),
            controls={b: all_controls for b in range(1, n_states + 1)},
        )


@dataclass(frozen=True, eq=False)
class FfnSpec:
    """
    A switched FFN over D_κ with n state agents, m control agents and
    w modes:
    β_i(k+1) = Σ_j a_ij^σ ×_κ β_j(k) +_κ Σ_l b_il^σ ×_κ u_l(k).

    :a_coeffs: Integer array of shape (w, n, n); a_coeffs[σ-1, i-1, j-1]
        is a_ij^σ.
    :b_coeffs: Integer array of shape (w, n, m).
    """

    kappa: int
    n: int
    m: int
    w: int
    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    switching: SwitchingMap
    constraints: Optional[Constraints] = field(default=None)

    def __post_init__(self):
        if not oc.util.is_prime(self.kappa):
            raise oc.ModelValidationError(
                f"field size must be prime, got {self.kappa}.",
                path='ffn.kappa',
            )
        if self.n < 1 or self.m < 0 or self.w < 1:
            raise oc.ModelValidationError(
                f"need n ≥ 1, m ≥ 0 and w ≥ 1, got n={self.n}, m={self.m}, "
                f"w={self.w}.",
                path='ffn',
            )
        a = np.asarray(self.a_coeffs, dtype=np.int64).reshape(
            self._checked_shape(self.a_coeffs, (self.w, self.n, self.n),
                                'ffn.a_coeffs'))
        b = np.asarray(self.b_coeffs, dtype=np.int64).reshape(
            self._checked_shape(self.b_coeffs, (self.w, self.n, self.m),
                                'ffn.b_coeffs'))
        for name, table in (('ffn.a_coeffs', a), ('ffn.b_coeffs', b)):
            if np.any(table < 0) or np.any(table >= self.kappa):
                raise oc.ModelValidationError(
                    f"coefficients must lie in 0..{self.kappa - 1}.",
                    path=name,
                )
        object.__setattr__(self, 'a_coeffs', a)
        object.__setattr__(self, 'b_coeffs', b)
        if self.switching.theta.shape != (self.w, self.n_profiles):
            raise oc.ModelValidationError(
                f"switching map must be a {self.w}×{self.n_profiles} "
                f"logical matrix, got {self.switching.theta.shape}.",
                path='ffn.switching',
            )
        if self.constraints is None:
            object.__setattr__(
                self,
                'constraints',
                Constraints.unconstrained(self.n_states, self.n_controls),
            )
        elif (
                self.constraints.n_states != self.n_states
                or self.constraints.n_controls != self.n_controls
        ):
            raise oc.ModelValidationError(
                "constraints do not match the network dimensions.",
                path='ffn',
            )

    @staticmethod
    def _checked_shape(table, shape, path) -> tuple:
        size = np.asarray(table).size
        if size != int(np.prod(shape)):
            raise oc.ModelValidationError(
                f"expected {int(np.prod(shape))} coefficients for shape "
                f"{shape}, got {size}.",
                path=path,
            )
        return shape

    @property
    def n_states(self) -> int:
        """N = κ^n"""
        return self.kappa ** self.n

    @property
    def n_controls(self) -> int:
        """M = κ^m"""
        return self.kappa ** self.m

    @property
    def n_profiles(self) -> int:
        return self.n_states * self.n_controls

    @property
    def state_constraint(self) -> FrozenSet[int]:
        return self.constraints.states

    @property
    def control_constraint(self) -> Mapping[int, FrozenSet[int]]:
        return self.constraints.controls


@dataclass(frozen=True)
class TransitionMatrix:
    """F = [Blk_1(F) … Blk_M(F)] of shape N × MN."""

    f: LogicalMatrix

    def __post_init__(self):
        if self.f.n_cols % self.f.rows != 0:
            raise oc.ModelValidationError(
                f"transition matrix of shape {self.f.shape} is not "
                "N × MN.",
                path='ffn.transition',
            )

    @property
    def n_states(self) -> int:
        return self.f.rows

    @property
    def n_controls(self) -> int:
        return self.f.n_cols // self.f.rows

    def successor(self, z: int) -> int:
        """β index of Col_z(F)."""
        if not 1 <= z <= self.f.n_cols:
            raise IndexError(
                f"Profile {z} is outside of 1..{self.f.n_cols}."
            )
        return self.f.cols[z - 1]

    def successor_of(self, u: int, beta: int) -> int:
        return self.successor(z_index(u, beta, self.n_states))

    def block(self, l: int) -> LogicalMatrix:
        return self.f.block(l, self.n_states)

    def __str__(self):
        return str(self.f)


def _agent_update(spec: FfnSpec, i: int) -> LogicalMatrix:
    """
    F_i,3 of shape κ × (w·MN): column (σ-1)·MN + z is the next value of
    agent i in mode σ at profile z.
    """
    kappa, n, m, w = spec.kappa, spec.n, spec.m, spec.w
    f_mul = mod_mul_matrix(kappa)
    f_add = mod_add_matrix(kappa)
    terms = []
    for j in range(1, n + 1):
        terms.append(stp_logical_chain(
            f_mul,
            coefficient_matrix(spec.a_coeffs[:, i - 1, j - 1], kappa),
            identity_kron(w, state_projection(j, kappa, n, m)),
        ))
    for l in range(1, m + 1):
        terms.append(stp_logical_chain(
            f_mul,
            coefficient_matrix(spec.b_coeffs[:, i - 1, l - 1], kappa),
            identity_kron(w, control_projection(l, kappa, n, m)),
        ))
    total = terms[0]
    for term in terms[1:]:
        total = stp_logical(f_add, khatri_rao(total, term))
    return total


def compile_assr(spec: FfnSpec) -> TransitionMatrix:
    """
    Compile the network to β(k+1) = F z(k) on column indices:
    F_i = F_i,3 ⋉ Θ ⋉ P_r,MN per agent, then F is the column-wise STP
    of F_1, …, F_n.
    """
    mode_and_profile = stp_logical(
        spec.switching.theta,
        power_reducing_matrix(spec.n_profiles),
    )
    f = None
    for i in range(1, spec.n + 1):
        f_i = stp_logical(_agent_update(spec, i), mode_and_profile)
        f = f_i if f is None else khatri_rao(f, f_i)
    LOG.debug(f"Compiled transition matrix {f}.")
    return TransitionMatrix(f)


def _dense_khatri_rao(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    width = left.shape[1]
    return stp_chain(
        left,
        np.kron(np.eye(width), right),
        power_reducing_matrix(width).to_dense(),
    )


def compile_assr_dense(spec: FfnSpec) -> TransitionMatrix:
    """
    The same derivation as :func:`compile_assr`, carried out with dense
    STP products.
    Memory grows with (w·MN)^3; only use this for tiny networks.
    """
    kappa, n, m, w = spec.kappa, spec.n, spec.m, spec.w
    f_mul = mod_mul_matrix(kappa).to_dense()
    f_add = mod_add_matrix(kappa).to_dense()
    eye_w = np.eye(w)
    mode_and_profile = stp(
        spec.switching.theta.to_dense(),
        power_reducing_matrix(spec.n_profiles).to_dense(),
    )
    f = None
    for i in range(1, n + 1):
        terms = [
            stp_chain(
                f_mul,
                coefficient_matrix(spec.a_coeffs[:, i - 1, j - 1],
                                   kappa).to_dense(),
                np.kron(eye_w, dense_state_projection(j, kappa, n, m)),
            )
            for j in range(1, n + 1)
        ] + [
            stp_chain(
                f_mul,
                coefficient_matrix(spec.b_coeffs[:, i - 1, l - 1],
                                   kappa).to_dense(),
                np.kron(eye_w, dense_control_projection(l, kappa, n, m)),
            )
            for l in range(1, m + 1)
        ]
        total = terms[0]
        for term in terms[1:]:
            total = stp(f_add, _dense_khatri_rao(total, term))
        f_i = stp(total, mode_and_profile)
        f = f_i if f is None else _dense_khatri_rao(f, f_i)
    return TransitionMatrix(LogicalMatrix.from_dense(f))


def step_direct(
        spec: FfnSpec,
        beta: Sequence[int],
        u: Sequence[int],
) -> Tuple[int, ...]:
    """
    One step of the modular recursion on field values, with the mode read
    from the switching map at the current profile.
    """
    if len(beta) != spec.n or len(u) != spec.m:
        raise ValueError(
            f"Expected {spec.n} state values and {spec.m} control values, "
            f"got {len(beta)} and {len(u)}."
        )
    z = z_index(
        values_to_index(u, spec.kappa),
        values_to_index(beta, spec.kappa),
        spec.n_states,
    )
    sigma = spec.switching.mode(z)
    beta_arr = np.asarray(beta, dtype=np.int64).reshape(spec.n)
    u_arr = np.asarray(u, dtype=np.int64).reshape(spec.m)
    next_beta = (
        spec.a_coeffs[sigma - 1] @ beta_arr
        + spec.b_coeffs[sigma - 1] @ u_arr
    ) % spec.kappa
    return tuple(int(v) for v in next_beta)


def tabulate_step_direct(spec: FfnSpec) -> TransitionMatrix:
    """Transition matrix obtained by running :func:`step_direct` on every z."""
    cols = []
    for z in range(1, spec.n_profiles + 1):
        u, beta = split_z(z, spec.n_states)
        next_beta = step_direct(
            spec,
            index_to_values(beta, spec.kappa, spec.n),
            index_to_values(u, spec.kappa, spec.m),
        )
        cols.append(values_to_index(next_beta, spec.kappa))
    return TransitionMatrix(LogicalMatrix(spec.n_states, tuple(cols)))


def step_algebraic(f: TransitionMatrix, z: Union[Profile, int]) -> DeltaIndex:
    if isinstance(z, Profile):
        z = z.z_index
    return DeltaIndex(f.n_states, f.successor(z))


def admissible_z_set(spec: FfnSpec) -> FrozenSet[int]:
    c_z = spec.constraints.admissible_z()
    if len(c_z) == 0:
        raise oc.ModelValidationError(
            "infeasible model: no admissible profile.",
            path='ffn',
        )
    return c_z


def closed_loop_successor(
        f: TransitionMatrix,
        law: LogicalMatrix,
        beta: int,
) -> int:
    """Successor of β under the state feedback u = L ⋉ β."""
    return f.successor_of(law.cols[beta - 1], beta)


def closed_loop_path(
        f: TransitionMatrix,
        law: LogicalMatrix,
        beta0: int,
        steps: int,
) -> Tuple[int, ...]:
    """β(0), …, β(steps) under u = L ⋉ β."""
    path = [beta0]
    for _ in range(steps):
        path.append(closed_loop_successor(f, law, path[-1]))
    return tuple(path)


def constraints_from_table(
        n_states: int,
        n_controls: int,
        states: FrozenSet[int],
        rules: Sequence[Tuple[FrozenSet[int], FrozenSet[int]]],
) -> Constraints:
    """
    Build C_u(β) from (states, controls) rules; the first rule listing a
    state wins, states without a rule may use every control.
    """
    controls: Dict[int, FrozenSet[int]] = dict()
    for rule_states, rule_controls in rules:
        for beta in rule_states:
            controls.setdefault(beta, frozenset(rule_controls))
    all_controls = frozenset(range(1, n_controls + 1))
    for beta in states:
        controls.setdefault(beta, all_controls)
    return Constraints(
        n_states=n_states,
        n_controls=n_controls,
        states=frozenset(states),
        controls={b: controls[b] for b in states},
    )

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
Wireless control system (WCS) plants and their coupling to the network
of mobile agents through a state-dependent fading channel.
"""

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple
import logging

import numpy as np
import scipy.linalg

import opctl as oc

LOG = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-9
EIGENVALUE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class PlantModel:
    """
    One plant x(k+1) = A_c x(k) + ξ(k) if its packet got through
    (λ(k) = 1), x(k+1) = A_o x(k) + ξ(k) otherwise, with
    Cov[ξ] = Ξ and the Lyapunov function V(x) = xᵀQx.
    """

    name: str
    a_closed: np.ndarray
    a_open: np.ndarray
    q: np.ndarray
    rho: float
    xi_cov: np.ndarray
    threshold_method: 'oc.ThresholdMethod' = field(
        default=oc.ThresholdMethod.RAYLEIGH)

    def __post_init__(self):
        path = f"plants.{self.name}"
        a_closed = oc.util.check_matrix(
            self.a_closed, f"{path}.a_closed", square=True)
        dim = a_closed.shape[0]
        a_open = oc.util.check_matrix(
            self.a_open, f"{path}.a_open", shape=(dim, dim))
        q = oc.util.check_matrix(self.q, f"{path}.q", shape=(dim, dim))
        xi_cov = oc.util.check_matrix(
            self.xi_cov, f"{path}.xi_cov", shape=(dim, dim))
        for key, matrix in (('q', q), ('xi_cov', xi_cov)):
            if not np.allclose(matrix, matrix.T, atol=1e-10):
                raise oc.ModelValidationError(
                    "must be symmetric.",
                    path=f"{path}.{key}",
                )
        if not oc.util.is_positive_definite(q):
            raise oc.ModelValidationError(
                "must be positive definite.",
                path=f"{path}.q",
            )
        if np.linalg.eigvalsh(xi_cov).min() < -EIGENVALUE_TOLERANCE:
            raise oc.ModelValidationError(
                "must be positive semidefinite.",
                path=f"{path}.xi_cov",
            )
        if not 0.0 < self.rho < 1.0:
            raise oc.ModelValidationError(
                "rho must lie in (0,1)",
                path=f"{path}.rho",
            )
        object.__setattr__(self, 'a_closed', a_closed)
        object.__setattr__(self, 'a_open', a_open)
        object.__setattr__(self, 'q', 0.5 * (q + q.T))
        object.__setattr__(self, 'xi_cov', 0.5 * (xi_cov + xi_cov.T))

    @property
    def dim(self) -> int:
        return self.a_closed.shape[0]

    def lyapunov(self, x: np.ndarray) -> np.ndarray:
        """V(x) = xᵀQx for a single state or a batch of shape (..., dim)."""
        x = np.asarray(x, dtype=float)
        return np.einsum('...i,ij,...j->...', x, self.q, x)

    def noise_trace(self) -> float:
        """Tr(QΞ)"""
        return float(np.trace(self.q @ self.xi_cov))

    def decay_matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        (A, B) with A = A_oᵀQA_o - ρQ and B = A_oᵀQA_o - A_cᵀQA_c.
        """
        open_term = self.a_open.T @ self.q @ self.a_open
        closed_term = self.a_closed.T @ self.q @ self.a_closed
        a = open_term - self.rho * self.q
        b = open_term - closed_term
        return 0.5 * (a + a.T), 0.5 * (b + b.T)


@dataclass(frozen=True, eq=False)
class ChannelPrimitives:
    """
    Channel description per plant i, all tables as arrays:

    :gamma: shape (s, MN), gamma[i][a, z-1] = P{γ_i = a | z}
    :h: shape (s,), transmit decision h_i(a) ∈ {0, 1}
    :mu: shape (p_i, s), probability of power level b in channel state c
    :eta: shape (s, p_i), decoding success in state a at level b
    """

    s_levels: int
    gamma: Sequence[np.ndarray]
    h: Sequence[np.ndarray]
    mu: Sequence[np.ndarray]
    eta: Sequence[np.ndarray]

    def __post_init__(self):
        q = len(self.gamma)
        if not (len(self.h) == len(self.mu) == len(self.eta) == q):
            raise oc.ModelValidationError(
                "gamma, h, mu and eta need one table per plant.",
                path='channel',
            )
        for i in range(q):
            path = f"channel.plants[{i}]"
            gamma = oc.util.check_matrix(self.gamma[i], f"{path}.gamma")
            if gamma.shape[0] != self.s_levels:
                raise oc.ModelValidationError(
                    f"needs {self.s_levels} rows, got {gamma.shape[0]}.",
                    path=f"{path}.gamma",
                )
            oc.util.check_probabilities(gamma, f"{path}.gamma")
            sums = gamma.sum(axis=0)
            bad = np.flatnonzero(
                np.abs(sums - 1.0) > PROBABILITY_TOLERANCE)
            if len(bad) != 0:
                raise oc.ModelValidationError(
                    f"column z={bad[0] + 1} sums to {sums[bad[0]]:g}, "
                    "not 1.",
                    path=f"{path}.gamma",
                )
            h = np.asarray(self.h[i], dtype=float).reshape(-1)
            if h.shape != (self.s_levels,) or not np.all(np.isin(h, (0, 1))):
                raise oc.ModelValidationError(
                    f"must be {self.s_levels} values in {{0, 1}}.",
                    path=f"{path}.h",
                )
            mu = oc.util.check_matrix(self.mu[i], f"{path}.mu")
            if mu.shape[1] != self.s_levels:
                raise oc.ModelValidationError(
                    f"needs {self.s_levels} columns, got {mu.shape[1]}.",
                    path=f"{path}.mu",
                )
            oc.util.check_probabilities(mu, f"{path}.mu")
            if np.any(np.abs(mu.sum(axis=0) - 1.0) > PROBABILITY_TOLERANCE):
                raise oc.ModelValidationError(
                    "every column must sum to 1.",
                    path=f"{path}.mu",
                )
            eta = oc.util.check_matrix(
                self.eta[i], f"{path}.eta",
                shape=(self.s_levels, mu.shape[0]))
            oc.util.check_probabilities(eta, f"{path}.eta")

    @property
    def n_plants(self) -> int:
        return len(self.gamma)


@dataclass(frozen=True, eq=False)
class CouplingTable:
    """Λ: lambda_rows[i, z-1] = P{λ_i = 1 | z}."""

    lambda_rows: np.ndarray

    def __post_init__(self):
        rows = oc.util.check_matrix(self.lambda_rows, 'channel.lambda_rows')
        oc.util.check_probabilities(rows, 'channel.lambda_rows')
        object.__setattr__(self, 'lambda_rows', rows)

    @property
    def n_plants(self) -> int:
        return self.lambda_rows.shape[0]

    @property
    def n_profiles(self) -> int:
        return self.lambda_rows.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.lambda_rows[i]

    def at(self, z: int) -> np.ndarray:
        """Success probabilities of all plants at profile z."""
        return self.lambda_rows[:, z - 1]


@dataclass(frozen=True)
class ThresholdVector:
    """
    Per-plant thresholds s_i as computed.
    -inf means the decay inequality holds for any success probability.

    :upper_values: Largest success probability at which the decay
        inequality still holds, +inf (the default) if there is none.
        Only finite for PENCIL thresholds of plants whose open loop
        improves V in some direction.
    """

    s_values: Tuple[float, ...]
    upper_values: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        values = tuple(float(s) for s in self.s_values)
        if any(np.isnan(s) or s == np.inf for s in values):
            raise ValueError(f"Thresholds must not be NaN or +inf: {values}.")
        if self.upper_values is None:
            upper = tuple(np.inf for _ in values)
        else:
            upper = tuple(float(s) for s in self.upper_values)
        if len(upper) != len(values):
            raise ValueError(
                f"Got {len(upper)} upper bounds for {len(values)} thresholds."
            )
        if any(np.isnan(hi) or hi < lo for lo, hi in zip(values, upper)):
            raise ValueError(
                f"Upper bounds {upper} must not lie below the thresholds "
                f"{values}."
            )
        object.__setattr__(self, 's_values', values)
        object.__setattr__(self, 'upper_values', upper)

    @property
    def clamped(self) -> Tuple[float, ...]:
        return tuple(float(np.clip(s, 0.0, 1.0)) for s in self.s_values)


def coupling_rows(primitives: ChannelPrimitives) -> CouplingTable:
    """
    λ_z^i = α_z^i η_z^i Π_{j≠i} (1 - α_z^j) with
    α_z^i = Σ_a γ_{a,z}^i h_i(a),
    μ̄_{b,z}^i = Σ_c γ_{c,z}^i μ_{b,c}^i and
    η_z^i = Σ_{a,b} γ_{a,z}^i μ̄_{b,z}^i η_{a,b}^i.
    """
    gammas = [np.asarray(g, dtype=float) for g in primitives.gamma]
    alpha = np.array([
        np.asarray(h, dtype=float).reshape(-1) @ gamma
        for h, gamma in zip(primitives.h, gammas)
    ])
    rows = []
    for i, gamma in enumerate(gammas):
        mu = np.asarray(primitives.mu[i], dtype=float)
        eta = np.asarray(primitives.eta[i], dtype=float)
        mu_bar = mu @ gamma
        eta_z = np.einsum('az,bz,ab->z', gamma, mu_bar, eta)
        others = np.prod(np.delete(1.0 - alpha, i, axis=0), axis=0)
        rows.append(alpha[i] * eta_z * others)
    rows = np.array(rows)
    outside = (rows < 0.0) | (rows > 1.0)
    if np.any(outside):
        plant, z = np.argwhere(outside)[0]
        LOG.warning(
            f"Coupling evaluates to {rows[plant, z]:g} for plant {plant} "
            f"at z={z + 1}, outside of [0, 1]; clamping "
            f"{int(outside.sum())} value(s)."
        )
        rows = np.clip(rows, 0.0, 1.0)
    return CouplingTable(rows)


def solve_stein(a: np.ndarray, c: float, r: np.ndarray) -> np.ndarray:
    """
    Unique symmetric Q with AᵀQA - cQ = R, via the vectorized system
    (Aᵀ ⊗ Aᵀ - c I) vec(Q) = vec(R).
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    r = np.atleast_2d(np.asarray(r, dtype=float))
    n = a.shape[0]
    eig = np.linalg.eigvals(a)
    gap = np.abs(np.multiply.outer(eig, eig) - c).min()
    if gap < 1e-12 * max(1.0, abs(c)):
        raise oc.SteinSolutionError(
            "Stein equation has no unique solution"
        )
    operator = np.kron(a.T, a.T) - c * np.eye(n * n)
    try:
        vec_q = scipy.linalg.solve(operator, r.reshape(-1, order='F'))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        raise oc.SteinSolutionError(
            "Stein equation has no unique solution"
        )
    q = vec_q.reshape((n, n), order='F')
    q = 0.5 * (q + q.T)
    residual = np.abs(a.T @ q @ a - c * q - r).max()
    LOG.debug(f"Stein solution {q.tolist()} with residual {residual:.3g}.")
    return q


def _rayleigh_threshold(
        a: np.ndarray,
        b: np.ndarray,
) -> Tuple[float, np.ndarray]:
    if not oc.util.is_positive_definite(b):
        raise oc.ThresholdUndefinedError(
            "threshold undefined: closed loop does not dominate open loop"
        )
    values, vectors = scipy.linalg.eigh(a, b)
    return float(values[-1]), vectors[:, -1]


def _pencil_interval(a: np.ndarray, b: np.ndarray) -> Tuple[float, float]:
    """
    The interval of λ with λB - A positive semidefinite.
    Its finite ends are real generalized eigenvalues of (A, B).
    """
    scale = max(np.abs(a).max(), np.abs(b).max(), 1.0)

    def feasible(lam: float) -> bool:
        return bool(
            np.linalg.eigvalsh(lam * b - a).min()
            >= -EIGENVALUE_TOLERANCE * scale * max(1.0, abs(lam))
        )

    eigenvalues = scipy.linalg.eigvals(a, b)
    candidates = sorted(
        float(ev.real) for ev in eigenvalues
        if np.isfinite(ev) and abs(ev.imag) <= 1e-9 * max(1.0, abs(ev))
    )
    feasible_candidates = [c for c in candidates if feasible(c)]
    if len(feasible_candidates) == 0:
        # with no finite end, the interval is empty or all of ℝ
        if feasible(0.0):
            return -np.inf, np.inf
        raise oc.ThresholdUndefinedError(
            "threshold undefined: closed loop does not dominate open loop"
        )
    lower, upper = feasible_candidates[0], feasible_candidates[-1]
    if feasible(lower - 1.0):
        LOG.warning(
            "Decay inequality holds for every success probability; "
            "threshold is unbounded below."
        )
        lower = -np.inf
    if feasible(upper + 1.0):
        upper = np.inf
    return lower, upper


def rayleigh_maximizer(plant: PlantModel) -> Tuple[float, np.ndarray]:
    """
    Supremum of yᵀAy / yᵀBy and a direction attaining it.
    Requires B to be positive definite.
    """
    return _rayleigh_threshold(*plant.decay_matrices())


def success_interval(plant: PlantModel) -> Tuple[float, float]:
    """
    Range (s_i, s̄_i) of per-slot success probabilities for which the
    expected Lyapunov decay of `plant` is at least ρ, unclamped.
    s̄_i is +inf unless the PENCIL method finds a bounded interval.
    """
    a, b = plant.decay_matrices()
    if plant.threshold_method == oc.ThresholdMethod.RAYLEIGH:
        lower, _ = _rayleigh_threshold(a, b)
        upper = np.inf
    else:
        lower, upper = _pencil_interval(a, b)
    LOG.debug(
        f"Threshold of plant {plant.name} "
        f"({plant.threshold_method.name}): {lower:.6g}, "
        f"decay holds up to {upper:.6g}"
    )
    if upper < 1.0:
        LOG.warning(
            f"Plant {plant.name}: the decay inequality fails for success "
            f"probabilities above {upper:.4g}; profiles beyond it are not "
            "admissible targets."
        )
    return lower, upper


def success_threshold(plant: PlantModel) -> float:
    """
    Smallest per-slot success probability that makes the expected
    Lyapunov decay of `plant` at least ρ, unclamped.
    """
    lower, _ = success_interval(plant)
    return lower


def thresholds(plants: Iterable[PlantModel]) -> ThresholdVector:
    intervals = [success_interval(p) for p in plants]
    return ThresholdVector(
        tuple(lower for lower, _ in intervals),
        upper_values=tuple(upper for _, upper in intervals),
    )


def decay_margin(plant: PlantModel, success_probability: float) -> float:
    """
    Smallest eigenvalue of ρQ - λA_cᵀQA_c - (1-λ)A_oᵀQA_o.
    Nonnegative iff the expected decay inequality holds for every state
    at success probability λ.
    """
    lam = success_probability
    slack = (
        plant.rho * plant.q
        - lam * plant.a_closed.T @ plant.q @ plant.a_closed
        - (1.0 - lam) * plant.a_open.T @ plant.q @ plant.a_open
    )
    return float(np.linalg.eigvalsh(0.5 * (slack + slack.T)).min())


def steady_state_bound(plant: PlantModel) -> float:
    """Tr(QΞ) / (1 - ρ)"""
    return plant.noise_trace() / (1.0 - plant.rho)


def omega_set(
        coupling: CouplingTable,
        threshold_vector: ThresholdVector,
        c_z: Iterable[int],
) -> FrozenSet[int]:
    """
    Ω(s): admissible profiles where every λ_z^i ≥ s_i, and λ_z^i ≤ s̄_i
    for plants with a bounded decay interval.
    """
    s = np.asarray(threshold_vector.clamped)
    upper = np.asarray(threshold_vector.upper_values)
    if len(s) != coupling.n_plants:
        raise ValueError(
            f"Got {len(s)} thresholds for {coupling.n_plants} plants."
        )
    meets = np.all(
        (coupling.lambda_rows >= s[:, None])
        & (coupling.lambda_rows <= upper[:, None]),
        axis=0,
    )
    return frozenset(z for z in c_z if meets[z - 1])


def normalize_stein_weight(q: np.ndarray, path: str) -> np.ndarray:
    """
    Return a positive definite weight from a Stein solution, negating a
    negative definite one.
    """
    eigenvalues = np.linalg.eigvalsh(q)
    if eigenvalues.min() > 0:
        return q
    if eigenvalues.max() < 0:
        LOG.warning(
            f"{path}: Stein solution is negative definite; using -Q as "
            "the Lyapunov weight."
        )
        return -q
    raise oc.ModelValidationError(
        f"Stein solution is indefinite (eigenvalues {eigenvalues.tolist()}).",
        path=path,
    )


def stein_weight(
        a: np.ndarray,
        c: float,
        r: Optional[np.ndarray],
        path: str,
) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if r is None:
        r = np.eye(a.shape[0])
    return normalize_stein_weight(solve_stein(a, c, r), path)

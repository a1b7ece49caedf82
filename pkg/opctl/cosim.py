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
Monte Carlo co-simulation of the WCS plants and the closed-loop network.

Replication r started from state profile β_0 draws from its own stream,
`default_rng(SeedSequence(seed, spawn_key=(β_0, r)))`, so its trajectory
does not depend on how many other replications are run.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

import opctl as oc
from opctl.coupling import CouplingTable, PlantModel
from opctl.ffn import Constraints, TransitionMatrix, z_index
from opctl.stp import LogicalMatrix

LOG = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SimConfig:
    horizon: int
    """Number of steps K; trajectories cover k = 0..K."""
    replications: int
    seed: int
    initial_state_profiles: Tuple[int, ...]
    plant_initial: Tuple[np.ndarray, ...]
    """Initial state (or its mean, see plant_initial_std) per plant."""
    plant_initial_std: float = 0.0
    noise: 'oc.NoiseDistribution' = field(
        default=oc.NoiseDistribution.GAUSSIAN)

    def __post_init__(self):
        if self.horizon < 1:
            raise oc.ModelValidationError(
                f"must be at least 1, got {self.horizon}.",
                path='sim.horizon',
            )
        if self.replications < 1:
            raise oc.ModelValidationError(
                f"must be at least 1, got {self.replications}.",
                path='sim.replications',
            )
        if len(self.initial_state_profiles) == 0:
            raise oc.ModelValidationError(
                "needs at least one state profile.",
                path='sim.initial_state_profiles',
            )
        object.__setattr__(
            self, 'seed', oc.util.check_seed(self.seed, 'sim.seed'))
        if self.plant_initial_std < 0:
            raise oc.ModelValidationError(
                "must not be negative.",
                path='sim.plant_initial_std',
            )
        object.__setattr__(self, 'plant_initial', tuple(
            np.asarray(x, dtype=float).reshape(-1)
            for x in self.plant_initial
        ))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    One replication for k = 0..K. Arrays over plants have the plant index
    first.
    """

    beta0: int
    replication: int
    beta: np.ndarray
    u: np.ndarray
    z: np.ndarray
    success: np.ndarray
    """λ_i(k) ∈ {0, 1}, shape (q, K+1); the draw at k = K is unused."""
    success_probability: np.ndarray
    """Λ_i z(k), shape (q, K+1)"""
    x: Tuple[np.ndarray, ...]
    """Per plant, shape (K+1, n_i)"""
    v: np.ndarray
    """V_i(x_i(k)), shape (q, K+1)"""

    @property
    def horizon(self) -> int:
        return len(self.beta) - 1


def noise_square_root(cov: np.ndarray) -> np.ndarray:
    """S with S Sᵀ = cov for a positive semidefinite cov."""
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    return eigenvectors @ np.diag(np.sqrt(np.clip(eigenvalues, 0.0, None)))


def replication_rng(seed: int, beta0: int, replication: int
                    ) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(beta0, replication))
    )


def profile_path(
        f: TransitionMatrix,
        law: LogicalMatrix,
        beta0: int,
        horizon: int,
        constraints: Optional[Constraints] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Deterministic (β, u, z) sequences of the closed-loop network.

    :raises AssertionError: if `constraints` are given and an inadmissible
        profile is reached.
    """
    beta = np.empty(horizon + 1, dtype=np.int64)
    u = np.empty(horizon + 1, dtype=np.int64)
    z = np.empty(horizon + 1, dtype=np.int64)
    beta[0] = beta0
    for k in range(horizon + 1):
        u[k] = law.cols[beta[k] - 1]
        z[k] = z_index(u[k], beta[k], f.n_states)
        if (
                constraints is not None
                and u[k] not in constraints.controls_for(int(beta[k]))
        ):
            raise AssertionError(
                f"Inadmissible profile z={z[k]} (u{u[k]}, β{beta[k]}) at "
                f"k={k} from β0={beta0}; the feedback law does not respect "
                "the constraints."
            )
        if k < horizon:
            beta[k + 1] = f.successor(int(z[k]))
    return beta, u, z


def _simulate_plant(
        plant: PlantModel,
        x0: np.ndarray,
        success: np.ndarray,
        noise: np.ndarray,
) -> np.ndarray:
    horizon = len(noise)
    x = np.empty((horizon + 1, plant.dim))
    x[0] = x0
    for k in range(horizon):
        a = plant.a_closed if success[k] else plant.a_open
        x[k + 1] = a @ x[k] + noise[k]
    return x


def simulate_closed_loop(
        plants: Sequence[PlantModel],
        coupling: CouplingTable,
        f: TransitionMatrix,
        law: LogicalMatrix,
        config: SimConfig,
        constraints: Optional[Constraints] = None,
) -> List[Trajectory]:
    """
    Per step: u = L β, z = u ⋉ β, λ_i ~ Bernoulli(Λ_i z), x_i advances with
    A_c,i or A_o,i plus noise of covariance Ξ_i, β advances with F.
    """
    if len(config.plant_initial) != len(plants):
        raise oc.ModelValidationError(
            f"needs {len(plants)} initial states, got "
            f"{len(config.plant_initial)}.",
            path='sim.plant_initial',
        )
    for plant, x0 in zip(plants, config.plant_initial):
        if x0.shape != (plant.dim,):
            raise oc.ModelValidationError(
                f"initial state of {plant.name} needs {plant.dim} "
                f"entries, got {x0.shape[0]}.",
                path='sim.plant_initial',
            )
    cov_roots = [noise_square_root(p.xi_cov) for p in plants]
    horizon = config.horizon
    trajectories = []
    for beta0 in config.initial_state_profiles:
        beta, u, z = profile_path(f, law, beta0, horizon, constraints)
        probabilities = coupling.lambda_rows[:, z - 1]
        for r in range(config.replications):
            rng = replication_rng(config.seed, beta0, r)
            success = rng.random(probabilities.shape) < probabilities
            xs = []
            for i, plant in enumerate(plants):
                start = (
                    config.plant_initial[i]
                    + config.plant_initial_std
                    * rng.standard_normal(plant.dim)
                )
                noise = config.noise.sample(rng, cov_roots[i], horizon)
                xs.append(_simulate_plant(plant, start, success[i], noise))
            trajectories.append(Trajectory(
                beta0=beta0,
                replication=r,
                beta=beta,
                u=u,
                z=z,
                success=success,
                success_probability=probabilities,
                x=tuple(xs),
                v=np.array([p.lyapunov(x) for p, x in zip(plants, xs)]),
            ))
    LOG.info(
        f"Simulated {len(trajectories)} trajectories of {horizon} steps "
        f"from {len(config.initial_state_profiles)} initial profile(s)."
    )
    return trajectories


def mean_lyapunov(trajectories: Sequence[Trajectory]) -> np.ndarray:
    """V̄_i(k) across all trajectories, shape (q, K+1)."""
    return np.mean([t.v for t in trajectories], axis=0)


def mean_states(trajectories: Sequence[Trajectory]) -> List[np.ndarray]:
    """Mean state per plant across trajectories, each (K+1, n_i)."""
    q = len(trajectories[0].x)
    return [np.mean([t.x[i] for t in trajectories], axis=0)
            for i in range(q)]

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
Verification of the expected Lyapunov decay
E[V(x(k+1)) | x(k), z(k)] ≤ ρ V(x(k)) + Tr(QΞ) on simulated trajectories.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple
import logging

import numpy as np

from opctl.coupling import PlantModel, steady_state_bound
from opctl.cosim import Trajectory

LOG = logging.getLogger(__name__)

ANALYTIC_TOLERANCE = 1e-9
CONFIDENCE_SIGMAS = 3.0


@dataclass(frozen=True)
class PlantLyapunovSummary:
    name: str
    checked_steps: int
    violations: int
    """Steps k ≥ T where the exact conditional expectation exceeds the
    decay bound."""
    worst_slack: float
    """Largest expected value minus bound over the checked steps."""
    empirical_exceedances: int
    """Steps where the replication mean of V(k+1) exceeds the mean bound
    by more than the confidence margin."""
    long_run_mean: float
    long_run_sem: float
    steady_state_bound: float
    absorbing_profile: Optional[int]
    empirical_success: float
    success_probability: float
    success_samples: int

    @property
    def confidence_margin(self) -> float:
        return CONFIDENCE_SIGMAS * self.long_run_sem

    @property
    def bound_ok(self) -> bool:
        return (
            self.long_run_mean
            <= self.steady_state_bound + self.confidence_margin
        )

    @property
    def frequency_ok(self) -> bool:
        if self.success_samples == 0:
            return True
        p = self.success_probability
        sigma = np.sqrt(p * (1.0 - p) / self.success_samples)
        return bool(
            abs(self.empirical_success - p)
            <= CONFIDENCE_SIGMAS * sigma + 1e-12
        )

    def to_dict(self) -> dict:
        return dict(
            name=self.name,
            checked_steps=self.checked_steps,
            violations=self.violations,
            worst_slack=self.worst_slack,
            empirical_exceedances=self.empirical_exceedances,
            long_run_mean=self.long_run_mean,
            long_run_sem=self.long_run_sem,
            confidence_margin=self.confidence_margin,
            steady_state_bound=self.steady_state_bound,
            bound_ok=self.bound_ok,
            absorbing_profile=self.absorbing_profile,
            empirical_success=self.empirical_success,
            success_probability=self.success_probability,
            success_samples=self.success_samples,
            frequency_ok=self.frequency_ok,
        )


@dataclass(frozen=True, eq=False)
class LyapunovReport:
    transient: int
    plants: Tuple[PlantLyapunovSummary, ...]
    expected_next: np.ndarray
    """Mean over trajectories of E[V_i(k+1) | x(k), z(k)], shape (q, K)."""
    decay_bound: np.ndarray
    """Mean over trajectories of ρ_i V_i(k) + Tr(Q_iΞ_i), shape (q, K)."""
    empirical_next: np.ndarray
    """Mean over trajectories of V_i(k+1), shape (q, K)."""

    @property
    def passed(self) -> bool:
        return all(p.violations == 0 for p in self.plants)

    def to_dict(self) -> dict:
        return dict(
            transient=self.transient,
            passed=self.passed,
            plants=[p.to_dict() for p in self.plants],
        )


def _transmission_frequency(
        trajectories: Sequence[Trajectory],
        plant_index: int,
        start: int,
) -> Tuple[Optional[int], float, float, int]:
    z = np.concatenate([t.z[start:-1] for t in trajectories])
    if len(z) == 0:
        return None, float('nan'), float('nan'), 0
    success = np.concatenate(
        [t.success[plant_index, start:-1] for t in trajectories])
    probability = np.concatenate(
        [t.success_probability[plant_index, start:-1] for t in trajectories])
    values, counts = np.unique(z, return_counts=True)
    profile = int(values[np.argmax(counts)])
    mask = z == profile
    return (
        profile,
        float(success[mask].mean()),
        float(probability[mask][0]),
        int(mask.sum()),
    )


def lyapunov_report(
        trajectories: Sequence[Trajectory],
        plants: Sequence[PlantModel],
        transient: int,
) -> LyapunovReport:
    """
    Check the decay inequality for every k with T ≤ k < K, using the exact
    two-point mixture λ_z V(A_c x) + (1-λ_z) V(A_o x) + Tr(QΞ) at the
    realized profile, and summarize the empirical behavior.
    """
    if len(trajectories) == 0:
        raise ValueError("No trajectories to check.")
    horizon = trajectories[0].horizon
    if transient >= horizon:
        raise ValueError(
            f"Transient {transient} leaves no steps to check within the "
            f"horizon of {horizon} steps."
        )
    q = len(plants)
    n_traj = len(trajectories)
    expected = np.empty((n_traj, q, horizon))
    bound = np.empty((n_traj, q, horizon))
    for t_index, t in enumerate(trajectories):
        for i, plant in enumerate(plants):
            x = t.x[i][:-1]
            lam = t.success_probability[i, :-1]
            noise_trace = plant.noise_trace()
            expected[t_index, i] = (
                lam * plant.lyapunov(x @ plant.a_closed.T)
                + (1.0 - lam) * plant.lyapunov(x @ plant.a_open.T)
                + noise_trace
            )
            bound[t_index, i] = plant.rho * t.v[i, :-1] + noise_trace
    v_next = np.array([t.v[:, 1:] for t in trajectories])

    window_start = max(transient, horizon // 2)
    summaries = []
    for i, plant in enumerate(plants):
        slack = expected[:, i, transient:] - bound[:, i, transient:]
        tolerance = ANALYTIC_TOLERANCE * np.maximum(
            1.0, np.abs(bound[:, i, transient:]))
        violations = int(np.sum(slack > tolerance))

        difference = v_next[:, i, transient:] - bound[:, i, transient:]
        difference_mean = difference.mean(axis=0)
        difference_sem = (
            difference.std(axis=0, ddof=1) / np.sqrt(n_traj)
            if n_traj > 1 else np.zeros_like(difference_mean)
        )
        exceedances = int(np.sum(
            difference_mean > CONFIDENCE_SIGMAS * difference_sem))

        time_averages = np.array(
            [t.v[i, window_start:].mean() for t in trajectories])
        sem = (
            float(time_averages.std(ddof=1) / np.sqrt(n_traj))
            if n_traj > 1 else 0.0
        )
        profile, rate, probability, samples = _transmission_frequency(
            trajectories, i, window_start)
        summary = PlantLyapunovSummary(
            name=plant.name,
            checked_steps=int(slack.size),
            violations=violations,
            worst_slack=float(slack.max()),
            empirical_exceedances=exceedances,
            long_run_mean=float(time_averages.mean()),
            long_run_sem=sem,
            steady_state_bound=steady_state_bound(plant),
            absorbing_profile=profile,
            empirical_success=rate,
            success_probability=probability,
            success_samples=samples,
        )
        if violations != 0:
            LOG.warning(
                f"Plant {plant.name}: {violations} decay violation(s) "
                f"after the transient of {transient} steps "
                f"(worst slack {summary.worst_slack:.4g})."
            )
        summaries.append(summary)
    return LyapunovReport(
        transient=transient,
        plants=tuple(summaries),
        expected_next=expected.mean(axis=0),
        decay_bound=bound.mean(axis=0),
        empirical_next=v_next.mean(axis=0),
    )

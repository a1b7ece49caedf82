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
CSV output for run artifacts: traces, means, coupling rows, gains.
Every file has a header row and comma-separated columns in a fixed order.
"""

from typing import Dict, List, Sequence
import csv
import logging

import numpy as np

import opctl as oc
from opctl.coupling import CouplingTable, PlantModel
from opctl.cosim import Trajectory, mean_lyapunov, mean_states, profile_path
from opctl.ffn import TransitionMatrix
from opctl.lyapunov import LyapunovReport
from opctl.stp import LogicalMatrix, index_to_values
from opctl.synthesis import BfsCertificate, GainFamily

LOG = logging.getLogger(__name__)

TRACE_FIELDS = [
    'law', 'beta0', 'replication', 'k', 'beta', 'u', 'z', 'plant',
    'success', 'success_probability', 'V',
]


def _writer(csv_file):
    return csv.writer(
        csv_file,
        delimiter=',',
        quotechar='"',
        quoting=csv.QUOTE_MINIMAL
    )


def _state_columns(plants: Sequence[PlantModel]) -> List[str]:
    return [f'x{j + 1}' for j in range(max(p.dim for p in plants))]


def write_traces(
        filename: str,
        trajectories_by_law: Dict[str, Sequence[Trajectory]],
        plants: Sequence[PlantModel],
):
    """One row per law, trajectory, step and plant."""
    state_columns = _state_columns(plants)
    with open(filename, mode='w', newline='') as csv_file:
        writer = _writer(csv_file)
        writer.writerow(TRACE_FIELDS + state_columns)
        for law_name, trajectories in trajectories_by_law.items():
            for t in trajectories:
                for k in range(t.horizon + 1):
                    for i, plant in enumerate(plants):
                        x = list(t.x[i][k])
                        writer.writerow([
                            law_name,
                            t.beta0,
                            t.replication,
                            k,
                            t.beta[k],
                            t.u[k],
                            t.z[k],
                            plant.name,
                            int(t.success[i, k]),
                            t.success_probability[i, k],
                            t.v[i, k],
                        ] + x + [''] * (len(state_columns) - len(x)))


def write_means(
        filename: str,
        trajectories_by_law: Dict[str, Sequence[Trajectory]],
        plants: Sequence[PlantModel],
):
    """Means of V_i and x_i across all replications and initial profiles."""
    state_columns = _state_columns(plants)
    with open(filename, mode='w', newline='') as csv_file:
        writer = _writer(csv_file)
        writer.writerow(['law', 'k', 'plant', 'mean_V']
                        + ['mean_' + c for c in state_columns])
        for law_name, trajectories in trajectories_by_law.items():
            v_mean = mean_lyapunov(trajectories)
            x_mean = mean_states(trajectories)
            for k in range(v_mean.shape[1]):
                for i, plant in enumerate(plants):
                    x = list(x_mean[i][k])
                    writer.writerow(
                        [law_name, k, plant.name, v_mean[i, k]]
                        + x + [''] * (len(state_columns) - len(x))
                    )


def write_profile_paths(
        filename: str,
        f: TransitionMatrix,
        laws: Dict[str, LogicalMatrix],
        initial_profiles: Sequence[int],
        horizon: int,
        kappa: int,
        n: int,
):
    """Deterministic state profile sequence per law and β_0."""
    with open(filename, mode='w', newline='') as csv_file:
        writer = _writer(csv_file)
        writer.writerow(['law', 'beta0', 'k', 'beta', 'beta_values', 'u'])
        for law_name, law in laws.items():
            for beta0 in initial_profiles:
                beta, u, _ = profile_path(f, law, beta0, horizon)
                for k in range(horizon + 1):
                    writer.writerow([
                        law_name, beta0, k, beta[k],
                        ' '.join(str(v) for v in
                                 index_to_values(int(beta[k]), kappa, n)),
                        u[k],
                    ])


def write_lyapunov(
        filename: str,
        report: LyapunovReport,
        plants: Sequence[PlantModel],
):
    with open(filename, mode='w', newline='') as csv_file:
        writer = _writer(csv_file)
        writer.writerow(['k', 'plant', 'expected_next', 'decay_bound',
                         'empirical_next', 'checked'])
        for k in range(report.expected_next.shape[1]):
            for i, plant in enumerate(plants):
                writer.writerow([
                    k, plant.name,
                    report.expected_next[i, k],
                    report.decay_bound[i, k],
                    report.empirical_next[i, k],
                    int(k >= report.transient),
                ])


def write_lambda(
        filename: str,
        coupling: CouplingTable,
        plant_names: Sequence[str],
):
    with open(filename, mode='w', newline='') as csv_file:
        writer = _writer(csv_file)
        writer.writerow(['z'] + [f'lambda_{name}' for name in plant_names])
        for z in range(1, coupling.n_profiles + 1):
            writer.writerow([z] + [repr(float(v)) for v in coupling.at(z)])


def read_lambda(filename: str) -> CouplingTable:
    with open(filename, mode='r', newline='') as csv_file:
        rows = list(csv.reader(csv_file))
    values = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    return CouplingTable(values.T)


def write_thresholds(
        filename: str,
        plant_names: Sequence[str],
        thresholds: 'oc.ThresholdVector',
):
    with open(filename, mode='w', newline='') as csv_file:
        writer = _writer(csv_file)
        writer.writerow(['plant', 's_raw', 's_clamped', 's_upper'])
        for name, raw, clamped, upper in zip(
                plant_names,
                thresholds.s_values,
                thresholds.clamped,
                thresholds.upper_values,
        ):
            writer.writerow([name, repr(raw), repr(clamped), repr(upper)])


def write_gains(filename: str, family: GainFamily):
    with open(filename, mode='w', newline='') as csv_file:
        writer = _writer(csv_file)
        writer.writerow(['beta', 'constrained', 'depth', 'controls'])
        for a in range(1, family.n_states + 1):
            writer.writerow([
                a,
                int(a in family.constrained_states),
                family.depths.get(a, ''),
                ' '.join(str(u) for u in sorted(family.options[a])),
            ])


def write_tree_edges(filename: str, certificate: BfsCertificate):
    """Spanning tree edges; vertex 0 is the contracted invariant set."""
    with open(filename, mode='w', newline='') as csv_file:
        writer = _writer(csv_file)
        writer.writerow(['parent', 'child', 'depth'])
        for parent, child in certificate.tree_edges:
            writer.writerow([parent, child, certificate.depths[child]])

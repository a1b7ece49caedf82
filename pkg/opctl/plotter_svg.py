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
Static vector graphics of the mean Lyapunov values per law.
"""

from typing import Dict, Sequence
import logging

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

from opctl.coupling import PlantModel, steady_state_bound  # noqa: E402
from opctl.cosim import Trajectory, mean_lyapunov  # noqa: E402

LOG = logging.getLogger(__name__)


def plot_lyapunov_means(
        filename: str,
        trajectories_by_law: Dict[str, Sequence[Trajectory]],
        plants: Sequence[PlantModel],
        transient: int = None,
):
    """
    One panel per plant with V̄_i(k) for every law and the steady-state
    bound Tr(QΞ)/(1-ρ).
    """
    fig, axes = plt.subplots(
        len(plants), 1,
        figsize=(6.4, 2.6 * len(plants)),
        sharex=True,
        squeeze=False,
    )
    for i, (plant, ax) in enumerate(zip(plants, axes[:, 0])):
        for law_name, trajectories in trajectories_by_law.items():
            ax.plot(mean_lyapunov(trajectories)[i], label=law_name)
        ax.axhline(
            steady_state_bound(plant),
            color='gray',
            linestyle='--',
            linewidth=0.8,
            label='Tr(QΞ)/(1-ρ)',
        )
        if transient is not None:
            ax.axvline(transient, color='gray', linestyle=':',
                       linewidth=0.8)
        ax.set_ylabel(f"mean V ({plant.name})")
        ax.legend(fontsize='small')
    axes[-1, 0].set_xlabel("k")
    fig.tight_layout()
    fig.savefig(filename)
    plt.close(fig)
    LOG.debug(f"Wrote {filename}.")

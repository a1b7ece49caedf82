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

from enum import Enum

import numpy as np


class NoiseDistribution(Enum):
    GAUSSIAN = 1
    UNIFORM = 2
    """
    Independent uniform components on [-√3, √3], which have unit variance,
    mixed to the requested covariance.
    """

    def sample(
            self,
            rng: np.random.Generator,
            cov_sqrt: np.ndarray,
            size: int,
    ) -> np.ndarray:
        """
        Draw `size` zero-mean samples with covariance
        cov_sqrt @ cov_sqrt.T.

        :return: Array of shape (size, dim).
        """
        dim = cov_sqrt.shape[0]
        if self == NoiseDistribution.GAUSSIAN:
            white = rng.standard_normal((size, dim))
        else:
            white = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), (size, dim))
        return white @ cov_sqrt.T

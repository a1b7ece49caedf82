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
Model files and the Components that validate their sections.

A model file is a YAML document with the sections `ffn`, `plants`,
`channel`, `targets` and `sim`; see the shipped models for examples.
"""

from typing import Dict, List, Optional, Union
import copy
import logging
import os

import numpy as np
import ruamel.yaml

import opctl as oc
import opctl.properties as prop
from opctl.stp import LogicalMatrix, parse_delta

LOG = logging.getLogger(__name__)


def _logical_matrix(value, path: str) -> LogicalMatrix:
    try:
        return parse_delta(value)
    except ValueError as e:
        raise oc.ModelValidationError(str(e), path=path) from e


class FfnSection(oc.Component):
    """
    The network of mobile agents.

    Coefficient tables list, per agent pair, the coefficient in every
    mode: `a_coeffs[i][j]` is [a_ij^1, …, a_ij^w].
    """

    kappa = prop.IntProperty(2, required=True)
    """Prime field size κ; agents take values in 0..κ-1."""
    n = prop.IntProperty(1, required=True)
    """Number of state agents."""
    m = prop.IntProperty(0, required=False)
    """Number of control agents."""
    w = prop.IntProperty(1, required=False)
    """Number of modes."""
    a_coeffs = prop.ListProperty([], required=True)
    b_coeffs = prop.ListProperty([], required=False)
    switching = prop.DeltaProperty('', required=False)
    """
    Θ as δ_w[…] or as a list of modes per profile z.
    If empty, mode 1 is used everywhere.
    """
    transition = prop.DeltaProperty('', required=False)
    """
    Known transition matrix F. If given, it replaces the compiled one in
    all later stages.
    """
    state_constraint = prop.IndexSetProperty('all', required=False)
    control_constraint = prop.ListProperty([], required=False)
    """
    List of rules `{states: [...], controls: [...]}`; the first rule that
    lists a state defines C_u for it, other states may use every control.
    """

    def __init__(self):
        super().__init__()
        self.spec: Optional['oc.FfnSpec'] = None
        self.transition_override: Optional['oc.TransitionMatrix'] = None

    def _coefficients(self, table, cols: int, path: str) -> np.ndarray:
        if cols == 0:
            return np.zeros((self.w, self.n, 0), dtype=np.int64)
        try:
            arr = np.asarray(table, dtype=np.int64)
        except (TypeError, ValueError) as e:
            raise oc.ModelValidationError(
                "must be a nested list of integers.", path=path) from e
        if arr.shape != (self.n, cols, self.w):
            raise oc.ModelValidationError(
                f"must have shape {(self.n, cols, self.w)} "
                "(agent, agent, mode), "
                f"got {arr.shape}.",
                path=path,
            )
        return arr.transpose(2, 0, 1)

    def _switching(self, n_profiles: int) -> 'oc.SwitchingMap':
        if isinstance(self.switching, list):
            try:
                return oc.SwitchingMap.from_modes(self.switching, self.w)
            except (TypeError, ValueError) as e:
                raise oc.ModelValidationError(
                    str(e), path=self.path('switching')) from e
        if self.switching == '':
            return oc.SwitchingMap.constant(1, self.w, n_profiles)
        return oc.SwitchingMap(
            _logical_matrix(self.switching, self.path('switching')))

    def _constraints(self, n_states: int, n_controls: int
                     ) -> 'oc.Constraints':
        states = oc.util.check_index_set(
            self.state_constraint, n_states, self.path('state_constraint'))
        rules = []
        for r, rule in enumerate(self.control_constraint):
            path = f"{self.path('control_constraint')}[{r}]"
            if not isinstance(rule, dict) or set(rule) != {'states',
                                                           'controls'}:
                raise oc.ModelValidationError(
                    "each rule needs exactly the keys 'states' and "
                    "'controls'.",
                    path=path,
                )
            rules.append((
                oc.util.check_index_set(
                    rule['states'], n_states, f"{path}.states"),
                oc.util.check_index_set(
                    rule['controls'], n_controls, f"{path}.controls"),
            ))
        return oc.constraints_from_table(n_states, n_controls, states, rules)

    def initialize(self, model: 'oc.Model', init_stage: 'oc.InitStages'):
        super().initialize(model, init_stage)
        if init_stage == oc.InitStages.CHECK_ARGUMENTS:
            if not oc.util.is_prime(self.kappa):
                raise oc.ModelValidationError(
                    f"field size must be prime, got {self.kappa}.",
                    path=self.path('kappa'),
                )
        if init_stage == oc.InitStages.BUILD_NETWORK:
            n_states = self.kappa ** self.n
            n_controls = self.kappa ** self.m
            self.spec = oc.FfnSpec(
                kappa=self.kappa,
                n=self.n,
                m=self.m,
                w=self.w,
                a_coeffs=self._coefficients(
                    self.a_coeffs, self.n, self.path('a_coeffs')),
                b_coeffs=self._coefficients(
                    self.b_coeffs, self.m, self.path('b_coeffs')),
                switching=self._switching(n_states * n_controls),
                constraints=self._constraints(n_states, n_controls),
            )
            if self.transition != '':
                f = _logical_matrix(self.transition, self.path('transition'))
                if f.shape != (n_states, n_states * n_controls):
                    raise oc.ModelValidationError(
                        f"must be {n_states}×{n_states * n_controls}, got "
                        f"{f.shape[0]}×{f.shape[1]}.",
                        path=self.path('transition'),
                    )
                self.transition_override = oc.TransitionMatrix(f)


class PlantSection(oc.Component):
    """
    One plant of the wireless control system.
    Give the Lyapunov weight either directly as `q` or as
    `q_stein: {c: …, r: …}`, meaning A_cᵀQA_c - cQ = R (R defaults to I).
    """

    name = prop.StrProperty('', required=False)
    a_closed = prop.MatrixProperty([], required=True)
    a_open = prop.MatrixProperty([], required=True)
    q = prop.MatrixProperty([], required=False)
    q_stein = prop.MappingProperty({}, required=False)
    rho = prop.FloatProperty(0.5, required=True)
    xi_cov = prop.MatrixProperty([], required=False)
    """Noise covariance Ξ; identity if not given."""
    threshold_method = prop.EnumProperty(
        oc.ThresholdMethod.RAYLEIGH.name,
        name='threshold_method',
        required=False,
        enum_class=oc.ThresholdMethod,
    )

    def __init__(self):
        super().__init__()
        self.plant: Optional['oc.PlantModel'] = None

    def _weight(self, dim: int) -> np.ndarray:
        has_q = 'q' in self._arguments_already_set
        has_recipe = len(self.q_stein) != 0
        if has_q == has_recipe:
            raise oc.ModelValidationError(
                "give exactly one of q and q_stein.",
                path=self.component_name,
            )
        if has_q:
            return self.q
        unknown = set(self.q_stein) - {'c', 'r'}
        if 'c' not in self.q_stein or len(unknown) != 0:
            raise oc.ModelValidationError(
                "needs the key 'c' and optionally 'r'.",
                path=self.path('q_stein'),
            )
        r = None
        if 'r' in self.q_stein:
            r = oc.util.check_matrix(
                self.q_stein['r'], self.path('q_stein.r'), shape=(dim, dim))
        return oc.stein_weight(
            self.a_closed,
            float(self.q_stein['c']),
            r,
            path=self.path('q_stein'),
        )

    def initialize(self, model: 'oc.Model', init_stage: 'oc.InitStages'):
        super().initialize(model, init_stage)
        if init_stage == oc.InitStages.BUILD_PLANTS:
            dim = self.a_closed.shape[0]
            xi_cov = (
                self.xi_cov if 'xi_cov' in self._arguments_already_set
                else np.eye(dim)
            )
            self.plant = oc.PlantModel(
                name=self.name,
                a_closed=self.a_closed,
                a_open=self.a_open,
                q=self._weight(dim),
                rho=self.rho,
                xi_cov=xi_cov,
                threshold_method=oc.ThresholdMethod[self.threshold_method],
            )


class ChannelSection(oc.Component):
    """
    Either the coupling rows Λ_i directly (`lambda_rows`, one row per
    plant) or the channel primitives `s_levels`, `gamma`, `h`, `mu` and
    `eta` (one table per plant each).
    """

    lambda_rows = prop.MatrixProperty([], required=False)
    s_levels = prop.IntProperty(0, required=False)
    gamma = prop.ListProperty([], required=False)
    h = prop.ListProperty([], required=False)
    mu = prop.ListProperty([], required=False)
    eta = prop.ListProperty([], required=False)

    def __init__(self):
        super().__init__()
        self.coupling: Optional['oc.CouplingTable'] = None

    def initialize(self, model: 'oc.Model', init_stage: 'oc.InitStages'):
        super().initialize(model, init_stage)
        if init_stage != oc.InitStages.BUILD_CHANNEL:
            return
        primitive_keys = {'s_levels', 'gamma', 'h', 'mu', 'eta'}
        given = primitive_keys & self._arguments_already_set
        has_rows = 'lambda_rows' in self._arguments_already_set
        if has_rows and len(given) != 0:
            raise oc.ModelValidationError(
                "give either lambda_rows or channel primitives, not both.",
                path=self.component_name,
            )
        if has_rows:
            self.coupling = oc.CouplingTable(self.lambda_rows)
        elif given == primitive_keys:
            self.coupling = oc.coupling_rows(oc.ChannelPrimitives(
                s_levels=self.s_levels,
                gamma=list(self.gamma),
                h=list(self.h),
                mu=list(self.mu),
                eta=list(self.eta),
            ))
        else:
            raise oc.ModelValidationError(
                "needs lambda_rows or all of "
                + ", ".join(sorted(primitive_keys)) + ".",
                path=self.component_name,
            )
        expected = (len(model.plants), model.spec.n_profiles)
        if self.coupling.lambda_rows.shape != expected:
            raise oc.ModelValidationError(
                f"coupling needs shape {expected} (plants × profiles), "
                f"got {self.coupling.lambda_rows.shape}.",
                path=self.component_name,
            )


class TargetsSection(oc.Component):
    restricted = prop.IndexSetProperty('', required=False)
    """
    Optional restricted target Ī, a list of state profile indices inside
    the largest constrained control invariant set.
    """
    threshold_override = prop.FloatArrayProperty([], required=False)
    """Use these thresholds s_i instead of computing them."""

    def __init__(self):
        super().__init__()
        self.restricted_states: Optional[frozenset] = None
        self.thresholds: Optional['oc.ThresholdVector'] = None

    def initialize(self, model: 'oc.Model', init_stage: 'oc.InitStages'):
        super().initialize(model, init_stage)
        if init_stage != oc.InitStages.BUILD_TARGETS:
            return
        if self.restricted != '':
            self.restricted_states = oc.util.check_index_set(
                self.restricted, model.spec.n_states,
                self.path('restricted'))
        if len(self.threshold_override) != 0:
            if len(self.threshold_override) != len(model.plants):
                raise oc.ModelValidationError(
                    f"needs {len(model.plants)} values, got "
                    f"{len(self.threshold_override)}.",
                    path=self.path('threshold_override'),
                )
            self.thresholds = oc.ThresholdVector(
                tuple(float(s) for s in self.threshold_override))


class SimSection(oc.Component):
    horizon = prop.IntProperty(50, required=False)
    replications = prop.IntProperty(100, required=False)
    seed = prop.IntProperty(1, required=False)
    initial_state_profiles = prop.IndexSetProperty('all', required=False)
    """'all' means every state profile in C_β."""
    plant_initial = prop.ListProperty([], required=False)
    """Initial state per plant; all ones if not given."""
    plant_initial_std = prop.FloatProperty(0.0, required=False)
    noise = prop.EnumProperty(
        oc.NoiseDistribution.GAUSSIAN.name,
        name='noise',
        required=False,
        enum_class=oc.NoiseDistribution,
    )
    law = prop.StrProperty('canonical', required=False)
    """
    Feedback law to simulate: 'canonical', the 1-based position in the
    synthesized family, or an explicit δ_M[…] matrix.
    """
    reference_laws = prop.MappingProperty({}, required=False)
    """Further laws (name: δ_M[…]) simulated for comparison."""
    plot = prop.BoolProperty(True, required=False)
    """Write v_mean.svg."""

    def __init__(self):
        super().__init__()
        self.config: Optional['oc.SimConfig'] = None
        self.references: Dict[str, LogicalMatrix] = dict()

    def initialize(self, model: 'oc.Model', init_stage: 'oc.InitStages'):
        super().initialize(model, init_stage)
        if init_stage != oc.InitStages.BUILD_SIMULATION:
            return
        spec = model.spec
        if self.initial_state_profiles == 'all':
            profiles = spec.constraints.states
        else:
            profiles = oc.util.check_index_set(
                self.initial_state_profiles, spec.n_states,
                self.path('initial_state_profiles'))
        plant_initial = self.plant_initial
        if len(plant_initial) == 0:
            plant_initial = [np.ones(p.dim) for p in model.plants]
        self.config = oc.SimConfig(
            horizon=self.horizon,
            replications=self.replications,
            seed=self.seed,
            initial_state_profiles=tuple(sorted(profiles)),
            plant_initial=tuple(plant_initial),
            plant_initial_std=self.plant_initial_std,
            noise=oc.NoiseDistribution[self.noise],
        )
        for name, text in self.reference_laws.items():
            path = self.path(f'reference_laws.{name}')
            law = _logical_matrix(text, path)
            if law.shape != (spec.n_controls, spec.n_states):
                raise oc.ModelValidationError(
                    f"must be {spec.n_controls}×{spec.n_states}.",
                    path=path,
                )
            self.references[str(name)] = law


class Model(oc.Component):
    """
    A validated model: the network, the plants, the channel coupling,
    the targets and the simulation setup.

    Sections are configured under the YAML keys ``ffn``, ``plants`` (a
    list), ``channel``, ``targets`` and ``sim``.
    """

    description = prop.StrProperty('', required=False)

    SECTIONS = ('ffn', 'channel', 'targets', 'sim')
    REQUIRED_SECTIONS = ('ffn', 'plants', 'channel')

    def __init__(self):
        super().__init__()
        self._ffn = FfnSection()
        self._channel = ChannelSection()
        self._targets = TargetsSection()
        self._sim = SimSection()
        self._plants: List[PlantSection] = []
        self._sections = dict(
            ffn=self._ffn,
            channel=self._channel,
            targets=self._targets,
            sim=self._sim,
        )
        self.config: dict = dict()
        """The assembled model file content."""
        self.source = ''

    @staticmethod
    def _configure(component: 'oc.Component', path: str, arguments):
        if not isinstance(arguments, dict):
            raise oc.ModelValidationError(
                f"must be a mapping, got {type(arguments).__name__}.",
                path=path,
            )
        try:
            component.set_arguments(component_name=path, **arguments)
        except TypeError as e:
            raise oc.ModelValidationError(str(e), path=path) from e

    def set_arguments(self, **kwargs):
        missing = [s for s in self.REQUIRED_SECTIONS if s not in kwargs]
        if len(missing) != 0:
            raise oc.ModelValidationError(
                "missing sections: " + ", ".join(missing),
                path='model',
            )
        for key in self.SECTIONS:
            self._configure(self._sections[key], key, kwargs.pop(key, dict()))
        plants = kwargs.pop('plants')
        if not isinstance(plants, list) or len(plants) == 0:
            raise oc.ModelValidationError(
                "must be a nonempty list of plants.",
                path='plants',
            )
        for i, plant_args in enumerate(plants):
            section = PlantSection()
            path = f"plants[{i}]"
            if isinstance(plant_args, dict):
                plant_args = dict(plant_args)
                plant_args.setdefault('name', f"plant_{i + 1}")
            self._configure(section, path, plant_args)
            self._plants.append(section)
        try:
            super().set_arguments(**kwargs)
        except TypeError as e:
            raise oc.ModelValidationError(str(e), path='model') from e

    def initialize_all(self):
        components = (
            [self, self._ffn] + self._plants
            + [self._channel, self._targets, self._sim]
        )
        for init_stage in oc.InitStages:
            LOG.debug(f"Model initialization stage {init_stage.name}")
            for component in components:
                component.initialize(self, init_stage)

    @property
    def spec(self) -> 'oc.FfnSpec':
        return self._ffn.spec

    @property
    def transition_override(self) -> Optional['oc.TransitionMatrix']:
        return self._ffn.transition_override

    @property
    def plants(self) -> List['oc.PlantModel']:
        return [section.plant for section in self._plants]

    @property
    def coupling(self) -> 'oc.CouplingTable':
        return self._channel.coupling

    @property
    def restricted_target(self) -> Optional[frozenset]:
        return self._targets.restricted_states

    @property
    def threshold_override(self) -> Optional['oc.ThresholdVector']:
        return self._targets.thresholds

    @property
    def sim_config(self) -> 'oc.SimConfig':
        return self._sim.config

    @property
    def law_selection(self) -> Union[str, int]:
        return self._sim.law

    @property
    def reference_laws(self) -> Dict[str, LogicalMatrix]:
        return self._sim.references

    @property
    def plot(self) -> bool:
        return bool(self._sim.plot)

    @staticmethod
    def construct_from_config(
            filename: str,
            override_config: dict = None,
            results_dir: str = '',
            log_config: bool = False,
    ) -> 'Model':
        """
        Load, assemble and validate a model file.

        :param filename: YAML model file. It may inherit from other model
            files with an `inherit` key.
        :param override_config: If given, this dict will be used to update
            the configuration loaded from `filename`.
        :param results_dir:
        :param log_config:
            Write the final assembled model to results_dir.
        """
        if not os.path.isfile(filename):
            raise oc.ModelValidationError(
                "model file does not exist.", path=filename)
        try:
            conf = oc.assemble_config_recursively(
                filename,
                override_conf=override_config,
            )
        except ruamel.yaml.YAMLError as e:
            raise oc.ModelValidationError(
                f"not a valid YAML document: {e}", path=filename) from e
        if not isinstance(conf, dict):
            raise oc.ModelValidationError(
                "model file must contain a mapping.", path=filename)
        if log_config:
            if results_dir != '':
                os.makedirs(results_dir, exist_ok=True)
            oc.write_config(conf, os.path.join(results_dir, "model.yaml"))

        model = Model()
        model.config = copy.deepcopy(conf)
        model.source = filename
        model.set_arguments(component_name='model', **conf)
        model.initialize_all()
        LOG.info(
            f"Loaded model {filename}: κ={model.spec.kappa}, "
            f"n={model.spec.n}, m={model.spec.m}, w={model.spec.w}, "
            f"{len(model.plants)} plant(s)."
        )
        return model

    def section_hash(self, *sections: str) -> str:
        """Content hash of the given top-level sections of the model."""
        return oc.util.content_hash(
            *[(s, repr(self.config.get(s))) for s in sections])


def load_model(
        path: str,
        override_config: dict = None,
) -> Model:
    return Model.construct_from_config(path, override_config=override_config)


def shipped_model_path(name: str = 'agvs_two_arms') -> str:
    """Path of a model file distributed with opctl."""
    return os.path.join(os.path.dirname(__file__), 'models', f'{name}.yaml')

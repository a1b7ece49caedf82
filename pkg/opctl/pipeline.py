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
Running a model through the stages compile, thresholds, synthesize and
simulate, and writing their results.

Commands are cumulative: `synthesize` runs compile and thresholds first,
`verify` runs everything and additionally fails if the decay check did
not pass.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, Iterable, List, Optional, Tuple
import logging
import os

import ruamel.yaml

import opctl as oc
from opctl.stp import LogicalMatrix, parse_delta

LOG = logging.getLogger(__name__)

COMMANDS = ('compile', 'thresholds', 'synthesize', 'simulate', 'verify')

SYNTHESIZED_LAW_NAME = 'synthesized'

REPORT_LAW_LIMIT = 64
"""Gain families up to this size are listed law by law in the report."""


@dataclass
class RunReport:
    """
    Everything a run found out, as plain Python values so that it can be
    written to and read from YAML without loss.
    Stages that did not run leave their fields at the defaults.
    """

    command: str
    model: str = ''
    kappa: int = 0
    n: int = 0
    m: int = 0
    w: int = 0
    n_states: int = 0
    n_controls: int = 0
    provenance: Dict[str, str] = field(default_factory=dict)
    """Content hash of the inputs of every stage that ran."""
    transition: str = ''
    transition_overridden: bool = False
    admissible_profiles: List[int] = field(default_factory=list)
    thresholds_raw: List[float] = field(default_factory=list)
    thresholds: List[float] = field(default_factory=list)
    thresholds_upper: List[float] = field(default_factory=list)
    """Upper end of the success probabilities each plant tolerates."""
    omega: List[int] = field(default_factory=list)
    phi: List[int] = field(default_factory=list)
    invariant_set: List[int] = field(default_factory=list)
    core: List[int] = field(default_factory=list)
    """The invariant set steered into (a restricted target, if given)."""
    stabilizable: Optional[bool] = None
    failing_stage: Optional[str] = None
    message: str = ''
    depths: Dict[int, int] = field(default_factory=dict)
    tree_edges: List[List[int]] = field(default_factory=list)
    transient: Optional[int] = None
    gain_family: str = ''
    gain_family_size: int = 0
    gain_laws: List[str] = field(default_factory=list)
    selected_law: str = ''
    reference_laws: Dict[str, str] = field(default_factory=dict)
    lyapunov: Optional[dict] = None
    lyapunov_passed: Optional[bool] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> 'RunReport':
        known = {f.name for f in fields(RunReport)}
        unknown = set(d) - known
        if len(unknown) != 0:
            raise oc.ModelValidationError(
                "unknown report keys: " + ", ".join(sorted(unknown)),
                path='report',
            )
        d = dict(d)
        d['depths'] = {int(k): int(v)
                       for k, v in (d.get('depths') or {}).items()}
        return RunReport(**d)

    def write(self, results_dir: str = ''):
        """Write report.yaml and report.txt to `results_dir`."""
        with open(os.path.join(results_dir, 'report.yaml'), 'w') as fh:
            yaml = ruamel.yaml.YAML(typ='safe')
            yaml.default_flow_style = False
            yaml.dump(self.to_dict(), fh)
        with open(os.path.join(results_dir, 'report.txt'), 'w') as fh:
            fh.write(oc.render_report(self))

    @staticmethod
    def read(filename: str) -> 'RunReport':
        with open(filename, 'r') as fh:
            yaml = ruamel.yaml.YAML(typ='safe')
            return RunReport.from_dict(yaml.load(fh))


def write_delta(filename: str, matrix: LogicalMatrix):
    with open(filename, 'w') as fh:
        fh.write(matrix.to_delta_string() + '\n')


def read_delta(filename: str) -> LogicalMatrix:
    with open(filename, 'r') as fh:
        return parse_delta(fh.read().strip())


def write_index_set(filename: str, indices: Iterable[int]):
    with open(filename, 'w') as fh:
        fh.write(' '.join(str(i) for i in sorted(indices)) + '\n')


def read_index_set(filename: str) -> frozenset:
    with open(filename, 'r') as fh:
        return frozenset(int(i) for i in fh.read().split())


def parse_target(text: str, n_states: int) -> frozenset:
    """Parse a target given on the command line, e.g. "3,5"."""
    try:
        indices = [int(i) for i in text.replace(',', ' ').split()]
    except ValueError as e:
        raise oc.ModelValidationError(
            f"\"{text}\" is not a comma separated list of state profiles.",
            path='--target',
        ) from e
    return oc.util.check_index_set(indices, n_states, path='--target')


def _compile(model: 'oc.Model', report: RunReport, results_dir: str
             ) -> 'oc.TransitionMatrix':
    spec = model.spec
    LOG.info("Compiling the algebraic state space representation.")
    report.provenance['compile'] = model.section_hash('ffn')
    compiled = oc.compile_assr(spec)
    f = compiled
    override = model.transition_override
    if override is not None:
        if override.f != compiled.f:
            differing = [
                z for z, (a, b) in enumerate(
                    zip(override.f.cols, compiled.f.cols), start=1)
                if a != b
            ]
            LOG.warning(
                f"The transition matrix given in the model differs from "
                f"the compiled one in {len(differing)} of "
                f"{compiled.f.n_cols} columns; using the given one."
            )
        f = override
        write_delta(os.path.join(results_dir, 'F_compiled.delta'),
                    compiled.f)
    c_z = oc.admissible_z_set(spec)
    write_delta(os.path.join(results_dir, 'F.delta'), f.f)
    write_index_set(os.path.join(results_dir, 'C_z.txt'), c_z)

    report.kappa, report.n, report.m, report.w = (
        spec.kappa, spec.n, spec.m, spec.w)
    report.n_states, report.n_controls = spec.n_states, spec.n_controls
    report.transition = f.f.to_delta_string()
    report.transition_overridden = override is not None
    report.admissible_profiles = sorted(c_z)
    LOG.info(f"F = {f}, |C_z| = {len(c_z)}")
    return f


def _thresholds(model: 'oc.Model', report: RunReport, results_dir: str
                ) -> 'oc.ThresholdVector':
    LOG.info("Computing success probability thresholds.")
    report.provenance['thresholds'] = model.section_hash(
        'plants', 'channel', 'targets')
    threshold_vector = model.threshold_override
    if threshold_vector is None:
        threshold_vector = oc.thresholds(model.plants)
    else:
        LOG.info("Using the thresholds given in the model.")
    names = [p.name for p in model.plants]
    oc.plotter_csv.write_lambda(
        os.path.join(results_dir, 'lambda.csv'), model.coupling, names)
    oc.plotter_csv.write_thresholds(
        os.path.join(results_dir, 'thresholds.csv'), names,
        threshold_vector)
    report.thresholds_raw = list(threshold_vector.s_values)
    report.thresholds = list(threshold_vector.clamped)
    report.thresholds_upper = list(threshold_vector.upper_values)
    for name, raw, clamped, upper in zip(
            names,
            threshold_vector.s_values,
            threshold_vector.clamped,
            threshold_vector.upper_values,
    ):
        LOG.info(
            f"s({name}) = {raw:.4f} (clamped {clamped:.4f}), "
            f"upper end {upper:.4f}"
        )
    return threshold_vector


def _synthesize(
        model: 'oc.Model',
        f: 'oc.TransitionMatrix',
        threshold_vector: 'oc.ThresholdVector',
        target: Optional[frozenset],
        report: RunReport,
        results_dir: str,
) -> 'oc.SynthesisResult':
    LOG.info("Synthesizing feedback laws.")
    constraints = model.spec.constraints
    c_z = oc.admissible_z_set(model.spec)
    omega = oc.omega_set(model.coupling, threshold_vector, c_z)
    report.omega = sorted(omega)
    report.provenance['synthesize'] = oc.util.content_hash(
        f.f.as_array(),
        sorted(omega),
        sorted((b, sorted(c)) for b, c in constraints.controls.items()),
        None if target is None else sorted(target),
    )
    result = oc.synthesize(
        f, oc.TargetSet(frozenset(omega)), constraints, restricted=target)
    report.phi = sorted(result.phi)
    report.invariant_set = sorted(result.invariant_set.states)
    report.stabilizable = result.stabilizable
    report.failing_stage = result.failing_stage
    report.message = result.message
    if result.core is not None:
        report.core = sorted(result.core.states)
    if result.certificate is not None:
        report.depths = {int(a): int(d) for a, d in
                         sorted(result.certificate.depths.items())}
        report.tree_edges = [[int(p), int(c)] for p, c in
                             result.certificate.tree_edges]
        oc.plotter_csv.write_tree_edges(
            os.path.join(results_dir, 'tree_edges.csv'),
            result.certificate)
    if result.stabilizable:
        family = result.family
        report.transient = result.certificate.transient
        report.gain_family = family.to_delta_string()
        report.gain_family_size = family.size
        if family.size <= REPORT_LAW_LIMIT:
            report.gain_laws = [str(law) for law in family.laws()]
        oc.plotter_csv.write_gains(
            os.path.join(results_dir, 'gains.csv'), family)
        LOG.debug(f"Depths: {report.depths}")
    else:
        LOG.warning(
            f"Not stabilizable at stage {result.failing_stage}: "
            f"{result.message}"
        )
    return result


def select_law(
        family: 'oc.GainFamily',
        selection,
) -> LogicalMatrix:
    """
    Pick a law from the synthesized family: 'canonical', its 1-based
    position in `family.laws()`, or an explicit member in δ notation.
    """
    if isinstance(selection, str) and selection.strip() == 'canonical':
        return family.canonical()
    if isinstance(selection, str) and selection.strip().isdigit():
        selection = int(selection)
    if isinstance(selection, int) and not isinstance(selection, bool):
        if not 1 <= selection <= family.size:
            raise oc.ModelValidationError(
                f"the gain family has {family.size} law(s), "
                f"{selection} is out of range.",
                path='sim.law',
            )
        for position, law in enumerate(family.laws(), start=1):
            if position == selection:
                return law
    try:
        law = parse_delta(selection)
    except ValueError as e:
        raise oc.ModelValidationError(str(e), path='sim.law') from e
    if not family.contains(law):
        raise oc.ModelValidationError(
            f"{law} is not a member of the gain family "
            f"{family.to_delta_string()}.",
            path='sim.law',
        )
    return law


def _simulate(
        model: 'oc.Model',
        f: 'oc.TransitionMatrix',
        result: 'oc.SynthesisResult',
        seed: Optional[int],
        report: RunReport,
        results_dir: str,
) -> 'oc.LyapunovReport':
    LOG.info("Simulating the closed loop.")
    config = model.sim_config
    if seed is not None:
        config = replace(config, seed=seed)
    law = select_law(result.family, model.law_selection)
    report.selected_law = str(law)
    report.reference_laws = {
        name: str(m) for name, m in model.reference_laws.items()}
    report.provenance['simulate'] = oc.util.content_hash(
        f.f.as_array(),
        law.as_array(),
        model.section_hash('plants', 'channel', 'sim'),
        config.seed,
    )
    plants = model.plants
    laws = {SYNTHESIZED_LAW_NAME: law}
    laws.update(model.reference_laws)
    trajectories_by_law = dict()
    for name, m in laws.items():
        LOG.info(f"Simulating law {name} = {m}")
        trajectories_by_law[name] = oc.simulate_closed_loop(
            plants,
            model.coupling,
            f,
            m,
            config,
            constraints=(
                model.spec.constraints if name == SYNTHESIZED_LAW_NAME
                else None
            ),
        )
    transient = result.certificate.transient
    lyapunov = oc.lyapunov_report(
        trajectories_by_law[SYNTHESIZED_LAW_NAME], plants, transient)

    oc.plotter_csv.write_traces(
        os.path.join(results_dir, 'traces.csv'), trajectories_by_law, plants)
    oc.plotter_csv.write_means(
        os.path.join(results_dir, 'means.csv'), trajectories_by_law, plants)
    oc.plotter_csv.write_profile_paths(
        os.path.join(results_dir, 'profile_paths.csv'),
        f,
        laws,
        config.initial_state_profiles,
        config.horizon,
        model.spec.kappa,
        model.spec.n,
    )
    oc.plotter_csv.write_lyapunov(
        os.path.join(results_dir, 'lyapunov.csv'), lyapunov, plants)
    if model.plot:
        oc.plotter_svg.plot_lyapunov_means(
            os.path.join(results_dir, 'v_mean.svg'),
            trajectories_by_law,
            plants,
            transient=transient,
        )
    report.lyapunov = lyapunov.to_dict()
    report.lyapunov_passed = lyapunov.passed
    return lyapunov


def run_pipeline(
        model: 'oc.Model',
        command: str,
        results_dir: str = '',
        seed: Optional[int] = None,
        target: Optional[Iterable[int]] = None,
) -> RunReport:
    """
    Run `command` and all stages it depends on, writing result files to
    `results_dir`.

    :param seed: Overrides the seed of the model's `sim` section.
    :param target: Restricted target Ī; overrides `targets.restricted`.
    :raises NotStabilizableError: if the synthesis stage fails.
        The report is written before raising.
    :raises LyapunovViolationError: for `verify`, if the decay check
        reports violations.
    """
    if command not in COMMANDS:
        raise ValueError(
            f"Unknown command \"{command}\"; valid commands are "
            + ", ".join(COMMANDS)
        )
    if results_dir != '':
        os.makedirs(results_dir, exist_ok=True)
    stage = COMMANDS.index(command)
    report = RunReport(command=command, model=model.source)
    restricted = model.restricted_target
    if target is not None:
        restricted = oc.util.check_index_set(
            list(target), model.spec.n_states, path='--target')

    f = _compile(model, report, results_dir)
    if stage >= COMMANDS.index('thresholds'):
        threshold_vector = _thresholds(model, report, results_dir)
    if stage >= COMMANDS.index('synthesize'):
        result = _synthesize(
            model, f, threshold_vector, restricted, report, results_dir)
        if not result.stabilizable:
            report.write(results_dir)
            oc.log_report(report)
            result.raise_if_not_stabilizable()
    if stage >= COMMANDS.index('simulate'):
        _simulate(model, f, result, seed, report, results_dir)

    report.write(results_dir)
    oc.log_report(report)
    if command == 'verify' and not report.lyapunov_passed:
        raise oc.LyapunovViolationError(
            "decay inequality violated after the transient; see "
            "lyapunov.csv"
        )
    return report


def stage_summary(report: RunReport) -> List[Tuple[str, str]]:
    """(stage, input hash) pairs in pipeline order."""
    return [(s, report.provenance[s]) for s in
            ('compile', 'thresholds', 'synthesize', 'simulate')
            if s in report.provenance]

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


from typing import List
import logging

import opctl as oc

LOG = logging.getLogger(__name__)


def _indices(values) -> str:
    return '{' + ', '.join(str(v) for v in values) + '}'


def render_report(report: 'oc.RunReport') -> str:
    """Human-readable summary of a run report, as written to report.txt."""
    lines: List[str] = [
        f"opctl {report.command}: {report.model}",
        f"κ={report.kappa} n={report.n} m={report.m} w={report.w} "
        f"N={report.n_states} M={report.n_controls}",
        f"F = {report.transition}"
        + (" (given in the model)" if report.transition_overridden else ""),
        f"C_z: {len(report.admissible_profiles)} admissible profile(s)",
    ]
    if len(report.thresholds) != 0:
        lines.append("thresholds s: " + ', '.join(
            f"{raw:.4f} ({clamped:.2f})" for raw, clamped in
            zip(report.thresholds_raw, report.thresholds)))
        bounded = [
            f"{i + 1}: ≤ {upper:.4f}"
            for i, upper in enumerate(report.thresholds_upper)
            if upper < float('inf')
        ]
        if len(bounded) != 0:
            lines.append("bounded decay intervals: " + ', '.join(bounded))
    if report.stabilizable is not None:
        lines += [
            f"Ω(s) = {_indices(report.omega)}",
            f"Φ = {_indices(report.phi)}",
            f"I = {_indices(report.invariant_set)}",
        ]
        if report.core != report.invariant_set and len(report.core) != 0:
            lines.append(f"restricted target = {_indices(report.core)}")
        if report.stabilizable:
            lines += [
                f"verdict: stabilizable, transient T = {report.transient}",
                "depths: " + ', '.join(
                    f"β{a}:{d}" for a, d in sorted(report.depths.items())),
                f"gain family ({report.gain_family_size} law(s)): "
                f"{report.gain_family}",
            ]
            lines += [f"  {law}" for law in report.gain_laws]
        else:
            lines.append(
                f"verdict: not stabilizable (failing stage: "
                f"{report.failing_stage}): {report.message}"
            )
    if report.lyapunov is not None:
        lines.append(f"selected law: {report.selected_law}")
        for name, law in report.reference_laws.items():
            lines.append(f"reference law {name}: {law}")
        lines.append(
            "Lyapunov check: "
            + ("passed" if report.lyapunov_passed else "FAILED")
        )
        for p in report.lyapunov['plants']:
            lines.append(
                f"  {p['name']}: {p['violations']} violation(s) in "
                f"{p['checked_steps']} checked step(s), long-run mean V "
                f"{p['long_run_mean']:.3f} ± {p['confidence_margin']:.3f} "
                f"(bound {p['steady_state_bound']:.3f}), success at z="
                f"{p['absorbing_profile']}: {p['empirical_success']:.3f} "
                f"vs. {p['success_probability']:.3f}"
            )
    for stage, digest in oc.stage_summary(report):
        lines.append(f"input hash {stage}: {digest[:16]}")
    return '\n'.join(lines) + '\n'


def log_report(report: 'oc.RunReport'):
    LOG.info(render_report(report).rstrip())

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


import logging
import os

import numpy as np
import pytest

import opctl as oc


TOLERANCE = dict(rtol=1e-9, atol=1e-12)
"""
Tolerances for `np.testing.assert_allclose`.
For the meaning of rtol and atol, also check the documentation of
`pytest.approx`.
"""

AGVS_F = "δ_9[1 7 3 5 2 8 2 6 1 3 9 8 4 1 7 1 5 2 6 6 5 1 3 9 4 4 1]"


def _fixture(name: str) -> str:
    return os.path.join(os.path.dirname(__file__), name)


def _cli(*args) -> int:
    return oc.start_cli(list(args) + ['--no-versions-file'])


def test_load_shipped_model():
    model = oc.load_model(oc.shipped_model_path())
    spec = model.spec
    assert (spec.kappa, spec.n, spec.m, spec.w) == (3, 2, 1, 3)
    assert (spec.n_states, spec.n_controls) == (9, 3)
    assert str(model.transition_override) == AGVS_F
    assert model.restricted_target == {3}
    assert [p.name for p in model.plants] == ['arm_1', 'arm_2']
    assert model.plants[1].threshold_method == oc.ThresholdMethod.PENCIL
    assert oc.util.is_positive_definite(model.plants[1].q)
    assert model.coupling.lambda_rows.shape == (2, 27)
    assert model.sim_config.initial_state_profiles == tuple(range(1, 10))
    assert set(model.reference_laws) == {'random_pi'}


def test_malformed_model():
    with pytest.raises(oc.ModelValidationError,
                       match=r"rho must lie in \(0,1\)"):
        oc.load_model(_fixture('malformed.yaml'))


def test_unknown_key_is_rejected():
    with pytest.raises(oc.ModelValidationError, match="dt"):
        oc.load_model(
            oc.shipped_model_path(), override_config=dict(sim=dict(dt=1)))
    with pytest.raises(oc.ModelValidationError, match="missing sections"):
        oc.load_model(_fixture('no_control.yaml'),
                      override_config=dict(uninherit=['channel']))


def test_missing_model_file():
    with pytest.raises(oc.ModelValidationError):
        oc.load_model(_fixture('does_not_exist.yaml'))


def test_compile_without_controls(tmp_path):
    model = oc.load_model(_fixture('no_control.yaml'))
    report = oc.run_pipeline(model, 'compile', results_dir=str(tmp_path))
    f = oc.read_delta(str(tmp_path / 'F.delta'))
    assert f.shape == (4, 4)
    # β_1' = β_1 + β_2, β_2' = β_2 over D_2
    assert f == oc.parse_delta("δ_4[1 4 3 2]")
    assert report.n_controls == 1
    assert not (tmp_path / 'F_compiled.delta').exists()


def test_synthesize_shipped_model(tmp_path):
    model = oc.load_model(oc.shipped_model_path())
    report = oc.run_pipeline(model, 'synthesize', results_dir=str(tmp_path))
    assert report.omega == [1, 3, 11]
    assert report.phi == [1, 2, 3]
    assert report.invariant_set == [1, 3]
    assert report.core == [3]
    assert report.stabilizable
    assert report.transient == 3
    assert report.gain_family_size == 4
    assert len(report.gain_laws) == 4
    assert report.gain_family == "δ_3[2 {1,2} 1 1 3 {2,3} 2 2 3]"
    assert set(report.provenance) == {'compile', 'thresholds', 'synthesize'}
    np.testing.assert_allclose(
        report.thresholds_raw[0], 0.46 / 1.05, **TOLERANCE)
    assert abs(report.thresholds_raw[1] - 0.42) < 0.01
    assert report.thresholds_upper[0] == np.inf
    assert abs(report.thresholds_upper[1] - 4.19) < 0.01

    assert str(oc.read_delta(str(tmp_path / 'F.delta'))) == AGVS_F
    assert (tmp_path / 'F_compiled.delta').exists()
    assert oc.read_index_set(str(tmp_path / 'C_z.txt')) == (
        set(range(1, 5)) | set(range(10, 19)) | set(range(23, 28)))
    np.testing.assert_array_equal(
        oc.plotter_csv.read_lambda(str(tmp_path / 'lambda.csv')).lambda_rows,
        model.coupling.lambda_rows,
    )
    for name in ['thresholds.csv', 'gains.csv', 'tree_edges.csv',
                 'report.txt']:
        assert (tmp_path / name).exists()
    assert oc.RunReport.read(str(tmp_path / 'report.yaml')) == report


def test_provenance_is_deterministic(tmp_path):
    model = oc.load_model(oc.shipped_model_path())
    first = oc.run_pipeline(model, 'thresholds', str(tmp_path / 'a'))
    second = oc.run_pipeline(model, 'thresholds', str(tmp_path / 'b'))
    assert first.provenance == second.provenance
    changed = oc.load_model(
        oc.shipped_model_path(),
        override_config=dict(channel=dict(lambda_rows=[[0.5] * 27] * 2)),
    )
    third = oc.run_pipeline(changed, 'thresholds', str(tmp_path / 'c'))
    assert third.provenance['compile'] == first.provenance['compile']
    assert third.provenance['thresholds'] != first.provenance['thresholds']


def test_unstabilizable_model(tmp_path):
    model = oc.load_model(_fixture('unstabilizable.yaml'))
    with pytest.raises(oc.NotStabilizableError) as e:
        oc.run_pipeline(model, 'synthesize', results_dir=str(tmp_path))
    assert e.value.stage == 'omega'
    report = oc.RunReport.read(str(tmp_path / 'report.yaml'))
    assert report.stabilizable is False
    assert report.failing_stage == 'omega'
    assert report.omega == []


def test_law_selection():
    model = oc.load_model(oc.shipped_model_path())
    f = model.transition_override
    result = oc.synthesize(
        f,
        oc.TargetSet(frozenset({1, 3, 11})),
        model.spec.constraints,
        restricted={3},
    )
    family = result.family
    assert oc.select_law(family, 'canonical') == family.canonical()
    laws = list(family.laws())
    assert oc.select_law(family, 2) == laws[1]
    assert oc.select_law(family, '4') == laws[3]
    assert oc.select_law(family, str(laws[2])) == laws[2]
    with pytest.raises(oc.ModelValidationError):
        oc.select_law(family, 5)
    with pytest.raises(oc.ModelValidationError):
        oc.select_law(family, "δ_3[2 1 1 1 2 2 3 2 2]")


def test_parse_target():
    assert oc.parse_target("3,5", 9) == {3, 5}
    assert oc.parse_target("3", 9) == {3}
    with pytest.raises(oc.ModelValidationError):
        oc.parse_target("3;x", 9)
    with pytest.raises(oc.ModelValidationError):
        oc.parse_target("10", 9)


def test_cli_exit_codes(tmp_path):
    shipped = oc.shipped_model_path()
    assert _cli('compile', '--model', shipped,
                '--out', str(tmp_path / 'compile')) == 0
    assert (tmp_path / 'compile' / 'SUCCESS').exists()
    assert _cli('synthesize', '--model', _fixture('unstabilizable.yaml'),
                '--out', str(tmp_path / 'unstabilizable')) == 2
    assert not (tmp_path / 'unstabilizable' / 'SUCCESS').exists()
    assert _cli('synthesize', '--model', shipped, '--target', '2',
                '--out', str(tmp_path / 'target')) == 2
    assert _cli('compile', '--model', _fixture('malformed.yaml'),
                '--out', str(tmp_path / 'malformed')) == 3
    assert _cli('synthesize', '--model', shipped,
                '-p', 'targets.threshold_override=[1.0, 1.0]',
                '--out', str(tmp_path / 'param')) == 2


def test_cli_verify(tmp_path):
    out = tmp_path / 'verify'
    assert _cli('verify', '--model', oc.shipped_model_path(),
                '--seed', '7', '--out', str(out), '--log-config') == 0
    for name in ['traces.csv', 'means.csv', 'profile_paths.csv',
                 'lyapunov.csv', 'v_mean.svg', 'report.yaml', 'model.yaml',
                 'SUCCESS', 'opctl.log']:
        assert (out / name).exists()
    report = oc.RunReport.read(str(out / 'report.yaml'))
    assert report.lyapunov_passed
    assert report.selected_law == "δ_3[2 1 1 1 3 2 2 2 3]"
    assert report.reference_laws == {'random_pi': "δ_3[2 1 1 1 2 2 3 2 2]"}
    assert all(p['violations'] == 0 for p in report.lyapunov['plants'])


def test_invalid_seed(tmp_path):
    assert _cli('simulate', '--model', oc.shipped_model_path(),
                '--seed', '-1', '--out', str(tmp_path / 'seed')) == 3
    with pytest.raises(oc.ModelValidationError, match="sim.seed"):
        oc.load_model(oc.shipped_model_path(),
                      override_config=dict(sim=dict(seed=-1)))


def test_repeated_runs_keep_one_log_file(tmp_path):
    shipped = oc.shipped_model_path()
    for name in ['first', 'second']:
        assert _cli('compile', '--model', shipped,
                    '--out', str(tmp_path / name)) == 0
    file_handlers = [h for h in logging.getLogger().handlers
                     if isinstance(h, logging.FileHandler)]
    assert len(file_handlers) == 1
    assert file_handlers[0].baseFilename == str(
        tmp_path / 'second' / 'opctl.log')

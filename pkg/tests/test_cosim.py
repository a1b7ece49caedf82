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


from dataclasses import replace

import numpy as np
import pytest

import opctl as oc


TOLERANCE = dict(rtol=1e-9, atol=1e-12)
"""
Tolerances for `np.testing.assert_allclose`.
For the meaning of rtol and atol, also check the documentation of
`pytest.approx`.
"""

CANONICAL_LAW = oc.parse_delta("δ_3[2 1 1 1 3 2 2 2 3]")


@pytest.fixture(scope='module')
def model() -> oc.Model:
    return oc.load_model(oc.shipped_model_path())


def _simulate(model, config, law=CANONICAL_LAW, plants=None, coupling=None):
    return oc.simulate_closed_loop(
        model.plants if plants is None else plants,
        model.coupling if coupling is None else coupling,
        model.transition_override,
        law,
        config,
        constraints=model.spec.constraints,
    )


def test_replications_are_reproducible(model):
    config = replace(model.sim_config, horizon=10, replications=3)
    first = _simulate(model, config)
    second = _simulate(model, config)
    assert len(first) == 9 * 3
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.success, b.success)
        for x_a, x_b in zip(a.x, b.x):
            np.testing.assert_array_equal(x_a, x_b)
    other = _simulate(model, replace(config, seed=2))
    assert not np.array_equal(first[0].x[1], other[0].x[1])


def test_trajectory_layout(model):
    config = replace(model.sim_config, horizon=10, replications=2)
    t = _simulate(model, config)[0]
    assert t.horizon == 10
    assert t.success.shape == (2, 11)
    assert t.v.shape == (2, 11)
    assert t.x[0].shape == (11, 1)
    assert t.x[1].shape == (11, 2)
    np.testing.assert_allclose(
        t.v[1], model.plants[1].lyapunov(t.x[1]), **TOLERANCE)
    np.testing.assert_allclose(
        t.success_probability[:, -1],
        model.coupling.at(3),
        **TOLERANCE
    )


def test_inadmissible_law_is_rejected(model):
    config = replace(model.sim_config, horizon=5, replications=1)
    with pytest.raises(AssertionError):
        _simulate(model, config, law=oc.parse_delta("δ_3[3 1 1 1 3 2 2 2 3]"))


def test_profile_path(model):
    beta, u, z = oc.profile_path(
        model.transition_override, CANONICAL_LAW, 9, 4)
    np.testing.assert_array_equal(beta, [9, 1, 3, 3, 3])
    np.testing.assert_array_equal(u, [3, 2, 1, 1, 1])
    np.testing.assert_array_equal(z, [27, 10, 3, 3, 3])


@pytest.mark.parametrize('noise', list(oc.NoiseDistribution))
def test_noise_covariance(noise):
    rng = np.random.default_rng(9)
    cov = np.array([[2.0, 0.5], [0.5, 1.0]])
    samples = noise.sample(rng, oc.cosim.noise_square_root(cov), 200000)
    assert samples.shape == (200000, 2)
    np.testing.assert_allclose(samples.mean(axis=0), 0.0, atol=0.02)
    np.testing.assert_allclose(np.cov(samples.T), cov, atol=0.05)


def test_lyapunov_decay_after_transient(model):
    trajectories = _simulate(model, model.sim_config)
    report = oc.lyapunov_report(trajectories, model.plants, transient=3)
    assert report.passed
    for summary, probability in zip(report.plants, (0.53, 0.67)):
        assert summary.violations == 0
        assert summary.checked_steps == 900 * 47
        assert summary.bound_ok
        assert summary.absorbing_profile == 3
        assert summary.success_probability == pytest.approx(probability)
        assert summary.frequency_ok
    assert report.plants[0].steady_state_bound == pytest.approx(4.0)
    # stationary mean of V for the first arm is 1 / (1 - 0.53·0.16 - 0.47·1.21)
    assert report.plants[0].long_run_mean == pytest.approx(
        1.0 / (1.0 - 0.53 * 0.16 - 0.47 * 1.21), rel=0.1)


def test_lyapunov_violation_is_reported(model):
    plant = oc.PlantModel(
        name='fast_arm', a_closed=0.4, a_open=1.1, q=1.0, rho=0.3,
        xi_cov=1.0)
    coupling = oc.CouplingTable(model.coupling.lambda_rows[:1])
    config = replace(
        model.sim_config, replications=5, plant_initial=(np.ones(1),))
    trajectories = _simulate(
        model, config, plants=[plant], coupling=coupling)
    report = oc.lyapunov_report(trajectories, [plant], transient=3)
    assert not report.passed
    assert report.plants[0].violations > 0
    assert report.plants[0].worst_slack > 0


def test_transient_must_fit_into_horizon(model):
    config = replace(model.sim_config, horizon=3, replications=1)
    trajectories = _simulate(model, config)
    with pytest.raises(ValueError):
        oc.lyapunov_report(trajectories, model.plants, transient=3)


def test_mean_exports(model, tmp_path):
    config = replace(model.sim_config, horizon=6, replications=2)
    trajectories = {'synthesized': _simulate(model, config)}
    oc.plotter_csv.write_means(
        str(tmp_path / 'means.csv'), trajectories, model.plants)
    oc.plotter_csv.write_traces(
        str(tmp_path / 'traces.csv'), trajectories, model.plants)
    oc.plotter_svg.plot_lyapunov_means(
        str(tmp_path / 'v_mean.svg'), trajectories, model.plants, 3)
    with open(tmp_path / 'means.csv') as fh:
        lines = fh.read().splitlines()
    assert lines[0] == 'law,k,plant,mean_V,mean_x1,mean_x2'
    assert len(lines) == 1 + 7 * 2
    with open(tmp_path / 'traces.csv') as fh:
        assert len(fh.read().splitlines()) == 1 + 9 * 2 * 7 * 2
    assert (tmp_path / 'v_mean.svg').exists()


def test_success_frequency_matches_coupling():
    # a single profile keeps z fixed, so every draw has probability 0.5
    f = oc.TransitionMatrix(oc.LogicalMatrix(1, (1,)))
    plant = oc.PlantModel(name='arm', a_closed=0.4, a_open=1.1, q=1.0,
                          rho=0.75, xi_cov=1.0)
    config = oc.SimConfig(
        horizon=1000, replications=100, seed=3,
        initial_state_profiles=(1,), plant_initial=(np.ones(1),),
    )
    trajectories = oc.simulate_closed_loop(
        [plant], oc.CouplingTable(np.array([[0.5]])), f,
        oc.LogicalMatrix(1, (1,)), config)
    draws = np.concatenate([t.success[0, :-1] for t in trajectories])
    assert draws.size == 100_000
    assert abs(draws.mean() - 0.5) <= 3 * np.sqrt(0.25 / draws.size)


@pytest.mark.parametrize('seed', [-1, 2 ** 64, 1.5])
def test_seed_must_be_unsigned_64_bit(model, seed):
    with pytest.raises(oc.ModelValidationError, match="sim.seed"):
        replace(model.sim_config, seed=seed)

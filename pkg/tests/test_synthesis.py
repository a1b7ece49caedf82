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


import itertools

import numpy as np
import pytest

import opctl as oc


AGVS_F = oc.TransitionMatrix(oc.parse_delta(
    "δ_9[1 7 3 5 2 8 2 6 1 3 9 8 4 1 7 1 5 2 6 6 5 1 3 9 4 4 1]"))
CONSTRAINTS = oc.constraints_from_table(
    9, 3, frozenset(range(1, 10)), [
        (frozenset(range(1, 5)), frozenset({1, 2})),
        (frozenset(range(5, 10)), frozenset({2, 3})),
    ])
OMEGA = oc.TargetSet(frozenset({1, 3, 11}))

AGVS_LAWS = {
    oc.parse_delta("δ_3[2 1 1 1 3 2 2 2 3]"),
    oc.parse_delta("δ_3[2 2 1 1 3 2 2 2 3]"),
    oc.parse_delta("δ_3[2 1 1 1 3 3 2 2 3]"),
    oc.parse_delta("δ_3[2 2 1 1 3 3 2 2 3]"),
}


def test_invariant_set():
    assert oc.phi_set(AGVS_F, OMEGA, CONSTRAINTS) == {1, 2, 3}
    invariant = oc.lccis(AGVS_F, OMEGA, CONSTRAINTS)
    assert invariant.states == {1, 3}
    ok, witness = oc.verify_ccis(AGVS_F, {3}, OMEGA, CONSTRAINTS)
    assert ok
    assert witness == {3: 1}
    ok, _ = oc.verify_ccis(AGVS_F, {2}, OMEGA, CONSTRAINTS)
    assert not ok


def test_contracted_graph():
    invariant = oc.lccis(AGVS_F, OMEGA, CONSTRAINTS)
    core = oc.restrict_invariant_set(
        AGVS_F, {3}, invariant, OMEGA, CONSTRAINTS)
    graph = oc.build_contracted_graph(AGVS_F, core, CONSTRAINTS)
    assert set(graph.graph.successors(oc.synthesis.ROOT)) == {1, 5}
    assert graph.vertices == [0, 1, 2, 4, 5, 6, 7, 8, 9]


def test_golden_synthesis():
    result = oc.synthesize(AGVS_F, OMEGA, CONSTRAINTS, restricted={3})
    assert result.stabilizable
    certificate = result.certificate
    assert certificate.depths == {
        1: 1, 5: 1,
        4: 2, 7: 2, 8: 2, 9: 2,
        2: 3, 6: 3,
    }
    assert certificate.transient == 3
    family = result.family
    assert family.to_delta_string() == "δ_3[2 {1,2} 1 1 3 {2,3} 2 2 3]"
    assert family.size == 4
    assert set(family.materialize()) == AGVS_LAWS
    assert family.canonical() == oc.parse_delta("δ_3[2 1 1 1 3 2 2 2 3]")
    assert family.contains(oc.parse_delta("δ_3[2 2 1 1 3 3 2 2 3]"))
    assert not family.contains(oc.parse_delta("δ_3[2 1 1 1 2 2 3 2 2]"))


@pytest.mark.parametrize('law', sorted(AGVS_LAWS, key=str))
def test_closed_loop_absorption(law):
    assert oc.is_admissible_law(AGVS_F, law, CONSTRAINTS)
    for beta0 in range(1, 10):
        path = oc.closed_loop_path(AGVS_F, law, beta0, 20)
        for beta in path:
            u = law.cols[beta - 1]
            assert u in CONSTRAINTS.controls_for(beta)
        assert path[3:] == (3,) * 18


def test_failing_stages():
    empty = oc.synthesize(
        AGVS_F, oc.TargetSet(frozenset()), CONSTRAINTS)
    assert not empty.stabilizable
    assert empty.failing_stage == 'omega'

    restricted = oc.synthesize(AGVS_F, OMEGA, CONSTRAINTS, restricted={2})
    assert restricted.failing_stage == 'restricted_target'
    with pytest.raises(oc.NotStabilizableError) as e:
        restricted.raise_if_not_stabilizable()
    assert e.value.stage == 'restricted_target'
    assert e.value.exit_code == 2

    # z = 2 is profile (u1, β2), which leaves {2} immediately
    no_core = oc.synthesize(
        AGVS_F, oc.TargetSet(frozenset({2})), CONSTRAINTS)
    assert no_core.failing_stage == 'invariant_set'


def test_inadmissible_law():
    assert not oc.is_admissible_law(
        AGVS_F, oc.parse_delta("δ_3[3 1 1 1 3 2 2 2 3]"), CONSTRAINTS)
    assert not oc.is_admissible_law(
        AGVS_F, oc.parse_delta("δ_2[1 1 1 1 1 1 1 1 1]"), CONSTRAINTS)


def _random_instance(rng, kappa, n, m):
    n_states = kappa ** n
    n_controls = kappa ** m
    f = oc.TransitionMatrix(oc.LogicalMatrix(
        n_states, tuple(rng.integers(1, n_states + 1, n_states * n_controls))))
    states = frozenset(
        int(b) for b in np.flatnonzero(rng.random(n_states) < 0.8) + 1)
    if len(states) == 0:
        states = frozenset({1})
    controls = {}
    for beta in states:
        allowed = frozenset(
            int(u) for u in np.flatnonzero(rng.random(n_controls) < 0.7) + 1)
        controls[beta] = allowed or frozenset({1})
    constraints = oc.Constraints(
        n_states=n_states,
        n_controls=n_controls,
        states=states,
        controls=controls,
    )
    m_set = oc.TargetSet(frozenset(
        z for z in constraints.admissible_z() if rng.random() < 0.5))
    return f, constraints, m_set


def _law_stabilizes(f, constraints, m_set, law) -> bool:
    for beta0 in constraints.states:
        path = [beta0]
        while path[-1] not in path[:-1]:
            beta = path[-1]
            if beta not in constraints.states:
                return False
            path.append(f.successor_of(law[beta], beta))
        cycle = path[path.index(path[-1]):-1]
        for beta in cycle:
            if oc.ffn.z_index(law[beta], beta, f.n_states) not in m_set:
                return False
    return True


def _exists_stabilizing_law(f, constraints, m_set) -> bool:
    states = sorted(constraints.states)
    choices = [sorted(constraints.controls_for(b)) for b in states]
    for selection in itertools.product(*choices):
        law = dict(zip(states, selection))
        if _law_stabilizes(f, constraints, m_set, law):
            return True
    return False


def test_bfs_verdict_matches_brute_force():
    rng = np.random.default_rng(123)
    for _ in range(60):
        n = int(rng.integers(2, 4))
        f, constraints, m_set = _random_instance(rng, 2, n, 1)
        expected = _exists_stabilizing_law(f, constraints, m_set)
        result = oc.synthesize(f, m_set, constraints)
        assert result.stabilizable == expected
        if result.stabilizable:
            for law in result.family.laws():
                assert _law_stabilizes(
                    f, constraints, m_set,
                    {b: law.cols[b - 1] for b in constraints.states})


def test_lccis_matches_subset_oracle():
    rng = np.random.default_rng(321)
    for _ in range(120):
        f, constraints, m_set = _random_instance(rng, 2, 3, 1)
        phi = sorted(oc.phi_set(f, m_set, constraints))
        largest = set()
        for size in range(1, len(phi) + 1):
            for subset in itertools.combinations(phi, size):
                if oc.verify_ccis(f, subset, m_set, constraints)[0]:
                    largest |= set(subset)
        assert oc.lccis(f, m_set, constraints).states == largest

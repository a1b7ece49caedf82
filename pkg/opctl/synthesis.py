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
Constrained set stabilization of an FFN: the largest constrained control
invariant set (LCCIS) inside a target profile set, the contracted reversed
state transition graph, its breadth-first spanning tree and the family of
state feedback laws it certifies.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, \
    Optional, Tuple
import itertools
import logging
import math

import networkx as nx

import opctl as oc
from opctl.ffn import Constraints, TransitionMatrix, split_z, z_index
from opctl.stp import LogicalMatrix

LOG = logging.getLogger(__name__)

ROOT = 0
"""Vertex v_0 that stands for the contracted invariant set."""

FAMILY_MATERIALIZE_LIMIT = 10 ** 6


@dataclass(frozen=True)
class TargetSet:
    """𝓜: a set of joint profiles z."""

    z_indices: FrozenSet[int]

    def __post_init__(self):
        object.__setattr__(self, 'z_indices', frozenset(self.z_indices))

    def __contains__(self, z: int) -> bool:
        return z in self.z_indices

    def __iter__(self):
        return iter(sorted(self.z_indices))

    def __len__(self):
        return len(self.z_indices)


@dataclass(frozen=True, eq=False)
class InvariantSet:
    """
    A constrained control invariant set with, per state, the controls
    that keep the profile in 𝓜 and the successor in the set.
    """

    states: FrozenSet[int]
    controls: Mapping[int, FrozenSet[int]]

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True, eq=False)
class ContractedGraph:
    """
    G_c: vertices (C_β \\ I) ∪ {v_0}, reversed one-step transitions inside
    C_β \\ I, and v_0 → v_a for every state a that enters I in one step.
    """

    graph: nx.DiGraph
    invariant: InvariantSet

    @property
    def vertices(self) -> List[int]:
        return sorted(self.graph.nodes)

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return sorted(self.graph.edges)


@dataclass(frozen=True)
class BfsCertificate:
    stabilizable: bool
    depths: Mapping[int, int]
    """ι(v_0, v_a): number of tree edges from v_0 to each reached state."""
    tree_edges: Tuple[Tuple[int, int], ...]
    unreached: Tuple[int, ...]

    @property
    def transient(self) -> int:
        """Largest depth, i.e., the number of steps until the invariant
        set is entered from anywhere in C_β."""
        return max(self.depths.values(), default=0)


@dataclass(frozen=True, eq=False)
class GainFamily:
    """
    Option sets l_a for every state a: U_a on the invariant set, Ū_a on
    the remainder of C_β and all of Δ_M outside of C_β.
    """

    n_states: int
    n_controls: int
    options: Mapping[int, FrozenSet[int]]
    depths: Mapping[int, int]
    constrained_states: FrozenSet[int]

    @property
    def size(self) -> int:
        """Number of distinct laws restricted to C_β."""
        return math.prod(len(self.options[a]) for a in self.constrained_states)

    def canonical(self) -> LogicalMatrix:
        """The law using the smallest control index in every state."""
        return LogicalMatrix(
            self.n_controls,
            tuple(min(self.options[a]) for a in range(1, self.n_states + 1)),
        )

    def laws(self) -> Iterator[LogicalMatrix]:
        """
        All laws of the family in lexicographic order; states outside of
        C_β keep their canonical control.
        """
        canonical = self.canonical().cols
        states = sorted(self.constrained_states)
        choices = [sorted(self.options[a]) for a in states]
        for selection in itertools.product(*choices):
            cols = list(canonical)
            for a, u in zip(states, selection):
                cols[a - 1] = u
            yield LogicalMatrix(self.n_controls, tuple(cols))

    def materialize(self, limit: int = FAMILY_MATERIALIZE_LIMIT
                    ) -> List[LogicalMatrix]:
        if self.size > limit:
            raise ValueError(
                f"Gain family has {self.size} members, more than the "
                f"limit of {limit}; iterate over laws() instead."
            )
        return list(self.laws())

    def contains(self, law: LogicalMatrix) -> bool:
        return (
            law.shape == (self.n_controls, self.n_states)
            and all(law.cols[a - 1] in self.options[a]
                    for a in self.constrained_states)
        )

    def to_delta_string(self) -> str:
        """
        δ_M[…] with option sets in braces and `*` for unconstrained states.
        """
        entries = []
        for a in range(1, self.n_states + 1):
            opts = sorted(self.options[a])
            if a not in self.constrained_states:
                entries.append('*')
            elif len(opts) == 1:
                entries.append(str(opts[0]))
            else:
                entries.append('{' + ','.join(str(u) for u in opts) + '}')
        return f"δ_{self.n_controls}[{' '.join(entries)}]"


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    target: TargetSet
    phi: FrozenSet[int]
    invariant_set: InvariantSet
    """I(𝓜), the LCCIS."""
    core: Optional[InvariantSet] = None
    """Invariant set actually steered into (I(𝓜) or a restriction)."""
    graph: Optional[ContractedGraph] = None
    certificate: Optional[BfsCertificate] = None
    family: Optional[GainFamily] = None
    failing_stage: Optional[str] = None
    message: str = field(default='')

    @property
    def stabilizable(self) -> bool:
        return self.failing_stage is None

    def raise_if_not_stabilizable(self):
        if not self.stabilizable:
            raise oc.NotStabilizableError(self.message, self.failing_stage)


def phi_set(
        f: TransitionMatrix,
        m_set: TargetSet,
        constraints: Constraints,
) -> FrozenSet[int]:
    """Φ(𝓜) = {β ∈ C_β : ∃ u ∈ C_u(β) with u ⋉ β ∈ 𝓜}."""
    result = set()
    for z in m_set.z_indices:
        u, beta = split_z(z, f.n_states)
        if u in constraints.controls_for(beta):
            result.add(beta)
    return frozenset(result)


def admissible_controls_for_target(
        beta: int,
        m_set: TargetSet,
        constraints: Constraints,
) -> FrozenSet[int]:
    """C_u^𝓜(β) = {u ∈ C_u(β) : u ⋉ β ∈ 𝓜}."""
    return frozenset(
        u for u in constraints.controls_for(beta)
        if z_index(u, beta, constraints.n_states) in m_set
    )


def _keeping_controls(
        f: TransitionMatrix,
        states: FrozenSet[int],
        m_set: TargetSet,
        constraints: Constraints,
) -> Dict[int, FrozenSet[int]]:
    return {
        beta: frozenset(
            u for u in admissible_controls_for_target(beta, m_set, constraints)
            if f.successor_of(u, beta) in states
        )
        for beta in states
    }


def lccis(
        f: TransitionMatrix,
        m_set: TargetSet,
        constraints: Constraints,
) -> InvariantSet:
    """
    Fixed point of S_0 = Φ(𝓜),
    S_{k+1} = {β ∈ S_k : ∃ u ∈ C_u^𝓜(β) with successor in S_k}.
    """
    current = phi_set(f, m_set, constraints)
    iteration = 0
    while True:
        kept = _keeping_controls(f, current, m_set, constraints)
        remaining = frozenset(b for b, us in kept.items() if len(us) != 0)
        LOG.debug(
            f"LCCIS iteration {iteration}: {sorted(current)} -> "
            f"{sorted(remaining)}"
        )
        if remaining == current:
            return InvariantSet(
                states=remaining,
                controls={b: kept[b] for b in remaining},
            )
        current = remaining
        iteration += 1


def verify_ccis(
        f: TransitionMatrix,
        states: Iterable[int],
        m_set: TargetSet,
        constraints: Constraints,
) -> Tuple[bool, Dict[int, int]]:
    """
    Check the CCIS property of `states`.

    :return: The verdict and, for every state that has one, the smallest
        control that keeps both the profile in 𝓜 and the successor in
        `states`.
    """
    states = frozenset(states)
    witness = {
        beta: min(us)
        for beta, us in _keeping_controls(
            f, states, m_set, constraints).items()
        if len(us) != 0
    }
    return len(witness) == len(states), witness


def restrict_invariant_set(
        f: TransitionMatrix,
        states: Iterable[int],
        invariant: InvariantSet,
        m_set: TargetSet,
        constraints: Constraints,
) -> InvariantSet:
    """
    Accept a user-chosen target Ī if it is a CCIS inside I(𝓜).
    """
    states = frozenset(states)
    outside = states - invariant.states
    if len(outside) != 0:
        raise oc.NotStabilizableError(
            f"restricted target states {sorted(outside)} are not part of "
            f"the invariant set {sorted(invariant.states)}",
            stage='restricted_target',
        )
    is_ccis, _ = verify_ccis(f, states, m_set, constraints)
    if len(states) == 0 or not is_ccis:
        raise oc.NotStabilizableError(
            f"restricted target {sorted(states)} is not a nonempty "
            "constrained control invariant set",
            stage='restricted_target',
        )
    return InvariantSet(
        states=states,
        controls=_keeping_controls(f, states, m_set, constraints),
    )


def build_contracted_graph(
        f: TransitionMatrix,
        invariant: InvariantSet,
        constraints: Constraints,
) -> ContractedGraph:
    if len(invariant) == 0:
        raise oc.NotStabilizableError(
            "no invariant core: not stabilizable",
            stage='invariant_set',
        )
    graph = nx.DiGraph()
    graph.add_node(ROOT)
    outside = sorted(constraints.states - invariant.states)
    graph.add_nodes_from(outside)
    for a in outside:
        for u in sorted(constraints.controls_for(a)):
            b = f.successor_of(u, a)
            if b in invariant.states:
                graph.add_edge(ROOT, a)
            elif b in constraints.states:
                graph.add_edge(b, a)
    LOG.debug(
        f"Contracted graph: {graph.number_of_nodes()} vertices, "
        f"{graph.number_of_edges()} edges, "
        f"root successors {sorted(graph.successors(ROOT))}."
    )
    return ContractedGraph(graph=graph, invariant=invariant)


def bfs_certificate(contracted: ContractedGraph) -> BfsCertificate:
    """
    Breadth-first spanning tree of G_c from v_0, visiting neighbors in
    ascending order.
    """
    graph = contracted.graph
    tree_edges = tuple(nx.bfs_edges(graph, ROOT, sort_neighbors=sorted))
    depths = {ROOT: 0}
    for parent, child in tree_edges:
        depths[child] = depths[parent] + 1
    del depths[ROOT]
    unreached = tuple(sorted(set(graph.nodes) - {ROOT} - set(depths)))
    if len(unreached) != 0:
        LOG.info(f"States not reachable from the invariant set: {unreached}")
    return BfsCertificate(
        stabilizable=len(unreached) == 0,
        depths=dict(sorted(depths.items())),
        tree_edges=tree_edges,
        unreached=unreached,
    )


def synthesize_gains(
        f: TransitionMatrix,
        invariant: InvariantSet,
        certificate: BfsCertificate,
        constraints: Constraints,
) -> GainFamily:
    """
    Option sets per state: U_a keeps the state in the invariant set,
    Ū_a moves one level closer to it along a shortest path.
    """
    if not certificate.stabilizable:
        raise oc.NotStabilizableError(
            f"states {list(certificate.unreached)} cannot reach the "
            "invariant set",
            stage='bfs',
        )
    all_controls = frozenset(range(1, f.n_controls + 1))
    depths = certificate.depths
    options: Dict[int, FrozenSet[int]] = dict()
    for a in range(1, f.n_states + 1):
        if a in invariant.states:
            options[a] = invariant.controls[a]
        elif a in constraints.states:
            depth = depths[a]
            options[a] = frozenset(
                u for u in constraints.controls_for(a)
                if (
                    f.successor_of(u, a) in invariant.states if depth == 1
                    else depths.get(f.successor_of(u, a)) == depth - 1
                )
            )
        else:
            options[a] = all_controls
        if len(options[a]) == 0:
            raise AssertionError(
                f"State {a} has no feedback option despite a positive "
                "stabilizability verdict."
            )
    full_depths = {a: 0 for a in invariant.states}
    full_depths.update(depths)
    return GainFamily(
        n_states=f.n_states,
        n_controls=f.n_controls,
        options=options,
        depths=dict(sorted(full_depths.items())),
        constrained_states=frozenset(constraints.states),
    )


def synthesize(
        f: TransitionMatrix,
        m_set: TargetSet,
        constraints: Constraints,
        restricted: Optional[Iterable[int]] = None,
) -> SynthesisResult:
    """
    Run the whole synthesis chain, stopping at the first stage that shows
    the target cannot be reached.
    """
    phi = phi_set(f, m_set, constraints)
    invariant = lccis(f, m_set, constraints)
    partial = dict(target=m_set, phi=phi, invariant_set=invariant)
    if len(m_set) == 0:
        return SynthesisResult(
            **partial,
            failing_stage='omega',
            message="target profile set is empty",
        )
    if len(invariant) == 0:
        return SynthesisResult(
            **partial,
            failing_stage='invariant_set',
            message="no invariant core: not stabilizable",
        )
    core = invariant
    if restricted is not None:
        try:
            core = restrict_invariant_set(
                f, restricted, invariant, m_set, constraints)
        except oc.NotStabilizableError as e:
            return SynthesisResult(
                **partial,
                failing_stage=e.stage,
                message=e.reason,
            )
    graph = build_contracted_graph(f, core, constraints)
    certificate = bfs_certificate(graph)
    if not certificate.stabilizable:
        return SynthesisResult(
            **partial,
            core=core,
            graph=graph,
            certificate=certificate,
            failing_stage='bfs',
            message=f"states {list(certificate.unreached)} cannot reach "
                    "the invariant set",
        )
    family = synthesize_gains(f, core, certificate, constraints)
    LOG.info(
        f"Stabilizable: |I| = {len(core)}, transient T = "
        f"{certificate.transient}, {family.size} feedback law(s)."
    )
    return SynthesisResult(
        **partial,
        core=core,
        graph=graph,
        certificate=certificate,
        family=family,
    )


def is_admissible_law(
        f: TransitionMatrix,
        law: LogicalMatrix,
        constraints: Constraints,
) -> bool:
    """u = L ⋉ β respects C_u(β) and keeps the state in C_β."""
    if law.shape != (f.n_controls, f.n_states):
        return False
    for beta in constraints.states:
        u = law.cols[beta - 1]
        if u not in constraints.controls_for(beta):
            return False
        if f.successor_of(u, beta) not in constraints.states:
            return False
    return True

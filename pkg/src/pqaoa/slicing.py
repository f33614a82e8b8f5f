"""Split a model into classically separable slices.

A decomposition moves a chosen set of term groups into a *residual* that is
only evaluated classically and cuts what is left along the connected
components of its interaction graph. For every full assignment ``x``::

    sum_a evaluate(slices[a], x[index_maps[a]]) + evaluate(residual, x) == evaluate(source, x)
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import NotSeparableError, ValidationError
from .model import (
    IsingModel,
    QuboModel,
    Tag,
    TermGroup,
    _Model,
    evaluate,
    model_from_json,
    model_to_json,
)

EDGE_CUT_TAG = Tag.user("edge-cut")


@dataclass(frozen=True)
class InteractionGraph:
    """Variables as nodes, one edge per non-zero quadratic pair."""

    num_nodes: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple(sorted({(min(e), max(e)) for e in self.edges}))
        for i, j in edges:
            if i == j:
                raise ValidationError(f"self-loop on node {i}")
            if not (0 <= i < self.num_nodes and 0 <= j < self.num_nodes):
                raise ValidationError(f"edge ({i}, {j}) out of range")
        object.__setattr__(self, "edges", edges)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def without(self, edges: Iterable[tuple[int, int]]) -> InteractionGraph:
        drop = {(min(e), max(e)) for e in edges}
        return InteractionGraph(self.num_nodes, tuple(e for e in self.edges if e not in drop))


def build_interaction_graph(model: _Model, excluded_tags: Iterable[Tag] = ()) -> InteractionGraph:
    excluded = set(excluded_tags)
    unknown = excluded - set(model.groups)
    if unknown:
        raise ValidationError(f"unknown tags: {sorted(map(str, unknown))}")
    coef: dict[tuple[int, int], float] = defaultdict(float)
    for tag, group in model.groups.items():
        if tag not in excluded:
            for pair, c in group.quadratic.items():
                coef[pair] += c
    return InteractionGraph(model.num_vars, tuple(p for p, c in coef.items() if c != 0.0))


def connected_components(g: InteractionGraph) -> list[tuple[int, ...]]:
    """Maximal connected node sets, each sorted, ordered by smallest member."""
    adj = g.adjacency()
    seen = [False] * g.num_nodes
    out = []
    for root in range(g.num_nodes):
        if seen[root]:
            continue
        seen[root] = True
        stack, comp = [root], []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        out.append(tuple(sorted(comp)))
    return out


def find_bridges(g: InteractionGraph) -> list[tuple[int, int]]:
    """Edges whose removal disconnects their endpoints (DFS low-link)."""
    adj = g.adjacency()
    disc = [-1] * g.num_nodes
    low = [0] * g.num_nodes
    bridges = []
    clock = 0
    for root in range(g.num_nodes):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = clock
        clock += 1
        # frames: (node, parent, iterator position)
        stack = [(root, -1, 0)]
        while stack:
            u, parent, pos = stack[-1]
            if pos < len(adj[u]):
                stack[-1] = (u, parent, pos + 1)
                v = adj[u][pos]
                if v == parent:
                    continue
                if disc[v] == -1:
                    disc[v] = low[v] = clock
                    clock += 1
                    stack.append((v, u, 0))
                else:
                    low[u] = min(low[u], disc[v])
            else:
                stack.pop()
                if parent != -1:
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        bridges.append((min(u, parent), max(u, parent)))
    return sorted(bridges)


@dataclass(frozen=True, eq=False)
class SliceDecomposition:
    """Residual over all variables plus ``k`` slices on disjoint variable sets.

    ``slices[a]`` is indexed locally; ``index_maps[a][j]`` is the global index
    of its local variable ``j``. Slices are ordered by smallest global index.
    """

    source: _Model
    residual: _Model
    slices: tuple[_Model, ...]
    index_maps: tuple[tuple[int, ...], ...]
    classical_tags: frozenset[Tag] = frozenset()

    @property
    def k(self) -> int:
        return len(self.slices)

    def local(self, x, a: int) -> np.ndarray:
        return np.asarray(x)[list(self.index_maps[a])]

    def reconstructed_energy(self, x) -> float:
        total = sum(evaluate(s, self.local(x, a)) for a, s in enumerate(self.slices))
        return total + evaluate(self.residual, x)

    def to_json(self) -> dict:
        return {
            "source": model_to_json(self.source),
            "residual": model_to_json(self.residual),
            "slices": [model_to_json(s) for s in self.slices],
            "index_maps": [list(m) for m in self.index_maps],
            "classical_tags": [t.to_json() for t in sorted(self.classical_tags, key=Tag.sort_key)],
        }

    @classmethod
    def from_json(cls, data) -> SliceDecomposition:
        return cls(
            model_from_json(data["source"]),
            model_from_json(data["residual"]),
            tuple(model_from_json(s) for s in data["slices"]),
            tuple(tuple(m) for m in data["index_maps"]),
            frozenset(Tag.from_json(t) for t in data.get("classical_tags", [])),
        )


def _split_groups(model: _Model, tags: Sequence[Tag], components: Sequence[tuple[int, ...]]):
    owner = {}
    for c, comp in enumerate(components):
        for v in comp:
            owner[v] = c
    local_index = {v: j for comp in components for j, v in enumerate(comp)}
    per_comp: list[dict[Tag, TermGroup]] = [{} for _ in components]
    for tag in tags:
        group = model.groups[tag]
        lin = [dict() for _ in components]
        quad = [dict() for _ in components]
        for i, c in group.linear.items():
            lin[owner[i]][local_index[i]] = c
        for (i, j), c in group.quadratic.items():
            if owner[i] != owner[j]:
                raise NotSeparableError(f"pair ({i}, {j}) of {tag} crosses slices")
            quad[owner[i]][(local_index[i], local_index[j])] = c
        variables = group.variables()
        # a constant goes with the slice holding the group's lowest variable
        home = owner[min(variables)] if variables else 0
        for c in range(len(components)):
            offset = group.offset if c == home else 0.0
            if lin[c] or quad[c] or (c == home and offset != 0.0):
                per_comp[c][tag] = TermGroup(lin[c], quad[c], offset)
    return per_comp


def decompose(model: _Model, classical_tags: Iterable[Tag] = ()) -> SliceDecomposition:
    """Move ``classical_tags`` to the residual and slice the rest by connectivity."""
    classical = frozenset(classical_tags)
    unknown = classical - set(model.groups)
    if unknown:
        raise ValidationError(f"unknown tags: {sorted(map(str, unknown))}")
    quantum = [t for t in model.groups if t not in classical]
    residual = model.with_groups({t: g for t, g in model.groups.items() if t in classical})
    components = connected_components(build_interaction_graph(model, classical))
    if not components:
        return SliceDecomposition(model, residual, (), (), classical)
    cls = type(model)
    slices = []
    for comp, groups in zip(components, _split_groups(model, quantum, components)):
        labels = None if model.labels is None else [model.labels[v] for v in comp]
        slices.append(cls(len(comp), groups, labels))
    return SliceDecomposition(model, residual, tuple(slices), tuple(components), classical)


def decompose_by_edge_cut(model: IsingModel | QuboModel,
                          cut_edges: Iterable[tuple[int, int]]) -> SliceDecomposition:
    """Remove the given couplings to the residual and slice the remainder.

    Raises :class:`NotSeparableError` when the remaining graph is still
    connected.
    """
    cut = sorted({(min(e), max(e)) for e in cut_edges})
    quadratic = model.quadratic
    for pair in cut:
        if pair not in quadratic:
            raise ValidationError(f"edge {pair} is not a coupling of the model")
    cut_set = set(cut)
    groups = {}
    for tag, g in model.groups.items():
        groups[tag] = TermGroup(g.linear, {p: c for p, c in g.quadratic.items() if p not in cut_set},
                                g.offset)
    if EDGE_CUT_TAG in groups:
        raise ValidationError(f"model already uses the reserved tag {EDGE_CUT_TAG}")
    groups[EDGE_CUT_TAG] = TermGroup({}, {p: quadratic[p] for p in cut}, 0.0)
    retagged = model.with_groups(groups)
    remaining = build_interaction_graph(retagged, {EDGE_CUT_TAG})
    if len(connected_components(remaining)) < 2:
        raise NotSeparableError("removing the cut edges leaves the graph connected")
    d = decompose(retagged, {EDGE_CUT_TAG})
    return SliceDecomposition(model, d.residual, d.slices, d.index_maps, d.classical_tags)


def _stripped(label) -> tuple:
    return tuple(label[1:])


def slice_alignment(d: SliceDecomposition) -> list[tuple[int, ...]] | None:
    """Permutations aligning every slice to slice 0, or None if they differ.

    ``perm[a][j]`` is the local index in slice ``a`` that plays the role of
    local index ``j`` in slice 0. Labels with the vehicle index dropped define
    the correspondence; unlabeled slices of equal size align by position.
    """
    if d.k == 0:
        return None
    ref = d.slices[0]
    perms = []
    for s in d.slices:
        if s.num_vars != ref.num_vars:
            return None
        if ref.labels is not None and s.labels is not None:
            where = {_stripped(lab): j for j, lab in enumerate(s.labels)}
            try:
                perm = tuple(where[_stripped(lab)] for lab in ref.labels)
            except KeyError:
                return None
        else:
            perm = tuple(range(ref.num_vars))
        if not _same_polynomial(ref, s, perm):
            return None
        perms.append(perm)
    return perms


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


def _same_polynomial(ref: _Model, other: _Model, perm: Sequence[int]) -> bool:
    if not _close(ref.offset, other.offset):
        return False
    lin_o = other.linear
    mapped_lin = {perm[i]: c for i, c in ref.linear.items()}
    if set(mapped_lin) != set(lin_o) or not all(_close(c, lin_o[i]) for i, c in mapped_lin.items()):
        return False
    quad_o = other.quadratic
    mapped_quad = {(min(perm[i], perm[j]), max(perm[i], perm[j])): c
                   for (i, j), c in ref.quadratic.items()}
    return set(mapped_quad) == set(quad_o) and all(_close(c, quad_o[p]) for p, c in mapped_quad.items())


def slices_identical(d: SliceDecomposition) -> bool:
    """True when every slice is the same polynomial as slice 0 after alignment."""
    return slice_alignment(d) is not None

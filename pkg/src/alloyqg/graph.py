"""Metric graphs, finite edge subsets and the Z^nu lattice boxes.

Edges are identified with intervals ``(0, length)``; coordinate 0 sits at
``iota`` and ``length`` at ``tau``.  Identifiers are opaque hashables (strings
for graphs read from file, integer tuples for lattice graphs).
"""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable

from .errors import (
    BoxTooSmall,
    LengthOutOfBounds,
    NonPositiveLength,
    UnknownEdge,
    UnknownVertex,
)


def _sorted_ids(ids):
    try:
        return sorted(ids)
    except TypeError:
        return sorted(ids, key=repr)


@dataclass(frozen=True)
class Edge:
    id: Hashable
    iota: Hashable
    tau: Hashable
    length: float

    @property
    def is_loop(self) -> bool:
        return self.iota == self.tau


@dataclass(frozen=True)
class MetricGraph:
    vertices: frozenset
    edges: tuple  # of Edge, canonical order
    l_minus: float
    l_plus: float

    @cached_property
    def edge_map(self) -> dict:
        return {e.id: e for e in self.edges}

    @cached_property
    def degree(self) -> dict:
        return _degrees(self.edges, self.vertices)

    def edge(self, edge_id) -> Edge:
        try:
            return self.edge_map[edge_id]
        except KeyError:
            raise UnknownEdge(f"edge {edge_id!r} not in graph") from None


def _degrees(edges, vertices) -> dict:
    deg = Counter({v: 0 for v in vertices})
    for e in edges:
        # a loop contributes both of its ends
        deg[e.iota] += 1
        deg[e.tau] += 1
    return dict(deg)


def build_graph(vertices: Iterable, edges: Iterable[Edge], l_minus: float, l_plus: float) -> MetricGraph:
    vertices = frozenset(vertices)
    edges = list(edges)
    if not vertices or not edges:
        raise ValueError("a graph needs at least one vertex and one edge")
    if not 0 < l_minus <= l_plus:
        raise ValueError(f"need 0 < l_minus <= l_plus, got {l_minus}, {l_plus}")
    seen = set()
    for e in edges:
        if e.id in seen:
            raise ValueError(f"duplicate edge id {e.id!r}")
        seen.add(e.id)
        for v in (e.iota, e.tau):
            if v not in vertices:
                raise UnknownVertex(f"edge {e.id!r} has undeclared endpoint {v!r}")
        if not e.length > 0:
            raise NonPositiveLength(f"edge {e.id!r} has length {e.length}")
        if not l_minus <= e.length <= l_plus:
            raise LengthOutOfBounds(
                f"edge {e.id!r}: length {e.length} outside [{l_minus}, {l_plus}]")
    by_id = {e.id: e for e in edges}
    ordered = tuple(by_id[i] for i in _sorted_ids(by_id))
    return MetricGraph(vertices, ordered, float(l_minus), float(l_plus))


@dataclass(frozen=True)
class SubgraphView:
    """The subgraph spanned by a finite edge set of ``parent``.

    ``boundary_vertices`` are the vertices with exactly one incident edge end
    in the subgraph.  ``frontier`` additionally records where the subgraph is
    glued to the rest of the parent (subgraph degree below parent degree).
    """

    parent: MetricGraph
    lam: frozenset
    v_lambda: frozenset
    boundary_vertices: frozenset
    interior_vertices: frozenset
    degree: dict = field(compare=False, repr=False)

    @cached_property
    def edges(self) -> tuple:
        return tuple(e for e in self.parent.edges if e.id in self.lam)

    @cached_property
    def edge_ids(self) -> tuple:
        return tuple(e.id for e in self.edges)

    @cached_property
    def frontier(self) -> frozenset:
        pdeg = self.parent.degree
        return frozenset(v for v in self.v_lambda if self.degree[v] < pdeg[v])

    @property
    def n_edges(self) -> int:
        return len(self.lam)

    def incident(self, v) -> list:
        """(edge, end) pairs at ``v``; end is 0 for iota and 1 for tau."""
        out = []
        for e in self.edges:
            if e.iota == v:
                out.append((e, 0))
            if e.tau == v:
                out.append((e, 1))
        return out


def subgraph_view(g: MetricGraph, lam: Iterable) -> SubgraphView:
    lam = frozenset(lam)
    if not lam:
        raise ValueError("empty edge set")
    for eid in lam:
        if eid not in g.edge_map:
            raise UnknownEdge(f"edge {eid!r} not in graph")
    edges = [e for e in g.edges if e.id in lam]
    v_lambda = frozenset(itertools.chain.from_iterable((e.iota, e.tau) for e in edges))
    deg = _degrees(edges, v_lambda)
    boundary = frozenset(v for v in v_lambda if deg[v] == 1)
    return SubgraphView(g, lam, v_lambda, boundary, v_lambda - boundary, deg)


def full_view(g: MetricGraph) -> SubgraphView:
    return subgraph_view(g, g.edge_map)


# -- Z^nu lattice -----------------------------------------------------------

@dataclass(frozen=True)
class LatticeSpec:
    nu: int
    l: int

    def __post_init__(self):
        if self.nu < 1:
            raise ValueError(f"nu must be >= 1, got {self.nu}")
        if self.l < 3:
            raise BoxTooSmall(f"box side {self.l} < 3 contains no edge")


def lattice_edge_id(x: tuple, axis: int) -> tuple:
    return (tuple(int(c) for c in x), int(axis))


def lattice_graph(lower: tuple, upper: tuple) -> MetricGraph:
    """Unit-edge Z^nu lattice on the closed box ``[lower, upper]``."""
    nu = len(lower)
    ranges = [range(lo, hi + 1) for lo, hi in zip(lower, upper)]
    vertices = [tuple(p) for p in itertools.product(*ranges)]
    vset = frozenset(vertices)
    edges = []
    for x in vertices:
        for i in range(nu):
            y = x[:i] + (x[i] + 1,) + x[i + 1:]
            if y in vset:
                edges.append(Edge(lattice_edge_id(x, i), x, y, 1.0))
    return build_graph(vset, edges, 1.0, 1.0)


def box_edges(g: MetricGraph, lower: tuple, upper: tuple) -> list:
    """Lattice edges lying in the open box ``prod (lower_i, upper_i)``."""
    out = []
    for e in g.edges:
        x, y = e.iota, e.tau
        if all(lo < a < hi and lo < b < hi for a, b, lo, hi in zip(x, y, lower, upper)):
            out.append(e.id)
    return out


def box_view(g: MetricGraph, lower: tuple, upper: tuple) -> SubgraphView:
    ids = box_edges(g, lower, upper)
    if not ids:
        raise BoxTooSmall(f"box {lower}..{upper} contains no edge")
    return subgraph_view(g, ids)


def lattice_box(spec: LatticeSpec) -> tuple[MetricGraph, SubgraphView]:
    lower, upper = (0,) * spec.nu, (spec.l,) * spec.nu
    g = lattice_graph(lower, upper)
    return g, box_view(g, lower, upper)


def box_edge_count(nu: int, l: int) -> int:
    return nu * (l - 1) ** (nu - 1) * (l - 2)


def chain_view(m: int) -> SubgraphView:
    """Chain of ``m`` unit edges, the nu = 1 box with side ``m + 2``."""
    return lattice_box(LatticeSpec(1, m + 2))[1]


# -- file format ------------------------------------------------------------

def graph_from_dict(doc: dict) -> MetricGraph:
    edges = [Edge(str(d["id"]), str(d["iota"]), str(d["tau"]), float(d["length"]))
             for d in doc["edges"]]
    return build_graph([str(v) for v in doc["vertices"]], edges,
                       float(doc["l_minus"]), float(doc["l_plus"]))


def graph_to_dict(g: MetricGraph) -> dict:
    return {
        "vertices": [str(v) for v in _sorted_ids(g.vertices)],
        "edges": [{"id": str(e.id), "iota": str(e.iota), "tau": str(e.tau), "length": e.length}
                  for e in g.edges],
        "l_minus": g.l_minus,
        "l_plus": g.l_plus,
    }


def load_graph(path) -> MetricGraph:
    with open(path) as fh:
        return graph_from_dict(json.load(fh))

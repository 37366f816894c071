"""Seeded random instances for the property suites.

Graphs have up to eight edges; loops and parallel edges are allowed.  All
breakpoints sit on the grid ``length / 8`` so a uniform mesh with a multiple
of eight elements per edge is aligned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import Mesh
from .graph import Edge, MetricGraph, SubgraphView, build_graph, full_view
from .potential import AlloyConfig, CouplingLaw, DisorderSample, SingleSitePotential, sample_disorder

GRID = 8
C_MINUS, C_PLUS = 0.5, 2.0


@dataclass(frozen=True)
class Instance:
    seed: int
    graph: MetricGraph
    view: SubgraphView
    config: AlloyConfig
    sample: DisorderSample
    mesh: Mesh


def random_graph(rng, max_edges=8, l_minus=0.5, l_plus=2.0) -> MetricGraph:
    n_edges = int(rng.integers(1, max_edges + 1))
    n_vertices = int(rng.integers(2, max(3, n_edges + 2)))
    names = [f"v{i}" for i in range(n_vertices)]
    edges = []
    for k in range(n_edges):
        a = int(rng.integers(n_vertices))
        # one edge in eight is a loop
        b = a if rng.random() < 0.125 else int(rng.integers(n_vertices))
        length = float(np.round(rng.uniform(l_minus, l_plus), 3))
        edges.append(Edge(f"e{k}", names[a], names[b], length))
    used = {v for e in edges for v in (e.iota, e.tau)}
    return build_graph(used, edges, l_minus, l_plus)


def random_site(rng, edge) -> SingleSitePotential:
    step = edge.length / GRID
    i = int(rng.integers(0, GRID - 1))
    j = int(rng.integers(i + 1, GRID + 1))
    a, b = i * step, j * step
    segs = []
    for k in range(GRID):
        lo, hi = k * step, (k + 1) * step
        if i <= k < j:
            v = float(rng.uniform(C_MINUS, C_PLUS))
        else:
            v = float(rng.choice([0.0, rng.uniform(0.0, C_PLUS)]))
        if v > 0:
            segs.append((lo, hi, v))
    return SingleSitePotential(edge.id, (a, b), tuple(segs), C_MINUS, C_PLUS)


def random_law(rng) -> CouplingLaw:
    lo = float(rng.uniform(-0.5, 0.5))
    hi = lo + float(rng.uniform(0.5, 2.0))
    cuts = np.linspace(lo, hi, 4)
    w = rng.uniform(0.2, 1.0, size=3)
    w = w / np.sum(w * np.diff(cuts))
    dens = tuple((float(a), float(b), float(v)) for a, b, v in zip(cuts[:-1], cuts[1:], w))
    return CouplingLaw(lo, hi, dens)


def random_instance(seed: int, elements_per_edge: int = 24, degree: int = 2) -> Instance:
    rng = np.random.default_rng([7919, int(seed)])
    g = random_graph(rng)
    view = full_view(g)
    sites = {e.id: random_site(rng, e) for e in g.edges}
    config = AlloyConfig(random_law(rng), s=min(e.length for e in g.edges) / GRID, sites=sites)
    sample = sample_disorder(config, view, master_seed=seed, index=0)
    return Instance(seed, g, view, config, sample, Mesh.uniform(view, elements_per_edge, degree))

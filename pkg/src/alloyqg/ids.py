"""Integrated density of states on Z^nu boxes and the superadditivity checks.

A box ``Q = [lower, upper)`` owns the edges lying in its open interior.  Its
operator carries Dirichlet conditions wherever the box edges end or are cut
out of the surrounding lattice, and Kirchhoff conditions elsewhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .assembly import (
    Mesh,
    assemble_system,
    box_bc,
    build_mesh,
    count_eigenvalues,
    n0_reference,
    solve_spectrum,
)
from .errors import BadPartition, BoxTooSmall, CheckFailed, GapGuardViolation
from .graph import LatticeSpec, box_edges, lattice_edge_id, lattice_graph, subgraph_view
from .parallel import ordered_map
from .potential import AlloyConfig, CouplingLaw, DisorderSample, sample_disorder

GAP_GUARD = 1e-6
H_MAX = 0.125


def free_config() -> AlloyConfig:
    """Zero potential: frozen coupling 0 and ``u_e = 1``."""
    return AlloyConfig(CouplingLaw(0.0, 0.0), s=0.0, default_sites=True)


def is_free(config: AlloyConfig) -> bool:
    laws = [config.law, *config.edge_laws.values()]
    return all(l.degenerate and l.omega_minus == 0.0 for l in laws)


@dataclass(frozen=True)
class Box:
    lower: tuple
    upper: tuple

    @property
    def nu(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> int:
        return math.prod(b - a for a, b in zip(self.lower, self.upper))

    def shifted(self, x) -> "Box":
        return Box(tuple(a + s for a, s in zip(self.lower, x)), tuple(b + s for b, s in zip(self.upper, x)))

    @classmethod
    def cube(cls, nu: int, l: int) -> "Box":
        return cls((0,) * nu, (l,) * nu)


def box_operator_view(parent, box: Box):
    ids = box_edges(parent, box.lower, box.upper)
    return subgraph_view(parent, ids) if ids else None


def _count(view, config, sample, mesh, lam, mode="leq", gap=None):
    if view is None:
        return 0
    system = assemble_system(view, config, sample, box_bc(view), mesh.restrict(view.edge_ids))
    hi = lam + (gap or 0.0)
    spec = solve_spectrum(system, lam_max=hi)
    if gap is not None and np.any(np.abs(spec.eigenvalues - lam) <= gap):
        raise GapGuardViolation(f"an eigenvalue lies within {gap} of lambda = {lam}")
    return count_eigenvalues(spec, lam, mode)


# -- curves -----------------------------------------------------------------

@dataclass
class IdsCurve:
    nu: int
    l: int
    lambdas: np.ndarray
    F: np.ndarray
    seed: Optional[tuple] = None

    @property
    def N(self) -> np.ndarray:
        return self.F / float(self.l) ** self.nu


def ids_curve(spec: LatticeSpec, config, lambda_grid: Sequence[float], sample: DisorderSample | None = None,
              mesh: Mesh | None = None, master_seed: int = 0, index: int = 0,
              h_max: float = H_MAX, degree: int = 2) -> IdsCurve:
    """``N^l(lambda) = l^-nu #{n : lambda_n(H_l) <= lambda}`` on a grid."""
    grid = np.asarray(lambda_grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("lambda grid must be increasing")
    box = Box.cube(spec.nu, spec.l)
    parent = lattice_graph(box.lower, box.upper)
    view = box_operator_view(parent, box)
    if sample is None:
        sample = sample_disorder(config, view, master_seed, index)
    if mesh is None:
        mesh = build_mesh(view, config, h_max=h_max, degree=degree)
    system = assemble_system(view, config, sample, box_bc(view), mesh)
    sp_ = solve_spectrum(system, lam_max=float(grid[-1]))
    F = np.array([count_eigenvalues(sp_, lam) for lam in grid], dtype=np.int64)
    return IdsCurve(spec.nu, spec.l, grid, F, sample.seed)


@dataclass(frozen=True)
class IdsExperiment:
    nu: int
    sizes: tuple
    lambda_grid: tuple
    config: AlloyConfig
    master_seed: int = 0
    samples_per_size: int = 1
    h_max: float = H_MAX
    degree: int = 2

    def __post_init__(self):
        if any(l < 3 for l in self.sizes):
            raise BoxTooSmall("box sides must be >= 3")
        if any(b <= a for a, b in zip(self.sizes[:-1], self.sizes[1:])):
            raise ValueError("sizes must be strictly increasing")
        if any(b < a for a, b in zip(self.lambda_grid[:-1], self.lambda_grid[1:])):
            raise ValueError("lambda grid must be sorted")
        if self.samples_per_size < 1:
            raise ValueError("samples_per_size must be >= 1")


@dataclass
class ExhaustionResult:
    curves: list  # IdsCurve per (size, replicate), replicate-major within size
    convergence: list  # (lambda, l_from, l_to, abs_diff)
    free_limit: list  # (l, lambda, N_l, exact, abs_err, bound, within)
    sup_differences: list  # (l_from, l_to, sup over grid of |N^{l_to} - N^{l_from}|)
    variance: list = field(default_factory=list)  # (l, lambda, mean_N, std_N)
    replicates: int = 1

    def curves_for(self, replicate: int = 0) -> list:
        return self.curves[replicate::self.replicates]


def exhaustion_run(exp: IdsExperiment, threads: int = 1) -> ExhaustionResult:
    jobs = [(k, r) for k in range(len(exp.sizes)) for r in range(exp.samples_per_size)]

    def one(job):
        k, r = job
        return ids_curve(LatticeSpec(exp.nu, exp.sizes[k]), exp.config, exp.lambda_grid,
                         master_seed=exp.master_seed, index=k * exp.samples_per_size + r,
                         h_max=exp.h_max, degree=exp.degree)

    curves = ordered_map(one, jobs, threads)
    reps = exp.samples_per_size
    main = curves[::reps]
    conv, sups = [], []
    for a, b in zip(main[:-1], main[1:]):
        diff = np.abs(b.N - a.N)
        conv.extend((float(lam), a.l, b.l, float(d)) for lam, d in zip(a.lambdas, diff))
        sups.append((a.l, b.l, float(diff.max())))
    free = []
    if exp.nu == 1 and is_free(exp.config):
        for c in main:
            exact = np.sqrt(np.maximum(c.lambdas, 0.0)) / math.pi
            err = np.abs(c.N - exact)
            bound = 3.0 / c.l
            free.extend((c.l, float(lam), float(n), float(x), float(e), bound, bool(e <= bound))
                        for lam, n, x, e in zip(c.lambdas, c.N, exact, err))
    var = []
    if reps > 1:
        for k, l in enumerate(exp.sizes):
            Ns = np.array([c.N for c in curves[k * reps:(k + 1) * reps]])
            var.extend((l, float(lam), float(m), float(s))
                       for lam, m, s in zip(exp.lambda_grid, Ns.mean(0), Ns.std(0, ddof=1)))
    return ExhaustionResult(curves, conv, free, sups, var, reps)


# -- superadditive process checks ---------------------------------------------

def _validate_partition(q: Box, parts: Sequence[Box]):
    if not parts:
        raise BadPartition("empty partition")
    for p in parts:
        if p.nu != q.nu or any(b <= a for a, b in zip(p.lower, p.upper)):
            raise BadPartition(f"degenerate part {p}")
        if any(a < qa or b > qb for a, b, qa, qb in zip(p.lower, p.upper, q.lower, q.upper)):
            raise BadPartition(f"part {p} leaves {q}")
    for i, p in enumerate(parts):
        for r in parts[i + 1:]:
            if all(max(a, c) < min(b, d) for a, b, c, d in zip(p.lower, p.upper, r.lower, r.upper)):
                raise BadPartition(f"parts {p} and {r} overlap")
    if sum(p.volume for p in parts) != q.volume:
        raise BadPartition("parts do not cover the box")


@dataclass
class SuperadditivityReport:
    box: Box
    parts: list
    lam: float
    F_box: int
    F_parts: list

    @property
    def ok(self) -> bool:
        return self.F_box >= sum(self.F_parts)


def check_superadditivity(q: Box, parts: Sequence[Box], config, sample: DisorderSample | None, lam: float,
                          mesh: Mesh | None = None, master_seed: int = 0, gap: float = GAP_GUARD,
                          h_max: float = H_MAX, degree: int = 2, strict: bool = True) -> SuperadditivityReport:
    """``F_Q >= sum_i F_{Q_i}`` with one coupling field restricted to every part."""
    parts = list(parts)
    _validate_partition(q, parts)
    parent = lattice_graph(q.lower, q.upper)
    view = box_operator_view(parent, q)
    if view is None:
        raise BadPartition(f"box {q} contains no edge")
    if sample is None:
        sample = sample_disorder(config, view, master_seed, 0)
    if mesh is None:
        mesh = build_mesh(view, config, h_max=h_max, degree=degree)
    f_q = _count(view, config, sample, mesh, lam, gap=gap)
    f_parts = [_count(box_operator_view(parent, p), config, sample, mesh, lam, gap=gap) for p in parts]
    report = SuperadditivityReport(q, parts, lam, f_q, f_parts)
    if strict and not report.ok:
        raise CheckFailed(f"superadditivity violated: {f_q} < {sum(f_parts)}", (f_q, f_parts))
    return report


def random_partition(q: Box, rng: np.random.Generator, n_cuts: int) -> list:
    """Guillotine partition of ``q`` by ``n_cuts`` axis-parallel integer cuts."""
    parts = [q]
    for _ in range(n_cuts):
        splittable = [i for i, p in enumerate(parts) if any(b - a >= 2 for a, b in zip(p.lower, p.upper))]
        if not splittable:
            break
        i = splittable[int(rng.integers(len(splittable)))]
        p = parts.pop(i)
        axes = [a for a in range(p.nu) if p.upper[a] - p.lower[a] >= 2]
        ax = axes[int(rng.integers(len(axes)))]
        cut = int(rng.integers(p.lower[ax] + 1, p.upper[ax]))
        left_hi = p.upper[:ax] + (cut,) + p.upper[ax + 1:]
        right_lo = p.lower[:ax] + (cut,) + p.lower[ax + 1:]
        parts.extend([Box(p.lower, left_hi), Box(right_lo, p.upper)])
    return parts


def counting_bound(n_edges: int, nu: int, lam: float, k_bound: float) -> int:
    return n_edges * n0_reference(lam + k_bound) + 4 * nu * n_edges


@dataclass
class CountingBoundReport:
    lam: float
    F: int
    n_edges: int
    n0: int
    bound: int

    @property
    def ok(self) -> bool:
        return self.F <= self.bound


def check_counting_upper_bound(spec: LatticeSpec, config, sample: DisorderSample | None, lam: float,
                               mesh: Mesh | None = None, master_seed: int = 0, h_max: float = H_MAX,
                               degree: int = 2, strict: bool = True) -> CountingBoundReport:
    """``F_Q(lambda) <= |Lambda| n_0(lambda + K) + 4 nu |Lambda|``."""
    box = Box.cube(spec.nu, spec.l)
    parent = lattice_graph(box.lower, box.upper)
    view = box_operator_view(parent, box)
    if sample is None:
        sample = sample_disorder(config, view, master_seed, 0)
    if mesh is None:
        mesh = build_mesh(view, config, h_max=h_max, degree=degree)
    f = _count(view, config, sample, mesh, lam)
    k_bound = config.potential_bound(view)
    size = view.n_edges
    report = CountingBoundReport(lam, f, size, n0_reference(lam + k_bound),
                                 counting_bound(size, spec.nu, lam, k_bound))
    if strict and not report.ok:
        raise CheckFailed(f"counting bound violated: {f} > {report.bound}", report)
    return report


def shift_sample(sample: DisorderSample, x) -> DisorderSample:
    """Coupling field moved by the lattice vector ``x`` (edge ``(y, i)`` goes to ``(y + x, i)``)."""
    out = {}
    for (y, axis), w in sample.omega.items():
        out[lattice_edge_id(tuple(a + s for a, s in zip(y, x)), axis)] = w
    return DisorderSample(out, sample.seed)


@dataclass
class EquivarianceReport:
    shift: tuple
    lam: float
    F: int
    F_shifted: int
    max_eig_diff: float

    @property
    def ok(self) -> bool:
        return self.F == self.F_shifted


def check_equivariance(spec: LatticeSpec, config, lam: float, shift, master_seed: int = 0, index: int = 0,
                       h_max: float = H_MAX, degree: int = 2, strict: bool = True) -> EquivarianceReport:
    shift = tuple(int(s) for s in shift)
    if len(shift) != spec.nu:
        raise ValueError("shift dimension does not match nu")
    q = Box.cube(spec.nu, spec.l)
    qx = q.shifted(shift)
    parent, parent_x = lattice_graph(q.lower, q.upper), lattice_graph(qx.lower, qx.upper)
    view, view_x = box_operator_view(parent, q), box_operator_view(parent_x, qx)
    sample = sample_disorder(config, view, master_seed, index)
    sample_x = shift_sample(sample, shift)
    mesh = build_mesh(view, config, h_max=h_max, degree=degree)
    mesh_x = Mesh({lattice_edge_id(tuple(a + s for a, s in zip(y, shift)), i): x
                   for (y, i), x in mesh.nodes.items()}, mesh.degree)
    sp_a = solve_spectrum(assemble_system(view, config, sample, box_bc(view), mesh), lam_max=lam)
    sp_b = solve_spectrum(assemble_system(view_x, config, sample_x, box_bc(view_x), mesh_x), lam_max=lam)
    diff = (float(np.max(np.abs(sp_a.eigenvalues - sp_b.eigenvalues), initial=0.0))
            if sp_a.k == sp_b.k else float("inf"))
    report = EquivarianceReport(shift, lam, count_eigenvalues(sp_a, lam), count_eigenvalues(sp_b, lam), diff)
    if strict and not report.ok:
        raise CheckFailed(f"equivariance violated: {report.F} != {report.F_shifted}", report)
    return report

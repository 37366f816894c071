"""Monte Carlo Wegner scans and per-eigenfunction diagnostics.

Interval counts are ``#{lambda - eps <= lambda_n <= lambda + eps}`` computed as
``count(lambda + eps, leq) - count(lambda - eps, lt)``.  Disorder sample ``i``
always uses the generator keyed by ``(master_seed, i)``, so the results do not
depend on how samples are spread over worker threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .assembly import (
    assemble_system,
    build_mesh,
    count_eigenvalues,
    default_bc,
    eigenfunction_mass,
    potential_expectation,
    solve_spectrum,
)
from .errors import FDInstability
from .parallel import ordered_map
from .potential import sample_disorder, validate_alloy_config


def interval_counts(view, config, sample, mesh, lam: float, epsilons: Sequence[float], bc=None) -> list:
    bc = default_bc(view) if bc is None else bc
    system = assemble_system(view, config, sample, bc, mesh)
    spec = solve_spectrum(system, lam_max=lam + max(epsilons))
    return [count_eigenvalues(spec, lam + eps, "leq") - count_eigenvalues(spec, lam - eps, "lt")
            for eps in epsilons]


def _mean_stderr(counts):
    counts = np.asarray(counts, dtype=float)
    mean = float(np.mean(counts))
    se = float(np.std(counts, ddof=1) / math.sqrt(len(counts))) if len(counts) > 1 else 0.0
    return mean, se


def sample_counts(view, config, lam, epsilons, n_samples, master_seed, mesh=None, bc=None,
                  threads=1) -> np.ndarray:
    """Interval counts, one row per disorder sample and one column per epsilon."""
    mesh = build_mesh(view, config) if mesh is None else mesh

    def one(i):
        sample = sample_disorder(config, view, master_seed, i)
        return interval_counts(view, config, sample, mesh, lam, epsilons, bc)

    return np.array(ordered_map(one, range(n_samples), threads), dtype=np.int64).reshape(n_samples, len(epsilons))


def expected_count(view, config, lam: float, epsilon: float, n_samples: int, master_seed: int,
                   mesh=None, bc=None, threads: int = 1) -> tuple[float, float]:
    counts = sample_counts(view, config, lam, [epsilon], n_samples, master_seed, mesh, bc, threads)
    return _mean_stderr(counts[:, 0])


# -- scan -------------------------------------------------------------------

@dataclass(frozen=True)
class WegnerExperiment:
    builder: Callable  # size -> SubgraphView
    sizes: tuple
    config: object
    lam: float
    epsilons: tuple
    n_samples: int
    master_seed: int
    h_max: float = 0.125
    degree: int = 2
    bc_rule: Optional[Callable] = None  # view -> vertex conditions; default_bc if None

    def __post_init__(self):
        if not all(0 < e <= 1 for e in self.epsilons):
            raise ValueError("epsilons must lie in (0, 1]")
        if self.n_samples < 100:
            raise ValueError("a Wegner scan needs at least 100 samples per cell")


@dataclass
class WegnerCell:
    size: object
    n_edges: int
    epsilon: float
    lam: float
    n_samples: int
    mean: float
    stderr: float
    counts: np.ndarray = field(repr=False)

    @property
    def ratio(self) -> float:
        return self.mean / (self.epsilon * self.n_edges)

    @property
    def ratio_stderr(self) -> float:
        return self.stderr / (self.epsilon * self.n_edges)


def _wls_slope(x, y, se):
    """Weighted least-squares line; returns slope, its standard error and R^2."""
    x, y, se = map(lambda a: np.asarray(a, dtype=float), (x, y, se))
    w = 1.0 / np.maximum(se, 1e-300) ** 2
    X = np.column_stack([np.ones_like(x), x])
    A = X.T @ (w[:, None] * X)
    beta = np.linalg.solve(A, X.T @ (w * y))
    cov = np.linalg.inv(A)
    fit = X @ beta
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = np.sum(w * (y - ybar) ** 2)
    r2 = 1.0 - np.sum(w * (y - fit) ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(beta[1]), float(math.sqrt(cov[1, 1])), float(r2)


def _ols(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, icept = np.polyfit(x, y, 1)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum((y - (slope * x + icept)) ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


@dataclass
class WegnerReport:
    cells: list
    c_hat: float
    pooled_ratio: float
    pooled_ratio_stderr: float
    cells_within_2se: bool
    monotone_in_eps: bool
    eps_fits: list  # (size, slope, r2) of mean against epsilon
    size_trends: list  # (epsilon, slope, slope_stderr, r2, ok) of ratio against n_edges
    halving: list  # (size, eps_small, eps_large, ratio_of_means, ok)

    @property
    def no_size_trend(self) -> bool:
        return all(t[-1] for t in self.size_trends)

    @property
    def ok(self) -> bool:
        return self.cells_within_2se and self.monotone_in_eps and self.no_size_trend

    header = ("size", "epsilon", "lambda", "n_samples", "mean", "stderr", "ratio", "ratio_stderr")

    def rows(self):
        return [(c.size, c.epsilon, c.lam, c.n_samples, c.mean, c.stderr, c.ratio, c.ratio_stderr)
                for c in self.cells]


def summarize_cells(cells: list) -> WegnerReport:
    ratios = np.array([c.ratio for c in cells])
    ses = np.array([c.ratio_stderr for c in cells])
    informative = ses > 0
    if informative.any():
        w = 1.0 / ses[informative] ** 2
        pooled = float(np.sum(w * ratios[informative]) / np.sum(w))
        pooled_se = float(1.0 / math.sqrt(np.sum(w)))
    else:
        pooled, pooled_se = float(np.mean(ratios)), 0.0
    within = bool(np.all(np.abs(ratios - pooled) <= 2.0 * np.sqrt(ses ** 2 + pooled_se ** 2) + 1e-15))

    sizes = list(dict.fromkeys(c.size for c in cells))
    epsilons = sorted(set(c.epsilon for c in cells))
    by = {(c.size, c.epsilon): c for c in cells}

    monotone, eps_fits, halving = True, [], []
    for s in sizes:
        means = [by[s, e].mean for e in epsilons]
        monotone &= all(b >= a for a, b in zip(means[:-1], means[1:]))
        if len(epsilons) > 1:
            eps_fits.append((s, *_ols(epsilons, means)))
        for e_small in epsilons:
            e_large = 2 * e_small
            if e_large in epsilons and e_large <= 0.1 + 1e-12:
                m_small, m_large = by[s, e_small], by[s, e_large]
                q = m_small.mean / m_large.mean if m_large.mean > 0 else float("nan")
                # delta-method error of the ratio of two means
                se_q = abs(q) * math.hypot(m_small.stderr / max(m_small.mean, 1e-300),
                                           m_large.stderr / max(m_large.mean, 1e-300))
                ok = bool(0.3 - 2 * se_q <= q <= 0.7 + 2 * se_q)
                halving.append((s, e_small, e_large, q, ok))

    trends = []
    if len(sizes) > 1:
        for e in epsilons:
            xs = [by[s, e].n_edges for s in sizes]
            ys = [by[s, e].ratio for s in sizes]
            se = [by[s, e].ratio_stderr for s in sizes]
            if min(se) <= 0:
                continue
            slope, slope_se, r2 = _wls_slope(xs, ys, se)
            trends.append((e, slope, slope_se, r2, abs(slope) <= 2.0 * slope_se))
    return WegnerReport(cells, float(np.max(ratios)), pooled, pooled_se, within, bool(monotone),
                        eps_fits, trends, halving)


def wegner_scan(exp: WegnerExperiment, threads: int = 1) -> WegnerReport:
    cells = []
    for size in exp.sizes:
        view = exp.builder(size)
        validate_alloy_config(exp.config, view).raise_first()
        mesh = build_mesh(view, exp.config, h_max=exp.h_max, degree=exp.degree)
        bc = exp.bc_rule(view) if exp.bc_rule is not None else None
        counts = sample_counts(view, exp.config, exp.lam, exp.epsilons, exp.n_samples,
                               exp.master_seed, mesh, bc=bc, threads=threads)
        for j, eps in enumerate(exp.epsilons):
            mean, se = _mean_stderr(counts[:, j])
            cells.append(WegnerCell(size, view.n_edges, eps, exp.lam, exp.n_samples, mean, se,
                                    counts[:, j]))
    return summarize_cells(cells)


# -- Hellmann-Feynman and unique continuation --------------------------------

@dataclass
class HellmannFeynmanReport:
    rows: list = field(default_factory=list)  # (n, edge, lambda, fd, analytic, rel_err, pass)
    sums: list = field(default_factory=list)  # (n, lambda, sum_derivatives, support_mass, pass)
    skipped: list = field(default_factory=list)  # eigenvalue indices in near-degenerate clusters

    @property
    def max_rel_err(self) -> float:
        return max((r[5] for r in self.rows), default=0.0)

    @property
    def ok(self) -> bool:
        return all(r[-1] for r in self.rows) and all(s[-1] for s in self.sums)

    header = ("n", "edge", "lambda", "fd", "analytic", "rel_err", "pass")


def _support_mass(spec, system, n, view, config):
    total = 0.0
    for e in view.edges:
        a, b = config.site(e).support
        total += eigenfunction_mass(spec, system, n, e.id, (a, b))
    return total


def _is_indicator(site) -> bool:
    return len(site.segments) == 1 and site.segments[0] == (site.support[0], site.support[1], 1.0)


def hellmann_feynman(view, config, sample, mesh, interval: tuple, fd_step: Optional[float] = None,
                     bc=None, rel_tol: float = 1e-3) -> HellmannFeynmanReport:
    """Central differences of ``lambda_n`` in each ``omega_e`` against ``(psi_n | u_e psi_n)``."""
    bc = default_bc(view) if bc is None else bc
    lo, hi = interval
    if fd_step is None:
        width = config.law.omega_plus - config.law.omega_minus
        fd_step = 1e-5 * (width if width > 0 else 1.0)
    system = assemble_system(view, config, sample, bc, mesh)
    spec = solve_spectrum(system, lam_max=hi, want_vectors=True)
    targets = [n for n in range(1, spec.k + 1) if spec.eigenvalues[n - 1] >= lo]
    report = HellmannFeynmanReport()
    if not targets:
        return report
    kmax = targets[-1] + 1
    gaps = np.diff(solve_spectrum(system, k=min(kmax, system.dimension)).eigenvalues)

    shifted = {}
    for e in view.edges:
        pair = []
        for sign in (+1, -1):
            s2 = sample.with_value(e.id, sample[e.id] + sign * fd_step)
            sys2 = assemble_system(view, config, s2, bc, mesh)
            pair.append(solve_spectrum(sys2, k=min(kmax, sys2.dimension)).eigenvalues)
        shifted[e.id] = pair

    c_minus = min(config.site(e).c_minus for e in view.edges)
    all_indicator = all(_is_indicator(config.site(e)) for e in view.edges)
    for n in targets:
        if spec.clustered[n - 1]:
            report.skipped.append(n)
            continue
        lam = float(spec.eigenvalues[n - 1])
        gap = min(gaps[n - 2] if n >= 2 else np.inf, gaps[n - 1] if n - 1 < len(gaps) else np.inf)
        total = 0.0
        for e in view.edges:
            analytic = potential_expectation(spec, system, n, e.id)
            total += analytic
            up, down = shifted[e.id]
            if fd_step * config.site(e).c_plus > 0.25 * gap:
                raise FDInstability(f"fd step {fd_step} too large for gap {gap} at n={n}")
            fd = (up[n - 1] - down[n - 1]) / (2 * fd_step)
            denom = abs(analytic) if analytic != 0 else 1.0
            rel = abs(fd - analytic) / denom
            report.rows.append((n, e.id, lam, float(fd), float(analytic), float(rel), bool(rel <= rel_tol)))
        smass = _support_mass(spec, system, n, view, config)
        if all_indicator:
            ok = abs(total - smass) <= 1e-9 * max(1.0, smass)
        else:
            ok = total >= c_minus * smass - 1e-12
        report.sums.append((n, lam, float(total), float(smass), bool(ok)))
    return report


@dataclass
class UniqueContinuationReport:
    rows: list = field(default_factory=list)  # (n, edge, lambda, edge_mass, support_mass, ratio, gronwall)
    skipped: list = field(default_factory=list)

    @property
    def min_ratio(self) -> float:
        return min((r[5] for r in self.rows), default=float("nan"))

    @property
    def min_gronwall(self) -> float:
        return min((r[6] for r in self.rows), default=float("nan"))

    header = ("n", "edge", "lambda", "edge_mass", "support_mass", "ratio", "gronwall_bound")


def unique_continuation_report(view, config, sample, mesh, interval: tuple, bc=None,
                               c3: float = 2.0, mass_floor: float = 1e-12) -> UniqueContinuationReport:
    """Ratios ``int_{S_e} |psi|^2 / int_e |psi|^2`` for eigenfunctions with eigenvalue in ``interval``.

    ``gronwall_bound`` is ``exp(-C4 l_e) |S_e| / l_e`` with
    ``C4 = 2 (c3 + ||W - lambda||_inf)``; it is a diagnostic, not asserted.
    """
    bc = default_bc(view) if bc is None else bc
    lo, hi = interval
    system = assemble_system(view, config, sample, bc, mesh)
    spec = solve_spectrum(system, lam_max=hi, want_vectors=True)
    report = UniqueContinuationReport()
    for n in range(1, spec.k + 1):
        lam = float(spec.eigenvalues[n - 1])
        if lam < lo:
            continue
        if spec.clustered[n - 1]:
            report.skipped.append(n)
            continue
        for e in view.edges:
            whole = eigenfunction_mass(spec, system, n, e.id)
            if whole <= mass_floor:
                continue
            site = config.site(e)
            part = eigenfunction_mass(spec, system, n, e.id, site.support)
            w = sample[e.id] * system.element_potential[e.id]
            c4 = 2.0 * (c3 + float(np.max(np.abs(np.append(w, 0.0) - lam))))
            gronwall = math.exp(-c4 * e.length) * site.support_length / e.length
            report.rows.append((n, e.id, lam, whole, part, part / whole, gronwall))
    return report


def uc_uniformity(min_ratios: dict, factor: float = 2.0) -> tuple[bool, float]:
    """Checks ``min ratio >= reference / factor`` with the smallest size as reference."""
    sizes = sorted(min_ratios)
    ref = min_ratios[sizes[0]]
    return all(min_ratios[s] >= ref / factor for s in sizes), ref


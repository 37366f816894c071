"""Decoupled comparison operators and the eigenvalue comparison checks.

All operator variants are assembled on one shared mesh, so their discrete
spaces are nested (Dirichlet decoupling restricts, Neumann decoupling
enlarges) and min-max makes the comparisons exact up to round-off.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import DIRICHLET, NEUMANN, Condition, assemble_system, default_bc, solve_spectrum
from .errors import CheckFailed, UnknownTarget
from .graph import subgraph_view

REL_TOL = 1e-8


@dataclass(frozen=True)
class DecouplingPlan:
    target: object
    flavor: Condition  # DIRICHLET or NEUMANN
    kind: str = "vertex"  # or "edge": decouple both endpoints of the edge


def _tol(lam):
    return REL_TOL * (1.0 + abs(lam))


def apply_decoupling(bc: dict, plan: DecouplingPlan, view) -> dict:
    flavor = Condition(plan.flavor)
    if flavor not in (DIRICHLET, NEUMANN):
        raise ValueError(f"decoupling flavor must be dirichlet or neumann, got {flavor}")
    if plan.kind == "vertex":
        if plan.target not in view.v_lambda:
            raise UnknownTarget(f"vertex {plan.target!r} not in the subgraph")
        verts = [plan.target]
    elif plan.kind == "edge":
        if plan.target not in view.lam:
            raise UnknownTarget(f"edge {plan.target!r} not in the subgraph")
        e = view.parent.edge(plan.target)
        verts = [e.iota, e.tau]
    else:
        raise ValueError(f"unknown plan kind {plan.kind!r}")
    out = dict(bc)
    for v in verts:
        out[v] = flavor
    return out


def _lowest(view, config, sample, bc, mesh, k):
    system = assemble_system(view, config, sample, bc, mesh)
    return solve_spectrum(system, k=min(k, system.dimension)).eigenvalues


@dataclass
class BracketingReport:
    target: object
    kind: str
    rows: list = field(default_factory=list)  # (n, lambda_N, lambda, lambda_D, pass)

    @property
    def ok(self) -> bool:
        return all(r[-1] for r in self.rows)

    header = ("n", "lambda_N", "lambda", "lambda_D", "pass")


def check_bracketing(view, config, sample, mesh, target, k: int, kind: str = "vertex",
                     bc: dict | None = None, strict: bool = True) -> BracketingReport:
    """``lambda_n^N <= lambda_n <= lambda_n^D`` for ``n = 1..k``."""
    bc = default_bc(view) if bc is None else bc
    lam = _lowest(view, config, sample, bc, mesh, k)
    lam_n = _lowest(view, config, sample, apply_decoupling(bc, DecouplingPlan(target, NEUMANN, kind), view),
                    mesh, k)
    lam_d = _lowest(view, config, sample, apply_decoupling(bc, DecouplingPlan(target, DIRICHLET, kind), view),
                    mesh, k)
    report = BracketingReport(target, kind)
    for i in range(min(k, len(lam_d))):
        ok = lam_n[i] <= lam[i] + _tol(lam[i]) and lam[i] <= lam_d[i] + _tol(lam_d[i])
        report.rows.append((i + 1, float(lam_n[i]), float(lam[i]), float(lam_d[i]), bool(ok)))
    if strict and not report.ok:
        bad = next(r for r in report.rows if not r[-1])
        raise CheckFailed(f"bracketing violated at n={bad[0]} for {kind} {target!r}", bad)
    return report


def complement_rank(view, edge_id) -> int:
    """``deg(iota) + deg(tau) - 2`` with degrees taken in the subgraph."""
    e = view.parent.edge(edge_id)
    return view.degree[e.iota] + view.degree[e.tau] - 2


@dataclass
class InterlacingReport:
    edge: object
    rank: int
    rows: list = field(default_factory=list)  # (part, m, lambda_D, lambda_shifted_N, rank, pass)
    converse_ok: bool = True
    direct_sum_ok: bool = True
    direct_sum_error: float = 0.0

    @property
    def ok(self) -> bool:
        return all(r[-1] for r in self.rows) and self.converse_ok and self.direct_sum_ok

    header = ("part", "m", "lambda_D", "lambda_shifted_N", "rank", "pass")


def _part_spectra(view, config, sample, mesh, bc, edge_id, flavor):
    """Full spectra of the edge summand and the complement summand."""
    e = view.parent.edge(edge_id)
    ends = {e.iota: flavor, e.tau: flavor}
    edge_view = subgraph_view(view.parent, [edge_id])
    edge_sys = assemble_system(edge_view, config, sample, ends, mesh)
    edge_vals = solve_spectrum(edge_sys).eigenvalues
    rest = view.lam - {edge_id}
    if not rest:
        return edge_vals, None
    comp_view = subgraph_view(view.parent, rest)
    comp_bc = {v: bc[v] for v in comp_view.v_lambda}
    comp_bc.update({v: flavor for v in ends if v in comp_view.v_lambda})
    comp_sys = assemble_system(comp_view, config, sample, comp_bc, mesh)
    return edge_vals, solve_spectrum(comp_sys).eigenvalues


def check_interlacing(view, config, sample, mesh, edge_id, k: int, bc: dict | None = None,
                      strict: bool = True) -> InterlacingReport:
    """Finite-rank index shift after decoupling both endpoints of ``edge_id``.

    Edge summand: ``lambda_m^{e,D} <= lambda_{m+2}^{e,N}``; complement summand:
    ``lambda_m^{c,D} <= lambda_{m+r}^{c,N}`` with ``r = complement_rank``.
    """
    if edge_id not in view.lam:
        raise UnknownTarget(f"edge {edge_id!r} not in the subgraph")
    bc = default_bc(view) if bc is None else bc
    rank = complement_rank(view, edge_id)
    e_d, c_d = _part_spectra(view, config, sample, mesh, bc, edge_id, DIRICHLET)
    e_n, c_n = _part_spectra(view, config, sample, mesh, bc, edge_id, NEUMANN)
    report = InterlacingReport(edge_id, rank)

    for m in range(1, k + 1):
        if m > len(e_d) or m + 2 > len(e_n):
            break
        lo, hi = e_d[m - 1], e_n[m + 1]
        report.rows.append(("edge", m, float(lo), float(hi), 2, bool(lo <= hi + _tol(hi))))
    if c_d is not None:
        for m in range(1, k + 1):
            if m > len(c_d) or m + rank > len(c_n):
                break
            lo, hi = c_d[m - 1], c_n[m + rank - 1]
            report.rows.append(("complement", m, float(lo), float(hi), rank, bool(lo <= hi + _tol(hi))))

    kk = min(k, len(e_d))
    report.converse_ok = bool(np.all(e_n[:kk] <= e_d[:kk] + REL_TOL * (1 + np.abs(e_d[:kk]))))

    # decoupling the whole operator must give the merged spectra of the summands
    for flavor, parts in ((DIRICHLET, (e_d, c_d)), (NEUMANN, (e_n, c_n))):
        full_bc = apply_decoupling(bc, DecouplingPlan(edge_id, flavor, "edge"), view)
        whole = solve_spectrum(assemble_system(view, config, sample, full_bc, mesh)).eigenvalues
        merged = np.sort(np.concatenate([p for p in parts if p is not None]))
        if len(whole) != len(merged):
            report.direct_sum_ok = False
            continue
        err = float(np.max(np.abs(whole - merged) / (1.0 + np.abs(merged)), initial=0.0))
        report.direct_sum_error = max(report.direct_sum_error, err)
        # dense solves of different matrices agree to a few ulps of the largest eigenvalue
        if err > 1e-8 * max(1.0, float(np.max(np.abs(merged), initial=1.0))):
            report.direct_sum_ok = False

    if strict and not report.ok:
        bad = next((r for r in report.rows if not r[-1]), None)
        raise CheckFailed(f"interlacing check failed for edge {edge_id!r}", bad)
    return report

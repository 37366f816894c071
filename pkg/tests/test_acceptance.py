"""Acceptance criteria, one test each.

Every test records a ``ACCEPTANCE <n>: PASS|FAIL ...`` line; the lines are
printed together in the pytest terminal summary.
"""
import time

import numpy as np

import conftest
from alloyqg.assembly import Mesh, assemble_system, box_bc, build_mesh, default_bc, solve_spectrum
from alloyqg.bracketing import check_bracketing, check_interlacing
from alloyqg.cli import run_cli
from alloyqg.corpus import random_instance
from alloyqg.errors import GapGuardViolation
from alloyqg.graph import LatticeSpec, chain_view, full_view
from alloyqg.ids import (
    Box,
    IdsExperiment,
    check_counting_upper_bound,
    check_equivariance,
    check_superadditivity,
    exhaustion_run,
    free_config,
    random_partition,
)
from alloyqg.potential import AlloyConfig, CouplingLaw, SingleSitePotential, constant_sample, sample_disorder
from alloyqg.wegner import WegnerExperiment, hellmann_feynman, unique_continuation_report, wegner_scan

from conftest import path_graph

PI2 = np.pi ** 2
DISORDER = AlloyConfig.default()


def record(n, ok, detail):
    line = f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _free_spectrum(view, k):
    system = assemble_system(view, DISORDER, constant_sample(view, 0.0), default_bc(view), Mesh.uniform(view, 100))
    return solve_spectrum(system, k=k).eigenvalues


def test_01_interval_oracle():
    t0 = time.perf_counter()
    vals = _free_spectrum(full_view(path_graph((1.0,))), 10)
    elapsed = time.perf_counter() - t0
    exact = PI2 * np.arange(1, 11) ** 2
    err = float(np.max(np.abs(vals - exact) / vals))
    ok = err <= 1e-3 and elapsed < 1.0
    assert record(1, ok, f"max rel err {err:.3e} (<= 1e-3), {elapsed:.3f} s (< 1 s)")


def test_02_kirchhoff_transparency():
    vals = _free_spectrum(full_view(path_graph((1.0, 1.0))), 10)
    exact = PI2 * np.arange(1, 11) ** 2 / 4
    err = float(np.max(np.abs(vals - exact) / vals))
    assert record(2, err <= 1e-3, f"max rel err {err:.3e} against n^2 pi^2 / 4")


CORPUS = range(50)


def test_03_bracketing_corpus():
    t0 = time.perf_counter()
    n_rows, bad = 0, []
    for seed in CORPUS:
        inst = random_instance(seed)
        v = inst.view
        targets = [("vertex", sorted(v.v_lambda, key=str)[0]), ("edge", v.edge_ids[0])]
        for kind, t in targets:
            rep = check_bracketing(v, inst.config, inst.sample, inst.mesh, t, 30, kind=kind, strict=False)
            n_rows += len(rep.rows)
            bad += [(seed, kind, t, r) for r in rep.rows if not r[-1]]
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 60
    assert record(3, ok, f"{n_rows} rows on {len(CORPUS)} graphs, {len(bad)} violations, {elapsed:.1f} s (< 60 s)"), bad[:3]


def test_04_interlacing_corpus():
    n_rows, bad, ds = 0, [], 0.0
    for seed in CORPUS:
        inst = random_instance(seed)
        rep = check_interlacing(inst.view, inst.config, inst.sample, inst.mesh, inst.view.edge_ids[0], 20,
                                strict=False)
        n_rows += len(rep.rows)
        ds = max(ds, rep.direct_sum_error)
        if not rep.ok:
            bad.append((seed, [r for r in rep.rows if not r[-1]][:2], rep.converse_ok, rep.direct_sum_ok))
    assert record(4, not bad, f"{n_rows} rows on {len(CORPUS)} graphs, {len(bad)} failing, "
                              f"direct-sum err {ds:.1e}"), bad[:3]


def test_05_hellmann_feynman_chain():
    v = chain_view(8)
    mesh = build_mesh(v, DISORDER, h_max=0.125)
    rep = hellmann_feynman(v, DISORDER, sample_disorder(DISORDER, v, 2024, 0), mesh, (-np.inf, 40.0))
    n_levels = len({r[0] for r in rep.rows})
    ok = rep.ok and n_levels > 0
    assert record(5, ok, f"{len(rep.rows)} (n, e) pairs over {n_levels} levels, max rel err "
                         f"{rep.max_rel_err:.2e} (<= 1e-3), skipped clusters {rep.skipped}")


def test_06_unique_continuation():
    cfg = AlloyConfig(CouplingLaw.uniform(), 0.5, template=SingleSitePotential.indicator(None, 0.25, 0.75))
    mins = {}
    for m in (4, 8, 16):
        v = chain_view(m)
        rep = unique_continuation_report(v, cfg, sample_disorder(cfg, v, 77, 0), build_mesh(v, cfg, h_max=0.125),
                                         (0.0, 40.0))
        mins[m] = rep.min_ratio
    uniform = all(mins[m] >= 0.5 * mins[4] for m in (8, 16))

    half = AlloyConfig(CouplingLaw.uniform(), 0.5, template=SingleSitePotential.indicator(None, 0.0, 0.5))
    e = full_view(path_graph((1.0,)))
    rep = unique_continuation_report(e, half, constant_sample(e, 0.0), build_mesh(e, half, h_max=0.01), (0.0, 40.0))
    sin_ok = bool(rep.rows) and all(abs(r[5] - 0.5) <= 1e-6 for r in rep.rows)
    detail = ", ".join(f"m={m}: {r:.4f}" for m, r in mins.items())
    assert record(6, uniform and sin_ok, f"min ratios {detail}; sin half-support ratios "
                                         f"{[round(r[5], 9) for r in rep.rows]}")


def test_07_wegner_linearity():
    t0 = time.perf_counter()
    exp = WegnerExperiment(chain_view, (8, 16, 32), DISORDER, 10.0, (0.02, 0.05, 0.1, 0.2), 2000, 42,
                           bc_rule=box_bc)
    rep = wegner_scan(exp, threads=1)
    elapsed = time.perf_counter() - t0
    ok = rep.cells_within_2se and rep.monotone_in_eps and rep.no_size_trend and elapsed < 600
    trend = [(e, round(s, 4), round(2 * se, 4)) for e, s, se, _, _ in rep.size_trends]
    cells = [(c.size, c.epsilon, round(c.ratio, 4)) for c in rep.cells]
    assert record(7, ok, f"within 2se={rep.cells_within_2se}, monotone={rep.monotone_in_eps}, "
                         f"no size trend={rep.no_size_trend} {trend}, {elapsed:.0f} s; ratios {cells}")


def test_08_free_ids_convergence():
    lams = (1.0, 5.0, 10.0, 40.0)
    res = exhaustion_run(IdsExperiment(1, (10, 20, 40), lams, free_config()))
    bad = [(l, lam, round(err, 4), round(bound, 4)) for l, lam, n, x, err, bound, ok in res.free_limit if not ok]
    assert record(8, not bad, f"{len(res.free_limit)} points, violations (l, lambda, err, 3/l): {bad}")


def _gapped_superadditivity(q, parts, rng, seed):
    for _ in range(20):
        lam = float(rng.uniform(1.0, 40.0))
        try:
            return check_superadditivity(q, parts, DISORDER, None, lam, master_seed=seed, strict=False)
        except GapGuardViolation:
            continue
    raise RuntimeError("no gap-guarded lambda found")


def test_09_superadditivity():
    rng = np.random.default_rng(90210)
    reports = []
    for q in (Box((0,), (14,)), Box((0, 0), (7, 7))):
        for i in range(20):
            parts = random_partition(q, rng, int(rng.integers(1, 4)))
            reports.append(_gapped_superadditivity(q, parts, rng, i))
    bad = [(r.box, r.lam, r.F_box, r.F_parts) for r in reports if not r.ok]
    strict = sum(r.F_box > sum(r.F_parts) for r in reports)
    assert record(9, not bad, f"{len(reports)} partitions (20 per nu), {strict} strict, {len(bad)} violations"), bad


def test_10_counting_bound():
    n, bad = 0, []
    for nu, sizes in ((1, (5, 8, 12)), (2, (4, 6, 8))):
        for l in sizes:
            for seed in range(3):
                for lam in (5.0, 20.0, 60.0):
                    r = check_counting_upper_bound(LatticeSpec(nu, l), DISORDER, None, lam, master_seed=seed,
                                                   strict=False)
                    n += 1
                    if not r.ok:
                        bad.append((nu, l, seed, lam, r.F, r.bound))
    assert record(10, not bad, f"{n} instances, {len(bad)} violations"), bad


def test_11_equivariance():
    n, bad = 0, []
    for nu, l, shifts in ((1, 9, [(1,), (3,), (-2,)]), (2, 6, [(1, 0), (1, 1), (0, -3)])):
        for x in shifts:
            for seed in range(2):
                for lam in (10.0, 30.0):
                    r = check_equivariance(LatticeSpec(nu, l), DISORDER, lam, x, master_seed=seed, strict=False)
                    n += 1
                    if not r.ok:
                        bad.append((nu, x, seed, lam, r.F, r.F_shifted))
    assert record(11, not bad, f"{n} shifted counts, {len(bad)} mismatches"), bad


RUNS = {
    "wegner": ["wegner", "--nu", "1", "--sizes", "4,8", "--eps", "0.1,0.5,1", "--lambda", "10",
               "--samples", "200", "--seed", "42"],
    "ids": ["ids", "--nu", "2", "--sizes", "4,6", "--lambda-grid", "1:30:10", "--seed", "3",
            "--samples-per-size", "2", "--partitions", "2"],
    "props": ["props", "--corpus", "4", "--k", "10", "--k-interlace", "8", "--seed", "11"],
}


def _csvs(d):
    return {p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))}


def test_12_reproducibility(tmp_path):
    bad = []
    for name, argv in RUNS.items():
        outs = []
        for tag, threads in (("a", "1"), ("b", "1"), ("c", "8")):
            d = tmp_path / f"{name}_{tag}"
            code = run_cli(argv + ["--threads", threads, "--out", str(d)])
            if code != 0:
                bad.append((name, tag, "exit", code))
            outs.append(_csvs(d))
        replay = tmp_path / f"{name}_replay"
        run_cli(["replay", "--manifest", str(tmp_path / f"{name}_a" / "manifest.json"), "--out", str(replay),
                 "--threads", "4"])
        outs.append(_csvs(replay))
        if not outs[0]:
            bad.append((name, "no csv"))
        for other, label in zip(outs[1:], ("rerun", "threads 8", "replay")):
            if other != outs[0]:
                bad.append((name, label))
    assert record(12, not bad, f"{len(RUNS)} manifests x (rerun, --threads 8, replay); mismatches {bad}")

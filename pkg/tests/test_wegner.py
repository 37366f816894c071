import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from alloyqg.assembly import Mesh, build_mesh
from alloyqg.errors import AlloyConfigError
from alloyqg.graph import chain_view, full_view
from alloyqg.potential import (
    AlloyConfig,
    CouplingLaw,
    SingleSitePotential,
    constant_sample,
    sample_disorder,
)
from alloyqg.wegner import (
    WegnerCell,
    WegnerExperiment,
    expected_count,
    hellmann_feynman,
    interval_counts,
    sample_counts,
    summarize_cells,
    uc_uniformity,
    unique_continuation_report,
    wegner_scan,
)

from conftest import path_graph

CHAIN_CFG = AlloyConfig.default()


def test_zero_width_window():
    v = chain_view(4)
    mean, se = expected_count(v, CHAIN_CFG, 10.0, 0.0, 200, master_seed=1)
    assert mean == 0.0 and se == 0.0


def test_frozen_disorder_is_deterministic():
    v = chain_view(4)
    cfg = AlloyConfig(CouplingLaw(0.5, 0.5), 0.0, default_sites=True)
    mesh = build_mesh(v, cfg)
    exact = interval_counts(v, cfg, constant_sample(v, 0.5), mesh, 10.0, [3.0])[0]
    mean, se = expected_count(v, cfg, 10.0, 3.0, 50, master_seed=0, mesh=mesh)
    assert exact >= 1
    assert mean == exact and se == 0.0


def test_chain_m8_mean_finite_and_bounded():
    v = chain_view(8)
    mesh = build_mesh(v, CHAIN_CFG, h_max=0.125)
    mean, se = expected_count(v, CHAIN_CFG, 10.0, 0.1, 10_000, master_seed=2024, mesh=mesh)
    assert math.isfinite(mean) and mean >= 0
    c_hat = mean / (0.1 * 8)
    assert mean <= c_hat * 0.1 * 8 + 1e-15


def test_counts_monotone_in_eps_per_sample():
    v = chain_view(6)
    counts = sample_counts(v, CHAIN_CFG, 10.0, [0.05, 0.5, 2.0, 8.0], 100, master_seed=9)
    assert np.all(np.diff(counts, axis=1) >= 0)


def test_sample_counts_thread_invariant():
    v = chain_view(6)
    a = sample_counts(v, CHAIN_CFG, 10.0, [0.5, 2.0], 120, master_seed=3, threads=1)
    b = sample_counts(v, CHAIN_CFG, 10.0, [0.5, 2.0], 120, master_seed=3, threads=6)
    assert np.array_equal(a, b)


def test_zero_profile_rejected_by_scan():
    cfg = AlloyConfig(CouplingLaw.uniform(), 0.0,
                      template=SingleSitePotential(None, (0.0, 1.0), (), 0.0, 0.0))
    exp = WegnerExperiment(chain_view, (4,), cfg, 10.0, (0.1,), 100, 0)
    with pytest.raises(AlloyConfigError):
        wegner_scan(exp)


def test_experiment_rejects_bad_inputs():
    with pytest.raises(ValueError):
        WegnerExperiment(chain_view, (4,), CHAIN_CFG, 10.0, (0.0,), 100, 0)
    with pytest.raises(ValueError):
        WegnerExperiment(chain_view, (4,), CHAIN_CFG, 10.0, (0.1,), 99, 0)


def _cell(size, n_edges, eps, mean, se):
    return WegnerCell(size, n_edges, eps, 10.0, 1000, mean, se, np.zeros(0))


def test_summary_on_exactly_linear_cells():
    cells = [_cell(m, m, e, 0.3 * e * m, 0.01 * e * m) for m in (8, 16, 32) for e in (0.025, 0.05, 0.1, 0.2)]
    rep = summarize_cells(cells)
    assert rep.pooled_ratio == pytest.approx(0.3)
    assert rep.cells_within_2se and rep.monotone_in_eps and rep.no_size_trend
    assert all(h[3] == pytest.approx(0.5) and h[4] for h in rep.halving)
    assert {h[1] for h in rep.halving} == {0.025, 0.05}


def test_summary_detects_size_trend():
    cells = [_cell(m, m, e, 0.01 * m * e * m, 1e-4 * e * m) for m in (8, 16, 32) for e in (0.1, 0.2)]
    rep = summarize_cells(cells)
    assert not rep.no_size_trend
    assert not rep.cells_within_2se


def test_hf_full_edge_profile(unit_edge):
    cfg = AlloyConfig.default()
    mesh = Mesh.uniform(unit_edge, 60)
    rep = hellmann_feynman(unit_edge, cfg, constant_sample(unit_edge, 0.3), mesh, (0.0, 200.0))
    assert len(rep.rows) == 4
    for n, e, lam, fd, analytic, rel, ok in rep.rows:
        assert analytic == pytest.approx(1.0, abs=1e-12)
        assert fd == pytest.approx(1.0, abs=1e-5)
    assert all(s[-1] for s in rep.sums)


def test_hf_half_indicator(unit_edge):
    cfg = AlloyConfig(CouplingLaw.uniform(), 0.5, template=SingleSitePotential.indicator(None, 0.0, 0.5))
    mesh = build_mesh(unit_edge, cfg, h_max=0.01)
    rep = hellmann_feynman(unit_edge, cfg, constant_sample(unit_edge, 0.0), mesh, (0.0, 12.0))
    (n, e, lam, fd, analytic, rel, ok), = rep.rows
    assert analytic == pytest.approx(0.5, abs=1e-6)
    assert ok


def test_uc_half_support_sin(unit_edge):
    cfg = AlloyConfig(CouplingLaw.uniform(), 0.5, template=SingleSitePotential.indicator(None, 0.0, 0.5))
    mesh = build_mesh(unit_edge, cfg, h_max=0.01)
    rep = unique_continuation_report(unit_edge, cfg, constant_sample(unit_edge, 0.0), mesh, (0.0, 400.0))
    assert len(rep.rows) == 6  # n^2 pi^2 <= 400 for n <= 6
    assert all(r[5] == pytest.approx(0.5, abs=1e-6) for r in rep.rows)


def test_uc_full_support_is_one():
    v = chain_view(4)
    mesh = build_mesh(v, CHAIN_CFG)
    rep = unique_continuation_report(v, CHAIN_CFG, sample_disorder(CHAIN_CFG, v, 0, 0), mesh, (0.0, 40.0))
    assert rep.rows and all(r[5] == pytest.approx(1.0, abs=1e-12) for r in rep.rows)
    assert all(0 < r[6] <= 1 for r in rep.rows)


def test_uc_uniformity_helper():
    assert uc_uniformity({4: 0.3, 8: 0.2, 16: 0.16}) == (True, 0.3)
    assert uc_uniformity({4: 0.3, 8: 0.1})[0] is False


@given(st.integers(0, 2**20))
def test_hf_chain_random(seed):
    v = chain_view(3)
    mesh = build_mesh(v, CHAIN_CFG)
    rep = hellmann_feynman(v, CHAIN_CFG, sample_disorder(CHAIN_CFG, v, seed, 0), mesh, (0.0, 40.0))
    assert rep.ok

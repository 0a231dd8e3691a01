"""Monte Carlo engine: determinism, oracles, quantile machinery."""

import numpy as np
import pytest

from jbfinite import _backend
from jbfinite.engine import (
    SimConfig,
    default_n_grid,
    default_p_grid,
    empirical_quantile,
    moment_diagnostics,
    simulate_null,
)
from jbfinite.moments import (
    alm_statistic,
    chi2_quantile_2df,
    finite_constants,
    lm_statistic,
)
from jbfinite.rng import generator_code


class TestEmpiricalQuantile:
    def test_hand_values(self):
        assert empirical_quantile([1.0, 2.0, 3.0, 4.0, 5.0], 0.5) == 3.0
        assert empirical_quantile([10.0, 20.0], 0.75) == 17.5
        assert empirical_quantile([4.25], 0.37) == 4.25

    def test_interpolation_rule(self):
        # h = (R-1) p with linear interpolation between order statistics
        assert empirical_quantile([0.0, 1.0, 2.0], 0.25) == 0.5

    def test_errors(self):
        with pytest.raises(ValueError, match="empty"):
            empirical_quantile([], 0.5)
        with pytest.raises(ValueError):
            empirical_quantile([1.0], 0.0)
        with pytest.raises(ValueError):
            empirical_quantile([1.0], 1.0)


class TestSimConfig:
    def test_defaults_shape(self):
        n_grid = default_n_grid()
        p_grid = default_p_grid()
        assert n_grid[0] == 10 and n_grid[-1] == 10_000
        assert p_grid[0] == 0.0001 and p_grid[-1] == 0.9999
        assert len(p_grid) == 2001
        for level in (0.90, 0.95, 0.99):
            assert level in p_grid
        cfg = SimConfig(n_grid=n_grid, p_grid=p_grid, replications=10**6, seed=0)
        assert cfg.n_chunks == 100

    def test_rejects_small_n(self):
        with pytest.raises(ValueError, match="N < 4"):
            SimConfig(n_grid=(3, 10), p_grid=(0.90, 0.95, 0.99),
                      replications=10**4, seed=0)

    def test_rejects_unsorted_grids(self):
        with pytest.raises(ValueError, match="ascending"):
            SimConfig(n_grid=(10, 10), p_grid=(0.90, 0.95, 0.99),
                      replications=10**4, seed=0)
        with pytest.raises(ValueError, match="ascending"):
            SimConfig(n_grid=(10,), p_grid=(0.95, 0.90, 0.99),
                      replications=10**4, seed=0)

    def test_requires_major_levels(self):
        with pytest.raises(ValueError, match="0.9"):
            SimConfig(n_grid=(10,), p_grid=(0.5, 0.95, 0.99),
                      replications=10**4, seed=0)

    def test_requires_minimum_replications(self):
        with pytest.raises(ValueError, match="1000"):
            SimConfig(n_grid=(10,), p_grid=(0.90, 0.95, 0.99),
                      replications=999, seed=0)

    def test_stream_indexing_disjoint_across_n(self):
        cfg = SimConfig(n_grid=(10, 20), p_grid=(0.90, 0.95, 0.99),
                        replications=10**4, seed=0, chunk_size=1000)
        first_n = {cfg.stream_index(0, c) for c in range(cfg.n_chunks)}
        second_n = {cfg.stream_index(1, c) for c in range(cfg.n_chunks)}
        assert not first_n & second_n


class TestSimulateNull:
    def test_worker_count_cannot_change_results(self):
        cfg = SimConfig(n_grid=(10,), p_grid=(0.90, 0.95, 0.99),
                        replications=20_000, seed=42, chunk_size=2_000)
        one = simulate_null(cfg, workers=1)
        eight = simulate_null(cfg, workers=8)
        for kind in ("lm", "alm"):
            assert np.array_equal(one.quantiles[kind], eight.quantiles[kind])
            assert np.array_equal(one.std_errors[kind], eight.std_errors[kind])
        assert one.diagnostics == eight.diagnostics

    def test_quantiles_monotone_in_p(self, quick_table):
        for kind in ("lm", "alm"):
            grid = quick_table.quantiles[kind]
            assert np.all(np.diff(grid, axis=0) >= 0)
            assert np.all(grid >= 0)

    def test_paired_statistics_recompute(self):
        # Chunk 0 of the first grid entry rerun standalone must reproduce
        # its slice, and both statistics must come from the same draws.
        cfg = SimConfig(n_grid=(10,), p_grid=(0.90, 0.95, 0.99),
                        replications=2_000, seed=9, chunk_size=500)
        lm = np.empty(500)
        alm = np.empty(500)
        k = finite_constants(10)
        _backend.simulate_chunk(generator_code(cfg.generator), cfg.seed,
                                cfg.stream_index(0, 0), 10, 500,
                                k.c1, k.c2, k.c3, lm, alm, np.zeros(8))
        normals = np.empty(500 * 10)
        _backend.fill_normals(generator_code(cfg.generator), cfg.seed,
                              cfg.stream_index(0, 0), normals)
        for r in range(0, 500, 97):
            xs = normals[r * 10:(r + 1) * 10].tolist()
            assert lm[r] == pytest.approx(lm_statistic(xs), rel=1e-10)
            assert alm[r] == pytest.approx(alm_statistic(xs), rel=1e-10)

    def test_progress_hook(self):
        cfg = SimConfig(n_grid=(10, 20), p_grid=(0.90, 0.95, 0.99),
                        replications=4_000, seed=1, chunk_size=1_000)
        seen = []
        simulate_null(cfg, progress=lambda done, total: seen.append((done, total)))
        assert len(seen) == 8
        assert seen[-1] == (8_000, 8_000)
        assert [d for d, _ in seen] == sorted(d for d, _ in seen)

    def test_invalid_workers(self):
        cfg = SimConfig(n_grid=(10,), p_grid=(0.90, 0.95, 0.99),
                        replications=1_000, seed=0)
        with pytest.raises(ValueError):
            simulate_null(cfg, workers=0)


class TestMomentOracles:
    def test_diagnostics_within_four_sigma(self):
        diag = moment_diagnostics(10, 100_000, seed=20240808)
        assert abs(diag.z_mean_b2) < 4
        assert abs(diag.z_var_b2) < 4
        assert abs(diag.z_var_sqrt_b1) < 4
        assert abs(diag.z_mean_sqrt_b1) < 4
        assert diag.c2 == pytest.approx(27.0 / 11.0, abs=1e-12)

    def test_smallest_sample_size(self):
        diag = moment_diagnostics(4, 100_000, seed=77)
        k = finite_constants(4)
        assert diag.c3 == pytest.approx(k.c3, abs=1e-15)
        assert abs(diag.z_var_b2) < 4

    def test_mlfg_generator_diagnostics(self):
        diag = moment_diagnostics(10, 50_000, seed=3, generator="mlfg1279")
        assert abs(diag.z_mean_b2) < 4
        assert abs(diag.z_var_b2) < 4


class TestConvergence:
    def test_alm_closer_to_limit_at_large_n(self):
        cfg = SimConfig(n_grid=(10, 2000), p_grid=(0.90, 0.95, 0.99),
                        replications=100_000, seed=314, chunk_size=10_000)
        table = simulate_null(cfg, workers=2)
        target = chi2_quantile_2df(0.95)
        for p in (0.90, 0.95, 0.99):
            ref = chi2_quantile_2df(p)
            small = abs(table.quantile_at("alm", p, 10) - ref)
            large = abs(table.quantile_at("alm", p, 2000) - ref)
            assert large < small
        assert table.quantile_at("alm", 0.95, 2000) == pytest.approx(target, abs=0.25)

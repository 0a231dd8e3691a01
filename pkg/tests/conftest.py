"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from jbfinite.engine import QuantileTable, SimConfig, simulate_null
from jbfinite.moments import chi2_quantile_2df, lm_statistic
from jbfinite.rng import generator_metadata

QUICK_P_GRID = (0.0001, 0.001, 0.01, 0.025, 0.05, 0.10, 0.25, 0.50, 0.75,
                0.90, 0.95, 0.975, 0.99, 0.999, 0.9999)


@pytest.fixture(scope="session")
def quick_table() -> QuantileTable:
    """Small but real Monte Carlo table shared across read-only tests."""
    cfg = SimConfig(
        n_grid=(10, 25, 50, 100, 200),
        p_grid=QUICK_P_GRID,
        replications=50_000,
        seed=20240811,
        chunk_size=5_000,
    )
    return simulate_null(cfg, workers=2)


def make_table(q_of_pn, n_grid, p_grid, replications=100_000) -> QuantileTable:
    """Synthetic table with quantiles q_of_pn(p, n), identical for both kinds."""
    cfg = SimConfig(n_grid=n_grid, p_grid=p_grid, replications=replications,
                    seed=0)
    shape = (len(cfg.p_grid), len(cfg.n_grid))
    q = np.empty(shape)
    for i, p in enumerate(cfg.p_grid):
        for j, n in enumerate(cfg.n_grid):
            q[i, j] = q_of_pn(p, n)
    se = np.full(shape, 1e-3)
    return QuantileTable(
        config=cfg,
        quantiles={"lm": q, "alm": q.copy()},
        std_errors={"lm": se, "alm": se.copy()},
        rng_metadata=generator_metadata("counter"),
    )


@pytest.fixture()
def chi2_table() -> QuantileTable:
    """Synthetic table whose every column is the closed-form chi2(2) law."""
    p_grid = tuple(sorted({k / 1000.0 for k in range(1, 1000)} | {0.0001, 0.9999}))
    return make_table(lambda p, n: chi2_quantile_2df(p),
                      n_grid=(10, 100, 1000), p_grid=p_grid)


def engineer_lm_sample(target_lm: float, n: int = 100) -> list[float]:
    """Symmetric sample of size n whose statistic equals target_lm.

    Uses pairs (+/-1) with one pair (+/-s); the skewness term vanishes by
    symmetry and s is found by bisection on the kurtosis term.
    """
    assert n % 2 == 0
    half = n // 2

    def sample(s: float) -> list[float]:
        base = [1.0] * (half - 1) + [s]
        return base + [-v for v in base]

    # Kurtosis rises from 1 toward n/2 as s grows; the statistic first
    # falls to 0 (b2 = 3) then rises, so bisect on the rising-b2 side
    # below the b2 = 3 crossing.
    lo, hi = 1.0, 50.0
    target_b2 = 3.0 - math.sqrt(24.0 * target_lm / n)

    def b2(s: float) -> float:
        xs = sample(s)
        m2 = sum(x * x for x in xs) / n
        m4 = sum(x ** 4 for x in xs) / n
        return m4 / (m2 * m2)

    assert b2(lo) < target_b2 < b2(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if b2(mid) < target_b2:
            lo = mid
        else:
            hi = mid
    xs = sample(0.5 * (lo + hi))
    assert abs(lm_statistic(xs) - target_lm) < 1e-9
    return xs

"""Response-surface fitting: recovery, evaluation, serialization."""

import io
import math

import pytest

from conftest import make_table
from jbfinite.moments import chi2_quantile_2df
from jbfinite.surface import (
    IllConditionedFitError,
    SurfaceFit,
    eval_surface,
    fit_surface,
    load_fits,
    save_fits,
)

WIDE_N = (10, 15, 20, 30, 50, 100, 200, 500, 1000)
P_GRID = (0.50, 0.90, 0.95, 0.99)


def _exact_table(beta):
    def q(p, n):
        return chi2_quantile_2df(p) + sum(
            b * n ** -(k + 1) for k, b in enumerate(beta))
    return make_table(q, WIDE_N, P_GRID)


class TestFitRecovery:
    def test_recovers_manufactured_coefficients(self):
        table = _exact_table((3.0, -5.0))
        fit = fit_surface(table, "lm", 0.95, order=2)
        assert fit.beta[0] == pytest.approx(3.0, abs=1e-8)
        assert fit.beta[1] == pytest.approx(-5.0, abs=1e-8)
        assert fit.rms_residual < 1e-10

    def test_zero_signal_gives_zero_betas(self):
        table = make_table(lambda p, n: chi2_quantile_2df(p), WIDE_N, P_GRID)
        fit = fit_surface(table, "alm", 0.90, order=4)
        assert all(abs(b) < 1e-10 for b in fit.beta)

    def test_refit_on_own_predictions_is_idempotent(self):
        table = _exact_table((2.0, -7.0, 40.0))
        fit = fit_surface(table, "lm", 0.99, order=3)
        refit_table = make_table(lambda p, n: eval_surface(fit, n),
                                 WIDE_N, P_GRID)
        refit = fit_surface(refit_table, "lm", 0.99, order=3)
        for b1, b2 in zip(fit.beta, refit.beta):
            assert b2 == pytest.approx(b1, rel=1e-9, abs=1e-9)

    def test_diagnostics_match_residuals(self):
        table = _exact_table((3.0, -5.0))
        fit = fit_surface(table, "lm", 0.95, order=1)
        resid = [table.quantile_at("lm", 0.95, n) - eval_surface(fit, n)
                 for n in WIDE_N]
        assert fit.max_residual == pytest.approx(max(abs(r) for r in resid), rel=1e-9)
        assert fit.rms_residual == pytest.approx(
            math.sqrt(sum(r * r for r in resid) / len(resid)), rel=1e-9)

    def test_min_n_exclusion(self):
        table = _exact_table((3.0, -5.0))
        fit = fit_surface(table, "lm", 0.95, order=2, min_n=30)
        assert fit.n_min == 30
        assert fit.beta[0] == pytest.approx(3.0, abs=1e-7)

    def test_weighted_fit(self):
        table = _exact_table((1.0,))
        fit = fit_surface(table, "lm", 0.95, order=1, weighted=True)
        assert fit.beta[0] == pytest.approx(1.0, abs=1e-8)


class TestFitErrors:
    def test_order_exceeding_grid(self):
        table = _exact_table((3.0,))
        with pytest.raises(ValueError, match="grid points"):
            fit_surface(table, "lm", 0.95, order=len(WIDE_N))

    def test_p_off_grid(self):
        table = _exact_table((3.0,))
        with pytest.raises(ValueError, match="not on the table grid"):
            fit_surface(table, "lm", 0.123, order=2)

    def test_ill_conditioned_raises(self):
        # Sizes confined to a razor-thin relative range make powers of 1/n
        # numerically indistinguishable after scaling.
        n_grid = tuple(10**7 + k for k in range(12))
        table = make_table(lambda p, n: chi2_quantile_2df(p) + 3.0 / n,
                           n_grid, P_GRID)
        with pytest.raises(IllConditionedFitError, match="reduce K"):
            fit_surface(table, "lm", 0.95, order=6)


class TestEvalSurface:
    def test_infinite_returns_intercept(self):
        fit = SurfaceFit("lm", 0.95, 2, 5.0, (3.0, -5.0), 0.0, 0.0, 10, 1000)
        assert eval_surface(fit, math.inf) == 5.0

    def test_hand_value(self):
        fit = SurfaceFit("lm", 0.95, 2, 5.0, (3.0, -5.0), 0.0, 0.0, 10, 1000)
        assert eval_surface(fit, 10) == pytest.approx(5.0 + 0.3 - 0.05, abs=1e-15)

    def test_floored_at_zero(self):
        fit = SurfaceFit("lm", 0.95, 1, 0.1, (-100.0,), 0.0, 0.0, 10, 1000)
        assert eval_surface(fit, 10) == 0.0

    def test_bound_by_coefficient_norm(self):
        fit = SurfaceFit("lm", 0.95, 3, 4.0, (2.0, -1.0, 0.5), 0.0, 0.0, 10, 1000)
        for n in (1, 2, 10, 100, 10**6):
            assert abs(eval_surface(fit, n) - 4.0) <= sum(
                abs(b) for b in fit.beta) / n


@pytest.mark.slow
def test_large_n_residuals_within_monte_carlo_error():
    # Fitted surface must track the simulated table to within 5 standard
    # errors wherever finite-size effects have died down.
    from conftest import QUICK_P_GRID
    from jbfinite.engine import SimConfig, simulate_null

    cfg = SimConfig(n_grid=(10, 15, 20, 30, 50, 100, 200, 500, 1000, 2000),
                    p_grid=QUICK_P_GRID, replications=200_000,
                    seed=20240809, chunk_size=10_000)
    table = simulate_null(cfg)
    for kind in ("lm", "alm"):
        fit = fit_surface(table, kind, 0.95, order=6)
        for n in (1000, 2000):
            j = table.n_index(n)
            i = table.p_index(0.95)
            resid = abs(table.quantiles[kind][i, j] - eval_surface(fit, n))
            assert resid <= 5.0 * table.std_errors[kind][i, j]


class TestFitSerialization:
    def test_round_trip(self):
        table = _exact_table((3.0, -5.0))
        fits = [fit_surface(table, kind, p, order=2)
                for kind in ("lm", "alm") for p in (0.90, 0.95)]
        buf = io.BytesIO()
        save_fits(fits, buf)
        assert load_fits(buf.getvalue()) == fits

    def test_round_trip_through_path(self, tmp_path):
        table = _exact_table((1.5,))
        fits = [fit_surface(table, "lm", 0.95, order=1)]
        path = tmp_path / "fits.txt"
        save_fits(fits, path)
        assert load_fits(path) == fits

    def test_bad_version(self):
        with pytest.raises(ValueError, match="unsupported"):
            load_fits(b"format_version=9\nfits=0\n")

    def test_count_mismatch(self):
        table = _exact_table((1.5,))
        buf = io.BytesIO()
        save_fits([fit_surface(table, "lm", 0.95, order=1)], buf)
        data = buf.getvalue().replace(b"fits=1", b"fits=2")
        with pytest.raises(ValueError, match="announces"):
            load_fits(data)

"""Finite-sample distribution and quantile functions backed by a table.

``pjb`` and ``qjb`` interpolate the tabulated null quantiles on logarithmic
scales, working in the coordinates

    u = -ln(1 - p)        w = ln q        (columns live at ln n)

chosen because the asymptotic chi-squared(2) law is exactly u = q/2 there,
so rows are nearly linear and interpolation error is second order.  Grid
knots are reproduced exactly, and between grid sizes pjb inverts the same
ln-n-blended piecewise-linear map that qjb evaluates, so the two functions
are mutual inverses to rounding error.  Above the largest tabulated n the value
blends linearly in 1/n into the closed-form limit; below the smallest n
the functions refuse rather than extrapolate.  A statistic beyond a
bracketing column's largest tabulated quantile has a tail probability
finer than the table can resolve, and the p-value is reported as not
available instead of a made-up number.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence
from weakref import WeakKeyDictionary

from .engine import QuantileTable
from .moments import (
    alm_statistic,
    chi2_cdf_2df,
    chi2_quantile_2df,
    lm_statistic,
)

__all__ = [
    "INFINITE",
    "PValueResult",
    "TestResult",
    "TableRangeError",
    "pjb",
    "qjb",
    "jb_test",
]

INFINITE = math.inf


class TableRangeError(ValueError):
    """Requested point lies outside what the backing table covers."""


@dataclass(frozen=True)
class PValueResult:
    """A probability, or the not-available marker when the point lies beyond
    the table's tail resolution (``value is None``).

    ``resolution_bound`` is the smallest tail probability the backing table
    can represent, 1 - max(p_grid); 0.0 for the closed-form limit.
    """

    value: float | None
    resolution_bound: float

    @property
    def is_na(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class TestResult:
    """Paired statistics with finite-sample and asymptotic p-values."""

    n: int
    lm: float
    alm: float
    p_lm: PValueResult
    p_alm: PValueResult
    p_asymptotic: float


def _u_from_p(p: float) -> float:
    return -math.log1p(-p)


def _kind_key(kind) -> str:
    key = getattr(kind, "value", kind)
    if key not in ("lm", "alm"):
        raise ValueError(f"unknown statistic kind {kind!r}")
    return key


class _KindView:
    """Per-kind immutable view: grids as plain float lists for exact bisects."""

    def __init__(self, table: QuantileTable, kind: str):
        self.n_grid = table.config.n_grid
        self.p_grid = list(table.config.p_grid)
        self.u_grid = [_u_from_p(p) for p in self.p_grid]
        self.columns = [table.quantiles[kind][:, j].tolist()
                        for j in range(len(self.n_grid))]
        self.w_columns = [[math.log(q) if q > 0.0 else -math.inf for q in col]
                          for col in self.columns]
        self.resolution_bound = 1.0 - self.p_grid[-1]


_VIEW_CACHE: WeakKeyDictionary = WeakKeyDictionary()


def _view(table: QuantileTable, kind: str) -> _KindView:
    views = _VIEW_CACHE.get(table)
    if views is None:
        views = {}
        _VIEW_CACHE[table] = views
    view = views.get(kind)
    if view is None:
        view = views[kind] = _KindView(table, kind)
    return view


_NA = object()


def _column_u(view: _KindView, j: int, q: float):
    """Map statistic q to u within column j.

    Returns ``_NA`` beyond the column's largest quantile, or the tuple
    (u, exact_p) with ``exact_p`` set when q hits a knot.
    """
    qcol = view.columns[j]
    if q > qcol[-1]:
        return _NA
    if q < qcol[0]:
        # Proportional tail rule below the smallest knot, anchored at p=0, q=0.
        p_min = view.p_grid[0]
        p_ext = p_min * (q / qcol[0]) if qcol[0] > 0.0 else 0.0
        p_ext = min(max(p_ext, 0.0), p_min)
        return _u_from_p(p_ext), None
    i = bisect_left(qcol, q)
    if qcol[i] == q:
        return view.u_grid[i], view.p_grid[i]
    w_lo = view.w_columns[j][i - 1]
    w_hi = view.w_columns[j][i]
    t = (math.log(q) - w_lo) / (w_hi - w_lo)
    return view.u_grid[i - 1] + t * (view.u_grid[i] - view.u_grid[i - 1]), None


def _blended_u(view: _KindView, j_lo: int, j_hi: int, t: float, q: float):
    """Map q to u between columns, on the ln-n-blended knot set.

    The blended knots b_i = (1-t) w_lo_i + t w_hi_i define the same
    piecewise-linear u -> w map qjb evaluates, so inverting it here makes
    pjb and qjb exact mutual inverses at off-grid n.  Returns ``_NA`` when
    q exceeds the largest tabulated quantile of either bracketing column.
    """
    w_lo = view.w_columns[j_lo]
    w_hi = view.w_columns[j_hi]
    if q > min(view.columns[j_lo][-1], view.columns[j_hi][-1]):
        return _NA

    def blend(i: int) -> float:
        return w_lo[i] + t * (w_hi[i] - w_lo[i])

    w = math.log(q) if q > 0.0 else -math.inf
    bottom = blend(0)
    if w < bottom:
        p_min = view.p_grid[0]
        p_ext = p_min * (q / math.exp(bottom))
        return _u_from_p(min(max(p_ext, 0.0), p_min))
    last = len(w_lo) - 1
    if w >= blend(last):
        return view.u_grid[last]
    lo, hi = 0, last
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if blend(mid) <= w:
            lo = mid
        else:
            hi = mid
    b_lo = blend(lo)
    b_hi = blend(hi)
    frac = (w - b_lo) / (b_hi - b_lo) if b_hi > b_lo else 0.0
    return view.u_grid[lo] + frac * (view.u_grid[hi] - view.u_grid[lo])


def _blended_u_above(view: _KindView, lam: float, q: float):
    """Map q to u above the grid: invert the 1/n blend toward the closed form.

    qjb evaluates w(u) = w_inf + (w_col(u) - w_inf) * lam with lam = n_max/n
    and w_inf = ln(2u); that map is strictly increasing in u, so pjb
    recovers u by bisection.  Returns ``_NA`` beyond the last column's
    largest tabulated quantile.
    """
    j = len(view.columns) - 1
    qcol = view.columns[j]
    if q > qcol[-1]:
        return _NA

    def w_of(u: float) -> float:
        w_inf = math.log(2.0 * u)
        return w_inf + (_column_w(view, j, u, None) - w_inf) * lam

    w = math.log(q) if q > 0.0 else -math.inf
    u_lo = view.u_grid[0]
    u_hi = view.u_grid[-1]
    if w >= w_of(u_hi):
        return u_hi
    bottom = w_of(u_lo)
    if w < bottom:
        p_min = view.p_grid[0]
        p_ext = p_min * (q / math.exp(bottom))
        return _u_from_p(min(max(p_ext, 0.0), p_min))
    for _ in range(200):
        mid = 0.5 * (u_lo + u_hi)
        if mid == u_lo or mid == u_hi:
            break
        if w_of(mid) <= w:
            u_lo = mid
        else:
            u_hi = mid
    return u_lo


def _column_w(view: _KindView, j: int, u: float, i_exact: int | None) -> float:
    """Map u to w = ln q within column j."""
    wcol = view.w_columns[j]
    if i_exact is not None:
        return wcol[i_exact]
    u_grid = view.u_grid
    i = bisect_left(u_grid, u)
    if u_grid[i] == u:
        return wcol[i]
    t = (u - u_grid[i - 1]) / (u_grid[i] - u_grid[i - 1])
    return wcol[i - 1] + t * (wcol[i] - wcol[i - 1])


def _column_q(view: _KindView, j: int, u: float, i_exact: int | None) -> float:
    """Map u to statistic q within column j (inverse of ``_column_u``)."""
    qcol = view.columns[j]
    if i_exact is not None:
        return qcol[i_exact]
    u_grid = view.u_grid
    i = bisect_left(u_grid, u)
    if u_grid[i] == u:
        return qcol[i]
    return math.exp(_column_w(view, j, u, None))


def _as_size(n) -> int:
    size = int(n)
    if size != n or size < 1:
        raise ValueError("n must be a positive integer or INFINITE")
    return size


def _check_n(n: int, view: _KindView) -> None:
    if n < view.n_grid[0]:
        raise TableRangeError(
            f"sample size below table range (n={n}, table starts at {view.n_grid[0]})"
        )


def pjb(q: float, n=INFINITE, kind="lm", table: QuantileTable | None = None) -> PValueResult:
    """Distribution function P(S <= q) of the null statistic at size n.

    ``n=INFINITE`` returns the closed-form chi-squared(2) value and needs no
    table.  For finite n the value is interpolated from the table; the
    not-available marker is returned when q exceeds the largest tabulated
    quantile of a bracketing column.
    """
    kind = _kind_key(kind)
    q = float(q)
    if q < 0:
        raise ValueError("statistic must be nonnegative")
    if n == INFINITE:
        return PValueResult(chi2_cdf_2df(q), 0.0)
    if table is None:
        raise ValueError("a quantile table is required for finite n")
    n = _as_size(n)
    view = _view(table, kind)
    _check_n(n, view)
    n_grid = view.n_grid

    if n >= n_grid[-1]:
        if n == n_grid[-1]:
            r = _column_u(view, len(n_grid) - 1, q)
            if r is _NA:
                return PValueResult(None, view.resolution_bound)
            u, exact_p = r
            if exact_p is not None:
                return PValueResult(exact_p, view.resolution_bound)
        else:
            r = _blended_u_above(view, n_grid[-1] / n, q)
            if r is _NA:
                return PValueResult(None, view.resolution_bound)
            u = r
    else:
        j = bisect_left(n_grid, n)
        if n_grid[j] == n:
            r = _column_u(view, j, q)
            if r is _NA:
                return PValueResult(None, view.resolution_bound)
            u, exact_p = r
            if exact_p is not None:
                return PValueResult(exact_p, view.resolution_bound)
        else:
            t = ((math.log(n) - math.log(n_grid[j - 1]))
                 / (math.log(n_grid[j]) - math.log(n_grid[j - 1])))
            r = _blended_u(view, j - 1, j, t, q)
            if r is _NA:
                return PValueResult(None, view.resolution_bound)
            u = r

    p = -math.expm1(-u)
    return PValueResult(min(max(p, 0.0), 1.0), view.resolution_bound)


def qjb(p: float, n=INFINITE, kind="lm", table: QuantileTable | None = None) -> float:
    """Quantile function of the null statistic at size n (inverse of pjb)."""
    kind = _kind_key(kind)
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError("probability must lie strictly inside (0, 1)")
    if n == INFINITE:
        return chi2_quantile_2df(p)
    if table is None:
        raise ValueError("a quantile table is required for finite n")
    n = _as_size(n)
    view = _view(table, kind)
    _check_n(n, view)
    n_grid = view.n_grid
    if p < view.p_grid[0] or p > view.p_grid[-1]:
        raise TableRangeError(
            f"quantile outside tabulated range (p={p}, grid covers "
            f"[{view.p_grid[0]}, {view.p_grid[-1]}])"
        )
    u = _u_from_p(p)
    i = bisect_left(view.p_grid, p)
    i_exact = i if view.p_grid[i] == p else None

    if n >= n_grid[-1]:
        q_col = _column_q(view, len(n_grid) - 1, u, i_exact)
        if n == n_grid[-1]:
            return q_col
        w_inf = math.log(chi2_quantile_2df(p))
        w = w_inf + (math.log(q_col) - w_inf) * (n_grid[-1] / n)
        return math.exp(w)

    j = bisect_left(n_grid, n)
    if n_grid[j] == n:
        return _column_q(view, j, u, i_exact)
    w_lo = _column_w(view, j - 1, u, i_exact)
    w_hi = _column_w(view, j, u, i_exact)
    t = ((math.log(n) - math.log(n_grid[j - 1]))
         / (math.log(n_grid[j]) - math.log(n_grid[j - 1])))
    return math.exp(w_lo + t * (w_hi - w_lo))


def jb_test(values: Sequence[float], table: QuantileTable | None = None) -> TestResult:
    """Compute both statistics and their finite-sample/asymptotic p-values.

    Finite-sample p-values are survival probabilities 1 - pjb(statistic);
    they come out as the not-available marker when the statistic lies
    beyond the table's resolution, when the sample is smaller than the
    table's n range, or when no table is given.  The asymptotic p-value
    exp(-LM/2) is always present.
    """
    xs = [float(v) for v in values]
    n = len(xs)
    if n < 4:
        raise ValueError(f"N < 4: the test requires at least 4 observations (got {n})")
    lm = lm_statistic(xs)
    alm = alm_statistic(xs)
    if table is not None:
        bound = 1.0 - table.config.p_grid[-1]
    else:
        bound = 1.0
    if table is not None and n >= table.config.n_grid[0]:
        results = []
        for kind, stat in (("lm", lm), ("alm", alm)):
            cdf = pjb(stat, n, kind, table)
            value = None if cdf.is_na else 1.0 - cdf.value
            results.append(PValueResult(value, bound))
        p_lm, p_alm = results
    else:
        p_lm = PValueResult(None, bound)
        p_alm = PValueResult(None, bound)
    return TestResult(
        n=n,
        lm=lm,
        alm=alm,
        p_lm=p_lm,
        p_alm=p_alm,
        p_asymptotic=math.exp(-lm / 2.0),
    )

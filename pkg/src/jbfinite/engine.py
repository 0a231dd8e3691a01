"""Monte Carlo engine for the finite-sample null distributions.

Simulates R independent normal samples per grid size n, computes the plain
and adjusted statistics from the same draws (paired), sorts each statistic
column, and reads empirical quantiles off the order statistics.  Work is
split into fixed-size chunks; chunk c of grid entry i owns the private
stream ``i * n_chunks + c``, and chunk results land at fixed offsets, so
the output is a pure function of the configuration no matter how many
worker threads run.  The compiled kernel releases the GIL, so a thread
pool gives real parallelism; the module only ever allocates O(R) per
statistic column.

Exact finite-sample moments of skewness and kurtosis serve as the built-in
correctness oracle: every run accumulates power sums of both ratios and
reports their standardized deviations from c1, c2, c3.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _backend, rng
from .moments import finite_constants

__all__ = [
    "REQUIRED_LEVELS",
    "SimConfig",
    "MomentDiagnostics",
    "QuantileTable",
    "default_n_grid",
    "default_p_grid",
    "quick_n_grid",
    "quick_p_grid",
    "empirical_quantile",
    "simulate_null",
    "moment_diagnostics",
]

REQUIRED_LEVELS = (0.90, 0.95, 0.99)


def default_n_grid() -> tuple[int, ...]:
    """Sample-size grid spanning 10 .. 10000."""
    return (10, 15, 20, 25, 30, 40, 50, 75, 100, 150, 200, 300, 400, 500,
            800, 1000, 2000, 5000, 10000)


def default_p_grid() -> tuple[float, ...]:
    """Probability grid: step 1/2000 on [0.0005, 0.9995] plus tail anchors."""
    grid = {k / 2000.0 for k in range(1, 2000)}
    grid.update((0.0001, 0.9999))
    grid.update(REQUIRED_LEVELS)
    return tuple(sorted(grid))


def quick_n_grid() -> tuple[int, ...]:
    return (10, 20, 50, 100, 200)


def quick_p_grid() -> tuple[float, ...]:
    return (0.0001, 0.001, 0.01, 0.025, 0.05, 0.10, 0.25, 0.50, 0.75,
            0.90, 0.95, 0.975, 0.99, 0.999, 0.9999)


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a simulation campaign, bit for bit."""

    n_grid: tuple[int, ...]
    p_grid: tuple[float, ...]
    replications: int
    seed: int
    generator: str = "counter"
    chunk_size: int = 10_000

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        if not self.n_grid:
            raise ValueError("n_grid must not be empty")
        for n in self.n_grid:
            if n < 4:
                raise ValueError(f"invalid sample size: N < 4 (got {n})")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly ascending")
        if not self.p_grid:
            raise ValueError("p_grid must not be empty")
        if any(not 0.0 < p < 1.0 for p in self.p_grid):
            raise ValueError("p_grid values must lie strictly inside (0, 1)")
        if any(b <= a for a, b in zip(self.p_grid, self.p_grid[1:])):
            raise ValueError("p_grid must be strictly ascending")
        missing = [p for p in REQUIRED_LEVELS if p not in self.p_grid]
        if missing:
            raise ValueError(f"p_grid must contain the levels {REQUIRED_LEVELS}")
        if self.replications < 1000:
            raise ValueError("replications must be at least 1000")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        rng.generator_code(self.generator)

    @property
    def n_chunks(self) -> int:
        return -(-self.replications // self.chunk_size)

    def stream_index(self, n_index: int, chunk_index: int) -> int:
        """Stream owned by chunk ``chunk_index`` of grid entry ``n_index``."""
        return n_index * self.n_chunks + chunk_index


@dataclass(frozen=True)
class MomentDiagnostics:
    """Monte Carlo moments of sqrt(b1) and b2 against their exact values."""

    n: int
    replications: int
    mean_sqrt_b1: float
    var_sqrt_b1: float
    mean_b2: float
    var_b2: float
    c1: float
    c2: float
    c3: float
    z_mean_sqrt_b1: float
    z_var_sqrt_b1: float
    z_mean_b2: float
    z_var_b2: float


@dataclass(eq=False)
class QuantileTable:
    """Null-distribution quantiles q[kind][p_index][n_index] plus metadata.

    ``std_errors`` carries the order-statistic standard-error estimate for
    every entry.  ``diagnostics`` (one record per n) is runtime metadata and
    is not persisted by table-io.
    """

    config: SimConfig
    quantiles: dict[str, np.ndarray]
    std_errors: dict[str, np.ndarray]
    rng_metadata: dict[str, str]
    format_version: int = 1
    diagnostics: tuple[MomentDiagnostics, ...] = ()

    def kinds(self) -> tuple[str, ...]:
        return tuple(self.quantiles)

    def p_index(self, p: float) -> int:
        try:
            return self.config.p_grid.index(float(p))
        except ValueError:
            raise ValueError(f"p={p} is not on the table grid") from None

    def n_index(self, n: int) -> int:
        try:
            return self.config.n_grid.index(int(n))
        except ValueError:
            raise ValueError(f"n={n} is not on the table grid") from None

    def quantile_at(self, kind: str, p: float, n: int) -> float:
        return float(self.quantiles[kind][self.p_index(p), self.n_index(n)])

    def column(self, kind: str, n_index: int) -> np.ndarray:
        return self.quantiles[kind][:, n_index]

    def validate(self) -> None:
        """Check shapes, signs and monotonicity in p; raise ValueError if broken."""
        shape = (len(self.config.p_grid), len(self.config.n_grid))
        if set(self.quantiles) != set(self.std_errors):
            raise ValueError("quantile and standard-error kinds differ")
        for kind, grid in self.quantiles.items():
            if grid.shape != shape or self.std_errors[kind].shape != shape:
                raise ValueError(f"grid shape mismatch for kind={kind}")
            if not np.all(np.isfinite(grid)) or np.any(grid < 0):
                raise ValueError(f"non-finite or negative quantile (kind={kind})")
            diffs = np.diff(grid, axis=0)
            if np.any(diffs < 0):
                p_i, n_i = np.argwhere(diffs < 0)[0]
                raise ValueError(
                    f"quantiles not non-decreasing in p (kind={kind}, "
                    f"n={self.config.n_grid[n_i]}, p_index={p_i + 1})"
                )


def empirical_quantile(sorted_values: Sequence[float], p: float) -> float:
    """Order-statistic quantile with linear interpolation at h = (R-1)p."""
    r = len(sorted_values)
    if r == 0:
        raise ValueError("empty sample")
    if not 0.0 < p < 1.0:
        raise ValueError("probability must lie strictly inside (0, 1)")
    h = (r - 1) * p
    i = int(h)
    if i >= r - 1:
        return float(sorted_values[r - 1])
    frac = h - i
    lo = float(sorted_values[i])
    return lo + frac * (float(sorted_values[i + 1]) - lo)


def _quantile_se(sorted_values: np.ndarray, p: float) -> float:
    """Large-R standard error of the p-th empirical quantile.

    Uses sqrt(p(1-p)/R) / f, with the density f estimated from the spacing
    of order statistics across a sqrt(R)-wide window.
    """
    r = len(sorted_values)
    d = max(1, int(round(math.sqrt(r))))
    j = int(round((r - 1) * p))
    j_lo = max(0, j - d)
    j_hi = min(r - 1, j + d)
    spread = float(sorted_values[j_hi]) - float(sorted_values[j_lo])
    if spread <= 0.0 or j_hi == j_lo:
        return 0.0
    density = ((j_hi - j_lo) / r) / spread
    return math.sqrt(p * (1.0 - p) / r) / density


def _run_chunk(kernel, gen_code: int, seed: int, stream_index: int, n: int,
               count: int, consts, lm_slice, alm_slice) -> np.ndarray:
    sums = np.zeros(8)
    kernel.simulate_chunk(gen_code, seed, stream_index, n, count,
                          consts.c1, consts.c2, consts.c3,
                          lm_slice, alm_slice, sums)
    return sums


def _diagnostics_from_sums(n: int, replications: int, sums: Sequence[float],
                           consts) -> MomentDiagnostics:
    r = float(replications)

    def central(s1: float, s2: float, s3: float, s4: float):
        mean = s1 / r
        m2 = s2 / r - mean * mean
        m4 = (s4 / r - 4.0 * mean * (s3 / r) + 6.0 * mean * mean * (s2 / r)
              - 3.0 * mean**4)
        return mean, m2, m4

    mean_sb1, m2_sb1, m4_sb1 = central(*sums[0:4])
    mean_b2, m2_b2, m4_b2 = central(*sums[4:8])
    var_sb1 = m2_sb1 * r / (r - 1.0)
    var_b2 = m2_b2 * r / (r - 1.0)
    # Delta-method standard errors: SE(mean) = sqrt(m2/R), SE(var) = sqrt((m4 - m2^2)/R).
    se_mean_b2 = math.sqrt(m2_b2 / r)
    se_var_sb1 = math.sqrt(max(m4_sb1 - m2_sb1 * m2_sb1, 0.0) / r)
    se_var_b2 = math.sqrt(max(m4_b2 - m2_b2 * m2_b2, 0.0) / r)
    return MomentDiagnostics(
        n=n,
        replications=replications,
        mean_sqrt_b1=mean_sb1,
        var_sqrt_b1=var_sb1,
        mean_b2=mean_b2,
        var_b2=var_b2,
        c1=consts.c1,
        c2=consts.c2,
        c3=consts.c3,
        z_mean_sqrt_b1=mean_sb1 / math.sqrt(consts.c1 / r),
        z_var_sqrt_b1=(var_sb1 - consts.c1) / se_var_sb1,
        z_mean_b2=(mean_b2 - consts.c2) / se_mean_b2,
        z_var_b2=(var_b2 - consts.c3) / se_var_b2,
    )


def simulate_null(cfg: SimConfig, workers: int = 1,
                  progress: Callable[[int, int], None] | None = None,
                  kernel=None) -> QuantileTable:
    """Simulate the null distributions for every n in the grid.

    The result is bit-identical for a fixed ``cfg`` regardless of
    ``workers``.  ``progress`` is called with (replications done, total)
    after every finished chunk.  ``kernel`` overrides the active backend
    (used by parity tests and the benchmark).
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    kern = kernel if kernel is not None else _backend
    gen_code = rng.generator_code(cfg.generator)
    reps = cfg.replications
    chunk = cfg.chunk_size
    n_chunks = cfg.n_chunks
    total = reps * len(cfg.n_grid)
    done = 0

    p_count = len(cfg.p_grid)
    n_count = len(cfg.n_grid)
    quantiles = {k: np.empty((p_count, n_count)) for k in ("lm", "alm")}
    std_errors = {k: np.empty((p_count, n_count)) for k in ("lm", "alm")}
    diagnostics = []

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for i_n, n in enumerate(cfg.n_grid):
            consts = finite_constants(n)
            lm = np.empty(reps)
            alm = np.empty(reps)
            futures = {}
            for c in range(n_chunks):
                lo = c * chunk
                hi = min(reps, lo + chunk)
                fut = pool.submit(
                    _run_chunk, kern, gen_code, cfg.seed,
                    cfg.stream_index(i_n, c), n, hi - lo, consts,
                    lm[lo:hi], alm[lo:hi],
                )
                futures[fut] = (c, hi - lo)
            chunk_sums: list[np.ndarray | None] = [None] * n_chunks
            for fut in as_completed(futures):
                c, count = futures[fut]
                chunk_sums[c] = fut.result()
                done += count
                if progress is not None:
                    progress(done, total)
            # Merge in chunk order so the reduction is schedule-independent.
            sums = [math.fsum(cs[k] for cs in chunk_sums) for k in range(8)]
            diagnostics.append(_diagnostics_from_sums(n, reps, sums, consts))

            lm.sort()
            alm.sort()
            for kind, values in (("lm", lm), ("alm", alm)):
                for i_p, p in enumerate(cfg.p_grid):
                    quantiles[kind][i_p, i_n] = empirical_quantile(values, p)
                    std_errors[kind][i_p, i_n] = _quantile_se(values, p)

    table = QuantileTable(
        config=cfg,
        quantiles=quantiles,
        std_errors=std_errors,
        rng_metadata=rng.generator_metadata(cfg.generator),
        diagnostics=tuple(diagnostics),
    )
    table.validate()
    return table


def moment_diagnostics(n: int, replications: int, seed: int,
                       generator: str = "counter", chunk_size: int = 10_000,
                       workers: int = 1) -> MomentDiagnostics:
    """Simulate R null samples of size n and report moment z-scores."""
    cfg = SimConfig(
        n_grid=(n,),
        p_grid=REQUIRED_LEVELS,
        replications=replications,
        seed=seed,
        generator=generator,
        chunk_size=chunk_size,
    )
    table = simulate_null(cfg, workers=workers)
    return table.diagnostics[0]

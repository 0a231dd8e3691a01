"""Response-surface fits of the null quantile as a power series in 1/N.

For a fixed probability p and statistic kind the tabulated quantile is
approximated by

    q(p, N) = q(p, inf) + sum_{k=1..K} beta_k N^(-k)

with the intercept pinned to the closed-form chi-squared(2) quantile, so
the fitted surface reaches the exact asymptotic limit.  Powers of 1/N are
severely collinear, so the least-squares problem is solved by SVD on
unit-norm-scaled columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence, Union

import numpy as np

from .engine import QuantileTable
from .moments import chi2_quantile_2df

__all__ = [
    "SurfaceFit",
    "IllConditionedFitError",
    "fit_surface",
    "eval_surface",
    "save_fits",
    "load_fits",
]

FITS_FORMAT_VERSION = 1


class IllConditionedFitError(ValueError):
    """The scaled regressor matrix is numerically rank deficient."""


@dataclass(frozen=True)
class SurfaceFit:
    """Coefficients of one (kind, p) surface plus fit diagnostics."""

    kind: str
    p: float
    order: int
    q_inf: float
    beta: tuple[float, ...]
    rms_residual: float
    max_residual: float
    n_min: int
    n_max: int


def fit_surface(table: QuantileTable, kind: str, p: float, order: int = 6,
                min_n: int | None = None, weighted: bool = False) -> SurfaceFit:
    """Least-squares fit of the quantile column at grid probability p.

    ``min_n`` drops grid sizes below the threshold (small n is where Monte
    Carlo convergence is slowest); default keeps every point.  ``weighted``
    switches to inverse-variance weighting by the tabulated standard
    errors; default is ordinary least squares.
    """
    key = getattr(kind, "value", kind)
    i_p = table.p_index(p)
    n_all = np.array(table.config.n_grid, dtype=float)
    q_row = table.quantiles[key][i_p, :]
    se_row = table.std_errors[key][i_p, :]
    mask = np.ones(len(n_all), dtype=bool) if min_n is None else n_all >= min_n
    x = n_all[mask]
    if order < 1:
        raise ValueError("order must be at least 1")
    if order > len(x) - 1:
        raise ValueError(
            f"order K={order} needs more grid points (have {len(x)}, need K+1)"
        )
    q_inf = chi2_quantile_2df(p)
    y = q_row[mask] - q_inf

    design = np.column_stack([x ** -float(k) for k in range(1, order + 1)])
    norms = np.sqrt((design * design).sum(axis=0))
    scaled = design / norms
    rhs = y
    if weighted:
        se = se_row[mask]
        if np.any(se <= 0):
            raise ValueError("weighted fit requires positive standard errors")
        root_w = 1.0 / se
        scaled = scaled * root_w[:, None]
        rhs = y * root_w
    coef, _, rank, _ = np.linalg.lstsq(scaled, rhs, rcond=None)
    if rank < order:
        raise IllConditionedFitError(
            f"ill-conditioned fit; reduce K (kind={key}, p={p:g}, K={order})"
        )
    beta = coef / norms
    resid = y - design @ beta
    return SurfaceFit(
        kind=key,
        p=float(p),
        order=order,
        q_inf=q_inf,
        beta=tuple(float(b) for b in beta),
        rms_residual=float(np.sqrt(np.mean(resid * resid))),
        max_residual=float(np.max(np.abs(resid))),
        n_min=int(x[0]),
        n_max=int(x[-1]),
    )


def eval_surface(fit: SurfaceFit, n) -> float:
    """Evaluate the fitted surface at sample size n (INFINITE gives q_inf)."""
    if n == math.inf:
        return fit.q_inf
    if n < 1:
        raise ValueError("n must be at least 1 or INFINITE")
    x = 1.0 / float(n)
    acc = 0.0
    for b in reversed(fit.beta):
        acc = (acc + b) * x
    return max(0.0, fit.q_inf + acc)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_fits(fits: Sequence[SurfaceFit], destination: Union[str, Path, BinaryIO]) -> None:
    """Serialize fits in the header-style key=value text format."""
    blocks = [f"format_version={FITS_FORMAT_VERSION}\nfits={len(fits)}\n"]
    for fit in fits:
        blocks.append(
            "\n".join([
                f"kind={fit.kind}",
                f"p={_fmt(fit.p)}",
                f"order={fit.order}",
                f"q_inf={_fmt(fit.q_inf)}",
                f"beta={','.join(_fmt(b) for b in fit.beta)}",
                f"rms_residual={_fmt(fit.rms_residual)}",
                f"max_residual={_fmt(fit.max_residual)}",
                f"n_min={fit.n_min}",
                f"n_max={fit.n_max}",
            ]) + "\n"
        )
    data = "\n".join(blocks).encode("ascii")
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        Path(destination).write_bytes(data)


def load_fits(source: Union[str, Path, bytes, BinaryIO]) -> list[SurfaceFit]:
    """Read fits written by :func:`save_fits`."""
    if isinstance(source, bytes):
        data = source
    elif hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()
    blocks = data.decode("ascii").split("\n\n")
    head = dict(line.partition("=")[::2] for line in blocks[0].splitlines())
    version = int(head.get("format_version", "-1"))
    if version != FITS_FORMAT_VERSION:
        raise ValueError(f"unsupported fits format: version {version}")
    count = int(head["fits"])
    fits = []
    for block in blocks[1:]:
        if not block.strip():
            continue
        fields = dict(line.partition("=")[::2] for line in block.splitlines())
        fits.append(SurfaceFit(
            kind=fields["kind"],
            p=float(fields["p"]),
            order=int(fields["order"]),
            q_inf=float(fields["q_inf"]),
            beta=tuple(float(v) for v in fields["beta"].split(",")),
            rms_residual=float(fields["rms_residual"]),
            max_residual=float(fields["max_residual"]),
            n_min=int(fields["n_min"]),
            n_max=int(fields["n_max"]),
        ))
    if len(fits) != count:
        raise ValueError(f"fits file announces {count} fits, found {len(fits)}")
    return fits

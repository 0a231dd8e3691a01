"""Versioned, canonical text persistence for quantile tables.

One on-disk contract (documented with a worked example in FORMAT.md):
``key=value`` header lines, a 64-bit checksum line, then one comma-separated
body line per (kind, p) of quantiles across the n grid followed by the same
layout for the standard errors.  Floats are written with 17 significant
digits, which round-trips IEEE binary64 exactly, so ``load(save(t))``
reproduces ``t`` bit for bit and two saves of one table are byte-identical.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from .engine import QuantileTable, SimConfig

__all__ = [
    "FORMAT_VERSION",
    "TableIOError",
    "TableFormatError",
    "TableChecksumError",
    "TableValidationError",
    "table_bytes",
    "save_table",
    "load_table",
]

FORMAT_VERSION = 1

_RNG_KEYS = ("lag_pair", "seeding", "normal_transform", "uniform_mapping")


class TableIOError(ValueError):
    """Base class for table persistence failures."""


class TableFormatError(TableIOError):
    """Unsupported format version or malformed header."""


class TableChecksumError(TableIOError):
    """Body bytes do not match the recorded checksum."""


class TableValidationError(TableIOError):
    """The decoded table violates a structural invariant."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _body_bytes(table: QuantileTable) -> bytes:
    lines = []
    for grids in (table.quantiles, table.std_errors):
        for kind in table.kinds():
            grid = grids[kind]
            for row in grid:
                lines.append(",".join(_fmt(v) for v in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def _checksum(body: bytes) -> str:
    return hashlib.blake2b(body, digest_size=8).hexdigest()


def table_bytes(table: QuantileTable) -> bytes:
    """Canonical serialization of a table."""
    cfg = table.config
    body = _body_bytes(table)
    header = [
        f"format_version={table.format_version}",
        f"kinds={','.join(table.kinds())}",
        f"generator={cfg.generator}",
        *(f"{key}={table.rng_metadata[key]}" for key in _RNG_KEYS),
        f"seed={cfg.seed}",
        f"chunk_size={cfg.chunk_size}",
        f"replications={cfg.replications}",
        f"n_grid={','.join(str(n) for n in cfg.n_grid)}",
        f"p_grid={','.join(_fmt(p) for p in cfg.p_grid)}",
        f"checksum={_checksum(body)}",
    ]
    return ("\n".join(header) + "\n").encode("ascii") + body


def save_table(table: QuantileTable, destination: Union[str, Path, BinaryIO]) -> None:
    """Write the canonical serialization to a path or binary sink."""
    data = table_bytes(table)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        Path(destination).write_bytes(data)


def _parse_header(lines: list[str]) -> dict[str, str]:
    header = {}
    for line in lines:
        if "=" not in line:
            raise TableFormatError(f"unsupported format: malformed header line {line!r}")
        key, _, value = line.partition("=")
        header[key] = value
    return header


def load_table(source: Union[str, Path, bytes, BinaryIO]) -> QuantileTable:
    """Read, checksum-verify and validate a table."""
    if isinstance(source, bytes):
        data = source
    elif hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()

    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise TableFormatError("unsupported format: not a text table") from exc

    marker = "\nchecksum="
    pos = text.find(marker)
    if not text.startswith("format_version=") or pos < 0:
        raise TableFormatError("unsupported format: missing header")
    body_start = text.index("\n", pos + 1) + 1
    header_lines = text[:body_start].splitlines()
    body = data[body_start:]
    header = _parse_header(header_lines)

    version = int(header["format_version"])
    if version != FORMAT_VERSION:
        raise TableFormatError(f"unsupported format: version {version}")
    if header["checksum"] != _checksum(body):
        raise TableChecksumError("corrupt table: checksum mismatch")

    try:
        kinds = tuple(header["kinds"].split(","))
        cfg = SimConfig(
            n_grid=tuple(int(v) for v in header["n_grid"].split(",")),
            p_grid=tuple(float(v) for v in header["p_grid"].split(",")),
            replications=int(header["replications"]),
            seed=int(header["seed"]),
            generator=header["generator"],
            chunk_size=int(header["chunk_size"]),
        )
        rng_metadata = {key: header[key] for key in _RNG_KEYS}
    except (KeyError, ValueError) as exc:
        raise TableValidationError(f"invalid table: {exc}") from exc

    rows = body.decode("ascii").splitlines()
    expected = 2 * len(kinds) * len(cfg.p_grid)
    if len(rows) != expected:
        raise TableValidationError(
            f"invalid table: expected {expected} body rows, found {len(rows)}"
        )
    shape = (len(cfg.p_grid), len(cfg.n_grid))
    try:
        values = [[float(v) for v in row.split(",")] for row in rows]
    except ValueError as exc:
        raise TableValidationError(f"invalid table: {exc}") from exc
    if any(len(row) != shape[1] for row in values):
        raise TableValidationError("invalid table: row length mismatch")
    blocks = [
        np.array(values[b * shape[0]:(b + 1) * shape[0]])
        for b in range(2 * len(kinds))
    ]

    table = QuantileTable(
        config=cfg,
        quantiles={kind: blocks[i] for i, kind in enumerate(kinds)},
        std_errors={kind: blocks[len(kinds) + i] for i, kind in enumerate(kinds)},
        rng_metadata=rng_metadata,
        format_version=version,
    )
    try:
        table.validate()
    except ValueError as exc:
        raise TableValidationError(f"invalid table: {exc}") from exc
    return table

"""Table persistence: canonical bytes, round trips, corruption detection."""

import io

import numpy as np
import pytest

from jbfinite.tableio import (
    TableChecksumError,
    TableFormatError,
    TableValidationError,
    load_table,
    save_table,
    table_bytes,
)


def _tables_equal(a, b) -> bool:
    if a.config != b.config or a.rng_metadata != b.rng_metadata:
        return False
    if a.kinds() != b.kinds():
        return False
    return all(
        np.array_equal(a.quantiles[k], b.quantiles[k])
        and np.array_equal(a.std_errors[k], b.std_errors[k])
        for k in a.kinds()
    )


def test_round_trip_is_exact(quick_table, tmp_path):
    path = tmp_path / "t.jbt"
    save_table(quick_table, path)
    assert _tables_equal(load_table(path), quick_table)


def test_round_trip_through_file_objects(quick_table):
    buf = io.BytesIO()
    save_table(quick_table, buf)
    buf.seek(0)
    assert _tables_equal(load_table(buf), quick_table)


def test_two_saves_are_byte_identical(quick_table):
    assert table_bytes(quick_table) == table_bytes(quick_table)


def test_seventeen_digits_round_trip_binary64(quick_table):
    # Every stored value must survive text round-tripping bit for bit.
    back = load_table(table_bytes(quick_table))
    for kind in quick_table.kinds():
        assert np.array_equal(back.quantiles[kind], quick_table.quantiles[kind])


def test_single_digit_edit_fails_checksum(quick_table):
    data = bytearray(table_bytes(quick_table))
    body_start = bytes(data).index(b"\nchecksum=")
    idx = bytes(data).index(b"\n", body_start + 1) + 5
    data[idx] = ord("1") if data[idx] != ord("1") else ord("2")
    with pytest.raises(TableChecksumError, match="corrupt table"):
        load_table(bytes(data))


def test_unsupported_version(quick_table):
    data = table_bytes(quick_table).replace(
        b"format_version=1", b"format_version=999", 1)
    with pytest.raises(TableFormatError, match="unsupported format"):
        load_table(data)


def test_not_a_table(tmp_path):
    with pytest.raises(TableFormatError, match="unsupported format"):
        load_table(b"\x00\xff garbage")
    with pytest.raises(TableFormatError, match="unsupported format"):
        load_table(b"hello=world\n")


def test_decreasing_column_rejected(quick_table):
    import hashlib

    text = table_bytes(quick_table).decode("ascii")
    marker = "\nchecksum="
    pos = text.index(marker)
    body_start = text.index("\n", pos + 1) + 1
    head = text[:pos + 1]
    lines = text[body_start:].splitlines()
    # Swapping two quantile rows of one kind breaks monotonicity in p.
    lines[0], lines[5] = lines[5], lines[0]
    body = ("\n".join(lines) + "\n").encode("ascii")
    checksum = hashlib.blake2b(body, digest_size=8).hexdigest()
    data = head.encode("ascii") + f"checksum={checksum}\n".encode("ascii") + body
    with pytest.raises(TableValidationError, match="invalid table"):
        load_table(data)


def test_truncated_body_rejected(quick_table):
    import hashlib

    text = table_bytes(quick_table).decode("ascii")
    pos = text.index("\nchecksum=")
    body_start = text.index("\n", pos + 1) + 1
    head = text[:pos + 1]
    lines = text[body_start:].splitlines()[:-3]
    body = ("\n".join(lines) + "\n").encode("ascii")
    checksum = hashlib.blake2b(body, digest_size=8).hexdigest()
    data = head.encode("ascii") + f"checksum={checksum}\n".encode("ascii") + body
    with pytest.raises(TableValidationError, match="invalid table"):
        load_table(data)


def test_header_records_generator_metadata(quick_table):
    text = table_bytes(quick_table).decode("ascii")
    header = text[:text.index("\nchecksum=")]
    for key in ("generator=", "lag_pair=", "seeding=", "normal_transform=",
                "uniform_mapping=", "seed=", "chunk_size=", "replications=",
                "n_grid=", "p_grid="):
        assert key in header

"""Pure-Python simulation kernel: the fallback twin of the compiled extension.

Every floating-point operation appears in the same order as in the C
implementation (same Kahan-compensated accumulation, same polar transform,
same libm calls), so both kernels produce bit-identical output.  This twin
is orders of magnitude slower and exists for environments without a C
toolchain and as the reference the compiled kernel is tested against.
"""

from __future__ import annotations

import math

from . import rng

BACKEND = "python"


def _make_stream(generator: int, seed: int, stream_index: int) -> rng._StreamBase:
    if generator == 0:
        return rng.CounterStream(seed, stream_index)
    if generator == 1:
        return rng.Mlfg1279Stream(seed, stream_index)
    raise ValueError(f"unknown generator code {generator}")


def fill_uniforms(generator: int, seed: int, stream_index: int, out) -> None:
    """Fill ``out`` with consecutive uniform deviates of one stream."""
    st = _make_stream(generator, seed, stream_index)
    for i in range(len(out)):
        out[i] = st.next_uniform()


def fill_normals(generator: int, seed: int, stream_index: int, out) -> None:
    """Fill ``out`` with consecutive standard normal deviates of one stream."""
    st = _make_stream(generator, seed, stream_index)
    for i in range(len(out)):
        out[i] = st.next_normal()


def simulate_chunk(
    generator: int,
    seed: int,
    stream_index: int,
    n: int,
    count: int,
    c1: float,
    c2: float,
    c3: float,
    lm_out,
    alm_out,
    sums_out,
) -> None:
    """Simulate ``count`` null replications of sample size ``n`` on one stream.

    Writes the paired statistics into ``lm_out``/``alm_out`` and the
    Kahan-compensated power sums of (sqrt_b1^1..4, b2^1..4) into the eight
    slots of ``sums_out``.  Moment accumulation is two-pass in generation
    order.  Degenerate samples (zero variance) have probability zero under
    the continuous stream and are not guarded.
    """
    if n < 2:
        raise ValueError("sample size must be at least 2")
    if len(lm_out) < count or len(alm_out) < count or len(sums_out) < 8:
        raise ValueError("output buffers too small")
    st = _make_stream(generator, seed, stream_index)
    nd = float(n)
    buf = [0.0] * n
    acc = [0.0] * 8
    comp = [0.0] * 8
    for r in range(count):
        for i in range(n):
            buf[i] = st.next_normal()

        tot = 0.0
        ck = 0.0
        for x in buf:
            y = x - ck
            t = tot + y
            ck = (t - tot) - y
            tot = t
        mean = tot / nd

        s2 = 0.0
        s3 = 0.0
        s4 = 0.0
        k2 = 0.0
        k3 = 0.0
        k4 = 0.0
        for x in buf:
            d = x - mean
            d2 = d * d
            d3 = d2 * d
            d4 = d2 * d2
            y = d2 - k2
            t = s2 + y
            k2 = (t - s2) - y
            s2 = t
            y = d3 - k3
            t = s3 + y
            k3 = (t - s3) - y
            s3 = t
            y = d4 - k4
            t = s4 + y
            k4 = (t - s4) - y
            s4 = t

        m2 = s2 / nd
        m3 = s3 / nd
        m4 = s4 / nd
        rt = math.sqrt(m2)
        sb1 = m3 / (m2 * rt)
        b2 = m4 / (m2 * m2)
        lm_out[r] = nd * (sb1 * sb1 / 6.0 + (b2 - 3.0) * (b2 - 3.0) / 24.0)
        alm_out[r] = sb1 * sb1 / c1 + (b2 - c2) * (b2 - c2) / c3

        sb1_2 = sb1 * sb1
        sb1_3 = sb1_2 * sb1
        sb1_4 = sb1_2 * sb1_2
        b2_2 = b2 * b2
        b2_3 = b2_2 * b2
        b2_4 = b2_2 * b2_2
        vals = (sb1, sb1_2, sb1_3, sb1_4, b2, b2_2, b2_3, b2_4)
        for k in range(8):
            y = vals[k] - comp[k]
            t = acc[k] + y
            comp[k] = (t - acc[k]) - y
            acc[k] = t

    for k in range(8):
        sums_out[k] = acc[k]

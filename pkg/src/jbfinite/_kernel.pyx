# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernel: counter / lagged-Fibonacci streams, polar
normal deviates, and per-replication moment statistics.

Floating-point semantics match ``_kernel_py`` bit for bit: identical
operation order, IEEE doubles throughout, the same libm ``log``/``sqrt``.
The build must not enable fast-math or FP contraction (see setup.py).
All loops release the GIL so chunks can run on a thread pool.
"""

from libc.math cimport log, sqrt
from libc.stdint cimport uint64_t
from libc.stdlib cimport free, malloc

cdef extern from *:
    ctypedef unsigned long long uint128 "unsigned __int128"

BACKEND = "c"

cdef enum:
    LONG_LAG = 1279
    TAP_OFFSET = 861            # LONG_LAG - 418
    MLFG_WARMUP = 12790         # 10 * LONG_LAG

cdef uint64_t PHILOX_MULT = 0xD2B74407B1CE6E93UL
cdef uint64_t PHILOX_BUMP = 0x9E3779B97F4A7C15UL
cdef uint64_t MLFG_SEED_DOMAIN = 0x6A09E667F3BCC909UL
cdef double U52 = 1.0 / 4503599627370496.0    # 2^-52, exact


cdef struct StreamState:
    int generator               # 0 counter, 1 mlfg1279
    uint64_t key
    uint64_t hi
    uint64_t ctr
    int has_pending
    uint64_t pending
    int has_cached
    double cached
    int pos
    uint64_t lag[LONG_LAG]


cdef inline void philox_block(uint64_t ctr, uint64_t hi, uint64_t key,
                              uint64_t* w0, uint64_t* w1) noexcept nogil:
    cdef uint64_t x0 = ctr
    cdef uint64_t x1 = hi
    cdef uint64_t k = key
    cdef uint128 prod
    cdef int r
    for r in range(10):
        prod = (<uint128> PHILOX_MULT) * x0
        x0 = (<uint64_t> (prod >> 64)) ^ k ^ x1
        x1 = <uint64_t> prod
        k = k + PHILOX_BUMP
    w0[0] = x0
    w1[0] = x1


cdef inline uint64_t next_u64(StreamState* st) noexcept nogil:
    cdef uint64_t w0, w1, x
    cdef int pos
    if st.generator == 0:
        if st.has_pending:
            st.has_pending = 0
            return st.pending
        philox_block(st.ctr, st.hi, st.key, &w0, &w1)
        st.ctr = st.ctr + 1
        st.pending = w1
        st.has_pending = 1
        return w0
    else:
        pos = st.pos
        x = st.lag[pos] * st.lag[(pos + TAP_OFFSET) % LONG_LAG]
        st.lag[pos] = x
        pos += 1
        st.pos = 0 if pos == LONG_LAG else pos
        return x


cdef void stream_init(StreamState* st, int generator, uint64_t seed,
                      uint64_t stream_index) noexcept nogil:
    cdef StreamState seeder
    cdef int j
    st.generator = generator
    st.has_pending = 0
    st.pending = 0
    st.has_cached = 0
    st.cached = 0.0
    st.pos = 0
    if generator == 0:
        st.key = seed
        st.hi = stream_index
        st.ctr = 0
    else:
        seeder.generator = 0
        seeder.key = seed ^ MLFG_SEED_DOMAIN
        seeder.hi = stream_index
        seeder.ctr = 0
        seeder.has_pending = 0
        seeder.has_cached = 0
        for j in range(LONG_LAG):
            st.lag[j] = next_u64(&seeder) | 1UL
        for j in range(MLFG_WARMUP):
            next_u64(st)


cdef inline double next_uniform(StreamState* st) noexcept nogil:
    return (<double> (next_u64(st) >> 12) + 0.5) * U52


cdef inline double next_normal(StreamState* st) noexcept nogil:
    cdef double v1, v2, s, f
    if st.has_cached:
        st.has_cached = 0
        return st.cached
    while True:
        v1 = 2.0 * next_uniform(st) - 1.0
        v2 = 2.0 * next_uniform(st) - 1.0
        s = v1 * v1 + v2 * v2
        if s < 1.0 and s != 0.0:
            break
    f = sqrt(-2.0 * log(s) / s)
    st.cached = v2 * f
    st.has_cached = 1
    return v1 * f


cdef inline void kadd(double* s, double* c, double v) noexcept nogil:
    cdef double y = v - c[0]
    cdef double t = s[0] + y
    c[0] = (t - s[0]) - y
    s[0] = t


cdef void chunk_impl(StreamState* st, int n, int count,
                     double c1, double c2, double c3, double* buf,
                     double* lm_out, double* alm_out,
                     double* sums_out) noexcept nogil:
    cdef int r, i, k
    cdef double nd = <double> n
    cdef double tot, ck, y, t, mean
    cdef double s2, s3, s4, k2, k3, k4
    cdef double x, d, d2, d3, d4
    cdef double m2, m3, m4, rt, sb1, b2
    cdef double sb1_2, sb1_3, sb1_4, b2_2, b2_3, b2_4
    cdef double acc[8]
    cdef double comp[8]
    cdef double vals[8]
    for k in range(8):
        acc[k] = 0.0
        comp[k] = 0.0
    for r in range(count):
        for i in range(n):
            buf[i] = next_normal(st)

        tot = 0.0
        ck = 0.0
        for i in range(n):
            x = buf[i]
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
        for i in range(n):
            x = buf[i]
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
        rt = sqrt(m2)
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
        vals[0] = sb1
        vals[1] = sb1_2
        vals[2] = sb1_3
        vals[3] = sb1_4
        vals[4] = b2
        vals[5] = b2_2
        vals[6] = b2_3
        vals[7] = b2_4
        for k in range(8):
            kadd(&acc[k], &comp[k], vals[k])

    for k in range(8):
        sums_out[k] = acc[k]


cdef int check_generator(int generator) except -1:
    if generator not in (0, 1):
        raise ValueError(f"unknown generator code {generator}")
    return 0


def fill_uniforms(int generator, unsigned long long seed,
                  unsigned long long stream_index, double[::1] out not None):
    """Fill ``out`` with consecutive uniform deviates of one stream."""
    check_generator(generator)
    cdef StreamState st
    cdef Py_ssize_t i, m = out.shape[0]
    with nogil:
        stream_init(&st, generator, seed, stream_index)
        for i in range(m):
            out[i] = next_uniform(&st)


def fill_normals(int generator, unsigned long long seed,
                 unsigned long long stream_index, double[::1] out not None):
    """Fill ``out`` with consecutive standard normal deviates of one stream."""
    check_generator(generator)
    cdef StreamState st
    cdef Py_ssize_t i, m = out.shape[0]
    with nogil:
        stream_init(&st, generator, seed, stream_index)
        for i in range(m):
            out[i] = next_normal(&st)


def simulate_chunk(int generator, unsigned long long seed,
                   unsigned long long stream_index, int n, int count,
                   double c1, double c2, double c3,
                   double[::1] lm_out not None, double[::1] alm_out not None,
                   double[::1] sums_out not None):
    """Simulate ``count`` null replications of sample size ``n`` on one stream.

    Writes the paired statistics into ``lm_out``/``alm_out`` and the
    Kahan-compensated power sums of (sqrt_b1^1..4, b2^1..4) into the eight
    slots of ``sums_out``.  See ``_kernel_py.simulate_chunk`` for the
    reference semantics.
    """
    check_generator(generator)
    if n < 2:
        raise ValueError("sample size must be at least 2")
    if lm_out.shape[0] < count or alm_out.shape[0] < count or sums_out.shape[0] < 8:
        raise ValueError("output buffers too small")
    if count <= 0:
        sums_out[:8] = 0.0
        return
    cdef StreamState* st = <StreamState*> malloc(sizeof(StreamState))
    cdef double* buf = <double*> malloc(n * sizeof(double))
    if st == NULL or buf == NULL:
        free(st)
        free(buf)
        raise MemoryError
    try:
        with nogil:
            stream_init(st, generator, seed, stream_index)
            chunk_impl(st, n, count, c1, c2, c3, buf,
                       &lm_out[0], &alm_out[0], &sums_out[0])
    finally:
        free(buf)
        free(st)

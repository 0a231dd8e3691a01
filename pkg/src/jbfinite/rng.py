"""Deterministic splittable random streams for reproducible parallel Monte Carlo.

Two generator families, selected by name:

``counter`` (default)
    A Philox-style counter generator: the 128-bit block (stream_index,
    position) is mixed under the 64-bit seed key by 10 rounds of
    multiply-high/xor, yielding two 64-bit words per block.  Streams with
    distinct indices enumerate disjoint slices of the counter space, so
    non-overlap holds by construction.

``mlfg1279``
    A multiplicative lagged Fibonacci generator with the canonical lag pair
    (1279, 418) on 64-bit odd integers:

        x[n] = x[n-1279] * x[n-418]  mod 2^64

    The 1279-entry lag table is filled from the counter generator keyed by
    (seed XOR a fixed domain constant, stream_index), every entry forced
    odd, and 12790 warm-up updates are discarded.  Disjointness of distinct
    streams is probabilistic, not structural.

Uniform deviates map the top 52 bits of a word to the centers of 2^52 equal
subintervals of (0, 1), so 0.0 and 1.0 are unreachable and the arithmetic
is exact.  Normal deviates use the Marsaglia polar rejection transform; the
spare second deviate is cached on the stream so replay is deterministic.

This module is the pure-Python reference implementation.  The compiled
kernel re-implements the identical sequences in C; parity is asserted bit
for bit in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "GENERATORS",
    "StreamSpec",
    "CounterStream",
    "Mlfg1279Stream",
    "new_stream",
    "generator_code",
    "generator_metadata",
]

_MASK64 = (1 << 64) - 1

# Philox 2x64 constants: odd multiplier and Weyl key increment.
_PHILOX_MULT = 0xD2B74407B1CE6E93
_PHILOX_BUMP = 0x9E3779B97F4A7C15
_PHILOX_ROUNDS = 10

_MLFG_LONG_LAG = 1279
_MLFG_SHORT_LAG = 418
_MLFG_TAP_OFFSET = _MLFG_LONG_LAG - _MLFG_SHORT_LAG
_MLFG_WARMUP = 10 * _MLFG_LONG_LAG
_MLFG_SEED_DOMAIN = 0x6A09E667F3BCC909

# 1 / 2^52, exact.
_U52 = 1.0 / 4503599627370496.0

GENERATORS = ("counter", "mlfg1279")
_GENERATOR_CODES = {"counter": 0, "mlfg1279": 1}


@dataclass(frozen=True)
class StreamSpec:
    """(seed, stream_index, generator) fully determines the output sequence."""

    seed: int
    stream_index: int
    generator: str = "counter"

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.stream_index <= _MASK64:
            raise ValueError("stream_index must be a 64-bit unsigned integer")
        if self.generator not in _GENERATOR_CODES:
            raise ValueError(f"unknown generator {self.generator!r}")


def generator_code(name: str) -> int:
    """Map a generator name to the integer code the kernels take."""
    try:
        return _GENERATOR_CODES[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}") from None


def _philox2x64(ctr: int, hi: int, key: int) -> tuple[int, int]:
    """One 10-round block: (counter word, stream word) -> two output words."""
    x0, x1, k = ctr, hi, key
    for _ in range(_PHILOX_ROUNDS):
        prod = _PHILOX_MULT * x0
        x0 = (prod >> 64) ^ k ^ x1
        x1 = prod & _MASK64
        k = (k + _PHILOX_BUMP) & _MASK64
    return x0, x1


class _StreamBase:
    """Uniform/normal layer shared by both generator families."""

    __slots__ = ("_cached_normal",)

    def __init__(self) -> None:
        self._cached_normal: float | None = None

    def next_u64(self) -> int:
        raise NotImplementedError

    def next_uniform(self) -> float:
        """Uniform deviate in the open interval (0, 1)."""
        return (float(self.next_u64() >> 12) + 0.5) * _U52

    def next_normal(self) -> float:
        """Standard normal deviate (polar rejection, spare deviate cached)."""
        z = self._cached_normal
        if z is not None:
            self._cached_normal = None
            return z
        while True:
            v1 = 2.0 * self.next_uniform() - 1.0
            v2 = 2.0 * self.next_uniform() - 1.0
            s = v1 * v1 + v2 * v2
            if s < 1.0 and s != 0.0:
                break
        f = math.sqrt(-2.0 * math.log(s) / s)
        self._cached_normal = v2 * f
        return v1 * f


class CounterStream(_StreamBase):
    """Counter-mixing stream; disjoint across stream indices by construction."""

    __slots__ = ("_key", "_hi", "_ctr", "_pending")

    def __init__(self, seed: int, stream_index: int) -> None:
        super().__init__()
        self._key = seed & _MASK64
        self._hi = stream_index & _MASK64
        self._ctr = 0
        self._pending: int | None = None

    def next_u64(self) -> int:
        w = self._pending
        if w is not None:
            self._pending = None
            return w
        w0, w1 = _philox2x64(self._ctr, self._hi, self._key)
        self._ctr = (self._ctr + 1) & _MASK64
        self._pending = w1
        return w0


class Mlfg1279Stream(_StreamBase):
    """Multiplicative lagged Fibonacci stream, lags (1279, 418), 64-bit odd state."""

    __slots__ = ("_lag", "_pos")

    def __init__(self, seed: int, stream_index: int) -> None:
        super().__init__()
        seeder = CounterStream((seed ^ _MLFG_SEED_DOMAIN) & _MASK64, stream_index)
        self._lag = [seeder.next_u64() | 1 for _ in range(_MLFG_LONG_LAG)]
        self._pos = 0
        for _ in range(_MLFG_WARMUP):
            self.next_u64()

    def next_u64(self) -> int:
        lag = self._lag
        pos = self._pos
        x = (lag[pos] * lag[(pos + _MLFG_TAP_OFFSET) % _MLFG_LONG_LAG]) & _MASK64
        lag[pos] = x
        pos += 1
        self._pos = 0 if pos == _MLFG_LONG_LAG else pos
        return x


def new_stream(spec: StreamSpec) -> _StreamBase:
    """Instantiate the stream a spec describes."""
    if spec.generator == "counter":
        return CounterStream(spec.seed, spec.stream_index)
    return Mlfg1279Stream(spec.seed, spec.stream_index)


def generator_metadata(name: str) -> dict[str, str]:
    """Descriptors recorded in table files so any table is regenerable."""
    generator_code(name)
    if name == "counter":
        lag_pair = "-"
        seeding = "key=seed;block=(stream_index,position);rounds=10"
    else:
        lag_pair = f"{_MLFG_LONG_LAG},{_MLFG_SHORT_LAG}"
        seeding = (
            f"counter-fill(key=seed^{_MLFG_SEED_DOMAIN:#018x},"
            f"stream=stream_index);odd;warmup={_MLFG_WARMUP}"
        )
    return {
        "lag_pair": lag_pair,
        "seeding": seeding,
        "normal_transform": "polar-cached",
        "uniform_mapping": "top52-centered",
    }

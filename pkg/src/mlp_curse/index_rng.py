"""Deterministic random streams addressed by multi-indices.

Every Monte Carlo node of the Picard recursion owns an independent stream.
The stream is a pure function of ``(master_seed, replication, theta)``: the
key is a two-lane splitmix64 sponge over the serialized words
``(replication, len(theta), theta_1, ..., theta_k)`` and draw ``i`` of the
stream is ``mix64(mix64(k0 + i * GOLDEN) ^ k1)``.  No global state is used,
so streams can be created from any thread in any order.

The compiled core (``_core.pyx``) reimplements exactly this layout; the
integer part is bit-identical, the Gaussian transform goes through libm
there and through numpy's ufuncs here (agreement to a few ulp).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_LANE0 = 0x243F6A8885A308D3
_LANE1 = 0x13198A2E03707344
_LANE1_XOR = 0xA4093822299F31D0

TWO_PI = 2.0 * math.pi
_INV_2_53 = 2.0**-53

__all__ = [
    "MultiIndex",
    "StreamHandle",
    "derive_stream",
    "stream_key",
    "raw_draws",
    "uniforms",
    "next_uniform",
    "time_fraction_from_uniform",
    "sample_time_fraction",
    "sample_r_time",
    "standard_normals",
    "sample_brownian_increment",
]


@dataclass(frozen=True)
class MultiIndex:
    """Element of the index set ``Z^1 u Z^2 u ...``.

    Children are built with :meth:`child`, which returns a new index and
    leaves the parent untouched.
    """

    path: tuple[int, ...]

    def __post_init__(self) -> None:
        path = tuple(int(p) for p in self.path)
        if not path:
            raise ValueError("a multi-index needs at least one entry")
        object.__setattr__(self, "path", path)

    def child(self, *items: int) -> "MultiIndex":
        return MultiIndex(self.path + tuple(int(i) for i in items))

    def __len__(self) -> int:
        return len(self.path)

    def __iter__(self):
        return iter(self.path)

    def __str__(self) -> str:
        return "(" + ",".join(str(p) for p in self.path) + ")"


def as_index(theta: MultiIndex | Sequence[int] | int) -> MultiIndex:
    if isinstance(theta, MultiIndex):
        return theta
    if isinstance(theta, (int, np.integer)):
        return MultiIndex((int(theta),))
    return MultiIndex(tuple(theta))


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def stream_key(master_seed: int, replication: int, path: Iterable[int]) -> tuple[int, int]:
    """Two 64-bit key words for the serialized index path."""
    if master_seed < 0 or master_seed > MASK64:
        raise ValueError("master_seed must be a 64-bit unsigned integer")
    if replication < 0:
        raise ValueError("replication must be nonnegative")
    path = tuple(path)
    h0 = _mix64(master_seed ^ _LANE0)
    h1 = _mix64((master_seed + _LANE1) & MASK64)
    for w in (replication, len(path), *path):
        w &= MASK64
        h0 = _mix64(h0 ^ w)
        h1 = _mix64((h1 + (w ^ _LANE1_XOR)) & MASK64)
    return h0, h1


@dataclass
class StreamHandle:
    """Position in one keyed stream; ``counter`` counts 64-bit draws consumed."""

    master_seed: int
    replication: int
    theta: MultiIndex
    key: tuple[int, int] = field(repr=False)
    counter: int = 0


def derive_stream(
    master_seed: int, replication: int, theta: MultiIndex | Sequence[int] | int
) -> StreamHandle:
    theta = as_index(theta)
    return StreamHandle(
        master_seed=int(master_seed),
        replication=int(replication),
        theta=theta,
        key=stream_key(int(master_seed), int(replication), theta.path),
    )


def raw_draws(key: tuple[int, int], start: int, count: int) -> np.ndarray:
    """Draws ``start .. start+count-1`` of the stream as uint64."""
    k0 = np.uint64(key[0])
    k1 = np.uint64(key[1])
    i = np.arange(start, start + count, dtype=np.uint64)
    z = k0 + i * np.uint64(GOLDEN)
    z = _mix64_np(z)
    z ^= k1
    return _mix64_np(z)


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def _to_unit(bits: np.ndarray) -> np.ndarray:
    # (0, 1]: lane 0 maps to 2^-53, never to 0
    return ((bits >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _INV_2_53


def uniforms(stream: StreamHandle, count: int) -> np.ndarray:
    out = _to_unit(raw_draws(stream.key, stream.counter, count))
    stream.counter += count
    return out


def next_uniform(stream: StreamHandle) -> float:
    k0, k1 = stream.key
    z = _mix64((k0 + stream.counter * GOLDEN) & MASK64)
    z = _mix64(z ^ k1)
    stream.counter += 1
    return ((z >> 11) + 1) * _INV_2_53


def time_fraction_from_uniform(u: float) -> float:
    """Inverse CDF of ``P(r <= b) = sqrt(b)``."""
    return u * u


def sample_time_fraction(stream) -> float:
    """Fraction ``r`` in (0, 1] with ``P(r <= b) = sqrt(b)``.

    ``stream`` only needs a ``next_uniform`` method or to be a
    :class:`StreamHandle`; tests substitute stubs here.
    """
    if isinstance(stream, StreamHandle):
        u = next_uniform(stream)
    else:
        u = stream.next_uniform()
    return time_fraction_from_uniform(u)


def sample_r_time(stream, t: float) -> float:
    """Intermediate time ``t + (1 - t) r`` in (t, 1]."""
    if not t < 1.0:
        raise ValueError(f"t must be < 1, got {t}")
    return t + (1.0 - t) * sample_time_fraction(stream)


def standard_normals(stream: StreamHandle, d: int) -> np.ndarray:
    """Box-Muller normals from ``2 * ceil(d / 2)`` consecutive uniforms."""
    pairs = (d + 1) // 2
    u = uniforms(stream, 2 * pairs)
    rad = np.sqrt(-2.0 * np.log(u[0::2]))
    ang = TWO_PI * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = rad * np.cos(ang)
    z[1::2] = rad * np.sin(ang)
    return z[:d]


def sample_brownian_increment(stream, d: int, dt: float) -> np.ndarray:
    """``W_{t+dt} - W_t`` for a d-dimensional standard Brownian motion."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if not dt > 0.0:
        raise ValueError(f"duration must be positive, got {dt}")
    if isinstance(stream, StreamHandle):
        z = standard_normals(stream, d)
    else:
        z = np.asarray(stream.standard_normals(d), dtype=np.float64)
    return math.sqrt(dt) * z

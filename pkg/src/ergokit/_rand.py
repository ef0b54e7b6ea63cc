"""Counter-based deterministic randomness (splitmix64).

Every stochastic base system reads an i.i.d.-uniform "tape" u_0, u_1, ...
that is a pure function of (seed, position).  This keeps single-step maps,
vectorized orbit generation, and backward steps exactly consistent with one
another, which the audit and splitting machinery relies on.
"""
from __future__ import annotations

import numpy as np

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= _M64
    z = ((z ^ (z >> 30)) * _MIX1) & _M64
    z = ((z ^ (z >> 27)) * _MIX2) & _M64
    return z ^ (z >> 31)


def uniform(seed: int, pos: int) -> float:
    """The tape value u_pos in [0, 1) for this seed. Positions may be negative."""
    return mix64((seed + (pos + 1) * _GOLDEN) & _M64) / 2.0**64


def uniform_block(seed: int, start: int, count: int) -> np.ndarray:
    """Vectorized tape slice u_start .. u_{start+count-1}; bit-identical to uniform()."""
    ks = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (np.uint64(seed) + ks * np.uint64(_GOLDEN)).astype(np.uint64)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
    return z.astype(np.float64) / 2.0**64


def hash_bit(seed: int, value: int) -> int:
    """One keyed pseudorandom bit as a pure function of (seed, value)."""
    return mix64((seed * _MIX2 + value) & _M64) & 1

"""Counter-based random streams.

All randomness in the package is a pure function of ``(seed, purpose, counter)``:
a stream key is derived from the user seed and a purpose tag, and the i-th draw
of a stream is the i-th output of a SplitMix64 generator whose state is the key.
Results therefore do not depend on evaluation order, chunking or thread count,
and a new consumer of randomness (new purpose tag) never shifts existing
streams.
"""

import numpy as np

from . import _accel
from ._accel import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0

# purpose tags: ascii of a short name
EDGE = 0x45444745
PICK = 0x5049434B
REPLICA = 0x5245504C
SUBSAMPLE = 0x53554253


def mix64(z: int) -> int:
    """SplitMix64 output for state ``z`` (scalar reference implementation)."""
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, purpose: int) -> int:
    return mix64(mix64(seed & MASK64) ^ purpose)


def draw(key: int, counter: int) -> int:
    """The ``counter``-th 64-bit output of the stream ``key``."""
    return mix64((key + counter * GOLDEN) & MASK64)


def to_unit(z: int) -> float:
    """Top 53 bits of ``z`` as a float in [0, 1)."""
    return (z >> 11) * _INV_2_53


def replica_seed(seed: int, replica: int) -> int:
    return draw(stream_key(seed, REPLICA), replica)


def uniform(key: int, counter: int) -> float:
    return to_unit(draw(key, counter))


# --- vectorised paths -------------------------------------------------------

def _uniform_numpy(key, counters):
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + c * np.uint64(GOLDEN) + np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


@njit
def _mix_nb(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit
def _uniform_nb(key, counters):
    out = np.empty(counters.shape[0], dtype=np.float64)
    k = np.uint64(key)
    g = np.uint64(0x9E3779B97F4A7C15)
    for i in range(counters.shape[0]):
        z = _mix_nb(k + np.uint64(counters[i]) * g)
        out[i] = np.float64(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    return out


def uniforms(key: int, counters) -> np.ndarray:
    """Vector of uniforms for the given counters of stream ``key``."""
    counters = np.ascontiguousarray(counters, dtype=np.uint64)
    if _accel.use_numba():
        return _uniform_nb(np.uint64(key), counters)
    return _uniform_numpy(key, counters)

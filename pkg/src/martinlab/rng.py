"""Counter-based random streams.

Every uniform is a pure function of (seed, stream, step): a SplitMix64-style
finalizer applied to the mixed counter.  Simulations indexed this way are
reproducible bit-for-bit regardless of batching or worker count, and the
compiled walk engine implements the identical function in C.
"""

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U53 = np.uint64(0x1FFFFFFFFFFFFF)  # 2**53 - 1
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def counter_uniform(seed, stream, step):
    """Uniform(0,1) samples indexed by (seed, stream, step).

    `stream` and `step` may be scalars or broadcastable integer arrays.
    """
    with np.errstate(over="ignore"):
        s = np.uint64(seed) * _GAMMA + np.asarray(stream, dtype=np.uint64) * _M1
        z = s + np.asarray(step, dtype=np.uint64) * _GAMMA
        z = _mix64(z)
    return ((z >> np.uint64(11)) & _U53).astype(np.float64) * _INV53


def counter_normals(seed, stream, step_pair):
    """Standard normals via Box-Muller on two consecutive counter steps."""
    u1 = counter_uniform(seed, stream, step_pair)
    u2 = counter_uniform(seed, stream, np.asarray(step_pair) + 1)
    u1 = np.maximum(u1, 1e-300)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

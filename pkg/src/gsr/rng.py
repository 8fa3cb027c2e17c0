"""Deterministic counter-based random number streams.

All randomness in this package (synthetic noise, random masks, measurement
matrices) comes from one documented generator so that degraded inputs are
bit-reproducible across runs and across implementations in other languages.

Raw stream
    word(seed, j) = splitmix64_mix((seed + (j + 1) * 0x9E3779B97F4A7C15) mod 2^64)

    where splitmix64_mix is the finalizer of Steele et al.'s SplitMix64:

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

Uniforms
    u_j = (word(seed, j) >> 11) * 2^-53, in [0, 1).

Gaussians (Box-Muller, cosine branch only)
    g_i = sqrt(-2 ln a_i) * cos(2 pi b_i)
    a_i = ((word(seed, 2i)   >> 11) + 1) * 2^-53   in (0, 1]
    b_i =  (word(seed, 2i+1) >> 11)      * 2^-53   in [0, 1)

The counter form makes every draw a pure function of (seed, index); there is
no hidden stream state.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 2.0 ** -53


def _mix(z):
    """SplitMix64 output finalizer on a uint64 array (wraps mod 2^64)."""
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def words(seed, n, offset=0):
    """Raw 64-bit words word(seed, offset), ..., word(seed, offset+n-1)."""
    seed = int(seed) % (1 << 64)
    with np.errstate(over="ignore"):
        idx = np.arange(offset + 1, offset + n + 1, dtype=np.uint64)
        return _mix(np.uint64(seed) + idx * _GOLDEN)


def uniforms(seed, n, offset=0):
    """n doubles in [0, 1) from the stream."""
    return (words(seed, n, offset) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def gaussians(seed, n, offset=0):
    """n standard-normal doubles; consumes words 2*offset .. 2*(offset+n)-1."""
    w = words(seed, 2 * n, 2 * offset)
    hi = (w >> np.uint64(11)).astype(np.float64)
    a = (hi[0::2] + 1.0) * _INV_2_53
    b = hi[1::2] * _INV_2_53
    return np.sqrt(-2.0 * np.log(a)) * np.cos(2.0 * np.pi * b)

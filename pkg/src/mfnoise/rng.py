"""Deterministic random numbers for every stochastic piece of the package.

The stream contract, fixed for reproducibility across runs and platforms:

* a 64-bit seed expands to 256 bits of xoshiro256++ state via four
  consecutive splitmix64 outputs,
* raw draws are xoshiro256++ 64-bit words, uniforms take the top 53 bits,
* gaussians use the polar Box-Muller transform with a one-sample spare
  cache carried in the stream state; ``sigma == 0`` returns the mean
  without consuming the stream.

Identical seed plus identical call sequence gives an identical output
stream, bit for bit.  The kernels are numba-compiled and shared by the
optimizer's inner loop, so there is a single implementation of the stream.
"""

import numpy as np
from numba import njit, uint64

from .errors import InvalidArgumentError

MASK64 = 0xFFFFFFFFFFFFFFFF

# splitmix64 constants (Steele, Lea, Flood 2014)
_SM64_GAMMA = uint64(0x9E3779B97F4A7C15)
_SM64_MULT1 = uint64(0xBF58476D1CE4E5B9)
_SM64_MULT2 = uint64(0x94D049BB133111EB)

# 2**-53, so uniforms live in [0, 1) with 53 significant bits
_U53 = 1.1102230246251565e-16


@njit(cache=True, nogil=True)
def _sm64_next(state):
    state = state + _SM64_GAMMA
    z = state
    z = (z ^ (z >> uint64(30))) * _SM64_MULT1
    z = (z ^ (z >> uint64(27))) * _SM64_MULT2
    z = z ^ (z >> uint64(31))
    return state, z


@njit(cache=True, nogil=True)
def _seed_state(seed, state):
    s = seed
    for i in range(4):
        s, z = _sm64_next(s)
        state[i] = z
    # xoshiro256++ must never start from the all-zero state
    if state[0] | state[1] | state[2] | state[3] == uint64(0):
        state[0] = _SM64_GAMMA


@njit(cache=True, nogil=True)
def _rotl(x, k):
    return (x << k) | (x >> (uint64(64) - k))


@njit(cache=True, nogil=True)
def _next_u64(state):
    result = _rotl(state[0] + state[3], uint64(23)) + state[0]
    t = state[1] << uint64(17)
    state[2] ^= state[0]
    state[3] ^= state[1]
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    state[3] = _rotl(state[3], uint64(45))
    return result


@njit(cache=True, nogil=True)
def _uniform(state):
    return float(_next_u64(state) >> uint64(11)) * _U53


@njit(cache=True, nogil=True)
def _std_normal(state, cache):
    # polar Box-Muller; cache[0] holds the spare sample, NaN when empty
    if not np.isnan(cache[0]):
        z = cache[0]
        cache[0] = np.nan
        return z
    while True:
        u = 2.0 * _uniform(state) - 1.0
        v = 2.0 * _uniform(state) - 1.0
        q = u * u + v * v
        if 0.0 < q < 1.0:
            break
    f = np.sqrt(-2.0 * np.log(q) / q)
    cache[0] = v * f
    return u * f


@njit(cache=True, nogil=True)
def _fill_gaussian(state, cache, out, mean, sigma):
    # sigma == 0 writes the mean without touching the stream
    if sigma == 0.0:
        for i in range(out.size):
            out[i] = mean
        return
    for i in range(out.size):
        out[i] = mean + sigma * _std_normal(state, cache)


@njit(cache=True, nogil=True)
def _fill_u64(state, out):
    for i in range(out.size):
        out[i] = _next_u64(state)


def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidArgumentError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def mix_seed(master_seed, index):
    """Per-run seed derivation: first splitmix64 output of master_seed XOR index."""
    master_seed = _check_seed(master_seed)
    index = _check_seed(index)
    _, z = _sm64_next(np.uint64(master_seed ^ index))
    return int(z)


class Rng:
    """xoshiro256++ stream with cached polar Box-Muller gaussians."""

    __slots__ = ("_state", "_cache")

    def __init__(self, seed):
        seed = _check_seed(seed)
        self._state = np.empty(4, dtype=np.uint64)
        _seed_state(np.uint64(seed), self._state)
        self._cache = np.full(1, np.nan)

    @classmethod
    def from_raw_state(cls, s0, s1, s2, s3):
        """Bypass seeding and set the 256-bit state directly (test hook)."""
        rng = cls.__new__(cls)
        rng._state = np.array([s0, s1, s2, s3], dtype=np.uint64)
        if not rng._state.any():
            raise InvalidArgumentError("xoshiro256++ state must not be all zero")
        rng._cache = np.full(1, np.nan)
        return rng

    @property
    def state(self):
        """Copy of (s0, s1, s2, s3, cached_gaussian); cache is NaN when empty."""
        return tuple(int(w) for w in self._state) + (float(self._cache[0]),)

    def next_u64(self):
        return int(_next_u64(self._state))

    def u64_block(self, n):
        out = np.empty(int(n), dtype=np.uint64)
        _fill_u64(self._state, out)
        return out

    def uniform(self):
        """One double in [0, 1) from the top 53 bits of the next word."""
        return float(_uniform(self._state))

    def standard_normal(self):
        return float(_std_normal(self._state, self._cache))

    def gaussian(self, mean=0.0, sigma=1.0):
        """N(mean, sigma^2) draw; sigma == 0 returns mean without consuming the stream."""
        if not np.isfinite(mean) or not np.isfinite(sigma):
            raise InvalidArgumentError("gaussian mean and sigma must be finite")
        if sigma < 0.0:
            raise InvalidArgumentError(f"sigma must be nonnegative, got {sigma}")
        if sigma == 0.0:
            return float(mean)
        return float(mean) + float(sigma) * self.standard_normal()

    def fill_gaussian(self, out, mean=0.0, sigma=1.0):
        """Fill a C-contiguous array with gaussians in row-major element order."""
        if not np.isfinite(mean) or not np.isfinite(sigma):
            raise InvalidArgumentError("gaussian mean and sigma must be finite")
        if sigma < 0.0:
            raise InvalidArgumentError(f"sigma must be nonnegative, got {sigma}")
        if not out.flags.c_contiguous:
            raise InvalidArgumentError("fill_gaussian needs a C-contiguous array")
        _fill_gaussian(self._state, self._cache, out.reshape(-1), float(mean), float(sigma))

    def _buffers(self):
        # mutable state arrays, handed to compiled loops that advance the stream
        return self._state, self._cache

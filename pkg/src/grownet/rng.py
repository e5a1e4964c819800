"""Deterministic random number generation.

Every random draw in this package comes from :class:`Rng`, a counter-based
splitmix64 generator.  The update rule is fully specified here so that runs
are reproducible from the seed alone, on any machine, without depending on
the internals of any library RNG.

Update rule (all arithmetic modulo 2**64):

    counter <- counter + 0x9E3779B97F4A7C15          # per draw
    z = counter
    z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z XOR (z >> 27)) * 0x94D049BB133111EB
    output = z XOR (z >> 31)

The counter starts at the seed.  Because the counter after n draws is just
``seed + (n+1) * 0x9E3779B97F4A7C15``, blocks of draws can be produced with
vectorized uint64 arithmetic while remaining bit-identical to the scalar
recurrence.

Derived streams:

* ``uniform``   -- float64 in [0, 1): ``(output >> 11) * 2**-53``.
* ``normal``    -- Box-Muller on consecutive uniform pairs (u1, u2), with
  u1 mapped to (0, 1] as ``1 - u`` so the log never sees zero.  A request
  for an odd number of normals draws one full pair and discards the second
  value of the last pair.
* ``permutation`` -- stable argsort of n uniform draws.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_TO_UNIT = 2.0**-53


def _mix(counters):
    """splitmix64 finalizer, vectorized over a uint64 array."""
    z = counters.copy()
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


class Rng:
    """Seeded splitmix64 stream.  Same seed, same sequence, forever."""

    def __init__(self, seed):
        self.seed = int(seed)
        self._counter = np.uint64(self.seed % (1 << 64))
        self._draws = 0

    def raw(self, n):
        """Next n raw 64-bit outputs as a uint64 array."""
        if n < 0:
            raise ValueError("draw count must be non-negative")
        steps = np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN
        with np.errstate(over="ignore"):
            out = _mix(self._counter + steps)
            self._counter += np.uint64(n) * _GOLDEN
        self._draws += n
        return out

    def uniform(self, n):
        """n float64 values uniform on [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _U64_TO_UNIT

    def normal(self, n):
        """n standard normal float64 values via Box-Muller."""
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
        u2 = u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def uniform_in(self, low, high, shape):
        """Array of the given shape, uniform on [low, high), row-major fill."""
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        vals = low + (high - low) * self.uniform(size)
        return vals.reshape(shape)

    def glorot(self, rows, cols):
        """Glorot-uniform (rows, cols) matrix: bound sqrt(6 / (fan_in + fan_out))."""
        bound = np.sqrt(6.0 / (rows + cols))
        return self.uniform_in(-bound, bound, (rows, cols))

    def permutation(self, n):
        """Permutation of range(n) as an int64 array."""
        return np.argsort(self.uniform(n), kind="stable")

    def keep_mask(self, shape, keep_probability):
        """Boolean array, True with probability keep_probability per entry."""
        size = int(np.prod(shape, dtype=np.int64))
        return (self.uniform(size) < keep_probability).reshape(shape)

    def state(self):
        """Serializable state: seed plus number of draws so far."""
        return {"seed": self.seed, "draws": self._draws}

    @classmethod
    def from_state(cls, state):
        rng = cls(state["seed"])
        draws = int(state["draws"])
        with np.errstate(over="ignore"):
            rng._counter = rng._counter + np.uint64(draws % (1 << 64)) * _GOLDEN
        rng._draws = draws
        return rng

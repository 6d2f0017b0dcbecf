"""Counter-based random streams for reproducible, order-independent draws.

Every stochastic operation in the augmentation pipeline pulls from a
stream keyed by (master_seed, sample_index, stage). Streams are backed
by numpy's Philox4x64 bit generator; the mapping from raw 64-bit words
to floats below is fixed and part of the output-format contract:

* uniform doubles take the top 53 bits of one raw word: (raw >> 11) * 2**-53
* normals are produced pairwise by Box-Muller from two uniforms, where
  the first uniform is offset to the open interval ((raw >> 11) + 0.5) * 2**-53

The Philox key is [master_seed, (sample_index << 8) | stage], so draws
for one sample never depend on how many other samples were processed
or in which order.
"""

from __future__ import annotations

import math

import numpy as np

GENERATOR_NAME = "philox4x64/53-bit-uniform/box-muller"

# stage tags (part of the reproducibility contract)
STAGE_PARAMS = 0
STAGE_OCCLUSION = 1
STAGE_NOISE = 2
STAGE_FIXTURE = 3

_U64 = np.uint64
_MASK64 = (1 << 64) - 1
_INV53 = 2.0 ** -53


class SampleRng:
    """Deterministic draw stream for one (master_seed, sample_index, stage)."""

    def __init__(self, master_seed: int, sample_index: int, stage: int = STAGE_PARAMS):
        if sample_index < 0:
            raise ValueError("sample_index must be >= 0")
        if not 0 <= stage < 256:
            raise ValueError("stage must fit in 8 bits")
        self.master_seed = master_seed
        self.sample_index = sample_index
        self.stage = stage
        key = np.array(
            [master_seed & _MASK64, ((sample_index << 8) | stage) & _MASK64],
            dtype=_U64,
        )
        self._bg = np.random.Philox(key=key)

    def raw(self, n: int) -> np.ndarray:
        return np.asarray(self._bg.random_raw(n), dtype=_U64)

    def random(self, n: int | None = None):
        """Uniform doubles in [0, 1)."""
        m = 1 if n is None else n
        u = (self.raw(m) >> _U64(11)) * _INV53
        return float(u[0]) if n is None else u

    def uniform(self, lo: float, hi: float, n: int | None = None):
        u = self.random(n)
        return lo + (hi - lo) * u

    def index(self, bound: int, n: int | None = None):
        """Uniform integers in [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        u = self.random(n)
        if n is None:
            return min(int(u * bound), bound - 1)
        return np.minimum((u * bound).astype(np.int64), bound - 1)

    def normal(self, n: int, sigma: float = 1.0) -> np.ndarray:
        """Standard-deviation-sigma gaussians via Box-Muller pairs."""
        half = (n + 1) // 2
        raw = self.raw(2 * half)
        # open-interval uniform keeps log() finite
        u1 = ((raw[:half] >> _U64(11)).astype(np.float64) + 0.5) * _INV53
        u2 = (raw[half:] >> _U64(11)) * _INV53
        r = np.sqrt(-2.0 * np.log(u1))
        ang = (2.0 * math.pi) * u2
        z = np.concatenate([r * np.cos(ang), r * np.sin(ang)])[:n]
        return z * sigma

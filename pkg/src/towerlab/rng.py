"""Reproducible counter-based random streams.

Every stochastic routine in this package draws from an InnovationStream,
a thin wrapper around numpy's Philox counter-based generator keyed by
(seed, stream id).  Equal keys reproduce identical output; distinct stream
ids give statistically independent streams.  Stream ids for sub-tasks are
derived by hashing tags into the parent id, so a whole experiment is a pure
function of its master seed and its batch layout, never of worker count.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer; bijective scramble of a 64-bit word."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return (x ^ (x >> 31)) & MASK64


def derive_id(base: int, *tags) -> int:
    """Fold tags (ints or short strings) into a 64-bit stream id."""
    out = mix64(base)
    for tag in tags:
        if isinstance(tag, str):
            for ch in tag:
                out = mix64(out ^ ord(ch))
        else:
            out = mix64(out ^ (int(tag) & MASK64))
    return out


class InnovationStream:
    """Deterministic stream of uniforms / symbol draws.

    Same (seed, stream_id) always yields the same sequence. `position`
    counts variates drawn so far (bookkeeping only).
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & MASK64
        self.stream_id = int(stream_id) & MASK64
        self.position = 0
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def derive(self, *tags) -> "InnovationStream":
        """Fresh independent stream; id = hash of (this id, tags)."""
        return InnovationStream(self.seed, derive_id(self.stream_id, *tags))

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy generator, for distributions beyond uniforms.
        Draws advance the stream but are not counted in `position`."""
        return self._gen

    def uniforms(self, n: int) -> np.ndarray:
        self.position += int(n)
        return self._gen.random(n)

    def uniform(self) -> float:
        self.position += 1
        return float(self._gen.random())

    def symbols(self, cum_weights: np.ndarray, n: int) -> np.ndarray:
        """n iid draws from the distribution with cumulative weights."""
        u = self.uniforms(n)
        idx = np.searchsorted(cum_weights, u, side="right")
        return np.minimum(idx, len(cum_weights) - 1)

    def symbol(self, cum_weights: np.ndarray) -> int:
        return int(self.symbols(cum_weights, 1)[0])

    def __repr__(self):
        return (f"InnovationStream(seed={self.seed}, stream_id={self.stream_id}, "
                f"position={self.position})")

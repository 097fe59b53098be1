# src/tools/rng.py
# ────────────────────────────────────────────────────────────────────────────
# Deterministic, stateless random streams.  A stream is a value object keyed by
# (seed, stream_id); its draws come from numpy's counter-based Philox bit
# generator seeded through SeedSequence, so identical keys reproduce identical
# sequences on every platform and distinct keys are independent.

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """
    A reproducible random stream.

    Parallel work never shares a generator: each worker derives its own child
    stream with :meth:`child`, and the child key ``parent + (stream_id,)``
    decides its draws regardless of scheduling.
    """

    seed: int
    stream_id: int = 0
    parent: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= _MASK64 or not 0 <= self.stream_id <= _MASK64:
            raise ValueError("RngStream: seed and stream_id must be unsigned 64-bit integers.")

    @property
    def key(self) -> tuple[int, ...]:
        return self.parent + (self.stream_id,)

    def child(self, stream_id: int) -> "RngStream":
        """Independent sub-stream (e.g. one bootstrap or study replicate)."""
        return RngStream(self.seed, stream_id, self.key)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(seq))

    def derive_seed(self) -> int:
        """A 64-bit seed owned by this stream, for APIs that take a plain integer."""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return int(seq.generate_state(1, dtype=np.uint64)[0])


def resample_indices(n: int, rng: RngStream) -> np.ndarray:
    """``n`` i.i.d. uniform draws from ``{0, …, n-1}`` (bootstrap resample)."""
    if n < 1:
        raise ValueError("resample_indices: n must be >= 1.")
    return rng.generator().integers(0, n, size=n)

"""Counter-based random streams with reproducible random access.

Every Monte-Carlo routine in this package draws from an :class:`RngStream`.
The contract is that the block of variates consumed by global sample index
``j`` is a pure function of ``(seed, stream_id, j)``: results do not depend
on how a sample range is partitioned into batches, and therefore not on the
number of worker threads either.

The stream is backed by numpy's Philox generator, keyed on
``(seed, stream_id)``.  Philox emits 64-bit words in counter blocks of four,
so each sample occupies a block-aligned window of raw outputs (the window is
padded up to a multiple of four words).  Uniforms are mapped into the open
interval (0, 1) as ``((raw >> 12) + 0.5) * 2**-52``, which is exact in
float64 and never returns 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

_U64_MAX = 2**64 - 1
_CHILD_FANOUT = 2**16


@dataclass(frozen=True)
class RngStream:
    """Identifier of one reproducible stream of variates.

    ``seed`` names the experiment, ``stream_id`` the role within it.  Derived
    roles are created with :meth:`child`, which builds a 65536-ary tree in the
    64-bit ``stream_id`` space (at most four levels deep).
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
            if not 0 <= int(value) <= _U64_MAX:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")

    def child(self, index: int) -> "RngStream":
        """Derived stream for sub-role ``index`` (0 <= index < 65536)."""
        if not 0 <= index < _CHILD_FANOUT:
            raise ValueError(f"child index must be in [0, {_CHILD_FANOUT}), got {index}")
        if self.stream_id >= 2**48:
            raise ValueError("stream tree exceeds four levels; allocate ids manually")
        return RngStream(self.seed, self.stream_id * _CHILD_FANOUT + index)

    def uniforms(self, start: int, count: int, width: int = 1) -> np.ndarray:
        """Uniform draws in the open interval (0, 1), shape ``(count, width)``.

        Row ``j`` depends only on ``(seed, stream_id, start + j)``, so
        ``uniforms(0, n)`` equals ``uniforms(0, k)`` stacked on
        ``uniforms(k, n - k)`` for any split point ``k``.
        """
        if start < 0 or count < 0:
            raise ValueError("start and count must be nonnegative")
        if width < 1:
            raise ValueError("width must be at least 1")
        lanes = 4 * ((width + 3) // 4)  # per-sample window, block aligned
        first_block = (start * lanes) // 4
        if first_block + (count * lanes) // 4 > _U64_MAX:
            raise ValueError("sample range exceeds the counter space")
        bg = Philox(
            key=np.array([self.seed, self.stream_id], dtype=np.uint64),
            counter=np.array([first_block, 0, 0, 0], dtype=np.uint64),
        )
        raw = bg.random_raw(count * lanes).reshape(count, lanes)[:, :width]
        return ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52

    def normals(self, start: int, count: int, width: int = 1) -> np.ndarray:
        """Standard normal draws via the inverse CDF, shape ``(count, width)``."""
        return ndtri(self.uniforms(start, count, width))

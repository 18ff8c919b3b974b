"""Slope/rank block structures and block-shape predicates."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, InvalidSystem


@dataclass(frozen=True)
class BlockStructure:
    """Newton polygon data: strictly increasing integer slopes with ranks."""

    slopes: tuple
    ranks: tuple

    def __post_init__(self):
        slopes = tuple(int(s) for s in self.slopes)
        ranks = tuple(int(r) for r in self.ranks)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "ranks", ranks)
        if len(slopes) != len(ranks) or not slopes:
            raise InvalidSystem("slopes and ranks must be non-empty and of equal length")
        if any(r <= 0 for r in ranks):
            raise InvalidSystem("ranks must be positive")
        if any(b <= a for a, b in zip(slopes, slopes[1:])):
            raise InvalidSystem(f"slopes must be strictly increasing, got {slopes}")

    @property
    def k(self) -> int:
        return len(self.slopes)

    @property
    def n(self) -> int:
        return sum(self.ranks)

    @cached_property
    def offsets(self) -> tuple:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.ranks)]))

    def slice(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i + 1])

    def level(self, i: int, j: int) -> int:
        return self.slopes[j] - self.slopes[i]

    def pairs(self, delta: int | None = None) -> list:
        """Block pairs ``i < j``, ordered by level then lexicographically."""
        out = [(i, j) for i in range(self.k) for j in range(i + 1, self.k)]
        if delta is not None:
            out = [p for p in out if self.level(*p) == delta]
        return sorted(out, key=lambda p: (self.level(*p), p))

    def levels(self) -> list:
        return sorted({self.level(i, j) for i, j in self.pairs()})

    @cached_property
    def index_slopes(self) -> np.ndarray:
        return np.repeat(np.array(self.slopes), self.ranks)

    @cached_property
    def index_blocks(self) -> np.ndarray:
        return np.repeat(np.arange(self.k), self.ranks)

    def block(self, M, i: int, j: int) -> np.ndarray:
        return np.asarray(M)[self.slice(i), self.slice(j)]

    def check_square(self, M) -> np.ndarray:
        M = np.asarray(M, dtype=complex)
        if M.shape != (self.n, self.n):
            raise DimensionMismatch(f"expected {self.n}x{self.n} matrix, got {M.shape}")
        return M

    def level_mask(self, delta: int) -> np.ndarray:
        s = self.index_slopes
        return (s[None, :] - s[:, None]) == delta

    def upper_mask(self) -> np.ndarray:
        """Entries strictly above the diagonal blocks."""
        b = self.index_blocks
        return b[None, :] > b[:, None]

    def nilpotent_deviation(self, M) -> float:
        """Largest entry outside the strictly block-upper-triangular part."""
        M = self.check_square(M)
        off = np.where(self.upper_mask(), 0.0, M)
        return float(np.max(np.abs(off))) if off.size else 0.0

    def unipotent_deviation(self, M) -> float:
        M = self.check_square(M)
        return self.nilpotent_deviation(M - np.eye(self.n))

    def sub(self, upto: int) -> "BlockStructure":
        """Structure of the first ``upto + 1`` blocks."""
        return BlockStructure(self.slopes[: upto + 1], self.ranks[: upto + 1])


def as_structure(structure) -> BlockStructure:
    if isinstance(structure, BlockStructure):
        return structure
    if hasattr(structure, "structure"):
        return structure.structure
    # a bare rank list: slopes 0, 1, 2, ...
    ranks = tuple(structure)
    return BlockStructure(tuple(range(len(ranks))), ranks)

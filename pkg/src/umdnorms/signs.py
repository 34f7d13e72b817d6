"""Sign patterns on the dyadic tree."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator

import numpy as np

from .dyadic import HaarIndex, TreeRange

FAMILIES = ("alternating", "level", "free")


def tree_levels(depth: int) -> np.ndarray:
    """Level ``k`` of each index of the depth-``depth`` tree, in flat order."""
    return np.repeat(np.arange(1, depth + 1), [1 << (k - 1) for k in range(1, depth + 1)])


@dataclass(frozen=True)
class SignPattern:
    """Signs ``eps_k^(j)`` on the tree of depth ``depth`` (flat order).

    ``family`` records the smallest family the pattern was drawn from:
    ``alternating`` (the signs ``(-1)**k``), ``level`` (depends on ``k``
    only) or ``free``.
    """

    depth: int
    values: tuple[int, ...]
    family: str = "free"

    def __post_init__(self):
        if len(self.values) != (1 << self.depth) - 1:
            raise ValueError(f"depth {self.depth} needs {(1 << self.depth) - 1} signs, got {len(self.values)}")
        if any(v not in (1, -1) for v in self.values):
            raise ValueError("signs must be +1 or -1")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        levels = tree_levels(self.depth)
        arr = np.array(self.values)
        if self.family in ("level", "alternating"):
            for k in range(1, self.depth + 1):
                if len(set(arr[levels == k])) > 1:
                    raise ValueError(f"level pattern varies within level {k}")
        if self.family == "alternating" and not np.array_equal(arr, (-1) ** levels):
            raise ValueError("alternating pattern must be (-1)**k")

    @classmethod
    def alternating(cls, depth: int) -> SignPattern:
        return cls(depth, tuple(int(v) for v in (-1) ** tree_levels(depth)), "alternating")

    @classmethod
    def from_levels(cls, level_signs) -> SignPattern:
        level_signs = [int(s) for s in level_signs]
        depth = len(level_signs)
        values = tuple(level_signs[k - 1] for k in tree_levels(depth))
        pattern = cls(depth, values, "level")
        return cls.alternating(depth) if pattern.is_alternating() else pattern

    @classmethod
    def constant(cls, depth: int, sign: int = 1) -> SignPattern:
        return cls.from_levels([sign] * depth)

    @classmethod
    def from_array(cls, values, family: str = "free") -> SignPattern:
        values = tuple(int(v) for v in np.asarray(values).ravel())
        depth = (len(values) + 1).bit_length() - 1
        return cls(depth, values, family)

    @classmethod
    def from_mapping(cls, depth: int, mapping) -> SignPattern:
        values = [0] * ((1 << depth) - 1)
        for key, sign in mapping.items():
            values[HaarIndex(*key).flat] = int(sign)
        if 0 in values:
            raise ValueError("sign pattern is not total on the tree")
        return cls(depth, tuple(values))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def __getitem__(self, idx) -> int:
        idx = idx if isinstance(idx, HaarIndex) else HaarIndex(*idx)
        return self.values[idx.flat]

    def level_signs(self) -> list[int] | None:
        levels = tree_levels(self.depth)
        arr = np.array(self.values)
        out = []
        for k in range(1, self.depth + 1):
            vals = set(arr[levels == k].tolist())
            if len(vals) > 1:
                return None
            out.append(vals.pop())
        return out

    def is_alternating(self) -> bool:
        return np.array_equal(np.array(self.values), (-1) ** tree_levels(self.depth))

    def canonical(self) -> tuple[int, ...]:
        """Representative of ``{eps, -eps}``; both give the same transform norms."""
        if self.values[0] == 1:
            return self.values
        return tuple(-v for v in self.values)

    def flipped(self, flat: int) -> SignPattern:
        values = list(self.values)
        values[flat] = -values[flat]
        return SignPattern(self.depth, tuple(values), "free")

    def to_list(self) -> list[list[int]]:
        return [[idx.level, idx.position, self.values[idx.flat]] for idx in TreeRange(1, self.depth)]

    @classmethod
    def from_list(cls, depth: int, entries) -> SignPattern:
        return cls.from_mapping(depth, {(int(k), int(j)): int(s) for k, j, s in entries})


def level_patterns(depth: int) -> Iterator[SignPattern]:
    """All ``2**depth`` level patterns, starting with the alternating one."""
    alt = SignPattern.alternating(depth)
    yield alt
    for signs in product((1, -1), repeat=depth):
        pattern = SignPattern.from_levels(signs)
        if pattern.values != alt.values:
            yield pattern


def free_patterns(depth: int) -> Iterator[SignPattern]:
    """All ``2**(2**depth - 1)`` sign patterns on the tree."""
    size = (1 << depth) - 1
    for values in product((1, -1), repeat=size):
        yield SignPattern(depth, values)

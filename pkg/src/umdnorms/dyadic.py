"""Exact dyadic rationals, dyadic intervals and index sets of the dyadic tree."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterator


@total_ordering
@dataclass(frozen=True, init=False)
class DyadicRational:
    """The number ``numerator / 2**exponent`` in canonical form.

    The numerator is odd unless it is zero, in which case the exponent is 0.
    Negative exponents are folded into the numerator on construction.
    """

    numerator: int
    exponent: int

    def __init__(self, numerator: int, exponent: int = 0):
        numerator = int(numerator)
        exponent = int(exponent)
        if exponent < 0:
            numerator <<= -exponent
            exponent = 0
        if numerator == 0:
            exponent = 0
        else:
            # strip common factors of two
            shift = min((numerator & -numerator).bit_length() - 1, exponent)
            numerator >>= shift
            exponent -= shift
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "exponent", exponent)

    @classmethod
    def coerce(cls, value) -> DyadicRational:
        if isinstance(value, DyadicRational):
            return value
        if isinstance(value, int):
            return cls(value)
        if isinstance(value, Fraction):
            den = value.denominator
            if den & (den - 1):
                raise ValueError(f"{value} is not a dyadic rational")
            return cls(value.numerator, den.bit_length() - 1)
        raise TypeError(f"cannot convert {type(value).__name__} to DyadicRational")

    def _aligned(self, other: DyadicRational) -> tuple[int, int, int]:
        e = max(self.exponent, other.exponent)
        return self.numerator << (e - self.exponent), other.numerator << (e - other.exponent), e

    def __add__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, e = self._aligned(other)
        return DyadicRational(a + b, e)

    __radd__ = __add__

    def __neg__(self):
        return DyadicRational(-self.numerator, self.exponent)

    def __sub__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except TypeError:
            return NotImplemented
        return DyadicRational(self.numerator * other.numerator, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __eq__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.numerator == other.numerator and self.exponent == other.exponent

    def __lt__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        a, b, _ = self._aligned(other)
        return a < b

    def __hash__(self):
        return hash((self.numerator, self.exponent))

    def __float__(self):
        return self.numerator / (1 << self.exponent)

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __repr__(self):
        if self.exponent == 0:
            return f"DyadicRational({self.numerator})"
        return f"DyadicRational({self.numerator}/2^{self.exponent})"


@dataclass(frozen=True)
class DyadicInterval:
    """Half-open interval ``[(j-1)/2**k, j/2**k)``.

    Any integer position is allowed here; only :class:`HaarIndex` is
    restricted to the tree.
    """

    level: int
    position: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"level must be non-negative, got {self.level}")

    @property
    def left(self) -> DyadicRational:
        return DyadicRational(self.position - 1, self.level)

    @property
    def right(self) -> DyadicRational:
        return DyadicRational(self.position, self.level)

    @property
    def width(self) -> DyadicRational:
        return DyadicRational(1, self.level)

    def __contains__(self, t) -> bool:
        if not isinstance(t, DyadicRational):
            try:
                t = DyadicRational.coerce(t)
            except TypeError:
                t = float(t)
                return float(self.left) <= t < float(self.right)
        return self.left <= t < self.right

    def halves(self) -> tuple[DyadicInterval, DyadicInterval]:
        return (DyadicInterval(self.level + 1, 2 * self.position - 1),
                DyadicInterval(self.level + 1, 2 * self.position))

    def cells(self, resolution: int) -> range:
        """Zero-based indices of the resolution-``resolution`` cells covering this interval."""
        if resolution < self.level:
            raise ValueError("resolution coarser than the interval")
        span = 1 << (resolution - self.level)
        return range((self.position - 1) * span, self.position * span)


def interval(k: int, j: int) -> DyadicInterval:
    return DyadicInterval(k, j)


@total_ordering
@dataclass(frozen=True)
class HaarIndex:
    """Node ``(k, j)`` of the dyadic tree, ``k >= 1`` and ``1 <= j <= 2**(k-1)``."""

    level: int
    position: int

    def __post_init__(self):
        if self.level < 1 or not 1 <= self.position <= 1 << (self.level - 1):
            raise ValueError(f"({self.level}, {self.position}) is not in the dyadic tree")

    @property
    def support(self) -> DyadicInterval:
        return DyadicInterval(self.level - 1, self.position)

    @property
    def flat(self) -> int:
        """Zero-based position in the level-major enumeration of the tree."""
        return (1 << (self.level - 1)) - 1 + self.position - 1

    @classmethod
    def from_flat(cls, flat: int) -> HaarIndex:
        k = (flat + 1).bit_length()
        return cls(k, flat + 2 - (1 << (k - 1)))

    def children(self) -> tuple[HaarIndex, HaarIndex]:
        return (HaarIndex(self.level + 1, 2 * self.position - 1),
                HaarIndex(self.level + 1, 2 * self.position))

    def __lt__(self, other):
        if not isinstance(other, HaarIndex):
            return NotImplemented
        return (self.level, self.position) < (other.level, other.position)

    def __iter__(self):
        yield self.level
        yield self.position


def children(idx: HaarIndex) -> tuple[HaarIndex, HaarIndex]:
    return idx.children()


@dataclass(frozen=True)
class TreeRange:
    """The finite tree ``{(k, j) : lower <= k <= upper}``."""

    lower: int
    upper: int

    def __post_init__(self):
        if self.lower < 1:
            raise ValueError("tree levels start at 1")
        if self.lower > self.upper:
            raise ValueError(f"invalid range: lower {self.lower} > upper {self.upper}")

    def __len__(self) -> int:
        return (1 << self.upper) - (1 << (self.lower - 1))

    def __iter__(self) -> Iterator[HaarIndex]:
        for k in range(self.lower, self.upper + 1):
            for j in range(1, (1 << (k - 1)) + 1):
                yield HaarIndex(k, j)

    def __contains__(self, idx) -> bool:
        return isinstance(idx, HaarIndex) and self.lower <= idx.level <= self.upper


def tree(n: int, m: int = 1) -> TreeRange:
    """Shorthand for the tree with levels ``m..n``."""
    return TreeRange(m, n)


def enumerate_tree(r: TreeRange) -> list[HaarIndex]:
    return list(r)


def level(k: int) -> TreeRange:
    return TreeRange(k, k)

"""Measure-preserving interval swaps and cell permutations of ``[0, 1)``.

A :class:`CellPermutation` at resolution ``R`` moves every cell
``[c/2**R, (c+1)/2**R)`` rigidly onto cell ``perm[c]``.  Composition follows
point maps: ``compose(a, b)`` sends ``t`` to ``a(b(t))``, so that
``pushforward(f, compose(a, b)) == pushforward(pushforward(f, a), b)``.
In words, the left factor acts on functions first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicInterval, HaarIndex
from .haar import SPEC_TOL, HaarExpansion, StepFunction, analyze, synthesize

INV_SQRT2 = 1.0 / math.sqrt(2.0)


class PreconditionError(ValueError):
    """Raised when an input violates the stated precondition of a check."""


class CellPermutation:
    __slots__ = ("resolution", "perm")

    def __init__(self, perm, resolution: int | None = None):
        perm = np.array(perm, dtype=np.int64)
        if resolution is None:
            resolution = perm.size.bit_length() - 1
        if perm.shape != (1 << resolution,):
            raise ValueError(f"permutation at resolution {resolution} needs {1 << resolution} entries")
        if not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("not a permutation of the cells")
        perm.setflags(write=False)
        self.resolution = resolution
        self.perm = perm

    @classmethod
    def identity(cls, resolution: int = 0) -> CellPermutation:
        return cls(np.arange(1 << resolution), resolution)

    def refine(self, resolution: int) -> CellPermutation:
        """Split each cell into ``2**(resolution - R)`` children moved in order."""
        if resolution < self.resolution:
            raise ValueError("cannot coarsen a cell permutation")
        if resolution == self.resolution:
            return self
        span = 1 << (resolution - self.resolution)
        perm = (self.perm[:, None] * span + np.arange(span)[None, :]).ravel()
        return CellPermutation(perm, resolution)

    def __call__(self, t: float) -> float:
        """Image of a point under the point map."""
        t = float(t)
        scale = 1 << self.resolution
        c = math.floor(t * scale)
        return t + (int(self.perm[c]) - c) / scale

    def inverse(self) -> CellPermutation:
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.perm.size)
        return CellPermutation(inv, self.resolution)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.perm, np.arange(self.perm.size)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CellPermutation):
            return NotImplemented
        r = max(self.resolution, other.resolution)
        return bool(np.array_equal(self.refine(r).perm, other.refine(r).perm))

    __hash__ = None

    def to_dict(self) -> dict:
        return {"resolution": self.resolution, "permutation": self.perm.tolist()}

    @classmethod
    def from_dict(cls, doc) -> CellPermutation:
        return cls(doc["permutation"], int(doc["resolution"]))

    def __repr__(self):
        return f"CellPermutation(resolution={self.resolution})"


def compose(a: CellPermutation, b: CellPermutation) -> CellPermutation:
    """The point map ``t -> a(b(t))``."""
    r = max(a.resolution, b.resolution)
    a, b = a.refine(r), b.refine(r)
    return CellPermutation(a.perm[b.perm], r)


def compose_all(perms) -> CellPermutation:
    """``compose(p0, compose(p1, ...))``: ``p0`` acts on functions first."""
    result = CellPermutation.identity()
    for p in perms:
        result = compose(result, p)
    return result


def pushforward(f: StepFunction, sigma: CellPermutation) -> StepFunction:
    """The step function ``f o sigma``."""
    r = max(f.resolution, sigma.resolution)
    f, sigma = f.refine(r), sigma.refine(r)
    return StepFunction(f.cells[sigma.perm], r)


@dataclass(frozen=True)
class IntervalSwap:
    """The swap of the two middle quarters of the support of ``chi_h^(i)``."""

    h: int
    i: int

    def __post_init__(self):
        HaarIndex(self.h, self.i)

    @property
    def intervals(self) -> tuple[DyadicInterval, DyadicInterval]:
        return DyadicInterval(self.h + 1, 4 * self.i - 2), DyadicInterval(self.h + 1, 4 * self.i - 1)

    def permutation(self) -> CellPermutation:
        perm = np.arange(1 << (self.h + 1))
        left, right = 4 * self.i - 3, 4 * self.i - 2  # zero-based cells
        perm[left], perm[right] = right, left
        return CellPermutation(perm, self.h + 1)

    def to_list(self) -> list[int]:
        return [self.h, self.i]


def swap(h: int, i: int) -> CellPermutation:
    try:
        return IntervalSwap(h, i).permutation()
    except ValueError:
        raise ValueError(f"({h}, {i}) is not in the dyadic tree") from None


@dataclass(frozen=True)
class HaarAction:
    """The Haar expansion of ``chi_k^(j) o phi_h^(i)``.

    ``kind`` is one of ``unchanged``, ``child_average``, ``child_mix`` (the
    children of ``(h, i)``, which the main property never needs) and
    ``permuted_within_level`` (same level, position ``j*``).
    """

    kind: str
    terms: tuple[tuple[HaarIndex, float], ...]

    @property
    def target_position(self) -> int | None:
        if self.kind != "permuted_within_level":
            return None
        return self.terms[0][0].position

    def expansion(self, depth: int) -> HaarExpansion:
        return HaarExpansion.from_mapping({tuple(idx): [c] for idx, c in self.terms}, depth=depth, dim=1)


def haar_action(h: int, i: int, target: HaarIndex) -> HaarAction:
    HaarIndex(h, i)
    k, j = target
    if k < h or (k == h and j != i) or (k == h + 1 and j not in (2 * i - 1, 2 * i)):
        return HaarAction("unchanged", ((target, 1.0),))
    parent = HaarIndex(h, i)
    left, right = parent.children()
    if k == h:
        return HaarAction("child_average", ((left, INV_SQRT2), (right, INV_SQRT2)))
    if k == h + 1:
        sign = 1.0 if j == 2 * i - 1 else -1.0
        return HaarAction("child_mix", ((parent, INV_SQRT2), (left, 0.5 * sign), (right, -0.5 * sign)))
    # deeper levels: push the Haar function through the swap and read off j*
    unit = HaarExpansion.from_mapping({(k, j): [1.0]}, depth=k, dim=1)
    moved = analyze(pushforward(synthesize(unit, k), swap(h, i)), depth=k)
    row = moved.level(k)[:, 0]
    j_star = int(np.argmax(np.abs(row))) + 1
    residual = np.abs(moved.coefficients[:, 0]).sum() - abs(row[j_star - 1]) + abs(row[j_star - 1] - 1.0)
    if residual > 1e-9:
        raise ArithmeticError(f"chi_{k}^({j}) o phi_{h}^({i}) is not a single Haar function")
    return HaarAction("permuted_within_level", ((HaarIndex(k, j_star), 1.0),))


@dataclass(frozen=True)
class MainPropertyReport:
    h: int
    i: int
    coefficient: list[float]
    parent_residual: float
    left_residual: float
    right_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.parent_residual, self.left_residual, self.right_residual)

    def passed(self, tol: float = 1e-9) -> bool:
        return self.max_residual < tol


def check_main_property(expansion: HaarExpansion, h: int, i: int, tol: float = SPEC_TOL) -> MainPropertyReport:
    """Check that ``phi_h^(i)`` moves the ``(h, i)`` coefficient onto its children, scaled by 1/sqrt(2).

    Requires the two child coefficients to vanish.
    """
    parent = HaarIndex(h, i)
    left, right = parent.children()
    for child in (left, right):
        if np.max(np.abs(expansion[child]), initial=0.0) > tol:
            raise PreconditionError(f"coefficient at {tuple(child)} is not zero")
    depth = max(expansion.depth, h + 1)
    f = synthesize(expansion, depth)
    moved = analyze(pushforward(f, swap(h, i)), depth=depth)
    x = expansion[parent]
    expected = x * INV_SQRT2
    return MainPropertyReport(
        h=h,
        i=i,
        coefficient=x.tolist(),
        parent_residual=float(np.max(np.abs(moved[parent]))),
        left_residual=float(np.max(np.abs(moved[left] - expected))),
        right_residual=float(np.max(np.abs(moved[right] - expected))),
    )

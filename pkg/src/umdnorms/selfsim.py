"""Subtrees of the upper half of a tree and the rescaling identity of Haar functions.

The upper part of the tree of depth ``2n`` splits into ``2**n`` subtrees
``S_i``, one under each level-``n`` interval.  Each ``S_i`` is a copy of the
tree of depth ``n`` via ``(k, j) -> (k - n, j - (i - 1) * 2**(k - n - 1))``,
and on the ``i``-th level-``n`` interval the Haar functions of ``S_i`` are
rescaled Haar functions of depth ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicRational, HaarIndex, TreeRange
from .haar import HaarExpansion, haar_eval, l2x_norm, synthesize


def _check_subtree(i: int, n: int):
    if n < 1:
        raise ValueError("base depth must be at least 1")
    if not 1 <= i <= 1 << n:
        raise ValueError(f"subtree index {i} outside 1..{1 << n}")


def subtree_indices(i: int, n: int) -> list[HaarIndex]:
    _check_subtree(i, n)
    out = []
    for k in range(n + 1, 2 * n + 1):
        width = 1 << (k - n - 1)
        out.extend(HaarIndex(k, j) for j in range((i - 1) * width + 1, i * width + 1))
    return out


def subtree_of(idx: HaarIndex, n: int) -> int:
    """The ``i`` with ``idx`` in ``S_i``."""
    if not n + 1 <= idx.level <= 2 * n:
        raise ValueError(f"{tuple(idx)} is not in the upper part of the depth-{2 * n} tree")
    return (idx.position - 1) // (1 << (idx.level - n - 1)) + 1


def reindex(idx: HaarIndex, i: int, n: int) -> HaarIndex:
    _check_subtree(i, n)
    if not n + 1 <= idx.level <= 2 * n or subtree_of(idx, n) != i:
        raise ValueError(f"{tuple(idx)} is not in subtree {i} of base depth {n}")
    k, j = idx
    return HaarIndex(k - n, j - (i - 1) * (1 << (k - n - 1)))


def unreindex(idx: HaarIndex, i: int, n: int) -> HaarIndex:
    _check_subtree(i, n)
    if idx.level > n:
        raise ValueError(f"{tuple(idx)} is deeper than {n}")
    k, j = idx
    return HaarIndex(k + n, j + (i - 1) * (1 << (k - 1)))


@dataclass(frozen=True)
class RescalingReport:
    index: HaarIndex
    i: int
    n: int
    in_subtree: bool
    points: int
    max_residual: float


def check_rescaling(idx: HaarIndex, i: int, n: int, resolution: int | None = None) -> RescalingReport:
    """Compare ``chi_k^(j)((t + i - 1) / 2**n)`` with ``2**(n/2) chi_k'^(j')(t)`` at cell midpoints."""
    _check_subtree(i, n)
    k = idx.level
    r = max(k, 1) if resolution is None else resolution
    try:
        image = reindex(idx, i, n)
    except ValueError:
        image = None
    scale = math.sqrt(2.0) ** n
    worst = 0.0
    for c in range(1 << r):
        t = DyadicRational(2 * c + 1, r + 1)
        s = (t + (i - 1)) * DyadicRational(1, n)
        lhs = haar_eval(idx, s)
        rhs = scale * haar_eval(image, t) if image is not None else 0.0
        worst = max(worst, abs(lhs - rhs))
    return RescalingReport(idx, i, n, image is not None, 1 << r, worst)


def split_lower_upper(x: HaarExpansion, n: int) -> tuple[HaarExpansion, HaarExpansion]:
    """Lower part on levels ``1..n`` (carrying the mean) and upper part on ``n+1..2n``."""
    if x.depth != 2 * n:
        raise ValueError(f"expansion depth {x.depth} is not 2n = {2 * n}")
    cut = (1 << n) - 1
    lower = HaarExpansion(x.coefficients[:cut], n, x.mean)
    upper_coeffs = x.coefficients.copy()
    upper_coeffs[:cut] = 0.0
    return lower, HaarExpansion(upper_coeffs, 2 * n)


def pull_back(x: HaarExpansion, i: int, n: int) -> HaarExpansion:
    """The depth-``n`` tuple ``x_k'^(j') := x_k^(j)`` over ``(k, j)`` in ``S_i``."""
    out = np.zeros(((1 << n) - 1, x.dim))
    for idx in subtree_indices(i, n):
        out[reindex(idx, i, n).flat] = x[idx]
    return HaarExpansion(out, n)


@dataclass(frozen=True)
class FactorTwoReport:
    upper_norm: float
    full_norm: float
    ratio: float
    slack: float

    def passed(self, tol: float = 1e-10) -> bool:
        return self.slack >= -tol


def check_upper_bound_factor2(x: HaarExpansion, space) -> FactorTwoReport:
    """``||upper part||_2 <= 2 ||x||_2`` for an expansion of even depth."""
    if x.depth % 2:
        raise ValueError("expansion depth must be even")
    n = x.depth // 2
    _, upper = split_lower_upper(x, n)
    u = l2x_norm(synthesize(upper, 2 * n), space)
    full = l2x_norm(synthesize(x, 2 * n), space)
    ratio = u / full if full > 0 else 0.0
    return FactorTwoReport(u, full, ratio, 2.0 * full - u)


@dataclass(frozen=True)
class BlockwiseReport:
    n: int
    upper_norm: float
    block_norms: list[float]
    pullback_norms: list[float]
    sum_residual: float
    pullback_residual: float
    signed_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.sum_residual, self.pullback_residual, self.signed_residual)


def check_blockwise(x: HaarExpansion, space, operator=None, target_space=None) -> BlockwiseReport:
    """Verify the block decomposition of the upper part of ``x``.

    Checks ``U**2 = sum_i U_i**2`` where ``U_i`` integrates over the ``i``-th
    level-``n`` interval, and that each ``U_i`` equals the norm of the pulled
    back tuple on ``[0, 1)``.  With an operator, the same is checked for the
    alternating-sign transform ``sum (-1)**k T x_k^(j) chi_k^(j)``.
    """
    n = x.depth // 2
    _, upper = split_lower_upper(x, n)
    R = 2 * n
    cells = synthesize(upper, R).cells
    per_block = cells.reshape(1 << n, -1, x.dim)
    width = 0.5 ** R
    U = l2x_norm(synthesize(upper, R), space)
    blocks = [math.sqrt(float(np.sum(space.norms(b) ** 2)) * width) for b in per_block]
    pulled = [l2x_norm(synthesize(pull_back(x, i, n), n), space) for i in range(1, (1 << n) + 1)]
    scale = max(1.0, U)
    sum_residual = abs(U * U - sum(b * b for b in blocks)) / scale
    pullback_residual = max((abs(a - b) for a, b in zip(blocks, pulled)), default=0.0)

    signed_residual = 0.0
    if operator is not None:
        ts = target_space if target_space is not None else space
        levels = np.repeat(np.arange(1, R + 1), [1 << (k - 1) for k in range(1, R + 1)])
        alt = HaarExpansion(upper.coefficients * ((-1.0) ** levels)[:, None], R).apply(operator)
        alt_blocks = synthesize(alt, R).cells.reshape(1 << n, -1, ts.dim)
        for i in range(1, (1 << n) + 1):
            U_i = math.sqrt(float(np.sum(ts.norms(alt_blocks[i - 1]) ** 2)) * width)
            local = pull_back(x, i, n)
            k_levels = np.repeat(np.arange(1, n + 1), [1 << (k - 1) for k in range(1, n + 1)])
            signs = (-1.0) ** (k_levels + n)
            pulled_alt = HaarExpansion(local.coefficients * signs[:, None], n).apply(operator)
            signed_residual = max(signed_residual, abs(U_i - l2x_norm(synthesize(pulled_alt, n), ts)))
    return BlockwiseReport(n, U, blocks, pulled, sum_residual, pullback_residual, signed_residual)


def lower_upper_additivity(x: HaarExpansion, n: int) -> float:
    """Max pointwise deviation of ``synth(lower) + synth(upper)`` from ``synth(x)``."""
    lower, upper = split_lower_upper(x, n)
    total = synthesize(lower, 2 * n) + synthesize(upper, 2 * n)
    return float(np.max(np.abs(total.cells - synthesize(x, 2 * n).cells)))


def all_subtrees_cover(n: int) -> bool:
    seen = set()
    for i in range(1, (1 << n) + 1):
        block = set(subtree_indices(i, n))
        if seen & block:
            return False
        seen |= block
    return seen == set(TreeRange(n + 1, 2 * n))

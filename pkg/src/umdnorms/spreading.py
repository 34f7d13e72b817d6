"""Spectrum spreading: reducing arbitrary sign changes to alternating ones.

Given a tuple ``x`` on the tree of depth ``n`` and signs ``eps``, the
construction produces a cell permutation ``psi`` at resolution ``2n`` with

    <f_eps o psi, chi_k^(j)> = (-1)**k <f o psi, chi_k^(j)>   for all (k, j),

where ``f`` and ``f_eps`` are the synthesized martingale and its transform.
``psi`` is built in two stages.  The first moves level ``k`` of the
spectrum to level ``2k - 1`` by repeated interval swaps, so only odd
levels carry mass.  The second swaps away, onto the even level below,
every odd-level coefficient whose sign agrees between ``f`` and ``f_eps``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import HaarIndex, TreeRange
from .haar import SPEC_TOL, HaarExpansion, analyze, l2x_norm, synthesize
from .signs import SignPattern
from .swaps import CellPermutation, IntervalSwap, compose, compose_all, pushforward


class ConstructionError(ArithmeticError):
    """A spectral fact claimed by the construction failed its numerical check."""


@dataclass(frozen=True)
class SpreadSchedule:
    """Swaps in the order they act on functions."""

    swaps: tuple[IntervalSwap, ...]
    source_depth: int
    target_depth: int

    def permutation(self) -> CellPermutation:
        perm = compose_all(s.permutation() for s in self.swaps)
        return perm.refine(max(perm.resolution, 2 * self.source_depth))

    def to_list(self) -> list[list[int]]:
        return [s.to_list() for s in self.swaps]


def spread_schedule(n: int) -> SpreadSchedule:
    if n < 1:
        raise ValueError("depth must be at least 1")
    swaps = []
    for source in range(n, 1, -1):
        # level `source` climbs one level per sweep until it sits on 2*source - 1
        for h in range(source, 2 * source - 1):
            swaps.extend(IntervalSwap(h, i) for i in range(1, (1 << (h - 1)) + 1))
    return SpreadSchedule(tuple(swaps), n, 2 * n - 1)


def build_psi1(n: int) -> tuple[CellPermutation, SpreadSchedule]:
    schedule = spread_schedule(n)
    return schedule.permutation(), schedule


def _coefficients(x: HaarExpansion, signs: SignPattern | None, sigma: CellPermutation, depth: int) -> HaarExpansion:
    if signs is not None:
        x = x.scale_signs(signs.array)
    f = synthesize(x, max(depth, x.depth, sigma.resolution))
    return analyze(pushforward(f, sigma), depth=depth)


@dataclass
class DeltaSigns:
    """Signs on the odd levels of the tree of depth ``2n - 1``."""

    depth: int
    signs: dict[HaarIndex, int] = field(default_factory=dict)

    def __getitem__(self, idx) -> int:
        idx = idx if isinstance(idx, HaarIndex) else HaarIndex(*idx)
        return self.signs.get(idx, -1)

    def plus(self) -> list[HaarIndex]:
        return sorted(idx for idx, s in self.signs.items() if s == 1)

    def to_list(self) -> list[list[int]]:
        return [[idx.level, idx.position, s] for idx, s in sorted(self.signs.items())]


def extract_delta(x: HaarExpansion, eps: SignPattern, psi1: CellPermutation,
                  tol: float = SPEC_TOL, ratio_tol: float = 1e-9) -> DeltaSigns:
    """Read off the sign relating ``f_eps o psi1`` to ``f o psi1`` at each odd-level index.

    Indices where ``f o psi1`` vanishes get ``-1``.
    """
    n = x.depth
    if eps.depth != n:
        raise ValueError(f"sign pattern has depth {eps.depth}, expansion has depth {n}")
    depth = 2 * n - 1
    plain = _coefficients(x, None, psi1, depth)
    signed = _coefficients(x, eps, psi1, depth)
    delta = DeltaSigns(depth)
    for k in range(1, depth + 1, 2):
        for j in range(1, (1 << (k - 1)) + 1):
            idx = HaarIndex(k, j)
            a, b = plain[idx], signed[idx]
            live = np.abs(a) > tol
            if not live.any():
                delta.signs[idx] = -1
                continue
            ratios = b[live] / a[live]
            sign = 1 if ratios[0] > 0 else -1
            if np.max(np.abs(ratios - sign)) > ratio_tol:
                raise ConstructionError(f"coefficient ratio at {tuple(idx)} is {ratios.tolist()}, not +-1")
            delta.signs[idx] = sign
    return delta


def psi2_swaps(delta: DeltaSigns, shallow_first: bool = False) -> list[IntervalSwap]:
    """Swaps ``phi_(2k-1)^(j)`` with ``delta = +1``, in function-action order.

    The deepest level acts first: a swap at level ``h`` permutes positions on
    every level below ``h + 1``, which would invalidate the positions recorded
    in ``delta`` for deeper levels not yet processed.  As point maps this is
    increasing level order.  ``shallow_first`` reverses it, for testing only.
    """
    plus = delta.plus()
    plus.sort(key=lambda idx: (-idx.level, idx.position))
    if shallow_first:
        plus.sort(key=lambda idx: (idx.level, idx.position))
    return [IntervalSwap(idx.level, idx.position) for idx in plus]


def build_psi2(delta: DeltaSigns, n: int, shallow_first: bool = False) -> CellPermutation:
    perm = compose_all(s.permutation() for s in psi2_swaps(delta, shallow_first))
    return perm.refine(max(perm.resolution, 2 * n))


@dataclass
class SpreadCertificate:
    depth: int
    residuals: dict[HaarIndex, float]
    norm_residuals: dict[str, float]
    max_residual: float
    worst_index: HaarIndex | None
    passed: bool

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "max_residual": self.max_residual,
            "worst_index": list(self.worst_index) if self.worst_index else None,
            "norm_residuals": dict(self.norm_residuals),
            "passed": self.passed,
            "residuals": [[idx.level, idx.position, r] for idx, r in sorted(self.residuals.items())],
        }


@dataclass
class Reduction:
    psi: CellPermutation
    psi1: CellPermutation
    psi2: CellPermutation
    schedule: SpreadSchedule
    delta: DeltaSigns
    certificate: SpreadCertificate
    f_psi: HaarExpansion
    f_eps_psi: HaarExpansion


def reduce_to_alternating(x: HaarExpansion, eps: SignPattern, space=None, target_space=None,
                          operator=None, tol: float = SPEC_TOL, norm_tol: float = 1e-12,
                          strict: bool = True, shallow_first: bool = False) -> Reduction:
    """Build ``psi`` and certify the alternating-sign identity on the tree of depth ``2n``.

    With ``space`` given, also certifies that ``psi`` preserves the
    ``L_2^X`` norms of ``f`` and ``f_eps`` (and of ``T f_eps`` in
    ``target_space`` when an operator matrix is supplied).
    """
    n = x.depth
    if eps.depth != n:
        raise ValueError(f"sign pattern has depth {eps.depth}, expansion has depth {n}")
    psi1, schedule = build_psi1(n)
    delta = extract_delta(x, eps, psi1, tol)
    psi2 = build_psi2(delta, n, shallow_first)
    psi = compose(psi1, psi2)

    depth = 2 * n
    plain = _coefficients(x, None, psi, depth)
    signed = _coefficients(x, eps, psi, depth)
    residuals = {}
    for idx in TreeRange(1, depth):
        sign = -1.0 if idx.level % 2 else 1.0
        residuals[idx] = float(np.max(np.abs(signed[idx] - sign * plain[idx])))
    worst = max(residuals, key=residuals.get)
    max_residual = residuals[worst]

    norm_residuals = {}
    if space is not None:
        f = synthesize(x, depth)
        f_eps = synthesize(x.scale_signs(eps.array), depth)
        norm_residuals["f"] = abs(l2x_norm(pushforward(f, psi), space) - l2x_norm(f, space))
        norm_residuals["f_eps"] = abs(l2x_norm(pushforward(f_eps, psi), space) - l2x_norm(f_eps, space))
        if operator is not None:
            Tf = f_eps.apply(operator)
            ts = target_space if target_space is not None else space
            norm_residuals["T_f_eps"] = abs(l2x_norm(pushforward(Tf, psi), ts) - l2x_norm(Tf, ts))
    passed = max_residual < tol and all(r <= norm_tol for r in norm_residuals.values())
    certificate = SpreadCertificate(depth, residuals, norm_residuals, max_residual,
                                    worst if max_residual > 0 else None, passed)
    if strict and not passed:
        raise ConstructionError(
            f"alternating identity fails at {tuple(worst)} with residual {max_residual:.3e}"
            if max_residual >= tol else f"norm preservation fails: {norm_residuals}"
        )
    return Reduction(psi, psi1, psi2, schedule, delta, certificate, plain, signed)

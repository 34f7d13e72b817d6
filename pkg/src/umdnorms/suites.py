"""Exhaustive and randomized identity suites shared by the CLI and the tests.

Each suite returns a ``SuiteResult`` holding its case count and worst
residual; ``passed`` compares that residual with the suite's tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import HaarIndex, TreeRange
from .haar import (HaarExpansion, StepFunction, analyze, conditional_expectation, l2x_norm,
                   synthesis_matrix, synthesize)
from .selfsim import check_blockwise, check_rescaling, check_upper_bound_factor2
from .spaces import NormedSpace
from .swaps import check_main_property, haar_action, pushforward, swap


@dataclass(frozen=True)
class SuiteResult:
    name: str
    cases: int
    max_residual: float
    tol: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def to_dict(self) -> dict:
        return {"suite": self.name, "cases": self.cases, "max_residual": self.max_residual,
                "tol": self.tol, "passed": self.passed, "detail": self.detail}


def _unit(idx: HaarIndex, depth: int) -> HaarExpansion:
    coeffs = np.zeros(((1 << depth) - 1, 1))
    coeffs[idx.flat] = 1.0
    return HaarExpansion(coeffs, depth)


def orthonormality(max_level: int = 8, tol: float = 1e-12, seed: int = 0) -> SuiteResult:
    """Gram matrix of all Haar functions through ``max_level`` plus a round trip per depth."""
    H = synthesis_matrix(max_level)
    full = np.hstack([np.ones((1 << max_level, 1)), H])
    gram = full.T @ full / (1 << max_level)
    worst = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    rng = np.random.default_rng([seed, 11])
    for depth in range(1, max_level + 1):
        x = HaarExpansion(rng.standard_normal(((1 << depth) - 1, 3)), depth, rng.standard_normal(3))
        back = analyze(synthesize(x))
        worst = max(worst, float(np.max(np.abs(back.coefficients - x.coefficients))),
                    float(np.max(np.abs(back.mean - x.mean))))
    return SuiteResult("orthonormality", gram.size + max_level, worst, tol)


def shifted_position(h: int, i: int, k: int, j: int) -> int:
    """Closed-form level-``k`` position of ``chi_k^(j) o phi_h^(i)`` for ``k > h + 1``.

    Functions supported in the left middle quarter of ``supp chi_h^(i)``
    move right by ``2**(k - h - 2)`` positions, those in the right middle
    quarter move left by the same amount; the rest stay.
    """
    shift = 1 << (k - h - 2)
    block = (j - 1) // shift  # zero-based level-(h+1) cell holding the support
    if block == 4 * i - 3:
        return j + shift
    if block == 4 * i - 2:
        return j - shift
    return j


def composition_table(max_h: int = 5, max_k: int = 6, tol: float = 1e-12) -> SuiteResult:
    """Every ``chi_k^(j) o phi_h^(i)`` against its predicted Haar expansion.

    For ``k > h + 1`` the image is also required to match the closed-form
    position and to permute level ``k``.
    """
    worst, cases, bad = 0.0, 0, []
    for h in range(1, max_h + 1):
        for i in range(1, (1 << (h - 1)) + 1):
            depth = max(max_k, h + 1)
            sigma = swap(h, i)
            for k in range(1, max_k + 1):
                images = []
                for j in range(1, (1 << (k - 1)) + 1):
                    idx = HaarIndex(k, j)
                    moved = analyze(pushforward(synthesize(_unit(idx, depth), depth), sigma), depth)
                    action = haar_action(h, i, idx)
                    expected = action.expansion(depth)
                    worst = max(worst, float(np.max(np.abs(moved.coefficients - expected.coefficients))),
                                float(np.max(np.abs(moved.mean))))
                    cases += 1
                    if k > h + 1:
                        images.append(action.target_position)
                        if action.target_position != shifted_position(h, i, k, j):
                            bad.append((h, i, k, j))
                if k > h + 1 and sorted(images) != list(range(1, (1 << (k - 1)) + 1)):
                    bad.append((h, i, k))
    if bad:
        worst = float("inf")
    return SuiteResult("composition_table", cases, worst, tol,
                       f"position mismatches: {bad[:5]}" if bad else "")


def main_property(cases: int = 500, max_depth: int = 6, tol: float = 1e-9, seed: int = 0) -> SuiteResult:
    """Random expansions with the children of ``(h, i)`` zeroed keep their mass under the swap."""
    rng = np.random.default_rng([seed, 13])
    worst = 0.0
    for _ in range(cases):
        depth = int(rng.integers(2, max_depth + 1))
        h = int(rng.integers(1, depth))
        i = int(rng.integers(1, (1 << (h - 1)) + 1))
        m = int(rng.integers(1, 4))
        x = rng.standard_normal(((1 << depth) - 1, m))
        for child in HaarIndex(h, i).children():
            x[child.flat] = 0.0
        report = check_main_property(HaarExpansion(x, depth), h, i)
        worst = max(worst, report.max_residual)
    return SuiteResult("main_property", cases, worst, tol)


def self_similarity(max_n: int = 3, tol: float = 1e-12) -> SuiteResult:
    """Rescaling identity for every index on levels ``n+1..2n`` and every block ``i``.

    Indices outside ``S_i`` must vanish on the ``i``-th block; lower levels
    are constant there and take no part in the identity.
    """
    worst, cases = 0.0, 0
    for n in range(1, max_n + 1):
        for i in range(1, (1 << n) + 1):
            for idx in TreeRange(n + 1, 2 * n):
                report = check_rescaling(idx, i, n, resolution=2 * n)
                worst = max(worst, report.max_residual)
                cases += 1
    return SuiteResult("self_similarity", cases, worst, tol)


def _random_space(rng, dim: int) -> NormedSpace:
    return NormedSpace.lp([1.0, 2.0, 3.0, float("inf")][int(rng.integers(4))], dim)


def factor_two(cases: int = 500, max_n: int = 3, tol: float = 1e-10, seed: int = 0) -> SuiteResult:
    """Factor-two bound on the upper part and the blockwise norm identity."""
    rng = np.random.default_rng([seed, 17])
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, max_n + 1))
        m = int(rng.integers(1, 4))
        space = _random_space(rng, m)
        x = HaarExpansion(rng.standard_normal(((1 << (2 * n)) - 1, m)), 2 * n)
        A = rng.standard_normal((m, m))
        worst = max(worst, -check_upper_bound_factor2(x, space).slack,
                    check_blockwise(x, space, operator=A).max_residual)
    return SuiteResult("factor_two_blockwise", cases, max(worst, 0.0), tol)


def contraction(cases: int = 1000, max_resolution: int = 6, tol: float = 1e-12, seed: int = 0) -> SuiteResult:
    """``||E_k f||_2 <= ||f||_2`` for random step functions, levels and spaces."""
    rng = np.random.default_rng([seed, 19])
    worst = 0.0
    for _ in range(cases):
        r = int(rng.integers(1, max_resolution + 1))
        m = int(rng.integers(1, 4))
        space = _random_space(rng, m)
        f = StepFunction(rng.standard_normal((1 << r, m)), r)
        k = int(rng.integers(0, r + 1))
        excess = l2x_norm(conditional_expectation(f, k), space) - l2x_norm(f, space)
        worst = max(worst, excess)
    return SuiteResult("contraction", cases, max(worst, 0.0), tol)


def run_all(max_level: int = 8, seed: int = 0, tol_spec: float = 1e-9,
            tol_roundtrip: float = 1e-12) -> list[SuiteResult]:
    """All suites, scaled down consistently when ``max_level`` is small."""
    if max_level < 1:
        raise ValueError("max level must be at least 1")
    return [
        orthonormality(max_level, tol_roundtrip, seed=seed),
        composition_table(max(1, min(5, max_level - 1)), min(6, max_level), tol_roundtrip),
        main_property(500, max(2, min(6, max_level)), tol_spec, seed=seed),
        self_similarity(max(1, min(3, max_level // 2)), tol_roundtrip),
        factor_two(500, max(1, min(3, max_level // 2)), seed=seed),
        contraction(1000, max(1, min(6, max_level)), seed=seed),
    ]

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from umdnorms.dyadic import HaarIndex, TreeRange
from umdnorms.haar import HaarExpansion, analyze, l2x_norm, synthesize
from umdnorms.signs import SignPattern
from umdnorms.spaces import NormedSpace
from umdnorms.spreading import (ConstructionError, DeltaSigns, build_psi1, build_psi2, extract_delta,
                                psi2_swaps, reduce_to_alternating, spread_schedule)
from umdnorms.swaps import IntervalSwap, compose, pushforward, swap


def random_case(rng, n, m):
    x = HaarExpansion(rng.standard_normal((2 ** n - 1, m)), n)
    eps = SignPattern.from_array(rng.choice([-1, 1], 2 ** n - 1))
    return x, eps


def after_psi1(x, n):
    psi1, _ = build_psi1(n)
    return analyze(pushforward(synthesize(x, 2 * n), psi1), depth=2 * n)


def test_psi1_examples():
    psi1, sched = build_psi1(1)
    assert psi1.is_identity() and sched.swaps == ()
    _, sched = build_psi1(2)
    assert [s.to_list() for s in sched.swaps] == [[2, 1], [2, 2]]
    _, sched = build_psi1(3)
    levels = [s.h for s in sched.swaps]
    assert levels == [3] * 4 + [4] * 8 + [2] * 2
    assert sched.target_depth == 5


def test_psi1_lands_on_odd_levels():
    rng = np.random.default_rng(0)
    for n in range(1, 6):
        x = HaarExpansion(rng.standard_normal((2 ** n - 1, 2)), n)
        y = after_psi1(x, n)
        for k in range(2, 2 * n + 1, 2):
            assert np.max(np.abs(y.level(k))) < 1e-9
        occupied = {k for k in range(1, 2 * n + 1) if np.max(np.abs(y.level(k))) > 1e-9}
        assert occupied == set(range(1, 2 * n, 2))


def test_psi1_moves_each_level_with_its_mass():
    rng = np.random.default_rng(1)
    for n in range(1, 5):
        for idx in TreeRange(1, n):
            v = rng.standard_normal(2)
            x = HaarExpansion.from_mapping({tuple(idx): v}, depth=n)
            y = after_psi1(x, n)
            target = y.level(2 * idx.level - 1)
            assert abs(np.sum(target ** 2) - np.sum(v ** 2)) < 1e-10
            assert abs(np.sum(y.coefficients ** 2) - np.sum(v ** 2)) < 1e-10
            # spread evenly: every nonzero descendant carries v / sqrt(2)**shifts
            live = target[np.abs(target).max(axis=1) > 1e-12]
            shifts = idx.level - 1
            assert len(live) == 2 ** shifts
            assert np.allclose(live, v / math.sqrt(2.0) ** shifts, atol=1e-12)


def test_extract_delta_examples():
    rng = np.random.default_rng(2)
    x = HaarExpansion(rng.standard_normal((7, 2)), 3)
    psi1, _ = build_psi1(3)
    delta = extract_delta(x, SignPattern.constant(3, 1), psi1)
    assert all(s == 1 for s in delta.signs.values())

    x1 = HaarExpansion.from_mapping({(1, 1): [0.5, -1.0]})
    d1 = extract_delta(x1, SignPattern.from_array([-1]), build_psi1(1)[0])
    assert d1[(1, 1)] == -1

    for _ in range(20):
        x, eps = random_case(rng, 3, 3)
        d = extract_delta(x, eps, psi1)
        assert set(d.signs.values()) <= {-1, 1}
        assert set(d.signs) == {idx for k in (1, 3, 5) for idx in TreeRange(k, k)}


def test_extract_delta_zero_coefficient_convention():
    x = HaarExpansion.from_mapping({(1, 1): [1.0]}, depth=2)
    eps = SignPattern.from_array([1, 1, -1])
    d = extract_delta(x, eps, build_psi1(2)[0])
    assert d[(1, 1)] == 1
    assert d[(3, 1)] == -1 and d[(3, 4)] == -1


def test_psi2_examples():
    assert build_psi2(DeltaSigns(3), 2).is_identity()
    d = DeltaSigns(3, {HaarIndex(1, 1): 1})
    assert build_psi2(d, 1) == swap(1, 1)
    d = DeltaSigns(3, {HaarIndex(1, 1): 1, HaarIndex(3, 2): 1, HaarIndex(3, 1): -1})
    assert psi2_swaps(d) == [IntervalSwap(3, 2), IntervalSwap(1, 1)]
    # as a point map the shallow swap is applied last
    assert build_psi2(d, 2) == compose(swap(3, 2), swap(1, 1))


def test_alternating_input_swaps_only_even_source_levels():
    """Source level k lands on level 2k - 1 and keeps sign (-1)**k there, so delta = (-1)**k."""
    rng = np.random.default_rng(3)
    for n in range(1, 5):
        x = HaarExpansion(rng.standard_normal((2 ** n - 1, 2)), n)
        red = reduce_to_alternating(x, SignPattern.alternating(n))
        assert red.certificate.max_residual < 1e-9
        for k in range(1, n + 1):
            for idx in TreeRange(2 * k - 1, 2 * k - 1):
                assert red.delta[idx] == (-1) ** k
        assert red.psi2.is_identity() == (n == 1)


def test_depth_one_passes():
    for s in (1, -1):
        x = HaarExpansion.from_mapping({(1, 1): [2.0, 1.0]})
        red = reduce_to_alternating(x, SignPattern.from_array([s]), space=NormedSpace.lp(1, 2))
        assert red.certificate.passed
        assert red.psi2.is_identity() == (s == -1)


def test_reduction_random_cases():
    rng = np.random.default_rng(4)
    for _ in range(40):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 4))
        x, eps = random_case(rng, n, m)
        for p in (1.0, 2.0, math.inf):
            space = NormedSpace.lp(p, m)
            red = reduce_to_alternating(x, eps, space=space, operator=rng.standard_normal((m, m)))
            assert red.certificate.max_residual < 1e-9
            assert max(red.certificate.norm_residuals.values()) < 1e-10
            assert red.psi.resolution == 2 * n


def test_deepest_first_order_is_required():
    """Applying the psi2 swaps to functions shallowest first breaks the certificate."""
    rng = np.random.default_rng(5)
    broken = 0
    for _ in range(10):
        x, eps = random_case(rng, 3, 2)
        assert reduce_to_alternating(x, eps).certificate.passed
        bad = reduce_to_alternating(x, eps, strict=False, shallow_first=True)
        broken += not bad.certificate.passed
    assert broken > 0
    x, eps = random_case(np.random.default_rng(6), 3, 2)
    with pytest.raises(ConstructionError):
        for _ in range(20):
            reduce_to_alternating(x, eps, shallow_first=True)
            x, eps = random_case(rng, 3, 2)


def test_certificate_serializes():
    rng = np.random.default_rng(7)
    x, eps = random_case(rng, 2, 1)
    doc = reduce_to_alternating(x, eps, space=NormedSpace.lp(2, 1)).certificate.to_dict()
    assert len(doc["residuals"]) == 15
    assert set(doc["norm_residuals"]) == {"f", "f_eps"}


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_psi_preserves_every_norm(n, m, seed):
    rng = np.random.default_rng(seed)
    x, eps = random_case(rng, n, m)
    red = reduce_to_alternating(x, eps)
    f = synthesize(x, 2 * n)
    for space in (NormedSpace.lp(1.5, m), NormedSpace.lp(math.inf, m)):
        for sigma in (red.psi, red.psi1, red.psi2):
            assert abs(l2x_norm(pushforward(f, sigma), space) - l2x_norm(f, space)) < 1e-12


def test_schedule_lengths():
    # level k climbs k - 1 times, each sweep at level h uses all 2**(h-1) swaps
    for n in range(1, 6):
        expected = sum(2 ** (h - 1) for L in range(2, n + 1) for h in range(L, 2 * L - 1))
        assert len(spread_schedule(n).swaps) == expected

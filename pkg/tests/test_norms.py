import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from umdnorms.haar import HaarExpansion, l2x_norm, synthesize
from umdnorms.norms import (Budget, Estimator, estimate_norm, max_ratio_over_tuples, transform_ratio,
                            verify_chain, verify_prop1, verify_prop2)
from umdnorms.signs import SignPattern, free_patterns, level_patterns
from umdnorms.spaces import NormedSpace, Operator

SMALL = Budget(restarts=12, iterations=300)
L1 = NormedSpace.lp(1, 2)
LINF = NormedSpace.lp(math.inf, 2)
E2 = NormedSpace.lp(2, 2)


def direct_ratio(T, x, eps):
    """Ratio computed from step functions, independent of the batched kernels."""
    num = l2x_norm(synthesize(x.scale_signs(eps.array).apply(T.matrix)), T.target)
    return num / l2x_norm(synthesize(x), T.source)


def test_transform_ratio_examples():
    rng = np.random.default_rng(0)
    I = Operator.identity(E2)
    x = HaarExpansion(rng.standard_normal((3, 2)), 2)
    for eps in free_patterns(2):
        assert transform_ratio(I, x, eps) == pytest.approx(1.0, abs=1e-12)
    T = Operator([[2.0]], NormedSpace.lp(2, 1), NormedSpace.lp(2, 1))
    assert transform_ratio(T, HaarExpansion([[0.7]], 1), SignPattern.alternating(1)) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        transform_ratio(I, HaarExpansion(np.zeros((3, 2)), 2), SignPattern.alternating(2))
    with pytest.raises(ValueError):
        transform_ratio(I, x, SignPattern.alternating(3))


def test_transform_ratio_matches_direct_computation():
    rng = np.random.default_rng(1)
    for p in (1.0, 1.5, math.inf):
        X, Y = NormedSpace.lp(p, 3), NormedSpace.lp(2 if p != 2 else 1, 2)
        T = Operator(rng.standard_normal((2, 3)), X, Y)
        for n in (1, 2, 3):
            x = HaarExpansion(rng.standard_normal((2 ** n - 1, 3)), n)
            eps = SignPattern.from_array(rng.choice([-1, 1], 2 ** n - 1))
            assert transform_ratio(T, x, eps) == pytest.approx(direct_ratio(T, x, eps), rel=1e-12)


def test_max_ratio_examples():
    T = Operator(np.diag([3.0, 1.0]), E2, E2)
    opt = max_ratio_over_tuples(T, SignPattern.alternating(2))
    assert opt.method == "exact-euclidean"
    assert opt.ratio == pytest.approx(3.0, abs=1e-10)
    I1 = Operator.identity(L1)
    opt = max_ratio_over_tuples(I1, SignPattern.constant(2, 1), budget=SMALL)
    assert opt.ratio == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        max_ratio_over_tuples(I1, SignPattern.constant(2, 1), n=3)


def test_max_ratio_against_sampling_oracle():
    I1 = Operator.identity(L1)
    eps = SignPattern.from_levels([1, -1])
    opt = max_ratio_over_tuples(I1, eps, budget=SMALL)
    assert direct_ratio(I1, opt.witness, eps) == pytest.approx(opt.ratio, abs=1e-12)

    def neg(v):
        x = HaarExpansion(v.reshape(3, 2), 2)
        return -direct_ratio(I1, x, eps) if np.any(v) else 0.0

    rng = np.random.default_rng(2)
    oracle = max(-neg(v) for v in rng.standard_normal((2000, 6)))
    for _ in range(20):
        res = minimize(neg, rng.standard_normal(6), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 3000})
        oracle = max(oracle, -res.fun)
    assert abs(opt.ratio - oracle) < 2e-3
    assert opt.ratio == pytest.approx(1.0, abs=2e-3)


def test_estimate_examples():
    for lam in (0.5, 2.0, 3.0):
        est = estimate_norm(Operator.identity(E2).scaled(lam), 2, "free")
        assert est.value == pytest.approx(max(1.0, lam), abs=1e-9)
        assert est.unclamped == pytest.approx(lam, abs=1e-9)
        assert not est.heuristic
    est = estimate_norm(Operator.identity(L1), 1, "free", SMALL)
    assert est.value == pytest.approx(1.0, abs=1e-9)
    assert est.method == "brute-force"
    with pytest.raises(ValueError):
        estimate_norm(Operator.identity(L1), 0, "free")
    with pytest.raises(ValueError):
        estimate_norm(Operator.identity(L1), 1, "diagonal")


def test_estimate_counts_patterns():
    est = Estimator(Operator.identity(L1), SMALL)
    assert est.estimate(2, "alternating").patterns_evaluated == 1
    assert est.estimate(2, "level").patterns_evaluated == 4
    assert est.estimate(2, "free").patterns_evaluated == 1 + 8


def test_chain_euclidean_slack():
    rng = np.random.default_rng(3)
    T = Operator(rng.standard_normal((2, 2)) * 3, E2, E2)
    rep = verify_chain(T, 2)
    sigma = np.linalg.svd(T.matrix, compute_uv=False)[0]
    assert rep.free.value == pytest.approx(max(1.0, sigma), abs=1e-9)
    assert rep.theorem_slack == pytest.approx(2 * rep.alternating.value, abs=1e-9)
    assert rep.status == "pass" and not rep.heuristic


def test_chain_l1_identity():
    rep = verify_chain(Operator.identity(L1), 2, SMALL)
    assert rep.chain_holds and rep.status == "pass" and rep.heuristic
    assert rep.summary()["check"] == "chain"


def test_prop1_euclidean():
    rng = np.random.default_rng(4)
    T = Operator(rng.standard_normal((2, 2)), E2, E2)
    rep = verify_prop1(T, 2, trials=10)
    assert rep.status == "pass"
    assert all(t.passed_exact and t.within_bound for t in rep.trials)


@pytest.mark.parametrize("n, trials", [(1, 20), (2, 100)])
def test_prop1_l1(n, trials):
    T = Operator(np.array([[1.0, 0.5], [0.0, 1.0]]), L1, L1)
    rep = verify_prop1(T, n, trials=trials, budget=SMALL)
    assert not rep.failures
    assert max(t.certificate_residual for t in rep.trials) < 1e-9
    assert rep.status in ("pass", "heuristic-flag")
    assert rep.transported_witness_ratio == pytest.approx(rep.mu_free.unclamped, rel=1e-8)
    with pytest.raises(ValueError):
        verify_prop1(T, n, trials=0, budget=SMALL)


def test_prop2_euclidean():
    rng = np.random.default_rng(5)
    T = Operator(rng.standard_normal((2, 2)), E2, E2)
    rep = verify_prop2(T, 1, trials=10)
    assert rep.status == "pass"
    assert rep.max_blockwise_residual < 1e-10 and rep.min_factor2_slack >= -1e-10
    assert rep.max_split_ratio <= 3 * rep.mu_alt.value + 1e-9


def test_prop2_l1_coarse():
    rep = verify_prop2(Operator.identity(L1), 1, SMALL, trials=20)
    assert not rep.failures and rep.status == "pass"
    assert rep.mu_alt_double.value <= 3 * rep.mu_alt.value + 1e-9


def test_prop2_custom_norm():
    W = np.array([[1.0, 1.0], [0.0, 2.0]])
    space = NormedSpace.custom(2, lambda v: float(np.abs(W @ v).max()),
                               lambda v: W.T @ _linf_sub(W @ v), "skewed-inf")
    T = Operator(np.array([[0.0, 1.0], [1.0, 0.0]]), space, space)
    rep = verify_prop2(T, 1, Budget(restarts=6, iterations=150), trials=5)
    assert not rep.failures
    assert rep.status in ("pass", "heuristic-flag")


def _linf_sub(u):
    g = np.zeros_like(u)
    i = int(np.argmax(np.abs(u)))
    g[i] = np.sign(u[i])
    return g


def test_families_are_nested_exactly():
    rng = np.random.default_rng(6)
    for space in (L1, LINF):
        T = Operator(rng.standard_normal((2, 2)), space, space)
        est = Estimator(T, SMALL)
        for n in (1, 2):
            a, lv, f = (est.estimate(n, fam) for fam in ("alternating", "level", "free"))
            assert a.value <= lv.value <= f.value


def test_monotone_in_depth_via_padded_witness():
    """A depth-n witness padded with zeros is a depth-(n+1) tuple with the same ratio."""
    T = Operator(np.array([[1.0, -0.3], [0.4, 1.0]]), LINF, LINF)
    est = Estimator(T, SMALL)
    for n in (1, 2):
        low = est.estimate(n, "free")
        coeffs = np.vstack([low.witness.coefficients, np.zeros((2 ** n, 2))])
        padded = HaarExpansion(coeffs, n + 1)
        signs = SignPattern.from_array(list(low.signs.values) + [1] * 2 ** n)
        assert transform_ratio(T, padded, signs) == pytest.approx(low.unclamped, rel=1e-12)
        if n == 1:
            assert est.estimate(n + 1, "free").value >= low.value - 1e-9


def test_euclidean_collapse():
    rng = np.random.default_rng(7)
    T = Operator(rng.standard_normal((3, 2)), NormedSpace.lp(2, 2), NormedSpace.lp(2, 3))
    sigma = np.linalg.svd(T.matrix, compute_uv=False)[0]
    for n in (1, 2, 4):
        for fam in ("alternating", "level", "free"):
            est = estimate_norm(T, n, fam)
            assert est.unclamped == pytest.approx(sigma, rel=1e-9)
            assert est.method == "exact-euclidean"


def test_witness_reproduces_value():
    T = Operator(np.array([[2.0, 1.0], [0.0, 1.0]]), L1, LINF)
    est = Estimator(T, SMALL)
    for n in (1, 2):
        for fam in ("alternating", "level", "free"):
            e = est.estimate(n, fam)
            assert e.reevaluate(T) == pytest.approx(e.unclamped, abs=1e-8)
            assert direct_ratio(T, e.witness, e.signs) == pytest.approx(e.unclamped, abs=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([0.25, 0.5, 2.0, 4.0]), st.integers(0, 1000))
def test_homogeneity_on_heuristic_path(lam, seed):
    # powers of two scale floats exactly, so the search path is identical
    rng = np.random.default_rng(seed)
    T = Operator(rng.standard_normal((2, 2)), L1, LINF)
    budget = Budget(restarts=4, iterations=100, seed=seed)
    base = estimate_norm(T, 1, "level", budget)
    scaled = estimate_norm(T.scaled(lam), 1, "level", budget)
    assert scaled.unclamped == pytest.approx(lam * base.unclamped, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100), st.integers(0, 1000))
def test_homogeneity_euclidean(lam, seed):
    rng = np.random.default_rng(seed)
    T = Operator(rng.standard_normal((2, 2)), E2, E2)
    base = estimate_norm(T, 2, "free")
    assert estimate_norm(T.scaled(lam), 2, "free").unclamped == pytest.approx(lam * base.unclamped, rel=1e-8)


def test_greedy_path_when_enumeration_is_cut_off():
    T = Operator(np.array([[1.0, 0.5], [-0.5, 1.0]]), L1, L1)
    budget = Budget(restarts=4, iterations=100, pattern_cutoff=2, greedy_restarts=2)
    est = Estimator(T, budget)
    lv, f = est.estimate(2, "level"), est.estimate(2, "free")
    assert lv.method == "heuristic" and f.method == "heuristic"
    assert est.estimate(2, "alternating").value <= lv.value <= f.value
    assert lv.signs in list(level_patterns(2))


def test_estimates_are_deterministic():
    T = Operator(np.array([[1.0, 0.2], [0.3, -1.0]]), LINF, L1)
    a = estimate_norm(T, 2, "free", SMALL)
    b = estimate_norm(T, 2, "free", SMALL)
    assert a.to_dict() == b.to_dict()


def test_budget_validation():
    with pytest.raises(ValueError):
        Budget(restarts=0)
    with pytest.raises(ValueError):
        Budget(step=-1.0)


def test_polish_finds_sqrt2_at_depth_three():
    est = estimate_norm(Operator.identity(L1), 3, "alternating", Budget(restarts=40))
    assert est.unclamped >= math.sqrt(2) - 1e-7

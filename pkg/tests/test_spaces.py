import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from umdnorms.spaces import (NormAxiomError, NormedSpace, Operator, norm_subgradient, parse_space,
                             spectral_norm, vector_norm)

P_VALUES = [1.0, 1.5, 2.0, 3.0, math.inf]


def test_vector_norm_examples():
    assert vector_norm(NormedSpace.lp(1, 2), [1, -2]) == 3.0
    assert vector_norm(NormedSpace.lp(math.inf, 2), [1, -2]) == 2.0
    assert vector_norm(NormedSpace.lp(2, 2), [1, 2]) == pytest.approx(math.sqrt(5))
    with pytest.raises(ValueError):
        vector_norm(NormedSpace.lp(2, 3), [1, 2])


def test_subgradient_examples():
    v = np.array([3.0, 4.0])
    assert np.allclose(norm_subgradient(NormedSpace.lp(2, 2), v), v / 5)
    g1 = norm_subgradient(NormedSpace.lp(1, 2), [1, -2])
    assert np.array_equal(g1, [1, -1]) and g1 @ [1, -2] == 3
    gi = norm_subgradient(NormedSpace.lp(math.inf, 2), [1, -2])
    assert np.array_equal(gi, [0, -1]) and gi @ [1, -2] == 2
    for p in (1, math.inf):
        with pytest.raises(ValueError):
            norm_subgradient(NormedSpace.lp(p, 2), [0, 0])


def test_linf_ties_take_lowest_coordinate():
    g = norm_subgradient(NormedSpace.lp(math.inf, 3), [2.0, -2.0, 1.0])
    assert np.array_equal(g, [1, 0, 0])


def test_spectral_norm_examples():
    E = NormedSpace.lp(2, 2)
    assert spectral_norm(Operator.identity(E))[0] == pytest.approx(1.0, abs=1e-12)
    assert spectral_norm(Operator(np.diag([2.0, 1.0]), E, E))[0] == pytest.approx(2.0, abs=1e-10)
    c, s = math.cos(math.pi / 6), math.sin(math.pi / 6)
    assert spectral_norm(Operator([[c, -s], [s, c]], E, E))[0] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        spectral_norm(Operator.identity(NormedSpace.lp(1, 2)))


def test_spectral_norm_against_svd_and_sampling():
    rng = np.random.default_rng(0)
    for _ in range(30):
        m, k = rng.integers(1, 5, 2)
        A = rng.standard_normal((m, k))
        T = Operator(A, NormedSpace.lp(2, int(k)), NormedSpace.lp(2, int(m)))
        value, w = spectral_norm(T)
        assert value == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-9)
        assert np.linalg.norm(A @ w) / np.linalg.norm(w) == pytest.approx(value, abs=1e-15)
        probes = rng.standard_normal((10_000, k))
        probes /= np.linalg.norm(probes, axis=1, keepdims=True)
        sampled = np.max(np.linalg.norm(probes @ A.T, axis=1))
        assert sampled <= value + 1e-12
        if k <= 2:
            assert value - sampled < 1e-6


def test_spectral_norm_zero_and_rank_deficient():
    E = NormedSpace.lp(2, 3)
    assert spectral_norm(Operator(np.zeros((3, 3)), E, E))[0] == 0.0
    A = np.outer([1.0, 2.0, 2.0], [0.0, 3.0, 4.0])
    assert spectral_norm(Operator(A, E, E))[0] == pytest.approx(15.0, rel=1e-10)


def test_parse_space():
    assert parse_space("lp:inf:3") == NormedSpace.lp(math.inf, 3)
    assert parse_space("lp:1.5:2").p == 1.5
    assert parse_space("lp:2:4").spec() == "lp:2:4"
    for bad in ["lp:2", "lq:2:2", "lp:0.5:2", "lp:x:2", "lp:2:z", "lp:2:0"]:
        with pytest.raises(ValueError):
            parse_space(bad)


def test_operator_validation_and_roundtrip():
    X, Y = NormedSpace.lp(1, 2), NormedSpace.lp(math.inf, 3)
    with pytest.raises(ValueError):
        Operator(np.ones((2, 3)), X, Y)
    T = Operator(np.arange(6.0).reshape(3, 2), X, Y)
    doc = T.to_dict()
    assert doc == {"rows": 3, "cols": 2, "entries": [0, 1, 2, 3, 4, 5], "source": "lp:1:2", "target": "lp:inf:3"}
    U = Operator.from_dict(doc)
    assert np.array_equal(U.matrix, T.matrix) and U.source == X and U.target == Y
    with pytest.raises(ValueError):
        Operator.from_dict(dict(doc, entries=[1, 2]))


def test_custom_norm_accepted_and_checked():
    W = np.array([[2.0, 1.0], [0.0, 1.0]])
    space = NormedSpace.custom(2, lambda v: float(np.abs(W @ v).sum()), lambda v: W.T @ np.sign(W @ v), "weighted")
    assert space.is_custom and space.spec() == "weighted:2"
    v = np.array([1.0, -3.0])
    assert space.norm(v) == pytest.approx(np.abs(W @ v).sum())
    assert space.subgradient(v) @ v == pytest.approx(space.norm(v))
    assert space.dual_norm(space.subgradient(v)) <= 1 + 1e-9
    with pytest.raises(NormAxiomError):
        NormedSpace.custom(2, lambda v: float(np.sum(v ** 2)), lambda v: 2 * v)
    with pytest.raises(NormAxiomError):
        NormedSpace.custom(2, lambda v: abs(float(v[0])), lambda v: np.array([np.sign(v[0]), 0.0]))


@pytest.mark.parametrize("p", P_VALUES)
def test_norm_axioms_random_pairs(p):
    rng = np.random.default_rng(1)
    space = NormedSpace.lp(p, 3)
    for _ in range(1000):
        u, v = rng.standard_normal((2, 3))
        lam = rng.standard_normal()
        assert space.norm(u) > 0
        assert space.norm(lam * u) == pytest.approx(abs(lam) * space.norm(u), rel=1e-12)
        assert space.norm(u + v) <= space.norm(u) + space.norm(v) + 1e-12
    assert space.norm(np.zeros(3)) == 0.0


@settings(max_examples=200)
@given(st.sampled_from(P_VALUES), arrays(float, 3, elements=st.floats(-1e3, 1e3)))
def test_subgradient_identity(p, v):
    space = NormedSpace.lp(p, 3)
    if not np.any(v):
        return
    g = space.subgradient(v)
    nv = space.norm(v)
    assert abs(g @ v - nv) <= 1e-12 * max(1.0, nv)
    assert space.dual_norm(g) <= 1 + 1e-12


def test_batched_norms_match_single():
    rng = np.random.default_rng(2)
    vs = rng.standard_normal((5, 4, 3))
    for p in P_VALUES:
        space = NormedSpace.lp(p, 3)
        batched = space.norms(vs)
        single = np.array([[space.norm(v) for v in row] for row in vs])
        assert np.allclose(batched, single, rtol=1e-14)
        assert np.allclose(batched, np.linalg.norm(vs, ord=p, axis=-1), rtol=1e-12)

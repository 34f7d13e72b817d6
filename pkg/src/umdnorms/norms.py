"""Estimates of the ideal norms mu_n, mu_n^o and mu_n^oo and checks of their relations.

For an operator ``T : X -> Y`` and depth ``n``, each norm is the least
``c >= 1`` bounding ``||sum eps_k^(j) T x_k^(j) chi_k^(j)||_2`` by
``c ||sum x_k^(j) chi_k^(j)||_2`` over all tuples, where the signs range over
all patterns (``free``), patterns constant on levels (``level``) or the
single pattern ``(-1)**k`` (``alternating``).

Outside the Euclidean case the supremum over tuples is found by restarted
normalized subgradient ascent followed by an active-set polish, so values
are certified lower bounds with a witness tuple, not upper bounds.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels_py, kernels
from .haar import HaarExpansion, l2x_norm, synthesis_matrix, synthesize
from .selfsim import check_blockwise, check_upper_bound_factor2, split_lower_upper
from .signs import FAMILIES, SignPattern, free_patterns, level_patterns, tree_levels
from .spaces import Operator, spectral_norm
from .spreading import reduce_to_alternating

EXACT_TOL = 1e-6
HEURISTIC_TOL = 5e-3


@dataclass(frozen=True)
class Budget:
    restarts: int = 100
    iterations: int = 1000
    step: float = 0.1
    conv_tol: float = 1e-9
    pattern_cutoff: int = 4096
    greedy_restarts: int = 20
    polish_top: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 0 or self.pattern_cutoff < 1:
            raise ValueError("budget sizes must be positive")
        if not (self.step > 0 and self.conv_tol > 0):
            raise ValueError("step and convergence tolerance must be positive")


def _ratio_args(T: Operator):
    def arg(space):
        return space if space.is_custom else space.p

    return arg(T.source), arg(T.target)


def transform_ratio(T: Operator, x: HaarExpansion, eps: SignPattern) -> float:
    """``||sum eps T x chi||_{L_2^Y} / ||sum x chi||_{L_2^X}`` by synthesis at resolution ``n``."""
    if x.depth != eps.depth:
        raise ValueError(f"tuple depth {x.depth} and sign depth {eps.depth} differ")
    if x.dim != T.source.dim:
        raise ValueError("tuple dimension does not match the source space")
    plain = HaarExpansion(x.coefficients, x.depth)
    den = l2x_norm(synthesize(plain), T.source)
    if den == 0.0:
        raise ValueError("ratio undefined for the zero tuple")
    num = l2x_norm(synthesize(plain.scale_signs(eps.array).apply(T.matrix)), T.target)
    return num / den


def _starts(budget: Budget, n: int, dim: int) -> np.ndarray:
    size = (1 << n) - 1
    return np.stack([np.random.default_rng([budget.seed, r]).standard_normal((size, dim))
                     for r in range(budget.restarts)])


def _kink_rows(V: np.ndarray, lift, p, theta: float) -> list:
    """Linear constraints keeping near-kink coordinates of ``V`` on their kink."""
    rows = []
    if not isinstance(p, float):
        return rows
    if p == 1.0:
        nrm = np.abs(V).sum(axis=1)
        for c in np.nonzero(nrm > 0)[0]:
            for d in np.nonzero(np.abs(V[c]) <= theta * nrm[c])[0]:
                w = np.zeros(V.shape[1])
                w[d] = 1.0
                rows.append(lift(c, w))
    elif math.isinf(p):
        a = np.abs(V)
        top = a.max(axis=1)
        for c in np.nonzero(top > 0)[0]:
            tied = np.nonzero(a[c] >= (1.0 - theta) * top[c])[0]
            for s0, s1 in zip(tied[:-1], tied[1:]):
                w = np.zeros(V.shape[1])
                w[s0] = np.sign(V[c, s0])
                w[s1] = -np.sign(V[c, s1])
                rows.append(lift(c, w))
    return rows


def _polish(X: np.ndarray, signs: np.ndarray, T: np.ndarray, n: int, px, py,
            thetas=(1e-3, 1e-5, 1e-7), iters: int = 200) -> tuple[float, np.ndarray]:
    """Ascent along the subgradient projected onto the current kinks of both norms.

    At an l1 or l-inf kink the plain subgradient points off the ridge and
    every step fails; projecting out the normals of the near-active kinks
    recovers an ascent direction along the ridge.
    """
    H = synthesis_matrix(n)
    h = _kernels_py._heights(n)
    r, D, g = _kernels_py._evaluate(X[None], signs, T, n, h, px, py, True)
    r, g = float(r[0]), g[0]
    for theta in thetas:
        step = 1e-3
        for _ in range(iters):
            F = H @ X
            G = (H @ (signs[:, None] * X)) @ T.T
            rows = _kink_rows(F, lambda c, w: np.outer(H[c], w).ravel(), px, theta)
            rows += _kink_rows(G, lambda c, w: np.outer(H[c] * signs, w @ T).ravel(), py, theta)
            direction = g.ravel()
            if rows:
                A = np.array(rows)
                direction = direction - A.T @ np.linalg.lstsq(A @ A.T, A @ direction, rcond=None)[0]
            size = np.linalg.norm(direction)
            if size == 0.0:
                break
            direction = direction.reshape(X.shape) / size
            xnorm = np.linalg.norm(X)
            s = 4.0 * step
            moved = False
            while s > 1e-14:
                cand = X + s * xnorm * direction
                rc, Dc, gc = _kernels_py._evaluate(cand[None], signs, T, n, h, px, py, True)
                if rc[0] > r:
                    X, r, g, step, moved = cand / Dc[0], float(rc[0]), gc[0] * Dc[0], s, True
                    break
                s *= 0.5
            if not moved:
                break
    return r, X


@dataclass
class TupleOptimum:
    ratio: float
    witness: HaarExpansion
    method: str


def max_ratio_over_tuples(T: Operator, eps: SignPattern, n: int | None = None,
                          budget: Budget = Budget()) -> TupleOptimum:
    """Largest ratio found over tuples of depth ``n`` for fixed signs.

    Euclidean source and target give the exact value ``||T||`` (signs are
    isometries by Parseval).  Otherwise the result is a lower bound.
    """
    n = eps.depth if n is None else n
    if n != eps.depth:
        raise ValueError("sign pattern depth differs from n")
    size = (1 << n) - 1
    if T.source.is_euclidean and T.target.is_euclidean:
        sigma, v = spectral_norm(T, seed=budget.seed)
        coeffs = np.zeros((size, T.source.dim))
        coeffs[0] = v
        return TupleOptimum(sigma, HaarExpansion(coeffs, n), "exact-euclidean")
    px, py = _ratio_args(T)
    X0 = _starts(budget, n, T.source.dim)
    custom = T.source.is_custom or T.target.is_custom
    impl = _kernels_py if custom else kernels
    ratios, X = impl.ascend(X0, eps.array, np.ascontiguousarray(T.matrix), n, px, py,
                            budget.iterations, budget.step, budget.conv_tol)
    ratios = np.nan_to_num(ratios, nan=-np.inf)
    best_r, best_x = -np.inf, None
    for b in np.argsort(-ratios, kind="stable")[:budget.polish_top]:
        r, x = _polish(X[b], eps.array, np.asarray(T.matrix), n, px, py)
        if r > best_r:
            best_r, best_x = r, x
    return TupleOptimum(float(best_r), HaarExpansion(best_x, n), "heuristic")


@dataclass
class NormEstimate:
    family: str
    depth: int
    value: float
    unclamped: float
    witness: HaarExpansion
    signs: SignPattern
    method: str
    patterns_evaluated: int
    budget: Budget
    backend: str = kernels.BACKEND

    @property
    def heuristic(self) -> bool:
        return self.method != "exact-euclidean"

    def reevaluate(self, T: Operator) -> float:
        return transform_ratio(T, self.witness, self.signs)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "depth": self.depth,
            "value": self.value,
            "unclamped": self.unclamped,
            "method": self.method,
            "patterns_evaluated": self.patterns_evaluated,
            "witness": self.witness.to_dict(),
            "signs": self.signs.to_list(),
            "budget": asdict(self.budget),
            "backend": self.backend,
        }


class Estimator:
    """Tuple optimization for one operator, cached per sign pattern.

    ``eps`` and ``-eps`` share a cache entry: they give the same ratio for
    every tuple.  Because each pattern is optimized from the same seeded
    starts whichever family asks, the family estimates are nested maxima of
    one table and therefore exactly monotone.
    """

    def __init__(self, T: Operator, budget: Budget = Budget()):
        self.T = T
        self.budget = budget
        self._cache: dict[tuple, TupleOptimum] = {}

    def optimum(self, eps: SignPattern) -> TupleOptimum:
        key = (eps.depth, eps.canonical())
        if key not in self._cache:
            self._cache[key] = max_ratio_over_tuples(self.T, eps, eps.depth, self.budget)
        return self._cache[key]

    def ratio(self, eps: SignPattern) -> float:
        return self.optimum(eps).ratio

    def _best(self, patterns) -> tuple[SignPattern, int]:
        best, count = None, 0
        for eps in patterns:
            count += 1
            # ties keep the earlier pattern
            if best is None or self.ratio(eps) > self.ratio(best):
                best = eps
        return best, count

    def _hill_climb(self, start: SignPattern, neighbours) -> tuple[SignPattern, int]:
        current, count = start, 1
        while True:
            candidate, seen = self._best(neighbours(current))
            count += seen
            if candidate is None or self.ratio(candidate) <= self.ratio(current):
                return current, count
            current = candidate

    def _level_neighbours(self, eps: SignPattern):
        signs = eps.level_signs()
        for k in range(len(signs)):
            flipped = list(signs)
            flipped[k] = -flipped[k]
            yield SignPattern.from_levels(flipped)

    def _free_neighbours(self, eps: SignPattern):
        for flat in range(len(eps.values)):
            yield eps.flipped(flat)

    def _greedy(self, seed_pattern: SignPattern, random_pattern, neighbours) -> tuple[SignPattern, int]:
        best, count = self._hill_climb(seed_pattern, neighbours)
        for r in range(self.budget.greedy_restarts):
            rng = np.random.default_rng([self.budget.seed, 7919, r])
            found, seen = self._hill_climb(random_pattern(rng), neighbours)
            count += seen
            if self.ratio(found) > self.ratio(best):
                best = found
        return best, count

    def estimate(self, n: int, family: str) -> NormEstimate:
        if n < 1:
            raise ValueError("depth must be at least 1")
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        cutoff = self.budget.pattern_cutoff
        alt = SignPattern.alternating(n)
        enumerated = True
        if family == "alternating" or (self.T.source.is_euclidean and self.T.target.is_euclidean):
            best, count = alt, 1
        elif family == "level":
            if 1 << n <= cutoff:
                best, count = self._best(level_patterns(n))
            else:
                enumerated = False
                best, count = self._greedy(
                    alt, lambda rng: SignPattern.from_levels(rng.choice([1, -1], n)),
                    self._level_neighbours)
        else:
            size = (1 << n) - 1
            level_best = self.estimate(n, "level").signs
            if size < 63 and 1 << size <= cutoff:
                pool = [level_best] + [eps for eps in free_patterns(n)]
                best, count = self._best(pool)
            else:
                enumerated = False
                best, count = self._greedy(
                    level_best, lambda rng: SignPattern.from_array(rng.choice([1, -1], size)),
                    self._free_neighbours)
        opt = self.optimum(best)
        method = opt.method
        if method != "exact-euclidean":
            # signs exhausted or searched; tuples are optimized heuristically either way
            method = "brute-force" if enumerated else "heuristic"
        return NormEstimate(family, n, max(1.0, opt.ratio), opt.ratio, opt.witness, best,
                            method, count, self.budget)


def estimate_norm(T: Operator, n: int, family: str, budget: Budget = Budget(),
                  estimator: Estimator | None = None) -> NormEstimate:
    estimator = estimator or Estimator(T, budget)
    return estimator.estimate(n, family)


def _theorem_tol(*estimates: NormEstimate, heuristic_tol: float = HEURISTIC_TOL) -> float:
    return heuristic_tol if any(e.heuristic for e in estimates) else EXACT_TOL


@dataclass
class ChainReport:
    depth: int
    alternating: NormEstimate
    level: NormEstimate
    free: NormEstimate
    chain_holds: bool
    theorem_slack: float
    theorem_tol: float
    heuristic: bool

    @property
    def theorem_holds(self) -> bool:
        return self.theorem_slack >= -self.theorem_tol

    @property
    def status(self) -> str:
        if not self.chain_holds:
            return "fail"
        if self.theorem_holds:
            return "pass"
        return "heuristic-flag" if self.heuristic else "fail"

    def summary(self) -> dict:
        return {
            "check": "chain",
            "depth": self.depth,
            "mu_alternating": self.alternating.value,
            "mu_level": self.level.value,
            "mu_free": self.free.value,
            "chain_holds": self.chain_holds,
            "theorem_slack": self.theorem_slack,
            "theorem_tol": self.theorem_tol,
            "heuristic": self.heuristic,
            "status": self.status,
        }


def verify_chain(T: Operator, n: int, budget: Budget = Budget(), estimator: Estimator | None = None,
                 heuristic_tol: float = HEURISTIC_TOL) -> ChainReport:
    """``mu^oo <= mu^o <= mu`` (by pool nesting) and ``mu <= 3 mu^oo``."""
    estimator = estimator or Estimator(T, budget)
    alt = estimator.estimate(n, "alternating")
    lev = estimator.estimate(n, "level")
    free = estimator.estimate(n, "free")
    chain = alt.value <= lev.value <= free.value
    if not chain:
        raise ArithmeticError("family estimates are not nested; the estimator is broken")
    tol = _theorem_tol(alt, lev, free, heuristic_tol=heuristic_tol)
    return ChainReport(n, alt, lev, free, chain, 3.0 * alt.value - free.value, tol,
                       any(e.heuristic for e in (alt, lev, free)))


@dataclass
class Prop1Trial:
    index: int
    ratio: float
    bound: float
    certificate_residual: float
    norm_residual: float
    transported_ratio: float
    passed_exact: bool
    within_bound: bool


@dataclass
class Prop1Report:
    depth: int
    mu_free: NormEstimate
    mu_alt_double: NormEstimate
    trials: list[Prop1Trial]
    transported_witness_ratio: float
    aggregate_slack: float
    tol: float
    heuristic: bool
    failures: list[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.failures:
            return "fail"
        ok = self.aggregate_slack >= -self.tol and all(t.within_bound for t in self.trials)
        if ok:
            return "pass"
        return "heuristic-flag" if self.heuristic else "fail"

    def summary(self) -> dict:
        return {
            "check": "prop1",
            "depth": self.depth,
            "mu_free_n": self.mu_free.value,
            "mu_alternating_2n": self.mu_alt_double.value,
            "transported_witness_ratio": self.transported_witness_ratio,
            "aggregate_slack": self.aggregate_slack,
            "trials": len(self.trials),
            "max_certificate_residual": max((t.certificate_residual for t in self.trials), default=0.0),
            "max_norm_residual": max((t.norm_residual for t in self.trials), default=0.0),
            "trials_within_bound": sum(t.within_bound for t in self.trials),
            "tol": self.tol,
            "heuristic": self.heuristic,
            "failures": list(self.failures),
            "status": self.status,
        }


def _random_tuple(rng, n: int, dim: int) -> HaarExpansion:
    return HaarExpansion(rng.standard_normal(((1 << n) - 1, dim)), n)


def _alternating_transport(T: Operator, x: HaarExpansion, eps: SignPattern):
    """Reduce ``(x, eps)`` to an alternating-sign tuple of depth ``2n`` with the same ratio."""
    red = reduce_to_alternating(x, eps, space=T.source, target_space=T.target, operator=T.matrix,
                                norm_tol=1e-10 * max(1.0, float(np.abs(x.coefficients).max())))
    y = HaarExpansion(red.f_psi.coefficients, 2 * x.depth)
    return red, y


def verify_prop1(T: Operator, n: int, trials: int = 20, budget: Budget = Budget(),
                 estimator: Estimator | None = None, seed: int | None = None,
                 heuristic_tol: float = HEURISTIC_TOL) -> Prop1Report:
    """Check ``mu_n <= mu_2n^oo`` constructively and on the estimates."""
    if trials < 1:
        raise ValueError("at least one trial is required")
    estimator = estimator or Estimator(T, budget)
    seed = budget.seed if seed is None else seed
    rng = np.random.default_rng([seed, 1])
    mu_free = estimator.estimate(n, "free")
    mu_alt2 = estimator.estimate(2 * n, "alternating")
    heuristic = mu_free.heuristic or mu_alt2.heuristic
    failures = []
    out = []
    for t in range(trials):
        x = _random_tuple(rng, n, T.source.dim)
        eps = SignPattern.from_array(rng.choice([1, -1], (1 << n) - 1))
        red, y = _alternating_transport(T, x, eps)
        num = l2x_norm(synthesize(x.scale_signs(eps.array).apply(T.matrix)), T.target)
        den = l2x_norm(synthesize(x), T.source)
        ratio = num / den
        transported = transform_ratio(T, y, SignPattern.alternating(2 * n))
        cert_ok = red.certificate.passed
        norm_res = max(red.certificate.norm_residuals.values(), default=0.0)
        exact_ok = cert_ok and abs(transported - ratio) <= 1e-10 * max(1.0, ratio)
        within = num <= mu_alt2.value * den + 1e-8
        if not exact_ok:
            failures.append(f"trial {t}: reduction broke the alternating identity")
        out.append(Prop1Trial(t, ratio, mu_alt2.value, red.certificate.max_residual, norm_res,
                              transported, exact_ok, within))
    # the best free witness, transported, is an alternating tuple of depth 2n
    _, y = _alternating_transport(T, mu_free.witness, mu_free.signs)
    transported_w = transform_ratio(T, y, SignPattern.alternating(2 * n))
    if abs(transported_w - mu_free.unclamped) > 1e-8 * max(1.0, mu_free.unclamped):
        failures.append("transported witness does not reproduce mu_n")
    return Prop1Report(n, mu_free, mu_alt2, out, transported_w, mu_alt2.value - mu_free.value,
                       _theorem_tol(mu_free, mu_alt2, heuristic_tol=heuristic_tol), heuristic, failures)


@dataclass
class Prop2Report:
    depth: int
    mu_alt: NormEstimate
    mu_alt_double: NormEstimate
    slack: float
    tol: float
    heuristic: bool
    trials: int
    max_blockwise_residual: float
    min_factor2_slack: float
    max_lower_ratio: float
    max_block_ratio: float
    max_split_ratio: float
    failures: list[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.failures:
            return "fail"
        estimates_ok = (self.slack >= -self.tol
                        and self.max_lower_ratio <= self.mu_alt.value + self.tol
                        and self.max_block_ratio <= self.mu_alt.value + self.tol
                        and self.max_split_ratio <= 3.0 * self.mu_alt.value + self.tol)
        if estimates_ok:
            return "pass"
        return "heuristic-flag" if self.heuristic else "fail"

    def summary(self) -> dict:
        return {
            "check": "prop2",
            "depth": self.depth,
            "mu_alternating_n": self.mu_alt.value,
            "mu_alternating_2n": self.mu_alt_double.value,
            "slack": self.slack,
            "trials": self.trials,
            "max_blockwise_residual": self.max_blockwise_residual,
            "min_factor2_slack": self.min_factor2_slack,
            "max_lower_ratio": self.max_lower_ratio,
            "max_block_ratio": self.max_block_ratio,
            "max_split_ratio": self.max_split_ratio,
            "tol": self.tol,
            "heuristic": self.heuristic,
            "failures": list(self.failures),
            "status": self.status,
        }


def verify_prop2(T: Operator, n: int, budget: Budget = Budget(), trials: int = 20,
                 estimator: Estimator | None = None, seed: int | None = None,
                 heuristic_tol: float = HEURISTIC_TOL) -> Prop2Report:
    """Check ``mu_2n^oo <= 3 mu_n^oo`` and the ingredients of its proof on random tuples.

    Per tuple of depth ``2n``: the lower part's alternating ratio (``L``
    over the lower norm), every block ratio ``U_i`` over its pulled-back
    norm, and the full ratio over ``L + U`` are bounded by ``mu_n^oo``,
    ``mu_n^oo`` and ``3 mu_n^oo``; the block identity and the factor-two
    bound are exact checks.
    """
    estimator = estimator or Estimator(T, budget)
    seed = budget.seed if seed is None else seed
    rng = np.random.default_rng([seed, 2])
    mu_n = estimator.estimate(n, "alternating")
    mu_2n = estimator.estimate(2 * n, "alternating")
    X, Y, A = T.source, T.target, T.matrix
    alt_n = SignPattern.alternating(n)
    alt_2n = SignPattern.alternating(2 * n)
    levels_2n = tree_levels(2 * n)
    failures = []
    max_block_res = 0.0
    min_f2 = math.inf
    max_lower = max_block = max_split = 0.0
    for t in range(trials):
        x = _random_tuple(rng, 2 * n, X.dim)
        full = l2x_norm(synthesize(x), X)
        lower, upper = split_lower_upper(x, n)
        lower_norm = l2x_norm(synthesize(lower), X)
        if lower_norm > full + 1e-12:
            failures.append(f"trial {t}: lower part norm exceeds full norm")
        L = l2x_norm(synthesize(lower.scale_signs(alt_n.array).apply(A)), Y)
        max_lower = max(max_lower, L / lower_norm)
        alt_upper = HaarExpansion(upper.coefficients * ((-1.0) ** levels_2n)[:, None], 2 * n).apply(A)
        U = l2x_norm(synthesize(alt_upper), Y)
        blocks = check_blockwise(x, X, operator=A, target_space=Y)
        max_block_res = max(max_block_res, blocks.max_residual)
        # U_i over the pulled-back norm, blockwise
        cells = synthesize(alt_upper).cells.reshape(1 << n, -1, Y.dim)
        for i, pulled in enumerate(blocks.pullback_norms):
            U_i = math.sqrt(float(np.sum(Y.norms(cells[i]) ** 2)) * 0.5 ** (2 * n))
            if pulled > 1e-14:
                max_block = max(max_block, U_i / pulled)
        f2 = check_upper_bound_factor2(x, X)
        min_f2 = min(min_f2, f2.slack)
        total = transform_ratio(T, x, alt_2n) * full
        if total > L + U + 1e-10 * max(1.0, total):
            failures.append(f"trial {t}: triangle inequality L + U violated")
        max_split = max(max_split, (L + U) / full)
    if max_block_res > 1e-10:
        failures.append(f"blockwise identity residual {max_block_res:.3e}")
    if trials and min_f2 < -1e-10:
        failures.append(f"factor-two bound violated by {-min_f2:.3e}")
    return Prop2Report(n, mu_n, mu_2n, 3.0 * mu_n.value - mu_2n.value, _theorem_tol(mu_n, mu_2n, heuristic_tol=heuristic_tol),
                       mu_n.heuristic or mu_2n.heuristic, trials, max_block_res,
                       min_f2 if trials else 0.0, max_lower, max_block, max_split, failures)

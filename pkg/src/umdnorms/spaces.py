"""Finite-dimensional normed spaces and operators between them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class NormAxiomError(ValueError):
    pass


def _lp_norms(v: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(v)
    if p == 1.0:
        return a.sum(axis=-1)
    if p == 2.0:
        return np.sqrt((a * a).sum(axis=-1))
    if math.isinf(p):
        return a.max(axis=-1) if a.shape[-1] else np.zeros(a.shape[:-1])
    scale = a.max(axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return (((a / safe) ** p).sum(axis=-1)) ** (1.0 / p) * safe[..., 0]


def _lp_subgradient(v: np.ndarray, p: float) -> np.ndarray:
    if p == 1.0:
        if not np.any(v):
            raise ValueError("subgradient of the l1 norm at 0 is not a single vector")
        return np.sign(v)
    if math.isinf(p):
        if not np.any(v):
            raise ValueError("subgradient of the l-inf norm at 0 is not a single vector")
        g = np.zeros_like(v, dtype=float)
        i = int(np.argmax(np.abs(v)))  # first maximal coordinate
        g[i] = np.sign(v[i])
        return g
    norm = float(_lp_norms(v, p))
    if norm == 0.0:
        return np.zeros_like(v, dtype=float)
    return np.sign(v) * (np.abs(v) / norm) ** (p - 1.0)


@dataclass(frozen=True)
class NormedSpace:
    """``R^m`` with an ``l_p`` norm, or with a user-supplied norm.

    A custom norm comes as a pair of callables on 1-d vectors: ``norm(v)``
    and ``subgradient(v)`` returning ``g`` with ``<g, v> = ||v||`` and dual
    norm at most one.  The norm axioms are spot-checked on construction.
    """

    dim: int
    p: float | None = 2.0
    norm_fn: Callable | None = field(default=None, compare=False, repr=False)
    subgradient_fn: Callable | None = field(default=None, compare=False, repr=False)
    name: str | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.norm_fn is None:
            if self.p is None or not self.p >= 1.0:
                raise ValueError(f"p must lie in [1, inf], got {self.p}")
            object.__setattr__(self, "p", float(self.p))
        else:
            if self.subgradient_fn is None:
                raise ValueError("a custom norm needs a subgradient evaluator")
            object.__setattr__(self, "p", None)
            check_norm_axioms(self)

    @classmethod
    def lp(cls, p, dim: int) -> NormedSpace:
        return cls(dim=dim, p=float(p))

    @classmethod
    def custom(cls, dim: int, norm: Callable, subgradient: Callable, name: str = "custom") -> NormedSpace:
        return cls(dim=dim, p=None, norm_fn=norm, subgradient_fn=subgradient, name=name)

    @property
    def is_custom(self) -> bool:
        return self.norm_fn is not None

    @property
    def is_euclidean(self) -> bool:
        return self.p == 2.0

    def spec(self) -> str:
        if self.is_custom:
            return f"{self.name}:{self.dim}"
        p = "inf" if math.isinf(self.p) else f"{self.p:g}"
        return f"lp:{p}:{self.dim}"

    def _check_dim(self, v: np.ndarray):
        if v.shape[-1] != self.dim:
            raise ValueError(f"vector of dimension {v.shape[-1]} in a space of dimension {self.dim}")

    def norm(self, v) -> float:
        v = np.asarray(v, dtype=float)
        self._check_dim(v)
        if self.is_custom:
            return float(self.norm_fn(v))
        return float(_lp_norms(v, self.p))

    def norms(self, vs) -> np.ndarray:
        """Norms of the rows of ``vs`` (any leading shape)."""
        vs = np.asarray(vs, dtype=float)
        self._check_dim(vs)
        if self.is_custom:
            flat = vs.reshape(-1, self.dim)
            return np.array([self.norm_fn(v) for v in flat], dtype=float).reshape(vs.shape[:-1])
        return _lp_norms(vs, self.p)

    def subgradient(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        self._check_dim(v)
        if self.is_custom:
            return np.asarray(self.subgradient_fn(v), dtype=float)
        return _lp_subgradient(v, self.p)

    def dual_norm(self, g) -> float:
        """Dual norm of ``g``; for custom norms, estimated from below by sampling."""
        g = np.asarray(g, dtype=float)
        if self.is_custom:
            rng = np.random.default_rng(0)
            probes = rng.standard_normal((2000, self.dim))
            probes = np.vstack([probes, np.eye(self.dim), -np.eye(self.dim), g[None, :]])
            return float(np.max(probes @ g / self.norms(probes)))
        q = 1.0 / (1.0 - 1.0 / self.p) if 1.0 < self.p < math.inf else (math.inf if self.p == 1.0 else 1.0)
        return float(_lp_norms(g, q))


def check_norm_axioms(space: NormedSpace, trials: int = 200, seed: int = 12345, tol: float = 1e-12):
    """Randomized spot check of positivity, homogeneity and the triangle inequality."""
    rng = np.random.default_rng(seed)
    m = space.dim
    if abs(space.norm(np.zeros(m))) > tol:
        raise NormAxiomError("norm of the zero vector is not zero")
    # seminorms vanish on a subspace that random dense vectors miss
    probes = np.vstack([np.eye(m), rng.standard_normal((trials, m)) * (rng.random((trials, m)) < 0.5)])
    for v in probes:
        if np.any(v) and space.norm(v) <= 0:
            raise NormAxiomError("norm vanishes on a nonzero vector")
    for _ in range(trials):
        u, v = rng.standard_normal((2, m))
        lam = rng.standard_normal()
        nu, nv = space.norm(u), space.norm(v)
        if nu <= 0 or nv <= 0:
            raise NormAxiomError("norm vanishes on a nonzero vector")
        scale = max(1.0, nu, nv)
        if abs(space.norm(lam * u) - abs(lam) * nu) > tol * scale * max(1.0, abs(lam)):
            raise NormAxiomError("norm is not absolutely homogeneous")
        if space.norm(u + v) > nu + nv + tol * scale:
            raise NormAxiomError("norm violates the triangle inequality")


def parse_space(text: str) -> NormedSpace:
    """Parse ``lp:<p>:<m>``, with ``p`` a decimal or ``inf``."""
    parts = text.strip().split(":")
    if len(parts) != 3 or parts[0] != "lp":
        raise ValueError(f"bad space spec {text!r}; expected lp:<p>:<m>")
    p = math.inf if parts[1].lower() in ("inf", "infinity") else float(parts[1])
    try:
        dim = int(parts[2])
    except ValueError:
        raise ValueError(f"bad dimension in space spec {text!r}") from None
    return NormedSpace.lp(p, dim)


@dataclass(frozen=True, eq=False)
class Operator:
    """A linear map ``T : X -> Y`` given by an ``m_Y x m_X`` matrix."""

    matrix: np.ndarray
    source: NormedSpace
    target: NormedSpace

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("operator matrix must be 2-d")
        if matrix.shape != (self.target.dim, self.source.dim):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match spaces "
                f"{self.source.spec()} -> {self.target.spec()}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, space: NormedSpace) -> Operator:
        return cls(np.eye(space.dim), space, space)

    def scaled(self, factor: float) -> Operator:
        return Operator(self.matrix * factor, self.source, self.target)

    def __call__(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)

    def to_dict(self) -> dict:
        rows, cols = self.matrix.shape
        return {"rows": rows, "cols": cols, "entries": self.matrix.ravel().tolist(),
                "source": self.source.spec(), "target": self.target.spec()}

    @classmethod
    def from_dict(cls, doc) -> Operator:
        rows, cols = int(doc["rows"]), int(doc["cols"])
        entries = np.asarray(doc["entries"], dtype=float)
        if entries.size != rows * cols:
            raise ValueError(f"expected {rows * cols} entries, got {entries.size}")
        return cls(entries.reshape(rows, cols), parse_space(doc["source"]), parse_space(doc["target"]))


def vector_norm(space: NormedSpace, v) -> float:
    return space.norm(v)


def norm_subgradient(space: NormedSpace, v) -> np.ndarray:
    return space.subgradient(v)


def spectral_norm(T: Operator, tol: float = 1e-10, max_iter: int = 200_000, seed: int = 0):
    """Largest singular value of a Euclidean operator by power iteration on ``T^T T``.

    Returns ``(value, witness)`` where ``value = |T w| / |w|`` is attained by
    the returned unit vector ``w``.
    """
    if not (T.source.is_euclidean and T.target.is_euclidean):
        raise ValueError("spectral_norm needs Euclidean source and target spaces")
    A = T.matrix
    gram = A.T @ A
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    if not np.any(A):
        return 0.0, v
    for _ in range(max_iter):
        w = gram @ v
        size = np.linalg.norm(w)
        if size == 0.0:
            # started in the kernel; restart along the heaviest column
            v = np.eye(A.shape[1])[int(np.argmax(np.linalg.norm(A, axis=0)))]
            continue
        rayleigh = float(v @ w)
        # eigen-residual; the Rayleigh quotient error is quadratic in it
        if np.linalg.norm(w - rayleigh * v) <= tol * rayleigh:
            break
        v = w / size
    return float(np.linalg.norm(A @ v)), v

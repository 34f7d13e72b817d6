"""Haar functions, vector-valued step functions and Haar-Fourier analysis.

A :class:`StepFunction` at resolution ``R`` holds one vector per cell
``[c/2**R, (c+1)/2**R)``.  A :class:`HaarExpansion` of depth ``n`` holds the
coefficients of the Haar functions indexed by the tree with levels ``1..n``,
stored densely in level-major order (see :attr:`HaarIndex.flat`), plus the
coefficient of the constant function.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np

from .dyadic import DyadicRational, HaarIndex, TreeRange

SPEC_TOL = 1e-9


def haar_height(k: int) -> float:
    """The value ``2**((k-1)/2)`` taken by the level-``k`` Haar functions."""
    base = float(1 << ((k - 1) // 2))
    return base * math.sqrt(2.0) if k % 2 == 0 else base


def haar_eval(idx: HaarIndex, t) -> float:
    """Evaluate the Haar function ``idx`` at a point of ``[0, 1)``."""
    if isinstance(t, DyadicRational):
        inside = 0 <= t < 1
    else:
        inside = 0.0 <= float(t) < 1.0
    if not inside:
        raise ValueError(f"t={t!r} outside [0, 1)")
    k, j = idx
    # cell of width 2**-k containing t
    if isinstance(t, DyadicRational):
        cell = (t.numerator << k) >> t.exponent
    else:
        cell = math.floor(float(t) * (1 << k))
    if cell == 2 * j - 2:
        return haar_height(k)
    if cell == 2 * j - 1:
        return -haar_height(k)
    return 0.0


class StepFunction:
    """An ``R^m``-valued function on ``[0, 1)`` constant on ``2**R`` equal cells."""

    __slots__ = ("resolution", "cells")

    def __init__(self, cells, resolution: int | None = None):
        cells = np.array(cells, dtype=float)
        if cells.ndim == 1:
            cells = cells[:, None]
        if cells.ndim != 2:
            raise ValueError("cells must be a 2-d array (cells x dim)")
        size = cells.shape[0]
        if resolution is None:
            resolution = size.bit_length() - 1
        if size != 1 << resolution:
            raise ValueError(f"expected {1 << resolution} cells, got {size}")
        cells.setflags(write=False)
        self.resolution = resolution
        self.cells = cells

    @property
    def dim(self) -> int:
        return self.cells.shape[1]

    @classmethod
    def constant(cls, value, resolution: int = 0) -> StepFunction:
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(np.tile(value, (1 << resolution, 1)), resolution)

    def refine(self, resolution: int) -> StepFunction:
        if resolution < self.resolution:
            raise ValueError("cannot refine to a coarser resolution")
        if resolution == self.resolution:
            return self
        return StepFunction(np.repeat(self.cells, 1 << (resolution - self.resolution), axis=0), resolution)

    def __call__(self, t) -> np.ndarray:
        t = float(t)
        if not 0.0 <= t < 1.0:
            raise ValueError(f"t={t!r} outside [0, 1)")
        return self.cells[math.floor(t * (1 << self.resolution))]

    def _binary(self, other: StepFunction, op) -> StepFunction:
        r = max(self.resolution, other.resolution)
        return StepFunction(op(self.refine(r).cells, other.refine(r).cells), r)

    def __add__(self, other: StepFunction) -> StepFunction:
        return self._binary(other, np.add)

    def __sub__(self, other: StepFunction) -> StepFunction:
        return self._binary(other, np.subtract)

    def __neg__(self) -> StepFunction:
        return StepFunction(-self.cells, self.resolution)

    def __mul__(self, scalar: float) -> StepFunction:
        return StepFunction(self.cells * scalar, self.resolution)

    __rmul__ = __mul__

    def apply(self, matrix) -> StepFunction:
        """Apply a linear map to every cell value."""
        return StepFunction(self.cells @ np.asarray(matrix, dtype=float).T, self.resolution)

    def allclose(self, other: StepFunction, atol: float = 1e-12) -> bool:
        r = max(self.resolution, other.resolution)
        return bool(np.allclose(self.refine(r).cells, other.refine(r).cells, rtol=0.0, atol=atol))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "resolution": self.resolution, "cells": self.cells.tolist()}

    @classmethod
    def from_dict(cls, doc: Mapping) -> StepFunction:
        f = cls(doc["cells"], doc["resolution"])
        if "dim" in doc and f.dim != doc["dim"]:
            raise ValueError(f"cells have dimension {f.dim}, document says {doc['dim']}")
        return f

    def __repr__(self):
        return f"StepFunction(resolution={self.resolution}, dim={self.dim})"


class HaarExpansion:
    """Coefficients ``x_k^(j)`` on the tree of depth ``n`` plus the mean."""

    __slots__ = ("depth", "coefficients", "mean")

    def __init__(self, coefficients, depth: int | None = None, mean=None):
        coefficients = np.array(coefficients, dtype=float)
        if coefficients.ndim == 1:
            coefficients = coefficients[:, None]
        size = coefficients.shape[0]
        if depth is None:
            depth = (size + 1).bit_length() - 1
        if size != (1 << depth) - 1:
            raise ValueError(f"depth {depth} needs {(1 << depth) - 1} coefficients, got {size}")
        dim = coefficients.shape[1]
        mean = np.zeros(dim) if mean is None else np.array(np.atleast_1d(mean), dtype=float)
        if mean.shape != (dim,):
            raise ValueError("mean has the wrong dimension")
        coefficients.setflags(write=False)
        mean.setflags(write=False)
        self.depth = depth
        self.coefficients = coefficients
        self.mean = mean

    @property
    def dim(self) -> int:
        return self.coefficients.shape[1]

    @classmethod
    def zeros(cls, depth: int, dim: int) -> HaarExpansion:
        return cls(np.zeros(((1 << depth) - 1, dim)), depth)

    @classmethod
    def from_mapping(cls, coefficients: Mapping, depth: int | None = None, dim: int | None = None,
                     mean=None) -> HaarExpansion:
        """Build from ``{(k, j): vector}``; missing indices are zero."""
        keys = [HaarIndex(*key) for key in coefficients]
        if depth is None:
            depth = max((idx.level for idx in keys), default=0)
        if dim is None:
            sample = next(iter(coefficients.values()), None)
            if sample is None:
                dim = 1 if mean is None else len(np.atleast_1d(mean))
            else:
                dim = len(np.atleast_1d(sample))
        dense = np.zeros(((1 << depth) - 1, dim))
        for idx, value in zip(keys, coefficients.values()):
            if idx.level > depth:
                raise ValueError(f"{tuple(idx)} deeper than depth {depth}")
            dense[idx.flat] = np.atleast_1d(value)
        return cls(dense, depth, mean)

    def __getitem__(self, idx) -> np.ndarray:
        idx = idx if isinstance(idx, HaarIndex) else HaarIndex(*idx)
        if idx.level > self.depth:
            return np.zeros(self.dim)
        return self.coefficients[idx.flat]

    def level(self, k: int) -> np.ndarray:
        """Coefficients of level ``k`` as a ``(2**(k-1), dim)`` array."""
        if k > self.depth:
            return np.zeros((1 << (k - 1), self.dim))
        return self.coefficients[(1 << (k - 1)) - 1:(1 << k) - 1]

    def items(self) -> Iterable[tuple[HaarIndex, np.ndarray]]:
        for idx in TreeRange(1, self.depth) if self.depth else ():
            yield idx, self.coefficients[idx.flat]

    def with_depth(self, depth: int) -> HaarExpansion:
        """Pad with zeros or truncate to ``depth`` levels."""
        size = (1 << depth) - 1
        if depth <= self.depth:
            return HaarExpansion(self.coefficients[:size], depth, self.mean)
        dense = np.zeros((size, self.dim))
        dense[:self.coefficients.shape[0]] = self.coefficients
        return HaarExpansion(dense, depth, self.mean)

    def scale_signs(self, signs) -> HaarExpansion:
        """Multiply each coefficient by a per-index sign (flat order)."""
        signs = np.asarray(signs, dtype=float)
        return HaarExpansion(self.coefficients * signs[:, None], self.depth, self.mean)

    def apply(self, matrix) -> HaarExpansion:
        matrix = np.asarray(matrix, dtype=float)
        return HaarExpansion(self.coefficients @ matrix.T, self.depth, matrix @ self.mean)

    def __add__(self, other: HaarExpansion) -> HaarExpansion:
        depth = max(self.depth, other.depth)
        a, b = self.with_depth(depth), other.with_depth(depth)
        return HaarExpansion(a.coefficients + b.coefficients, depth, a.mean + b.mean)

    def __sub__(self, other: HaarExpansion) -> HaarExpansion:
        return self + other * -1.0

    def __mul__(self, scalar: float) -> HaarExpansion:
        return HaarExpansion(self.coefficients * scalar, self.depth, self.mean * scalar)

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "depth": self.depth,
            "mean": self.mean.tolist(),
            "coefficients": [[idx.level, idx.position, value.tolist()] for idx, value in self.items()],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> HaarExpansion:
        dim = int(doc["dim"])
        depth = int(doc["depth"])
        mapping = {}
        for entry in doc["coefficients"]:
            k, j, value = entry
            value = np.atleast_1d(np.asarray(value, dtype=float))
            if value.shape != (dim,):
                raise ValueError(f"coefficient ({k}, {j}) has dimension {value.size}, expected {dim}")
            mapping[(int(k), int(j))] = value
        return cls.from_mapping(mapping, depth=depth, dim=dim, mean=doc.get("mean"))

    def __repr__(self):
        return f"HaarExpansion(depth={self.depth}, dim={self.dim})"


def synthesize(expansion: HaarExpansion, resolution: int | None = None) -> StepFunction:
    """Cell values of ``mean + sum x_k^(j) chi_k^(j)`` at the given resolution."""
    n = expansion.depth
    if resolution is None:
        resolution = n
    if resolution < n:
        raise ValueError(f"resolution {resolution} is below the expansion depth {n}")
    values = expansion.mean[None, :].copy()
    for k in range(1, n + 1):
        step = haar_height(k) * expansion.level(k)
        values = np.stack([values + step, values - step], axis=1).reshape(-1, expansion.dim)
    return StepFunction(values, n).refine(resolution)


def analyze(f: StepFunction, depth: int | None = None) -> HaarExpansion:
    """Haar-Fourier coefficients of ``f`` on the tree of depth ``depth`` (default: resolution)."""
    R = f.resolution
    if depth is None:
        depth = R
    sums = f.cells
    levels = {}
    for k in range(R, 0, -1):
        pair = sums.reshape(-1, 2, f.dim)
        levels[k] = pair[:, 0] - pair[:, 1]
        sums = pair[:, 0] + pair[:, 1]
    scale = 0.5 ** R
    dense = np.zeros(((1 << depth) - 1, f.dim))
    for k in range(1, min(depth, R) + 1):
        dense[(1 << (k - 1)) - 1:(1 << k) - 1] = levels[k] * (haar_height(k) * scale)
    return HaarExpansion(dense, depth, sums[0] * scale)


def synthesis_matrix(depth: int, resolution: int | None = None) -> np.ndarray:
    """``H[c, flat] = chi_flat(cell c)``, shape ``(2**R, 2**depth - 1)``."""
    resolution = depth if resolution is None else resolution
    eye = np.eye((1 << depth) - 1)
    cols = [synthesize(HaarExpansion(eye[:, [i]], depth), resolution).cells[:, 0] for i in range(eye.shape[0])]
    return np.stack(cols, axis=1) if cols else np.zeros((1 << resolution, 0))


def l2x_norm(f: StepFunction, space) -> float:
    """``(integral of ||f(t)||_X**2 dt)**(1/2)`` for a step function."""
    if space.dim != f.dim:
        raise ValueError(f"space has dimension {space.dim}, function has {f.dim}")
    norms = space.norms(f.cells)
    return float(math.sqrt(np.sum(norms * norms) * 0.5 ** f.resolution))


def conditional_expectation(f: StepFunction, k: int) -> StepFunction:
    """Average ``f`` over every dyadic interval of level ``k``."""
    if k < 0:
        raise ValueError("level must be non-negative")
    if k >= f.resolution:
        return f
    blocks = f.cells.reshape(1 << k, -1, f.dim).mean(axis=1)
    return StepFunction(blocks, k).refine(f.resolution)


def spectrum(expansion: HaarExpansion, tol: float = SPEC_TOL) -> list[HaarIndex]:
    """Indices whose coefficient exceeds ``tol`` in max-norm."""
    if expansion.depth == 0:
        return []
    mags = np.abs(expansion.coefficients).max(axis=1)
    return [HaarIndex.from_flat(int(i)) for i in np.nonzero(mags > tol)[0]]

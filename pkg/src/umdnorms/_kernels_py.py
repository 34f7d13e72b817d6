"""Pure-numpy tuple-ratio ascent, vectorized over restarts.

Reference semantics for the compiled ``_kernels`` module; both expose
``transform_ratio`` and ``ascend`` with identical signatures.

Tuples ``X`` have shape ``(restarts, 2**n - 1, m)`` in flat tree order.  The
ratio is ``||T synth(eps * X)|| / ||synth(X)||`` in the mixed norms
``L_2(l_pY)`` and ``L_2(l_pX)``.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def _heights(n: int) -> np.ndarray:
    return np.array([math.sqrt(2.0) ** (k - 1) if k % 2 == 0 else float(1 << ((k - 1) // 2))
                     for k in range(1, n + 1)])


def _synth(X: np.ndarray, n: int, h: np.ndarray) -> np.ndarray:
    B, _, m = X.shape
    F = np.zeros((B, 1, m))
    for k in range(1, n + 1):
        step = h[k - 1] * X[:, (1 << (k - 1)) - 1:(1 << k) - 1]
        F = np.stack([F + step, F - step], axis=2).reshape(B, -1, m)
    return F


def _synth_adjoint(W: np.ndarray, n: int, h: np.ndarray) -> np.ndarray:
    B, _, m = W.shape
    out = np.empty((B, (1 << n) - 1, m))
    for k in range(n, 0, -1):
        pair = W.reshape(B, -1, 2, m)
        out[:, (1 << (k - 1)) - 1:(1 << k) - 1] = h[k - 1] * (pair[:, :, 0] - pair[:, :, 1])
        W = pair[:, :, 0] + pair[:, :, 1]
    return out


def _norms(V: np.ndarray, p) -> np.ndarray:
    if not isinstance(p, float):
        return p.norms(V)
    a = np.abs(V)
    if p == 1.0:
        return a.sum(axis=-1)
    if p == 2.0:
        return np.sqrt((a * a).sum(axis=-1))
    if math.isinf(p):
        return a.max(axis=-1)
    return ((a ** p).sum(axis=-1)) ** (1.0 / p)


def _scaled_subgrad(V: np.ndarray, nrm: np.ndarray, p: float) -> np.ndarray:
    """``||v|| * g(v)`` row-wise, zero where ``v = 0``."""
    if not isinstance(p, float):
        flat = V.reshape(-1, V.shape[-1])
        nflat = nrm.reshape(-1)
        out = np.zeros_like(flat)
        for row in np.nonzero(nflat > 0)[0]:
            out[row] = nflat[row] * p.subgradient(flat[row])
        return out.reshape(V.shape)
    if p == 2.0:
        return V.copy()
    if p == 1.0:
        return nrm[..., None] * np.sign(V)
    if math.isinf(p):
        out = np.zeros_like(V)
        idx = np.argmax(np.abs(V), axis=-1)  # first maximal coordinate
        picked = np.take_along_axis(V, idx[..., None], axis=-1)
        np.put_along_axis(out, idx[..., None], nrm[..., None] * np.sign(picked), axis=-1)
        return out
    safe = np.where(nrm > 0, nrm, 1.0)[..., None]
    return np.sign(V) * np.abs(V) ** (p - 1.0) * safe ** (2.0 - p) * (nrm[..., None] > 0)


def _evaluate(X, signs, T, n, h, px, py, want_grad):
    weight = 0.5 ** n
    F = _synth(X, n, h)
    Fe = _synth(X * signs[None, :, None], n, h)
    G = Fe @ T.T
    nF = _norms(F, px)
    nG = _norms(G, py)
    D = np.sqrt((nF * nF).sum(axis=1) * weight)
    N = np.sqrt((nG * nG).sum(axis=1) * weight)
    safeD = np.where(D > 0, D, 1.0)
    r = N / safeD
    if not want_grad:
        return r, D, None
    WF = _scaled_subgrad(F, nF, px) * (weight / safeD)[:, None, None]
    safeN = np.where(N > 0, N, 1.0)
    WG = _scaled_subgrad(G, nG, py) * (weight / safeN)[:, None, None]
    gD = _synth_adjoint(WF, n, h)
    gN = _synth_adjoint(WG @ T, n, h) * signs[None, :, None]
    grad = (gN - r[:, None, None] * gD) / safeD[:, None, None]
    return r, D, grad


def _as_norm(p):
    """Floats select l_p; anything else must be a space with ``norms``/``subgradient``."""
    return p if hasattr(p, "norms") else float(p)


def transform_ratio(X, signs, T, n, px, py):
    """Ratios for a batch of tuples; zero denominators give ``nan``."""
    X = np.ascontiguousarray(X, dtype=float)
    r, D, _ = _evaluate(X, np.asarray(signs, dtype=float), np.asarray(T, dtype=float), n,
                        _heights(n), _as_norm(px), _as_norm(py), False)
    return np.where(D > 0, r, np.nan)


def ascend(X0, signs, T, n, px, py, iters=1000, step0=0.1, conv_tol=1e-9):
    """Normalized subgradient ascent on the ratio, one trajectory per restart.

    Each step moves ``X`` by ``step * |X|`` along the unit gradient and
    renormalizes to unit denominator.  Improvements are accepted and grow the
    step by 1.5; failures halve it.  A restart stops when its step drops
    below ``conv_tol``.  Returns ``(ratios, X)``.
    """
    X = np.array(X0, dtype=float, copy=True)
    signs = np.asarray(signs, dtype=float)
    T = np.asarray(T, dtype=float)
    px, py = _as_norm(px), _as_norm(py)
    h = _heights(n)
    B = X.shape[0]
    r, D, g = _evaluate(X, signs, T, n, h, px, py, True)
    X /= D[:, None, None]
    r, D, g = _evaluate(X, signs, T, n, h, px, py, True)
    step = np.full(B, float(step0))
    active = np.ones(B, dtype=bool)
    for _ in range(iters):
        gnorm = np.sqrt((g * g).sum(axis=(1, 2)))
        active &= (gnorm > 0) & (step >= conv_tol)
        if not active.any():
            break
        a = np.nonzero(active)[0]
        xa = X[a]
        xnorm = np.sqrt((xa * xa).sum(axis=(1, 2)))
        cand = xa + (step[a] * xnorm / gnorm[a])[:, None, None] * g[a]
        rc, Dc, gc = _evaluate(cand, signs, T, n, h, px, py, True)
        cand /= Dc[:, None, None]
        # ratio and gradient direction are scale invariant; rescale the gradient
        gc *= Dc[:, None, None]
        better = rc > r[a]
        acc = a[better]
        X[acc] = cand[better]
        r[acc] = rc[better]
        g[acc] = gc[better]
        step[acc] *= 1.5
        step[a[~better]] *= 0.5
    r, _, _ = _evaluate(X, signs, T, n, h, px, py, False)
    return r, X

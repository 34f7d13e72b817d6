# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tuple-ratio ascent; same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, INFINITY, isinf, NAN
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cnp.import_array()

BACKEND = "cython"


cdef inline double _sign(double v) noexcept nogil:
    return 1.0 if v > 0 else (-1.0 if v < 0 else 0.0)


cdef double _norm(const double* v, int m, double p) noexcept nogil:
    cdef int d
    cdef double s = 0.0, a
    if p == 1.0:
        for d in range(m):
            s += fabs(v[d])
        return s
    if p == 2.0:
        for d in range(m):
            s += v[d] * v[d]
        return sqrt(s)
    if isinf(p):
        for d in range(m):
            a = fabs(v[d])
            if a > s:
                s = a
        return s
    for d in range(m):
        s += pow(fabs(v[d]), p)
    return pow(s, 1.0 / p)


cdef void _scaled_subgrad(const double* v, int m, double p, double nrm, double scale,
                          double* out) noexcept nogil:
    # out += scale * ||v|| * g(v); nothing when v = 0
    cdef int d, best
    cdef double a, top
    if nrm == 0.0:
        return
    if p == 2.0:
        for d in range(m):
            out[d] += scale * v[d]
    elif p == 1.0:
        for d in range(m):
            out[d] += scale * nrm * _sign(v[d])
    elif isinf(p):
        best = 0
        top = fabs(v[0])
        for d in range(1, m):
            a = fabs(v[d])
            if a > top:
                top = a
                best = d
        out[best] += scale * nrm * _sign(v[best])
    else:
        for d in range(m):
            out[d] += scale * _sign(v[d]) * pow(fabs(v[d]), p - 1.0) * pow(nrm, 2.0 - p)


cdef void _synth(const double* X, const double* signs, int n, int m, const double* h,
                 double* F, double* tmp) noexcept nogil:
    # F (2**n x m) = sum over the tree of signs * X * chi, mean zero
    cdef int k, j, d, size, off
    cdef double x
    for d in range(m):
        F[d] = 0.0
    for k in range(1, n + 1):
        size = 1 << (k - 1)
        off = size - 1
        for j in range(size - 1, -1, -1):
            for d in range(m):
                tmp[d] = F[j * m + d]
            for d in range(m):
                x = h[k - 1] * X[(off + j) * m + d]
                if signs != NULL:
                    x *= signs[off + j]
                F[(2 * j) * m + d] = tmp[d] + x
                F[(2 * j + 1) * m + d] = tmp[d] - x


cdef void _synth_adjoint(double* W, int n, int m, const double* h, double* out) noexcept nogil:
    # destroys W
    cdef int k, j, d, size, off
    cdef double left, right
    for k in range(n, 0, -1):
        size = 1 << (k - 1)
        off = size - 1
        for j in range(size):
            for d in range(m):
                left = W[(2 * j) * m + d]
                right = W[(2 * j + 1) * m + d]
                out[(off + j) * m + d] = h[k - 1] * (left - right)
                W[j * m + d] = left + right


cdef struct Work:
    int n, mx, my, cells, nidx
    double px, py
    double* h
    double* signs
    double* T
    double* F
    double* Fe
    double* G
    double* WF
    double* WFe
    double* gD
    double* gN
    double* tmp


cdef double _evaluate(Work* w, const double* X, double* grad, double* D_out) noexcept nogil:
    cdef int c, d, e, i
    cdef int mx = w.mx, my = w.my, cells = w.cells, nidx = w.nidx
    cdef double weight = 1.0 / cells
    cdef double D = 0.0, N = 0.0, nrm, r, acc
    _synth(X, NULL, w.n, mx, w.h, w.F, w.tmp)
    _synth(X, w.signs, w.n, mx, w.h, w.Fe, w.tmp)
    for c in range(cells):
        for e in range(my):
            acc = 0.0
            for d in range(mx):
                acc += w.T[e * mx + d] * w.Fe[c * mx + d]
            w.G[c * my + e] = acc
    for c in range(cells):
        nrm = _norm(&w.F[c * mx], mx, w.px)
        D += nrm * nrm
        nrm = _norm(&w.G[c * my], my, w.py)
        N += nrm * nrm
    D = sqrt(D * weight)
    N = sqrt(N * weight)
    D_out[0] = D
    if D <= 0.0:
        return 0.0
    r = N / D
    if grad == NULL:
        return r
    memset(w.WF, 0, cells * mx * sizeof(double))
    memset(w.WFe, 0, cells * mx * sizeof(double))
    memset(w.tmp, 0, (my if my > mx else mx) * sizeof(double))
    for c in range(cells):
        nrm = _norm(&w.F[c * mx], mx, w.px)
        _scaled_subgrad(&w.F[c * mx], mx, w.px, nrm, weight / D, &w.WF[c * mx])
        if N > 0.0:
            for e in range(my):
                w.tmp[e] = 0.0
            nrm = _norm(&w.G[c * my], my, w.py)
            _scaled_subgrad(&w.G[c * my], my, w.py, nrm, weight / N, w.tmp)
            for d in range(mx):
                acc = 0.0
                for e in range(my):
                    acc += w.tmp[e] * w.T[e * mx + d]
                w.WFe[c * mx + d] = acc
    _synth_adjoint(w.WF, w.n, mx, w.h, w.gD)
    _synth_adjoint(w.WFe, w.n, mx, w.h, w.gN)
    for i in range(nidx):
        for d in range(mx):
            grad[i * mx + d] = (w.signs[i] * w.gN[i * mx + d] - r * w.gD[i * mx + d]) / D
    return r


def _heights(int n):
    return np.array([sqrt(2.0) ** (k - 1) if k % 2 == 0 else float(1 << ((k - 1) // 2))
                     for k in range(1, n + 1)], dtype=np.float64)


cdef class _Workspace:
    cdef Work w
    cdef object keep

    def __cinit__(self, signs, T, int n, double px, double py):
        cdef cnp.ndarray[double, ndim=1, mode="c"] s = np.ascontiguousarray(signs, dtype=np.float64)
        cdef cnp.ndarray[double, ndim=2, mode="c"] t = np.ascontiguousarray(T, dtype=np.float64)
        cdef cnp.ndarray[double, ndim=1, mode="c"] h = _heights(n)
        cdef int mx = t.shape[1], my = t.shape[0], cells = 1 << n
        self.keep = (s, t, h)
        self.w.n = n
        self.w.mx = mx
        self.w.my = my
        self.w.cells = cells
        self.w.nidx = cells - 1
        self.w.px = px
        self.w.py = py
        self.w.h = &h[0]
        self.w.signs = &s[0]
        self.w.T = &t[0, 0]
        self.w.F = <double*> malloc(cells * mx * sizeof(double))
        self.w.Fe = <double*> malloc(cells * mx * sizeof(double))
        self.w.G = <double*> malloc(cells * my * sizeof(double))
        self.w.WF = <double*> malloc(cells * mx * sizeof(double))
        self.w.WFe = <double*> malloc(cells * mx * sizeof(double))
        self.w.gD = <double*> malloc(cells * mx * sizeof(double))
        self.w.gN = <double*> malloc(cells * mx * sizeof(double))
        self.w.tmp = <double*> malloc((my + mx + 1) * sizeof(double))

    def __dealloc__(self):
        free(self.w.F)
        free(self.w.Fe)
        free(self.w.G)
        free(self.w.WF)
        free(self.w.WFe)
        free(self.w.gD)
        free(self.w.gN)
        free(self.w.tmp)


def transform_ratio(X, signs, T, int n, double px, double py):
    """Ratios for a batch of tuples; zero denominators give ``nan``."""
    cdef cnp.ndarray[double, ndim=3, mode="c"] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef _Workspace ws = _Workspace(signs, T, n, px, py)
    cdef int b, B = x.shape[0]
    cdef double D
    cdef cnp.ndarray[double, ndim=1] out = np.empty(B)
    for b in range(B):
        out[b] = _evaluate(&ws.w, &x[b, 0, 0], NULL, &D)
        if D <= 0.0:
            out[b] = NAN
    return out


def ascend(X0, signs, T, int n, double px, double py, int iters=1000, double step0=0.1,
           double conv_tol=1e-9):
    """Normalized subgradient ascent; see ``_kernels_py.ascend``."""
    cdef cnp.ndarray[double, ndim=3, mode="c"] X = np.array(X0, dtype=np.float64, order="C", copy=True)
    cdef _Workspace ws = _Workspace(signs, T, n, px, py)
    cdef int B = X.shape[0], size = X.shape[1] * X.shape[2]
    cdef cnp.ndarray[double, ndim=1] ratios = np.empty(B)
    cdef double* g = <double*> malloc(size * sizeof(double))
    cdef double* gc = <double*> malloc(size * sizeof(double))
    cdef double* cand = <double*> malloc(size * sizeof(double))
    cdef double* x
    cdef double r, rc, D, Dc, step, gnorm, xnorm, scale
    cdef int b, it, i
    try:
        with nogil:
            for b in range(B):
                x = &X[b, 0, 0]
                r = _evaluate(&ws.w, x, g, &D)
                for i in range(size):
                    x[i] /= D
                r = _evaluate(&ws.w, x, g, &D)
                step = step0
                for it in range(iters):
                    gnorm = 0.0
                    for i in range(size):
                        gnorm += g[i] * g[i]
                    gnorm = sqrt(gnorm)
                    if not (gnorm > 0.0 and step >= conv_tol):
                        break
                    xnorm = 0.0
                    for i in range(size):
                        xnorm += x[i] * x[i]
                    xnorm = sqrt(xnorm)
                    scale = step * xnorm / gnorm
                    for i in range(size):
                        cand[i] = x[i] + scale * g[i]
                    rc = _evaluate(&ws.w, cand, gc, &Dc)
                    if rc > r:
                        for i in range(size):
                            x[i] = cand[i] / Dc
                            g[i] = gc[i] * Dc
                        r = rc
                        step *= 1.5
                    else:
                        step *= 0.5
                ratios[b] = _evaluate(&ws.w, x, NULL, &D)
    finally:
        free(g)
        free(gc)
        free(cand)
    return ratios, X

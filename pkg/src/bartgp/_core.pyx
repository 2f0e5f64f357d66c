# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pairwise kernel-matrix fill.

Same contract as the numpy fallback in ``_corepy``: evaluate the chained
two-level closed form of the tree-prior correlation at every (row, col)
pair, from per-point cutpoint count tables. The pair loop runs in parallel
over rows; outputs are disjoint so the result is deterministic.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange

IMPL = 'compiled'


cdef double _pair_value(const long* lo_i, const long* hi_i,
                        const long* lo_j, const long* hi_j,
                        const long* n, const double* w, const double* psi,
                        const double* pv, const long* bnds, long nseg,
                        double gamma, double W, long p) noexcept nogil:
    cdef long a, nb, mid, n0, na, sm, sp
    cdef long s, start, span
    cdef double S, T, frac0, wm, wp, t1, g1, g2, tp, v
    cdef bint any0 = 0

    # pass 1: weighted separation total
    S = 0.0
    for a in range(p):
        nb = lo_i[a] if lo_i[a] < lo_j[a] else lo_j[a]
        mid = hi_i[a] if hi_i[a] > hi_j[a] else hi_j[a]
        n0 = mid - nb
        if n0 < 0:
            n0 = 0
        if n0 > 0:
            any0 = 1
        S += w[a] * n0 / n[a]
    if not any0:
        return 1.0
    S = W - S

    # pass 2: geometric factor of the collapsed two-level form
    T = 0.0
    for a in range(p):
        nb = lo_i[a] if lo_i[a] < lo_j[a] else lo_j[a]
        mid = hi_i[a] if hi_i[a] > hi_j[a] else hi_j[a]
        n0 = mid - nb
        if n0 < 0:
            n0 = 0
        na = n[a] - nb - n0
        sm = n0 + nb
        sp = n0 + na
        wm = W - w[a] if sp == 0 else W
        wp = W - w[a] if sm == 0 else W
        frac0 = w[a] * n0 / n[a]
        t1 = (S + frac0) * (1.0 / wm + 1.0 / wp + (nb + na - 2) / W)
        g1 = (<double> na / sp if sp > 0 else 0.0) - 1.0
        g2 = (<double> nb / sm if sm > 0 else 0.0) - 1.0
        tp = (w[a] * n0 / W) * (2 * psi[n[a]] - psi[1 + sm] - psi[1 + sp])
        T += w[a] / n[a] * (t1 + w[a] / wm * g1 + w[a] / wp * g2 - tp)

    # chain the segments from the terminal value upward
    v = 1.0 - (1.0 - gamma) * pv[bnds[nseg]]
    for s in range(nseg - 1, -1, -1):
        start = bnds[s]
        span = bnds[s + 1] - start
        if span == 2:
            v = 1.0 - pv[start] * (1.0 - ((1.0 - pv[start + 1]) * S
                                          + pv[start + 1] * v * T) / W)
        else:
            v = 1.0 - pv[start] * (1.0 - v * S / W)
    return v


def ref_corr_matrix(const long[:, ::1] lo_r, const long[:, ::1] hi_r,
                    const long[:, ::1] lo_c, const long[:, ::1] hi_c,
                    const long[::1] n, const double[::1] w,
                    const double[::1] psi, const double[::1] pvals,
                    const long[::1] bounds, double gamma, bint symmetric,
                    double[:, ::1] out):
    cdef long nrows = lo_r.shape[0]
    cdef long ncols = lo_c.shape[0]
    cdef long p = lo_r.shape[1]
    cdef long nseg = bounds.shape[0] - 1
    cdef long i, j, j0
    cdef double W = 0.0
    for i in range(p):
        W += w[i]
    for i in prange(nrows, nogil=True, schedule='static'):
        j0 = i if symmetric else 0
        for j in range(j0, ncols):
            out[i, j] = _pair_value(&lo_r[i, 0], &hi_r[i, 0],
                                    &lo_c[j, 0], &hi_c[j, 0],
                                    &n[0], &w[0], &psi[0], &pvals[0],
                                    &bounds[0], nseg, gamma, W, p)
    if symmetric:
        for i in range(nrows):
            for j in range(i):
                out[i, j] = out[j, i]
    return np.asarray(out)

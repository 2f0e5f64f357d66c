"""Pure-numpy implementation of the pairwise kernel-matrix fill.

Fallback for :mod:`bartgp._core`; same contract, vectorized over row
blocks so memory stays bounded while the work per pair remains the cheap
combination of precomputed one-point tables.
"""

import numpy as np

from .kernel import _depth2_terms, _chain_from_terms

IMPL = 'python'


def _block_rows(nrows, ncols, p, target=4_000_000):
    return max(1, int(target / max(ncols * p, 1)))


def ref_corr_matrix(lo_r, hi_r, lo_c, hi_c, n, w, psi, pvals, bounds, gamma,
                    symmetric, out):
    """Fill `out` with the chained-closed-form correlation at every pair.

    lo/hi are per-point cutpoint counts (strictly below / at-or-below each
    coordinate); `bounds` holds the segment boundaries (0, D1, ..., Dr) of
    the reset chain, with every span 1 or 2.
    """
    nrows, p = lo_r.shape
    ncols = lo_c.shape[0]
    resets = tuple(bounds[1:])
    block = _block_rows(nrows, ncols, p)
    for a in range(0, nrows, block):
        b = min(a + block, nrows)
        c0 = a if symmetric else 0
        nb = np.minimum(lo_r[a:b, None, :], lo_c[None, c0:, :])
        mid = np.maximum(hi_r[a:b, None, :], hi_c[None, c0:, :])
        n0 = np.maximum(mid - nb, 0)
        na = n - nb - n0
        S, T, W, allzero = _depth2_terms(nb, n0, na, w, psi)
        v = _chain_from_terms(S, T, W, pvals, resets, gamma)
        v = np.where(allzero, 1.0, v)
        out[a:b, c0:] = v
    if symmetric:
        iu = np.triu_indices(nrows, k=1)
        out[(iu[1], iu[0])] = out[iu]
    return out

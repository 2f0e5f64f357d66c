"""Correlation/covariance matrix assembly and finite-difference derivatives.

The pairwise fill is the computational bottleneck of the whole method, so
everything that involves a single point is precomputed in O((rows+cols) p)
and the pair loop only combines integer tables. The loop itself runs in the
compiled core when available, otherwise in a vectorized numpy fallback;
both produce the same values as the scalar kernel path.
"""

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _corepy
from .grid import SplitGrid, AxisWeights
from .kernel import (DepthSchedule, TruncationSpec, DEFAULT_SPEC,
                     digamma_table, chain_corr)

try:  # compiled core is optional; the fallback is always present
    from . import _core
except ImportError:
    _core = None

HAVE_COMPILED = _core is not None and not os.environ.get('BARTGP_NO_EXT')

__all__ = [
    'KernelMatrixRequest',
    'HAVE_COMPILED',
    'corr_matrix',
    'cov_matrix',
    'derive_leaf_moments',
    'matrix_grad_fd',
]


@dataclass(frozen=True)
class KernelMatrixRequest:
    """Everything needed to assemble one kernel matrix block."""

    rows: np.ndarray
    cols: np.ndarray
    grid: SplitGrid
    weights: AxisWeights = None
    sched: DepthSchedule = field(default_factory=DepthSchedule)
    spec: TruncationSpec = DEFAULT_SPEC
    scale: float = 1.0
    mean_offset: float = 0.0
    p0_override: bool = False

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        cols = np.atleast_2d(np.asarray(self.cols, dtype=float))
        if rows.shape[1] != self.grid.p or cols.shape[1] != self.grid.p:
            raise ValueError(f'points must have {self.grid.p} columns')
        if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(cols))):
            raise ValueError('points must be finite')
        if not self.scale >= 0:
            raise ValueError('scale must be >= 0')
        w = self.weights if self.weights is not None \
            else AxisWeights.uniform(self.grid.p)
        if not isinstance(w, AxisWeights):
            w = AxisWeights(np.asarray(w, dtype=float))
        if w.p != self.grid.p:
            raise ValueError(f'got {self.grid.p} axes but {w.p} weights')
        object.__setattr__(self, 'rows', rows)
        object.__setattr__(self, 'cols', cols)
        object.__setattr__(self, 'weights', w)

    def resolved_sched(self):
        return self.sched.with_p0_one() if self.p0_override else self.sched

    def replace_sched(self, sched):
        return KernelMatrixRequest(self.rows, self.cols, self.grid,
                                   self.weights, sched, self.spec,
                                   self.scale, self.mean_offset,
                                   self.p0_override)


def _point_tables(points, axes):
    """Per-point cutpoint counts: strictly below, and at-or-below."""
    npts = points.shape[0]
    lo = np.empty((npts, len(axes)), dtype=np.int64)
    hi = np.empty((npts, len(axes)), dtype=np.int64)
    for a, cuts in enumerate(axes):
        lo[:, a] = np.searchsorted(cuts, points[:, a], side='right')
        hi[:, a] = np.searchsorted(cuts, points[:, a], side='left')
    return np.ascontiguousarray(lo), np.ascontiguousarray(hi)


def corr_matrix(req, impl='auto'):
    """Correlation matrix of the reference kernel at all (row, col) pairs.

    Entry (i, j) equals the scalar kernel at (rows[i], cols[j]). `impl`
    selects the pair-loop implementation: 'auto' prefers the compiled core,
    'compiled' requires it, 'python' forces the numpy fallback, and
    'scalar' evaluates entrywise through the scalar path (slow; meant for
    verification).
    """
    sched = req.resolved_sched()
    w_full = req.weights.w
    sizes = req.grid.sizes
    keep = (w_full > 0) & (sizes > 0)
    nrows = req.rows.shape[0]
    ncols = req.cols.shape[0]
    symmetric = req.rows.shape == req.cols.shape \
        and np.array_equal(req.rows, req.cols)
    if not np.any(keep):
        return np.ones((nrows, ncols))
    axes = [req.grid.axes[i] for i in np.nonzero(keep)[0]]
    w = np.ascontiguousarray(w_full[keep])
    n = np.ascontiguousarray(sizes[keep])
    spans = np.diff((0,) + req.spec.reset_depths)
    if np.any(spans > 2) or impl == 'scalar':
        return _corr_matrix_scalar(req, sched, keep, axes, w, symmetric)
    lo_r, hi_r = _point_tables(req.rows[:, keep], axes)
    lo_c, hi_c = (lo_r, hi_r) if symmetric \
        else _point_tables(req.cols[:, keep], axes)
    psi = digamma_table(int(n.max()) + 1)
    pvals = sched.pvals(req.spec.max_depth)
    bounds = np.ascontiguousarray((0,) + req.spec.reset_depths,
                                  dtype=np.int64)
    out = np.empty((nrows, ncols))
    if impl == 'compiled' and not HAVE_COMPILED:
        raise RuntimeError('compiled core not available')
    use_compiled = HAVE_COMPILED if impl == 'auto' else impl == 'compiled'
    mod = _core if use_compiled else _corepy
    mod.ref_corr_matrix(lo_r, hi_r, lo_c, hi_c, n, w, psi, pvals, bounds,
                        req.spec.gamma, symmetric, out)
    return out


def _corr_matrix_scalar(req, sched, keep, axes, w, symmetric):
    """Entrywise slow path, also used when a spec needs a walked segment."""
    from .grid import count_splits
    sub = SplitGrid(tuple(axes))
    rows = req.rows[:, keep]
    cols = req.cols[:, keep]
    out = np.empty((rows.shape[0], cols.shape[0]))
    for i in range(rows.shape[0]):
        j0 = i if symmetric else 0
        for j in range(j0, cols.shape[0]):
            counts = count_splits(sub, rows[i], cols[j])
            out[i, j] = chain_corr(counts, w, sched, spec=req.spec)
    if symmetric:
        iu = np.triu_indices(out.shape[0], k=1)
        out[(iu[1], iu[0])] = out[iu]
    return out


def cov_matrix(req, impl='auto'):
    """Prior covariance block: total leaf variance times the correlation."""
    return req.scale * corr_matrix(req, impl=impl)


def derive_leaf_moments(y, k=2.0, m=200):
    """Total prior mean and variance of the sum of trees from the data range.

    Returns ``(m mu_mu, m sigma_mu^2)`` with the standard calibration: the
    prior mean is the midrange of y, and the leaf scale is chosen so that k
    prior standard deviations of the sum span half the range of y. Only the
    totals matter for the infinite-trees limit, so m cancels out.
    """
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError('y must be nonempty')
    if not k > 0:
        raise ValueError('k must be positive')
    ymin, ymax = y.min(), y.max()
    total_mean = (ymax + ymin) / 2
    total_var = ((ymax - ymin) / (2 * k)) ** 2
    if total_var == 0:
        warnings.warn('y is constant: prior variance of the latent '
                      'function is zero')
    return total_mean, total_var


_FD_PARAMS = ('alpha', 'beta', 'log_k')


def matrix_grad_fd(req, param, step=1e-5, impl='auto'):
    """Central finite difference of the covariance matrix in one parameter.

    `param` is 'alpha', 'beta', or 'log_k' (the leaf-scale divisor enters
    only through ``scale``, proportional to k**-2). The step must keep the
    parameter inside its domain.
    """
    if param not in _FD_PARAMS:
        raise ValueError(f'param must be one of {_FD_PARAMS}')
    if param == 'log_k':
        # scale ~ k**-2, so K(log k +- h) = exp(-+2h) scale corr
        fac = (math.exp(-2 * step) - math.exp(2 * step)) / (2 * step)
        return fac * cov_matrix(req, impl=impl)
    sched = req.sched
    if param == 'alpha':
        lo, hi = sched.alpha - step, sched.alpha + step
        if lo < 0 or hi > 1:
            raise ValueError(f'alpha = {sched.alpha} too close to its '
                             f'domain boundary for step {step}')
        plus = req.replace_sched(DepthSchedule(hi, sched.beta,
                                               sched.overrides))
        minus = req.replace_sched(DepthSchedule(lo, sched.beta,
                                                sched.overrides))
    else:
        lo, hi = sched.beta - step, sched.beta + step
        if lo < 0:
            raise ValueError(f'beta = {sched.beta} too close to 0 for '
                             f'step {step}')
        plus = req.replace_sched(DepthSchedule(sched.alpha, hi,
                                               sched.overrides))
        minus = req.replace_sched(DepthSchedule(sched.alpha, lo,
                                                sched.overrides))
    return (cov_matrix(plus, impl=impl) - cov_matrix(minus, impl=impl)) \
        / (2 * step)

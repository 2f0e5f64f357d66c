"""Splitting grids and the integer count triples consumed by the kernel."""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    'SplitGrid',
    'SplitCounts',
    'AxisWeights',
    'build_grid',
    'count_splits',
]


@dataclass(frozen=True)
class SplitGrid:
    """Per-axis sorted cutpoint arrays defining the tree-split lattice.

    Attributes
    ----------
    axes : tuple of 1d float arrays
        One strictly increasing array of cutpoints per predictor. Axes may
        be empty (a predictor with a single observed value has no splits).
    """

    axes: tuple

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        for i, a in enumerate(axes):
            if a.ndim != 1:
                raise ValueError(f'axis {i} cutpoints must be 1d')
            if not np.all(np.isfinite(a)):
                raise ValueError(f'axis {i} has non-finite cutpoints')
            if a.size > 1 and not np.all(np.diff(a) > 0):
                raise ValueError(f'axis {i} cutpoints not strictly increasing')
        object.__setattr__(self, 'axes', axes)

    @property
    def p(self):
        return len(self.axes)

    @property
    def sizes(self):
        """Number of cutpoints n_i along each axis, as an int array."""
        return np.array([a.size for a in self.axes], dtype=np.int64)


@dataclass(frozen=True)
class SplitCounts:
    """Counts of cutpoints below, strictly between, and above a point pair.

    The componentwise sum ``below + between + above`` equals the grid axis
    lengths.
    """

    below: np.ndarray
    between: np.ndarray
    above: np.ndarray

    def __post_init__(self):
        below = np.asarray(self.below, dtype=np.int64)
        between = np.asarray(self.between, dtype=np.int64)
        above = np.asarray(self.above, dtype=np.int64)
        if not (below.shape == between.shape == above.shape) or below.ndim != 1:
            raise ValueError('count vectors must be 1d and of equal length')
        if min(below.min(initial=0), between.min(initial=0),
               above.min(initial=0)) < 0:
            raise ValueError('split counts must be nonnegative')
        object.__setattr__(self, 'below', below)
        object.__setattr__(self, 'between', between)
        object.__setattr__(self, 'above', above)

    @property
    def total(self):
        return self.below + self.between + self.above

    @property
    def p(self):
        return self.below.size


@dataclass(frozen=True)
class AxisWeights:
    """Unnormalized per-axis selection probabilities.

    Axes with zero weight are excluded before any kernel evaluation,
    together with their counts.
    """

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1:
            raise ValueError('weights must be 1d')
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError('weights must be finite and nonnegative')
        if w.size >= 1 and not np.any(w > 0):
            raise ValueError('at least one axis weight must be positive')
        object.__setattr__(self, 'w', w)

    @classmethod
    def uniform(cls, p):
        return cls(np.ones(p))

    @property
    def p(self):
        return self.w.size


def build_grid(X, strategy='midpoints', *, count=None, lo=None, hi=None):
    """Build a splitting grid from training predictors.

    Parameters
    ----------
    X : (n, p) array
        Training predictor matrix.
    strategy : {'midpoints', 'uniform'}
        'midpoints' places a cutpoint midway between consecutive unique
        values of each column. 'uniform' places `count` equally spaced
        cutpoints strictly inside ``(lo, hi)`` on every axis.
    count, lo, hi :
        Required for the 'uniform' strategy.

    Returns
    -------
    SplitGrid
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise ValueError('X must be a nonempty (n, p) matrix')
    if not np.all(np.isfinite(X)):
        raise ValueError('X contains non-finite values')
    if strategy == 'midpoints':
        axes = []
        for j in range(X.shape[1]):
            u = np.unique(X[:, j])
            mid = (u[:-1] + u[1:]) / 2
            # float midpoints can collide for adjacent representable values
            axes.append(np.unique(mid))
        return SplitGrid(tuple(axes))
    elif strategy == 'uniform':
        if count is None or lo is None or hi is None:
            raise ValueError("uniform strategy needs count, lo, hi")
        if count < 1:
            raise ValueError('count must be >= 1')
        if not lo < hi:
            raise ValueError('need lo < hi')
        step = (hi - lo) / (count + 1)
        axis = lo + step * np.arange(1, count + 1)
        return SplitGrid(tuple(axis.copy() for _ in range(X.shape[1])))
    else:
        raise ValueError(f'unknown strategy {strategy!r}')


def uniform_grid(p, count, lo=0.0, hi=1.0):
    """Grid with `count` evenly spaced cutpoints in (lo, hi) on `p` axes."""
    if count < 1:
        raise ValueError('count must be >= 1')
    if not lo < hi:
        raise ValueError('need lo < hi')
    step = (hi - lo) / (count + 1)
    axis = lo + step * np.arange(1, count + 1)
    return SplitGrid(tuple(axis.copy() for _ in range(p)))


def count_splits(grid, x, xp):
    """Reduce a pair of points to per-axis (below, between, above) counts.

    A cutpoint exactly equal to a coordinate of the pair counts as outside
    (below or above), never as between: a tree split there never separates
    equal values.

    Parameters
    ----------
    grid : SplitGrid
    x, xp : (p,) arrays
        The two points. They may lie outside the grid range.

    Returns
    -------
    SplitCounts
    """
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if x.shape != (grid.p,) or xp.shape != (grid.p,):
        raise ValueError(f'points must have shape ({grid.p},)')
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xp))):
        raise ValueError('points must be finite')
    below = np.empty(grid.p, dtype=np.int64)
    between = np.empty(grid.p, dtype=np.int64)
    above = np.empty(grid.p, dtype=np.int64)
    for i, axis in enumerate(grid.axes):
        lo = min(x[i], xp[i])
        hi = max(x[i], xp[i])
        nb = np.searchsorted(axis, lo, side='right')
        mid = np.searchsorted(axis, hi, side='left')
        n0 = max(mid - nb, 0)
        below[i] = nb
        between[i] = n0
        above[i] = axis.size - nb - n0
    return SplitCounts(below, between, above)

"""Generative sampler for the tree prior: the independent kernel oracle.

Single trees are sampled as explicit node objects for clarity; the Monte
Carlo cross-checks run on a vectorized engine that grows whole batches of
trees level by level, which is what makes prior-covariance comparisons with
tens of millions of trees feasible. Both implementations follow the same
generative process: a node splits with probability alpha/(1+d)^beta while
splits remain available, the split axis is drawn from the positively
weighted axes with available cutpoints, and the cutpoint uniformly among
the available ones.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .grid import AxisWeights
from .kernel import (DepthSchedule, KernelBudgetError, bound_pair,
                     reference_corr)
from .grid import count_splits

__all__ = [
    'Leaf',
    'Split',
    'PriorSampleReport',
    'sample_tree',
    'eval_tree',
    'sample_prior_f',
    'same_leaf_prob',
    'covariance_check',
    'sidak_threshold',
]


@dataclass(frozen=True)
class Leaf:
    value: float

    @property
    def is_leaf(self):
        return True


@dataclass(frozen=True)
class Split:
    axis: int
    cut_index: int  # index into grid.axes[axis]
    left: object
    right: object

    @property
    def is_leaf(self):
        return False


@dataclass(frozen=True)
class PriorSampleReport:
    """Comparison of a sampled prior covariance against the kernel."""

    sample_cov: np.ndarray
    kernel_cov: np.ndarray
    mc_std: np.ndarray
    max_z: float
    n_samples: int
    m_trees: int
    config: dict

    def z_matrix(self):
        return np.abs(self.sample_cov - self.kernel_cov) / self.mc_std

    def to_json(self, **extra):
        payload = {
            'schema': 'bartgp.prior-check/1',
            'n_samples': self.n_samples,
            'm_trees': self.m_trees,
            'max_z': self.max_z,
            'config': self.config,
            'sample_cov': self.sample_cov.tolist(),
            'kernel_cov': self.kernel_cov.tolist(),
            'mc_std': self.mc_std.tolist(),
        }
        payload.update(extra)
        return json.dumps(payload, indent=2, sort_keys=True)


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _norm_weights(grid, weights):
    if weights is None:
        return np.ones(grid.p)
    if isinstance(weights, AxisWeights):
        return weights.w
    return AxisWeights(np.asarray(weights, dtype=float)).w


def sample_tree(grid, sched=DepthSchedule(), weights=None, leaf_mean=0.0,
                leaf_sd=1.0, rng=0, d=0):
    """Draw one tree from the prior as an explicit node structure.

    A node becomes a leaf when no positively weighted axis has available
    cutpoints in its region, and otherwise with probability 1 - P(d).
    Leaf values are i.i.d. Normal(leaf_mean, leaf_sd**2).
    """
    rng = _as_rng(rng)
    w = _norm_weights(grid, weights)
    ranges = [(0, a.size) for a in grid.axes]
    return _sample_node(grid, sched, w, leaf_mean, leaf_sd, rng, d, ranges)


def _sample_node(grid, sched, w, mu, sd, rng, d, ranges):
    avail = [i for i, (a, b) in enumerate(ranges) if b > a and w[i] > 0]
    if avail and rng.random() < sched.prob(d):
        probs = w[avail] / w[avail].sum()
        axis = int(rng.choice(avail, p=probs))
        a, b = ranges[axis]
        cut = int(rng.integers(a, b))
        left_ranges = list(ranges)
        left_ranges[axis] = (a, cut)
        right_ranges = list(ranges)
        right_ranges[axis] = (cut + 1, b)
        left = _sample_node(grid, sched, w, mu, sd, rng, d + 1, left_ranges)
        right = _sample_node(grid, sched, w, mu, sd, rng, d + 1, right_ranges)
        return Split(axis, cut, left, right)
    return Leaf(float(rng.normal(mu, sd)))


def eval_tree(tree, x, grid):
    """Evaluate the stepwise function of a tree at one point.

    Decision rule: descend left when ``x[axis] <= cutpoint``.
    """
    x = np.asarray(x, dtype=float)
    node = tree
    while not node.is_leaf:
        s = grid.axes[node.axis][node.cut_index]
        node = node.left if x[node.axis] <= s else node.right
    return node.value


def sample_prior_f(X, m_trees, grid, sched=DepthSchedule(), weights=None,
                   total_mean=0.0, total_var=1.0, rng=0):
    """One draw of the latent regression function at the points X.

    Sums `m_trees` independent trees whose leaf moments are scaled so that
    the sum has the given total prior mean and variance.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    rng = _as_rng(rng)
    out = np.zeros(X.shape[0])
    if m_trees == 0:
        return out
    mu = total_mean / m_trees
    sd = np.sqrt(total_var / m_trees)
    for _ in range(m_trees):
        tree = sample_tree(grid, sched, weights, mu, sd, rng)
        out += [eval_tree(tree, x, grid) for x in X]
    return out


class _TreeBatch:
    """Grow a batch of trees level by level over a fixed point set.

    Nodes at the current level are rows of array state: per-axis available
    cutpoint windows and the boolean mask of points in the node's region.
    The generator semantics match :func:`sample_tree`; only the random
    number consumption order differs.
    """

    def __init__(self, X, grid, sched, w, rng):
        self.X = X
        self.grid = grid
        self.sched = sched
        self.w = w
        self.rng = rng
        p = grid.p
        maxn = int(grid.sizes.max(initial=0))
        self.cutpad = np.full((p, max(maxn, 1)), np.inf)
        for i, a in enumerate(grid.axes):
            self.cutpad[i, :a.size] = a

    def run(self, n_trees, on_leaf, draw_values):
        """Grow `n_trees` trees; call on_leaf(tree_idx, mask[, values])."""
        p = self.grid.p
        npts = self.X.shape[0]
        sizes = self.grid.sizes
        start = np.zeros((n_trees, p), dtype=np.int64)
        end = np.broadcast_to(sizes, (n_trees, p)).copy()
        mask = np.ones((n_trees, npts), dtype=bool)
        tree = np.arange(n_trees)
        d = 0
        while tree.size:
            avail = (end - start > 0) & (self.w > 0)
            has = avail.any(axis=1)
            u = self.rng.random(tree.size)
            nonterm = has & (u < self.sched.prob(d))
            if not np.all(nonterm):
                lidx = ~nonterm
                if draw_values:
                    vals = self.rng.standard_normal(int(lidx.sum()))
                    on_leaf(tree[lidx], mask[lidx], vals)
                else:
                    on_leaf(tree[lidx], mask[lidx])
            if not np.any(nonterm):
                break
            start = start[nonterm]
            end = end[nonterm]
            mask = mask[nonterm]
            tree = tree[nonterm]
            avail = avail[nonterm]
            # axis ~ categorical over available axes, cutpoint uniform
            wa = self.w * avail
            cum = np.cumsum(wa, axis=1)
            r = self.rng.random(tree.size) * cum[:, -1]
            axis = (r[:, None] >= cum).sum(axis=1)
            lo = start[np.arange(tree.size), axis]
            hi = end[np.arange(tree.size), axis]
            cut = lo + (self.rng.random(tree.size) * (hi - lo)).astype(np.int64)
            cut = np.minimum(cut, hi - 1)
            s = self.cutpad[axis, cut]
            goes_left = self.X[:, axis].T <= s[:, None]
            rows = np.arange(tree.size)
            lstart = start.copy()
            lend = end.copy()
            lend[rows, axis] = cut
            rstart = start.copy()
            rend = end.copy()
            rstart[rows, axis] = cut + 1
            start = np.concatenate([lstart, rstart])
            end = np.concatenate([lend, rend])
            mask = np.concatenate([mask & goes_left, mask & ~goes_left])
            tree = np.concatenate([tree, tree])
            d += 1


def same_leaf_prob(x, xp, grid, sched=DepthSchedule(), weights=None,
                   n_trees=100_000, rng=0, batch=65_536):
    """Monte Carlo estimate of P(x and x' end up in the same tree leaf).

    This probability is the prior correlation of the latent function, which
    is what makes tree sampling an oracle for every kernel variant. Returns
    ``(estimate, binomial standard error)``.
    """
    X = np.vstack([np.asarray(x, dtype=float), np.asarray(xp, dtype=float)])
    w = _norm_weights(grid, weights)
    ss = np.random.SeedSequence(rng if not isinstance(rng, np.random.Generator)
                                else rng.integers(2**63))
    hits = 0
    done = 0
    children = ss.spawn(-(-n_trees // batch))
    for child in children:
        nb = min(batch, n_trees - done)
        engine = _TreeBatch(X, grid, sched, w, np.random.default_rng(child))
        together = np.zeros(nb, dtype=bool)

        def on_leaf(tree_idx, mask):
            both = mask.all(axis=1)
            together[tree_idx[both]] = True

        engine.run(nb, on_leaf, draw_values=False)
        hits += int(together.sum())
        done += nb
    phat = hits / n_trees
    se = np.sqrt(max(phat * (1 - phat), 1e-12) / n_trees)
    return phat, se


def _kernel_cov_estimate(X, grid, sched, w, total_var, depth=4,
                         max_states=300_000):
    """Best available kernel value per pair: depth-`depth` bound midpoint
    where the walk fits the state budget, reference estimator elsewhere."""
    n = X.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            counts = count_splits(grid, X[i], X[j])
            try:
                pair = bound_pair(counts, w, sched, D0=depth, r=1,
                                  max_states=max_states)
                val = pair.midpoint
            except KernelBudgetError:
                val = reference_corr(counts, w, sched)
            out[i, j] = out[j, i] = val
    return total_var * out


def covariance_check(X, grid, sched=DepthSchedule(), weights=None, *,
                     n_samples=50_000, m_trees=200, rng=0, total_var=1.0,
                     batch=256):
    """Compare the sampled prior covariance with the kernel's prediction.

    Draws `n_samples` independent realizations of the sum of `m_trees`
    trees at the points X, forms the sample covariance matrix, and reports
    entrywise z-scores against the kernel covariance using Normal-theory
    Monte Carlo standard errors. `max_z` over the upper triangle is the
    test statistic; compare it against :func:`sidak_threshold`.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise ValueError('need at least two points')
    if n_samples < 2:
        raise ValueError('need at least two samples')
    w = _norm_weights(grid, weights)
    npts = X.shape[0]
    sd_leaf = np.sqrt(total_var / m_trees)
    seed = rng if not isinstance(rng, np.random.Generator) \
        else int(rng.integers(2**63))
    ss = np.random.SeedSequence(seed)
    s1 = np.zeros(npts)
    s2 = np.zeros((npts, npts))
    done = 0
    children = ss.spawn(-(-n_samples // batch))
    for child in children:
        nb = min(batch, n_samples - done)
        gen = np.random.default_rng(child)
        engine = _TreeBatch(X, grid, sched, w, gen)
        f = np.zeros((nb, npts))

        def on_leaf(tree_idx, mask, vals):
            np.add.at(f, tree_idx % nb, sd_leaf * vals[:, None] * mask)

        engine.run(nb * m_trees, on_leaf, draw_values=True)
        s1 += f.sum(axis=0)
        s2 += f.T @ f
        done += nb
    mean = s1 / n_samples
    sample_cov = (s2 - np.outer(mean, s1)) / (n_samples - 1)
    kernel_cov = _kernel_cov_estimate(X, grid, sched, w, total_var)
    var_c = (np.outer(kernel_cov.diagonal(), kernel_cov.diagonal())
             + kernel_cov**2) / (n_samples - 1)
    mc_std = np.sqrt(var_c)
    iu = np.triu_indices(npts)
    z = np.abs(sample_cov - kernel_cov)[iu] / mc_std[iu]
    config = {
        'seed': seed, 'batch': batch, 'total_var': total_var,
        'alpha': sched.alpha, 'beta': sched.beta,
        'overrides': list(sched.overrides), 'weights': w.tolist(),
        'n_points': npts, 'p': X.shape[1],
    }
    return PriorSampleReport(sample_cov, kernel_cov, mc_std,
                             float(z.max()), n_samples, m_trees, config)


def sidak_threshold(n_entries, level=0.01):
    """Two-sided max-|z| threshold for jointly testing `n_entries` entries."""
    per_entry = 1 - (1 - level) ** (1 / n_entries)
    return float(stats.norm.ppf(1 - per_entry / 2))

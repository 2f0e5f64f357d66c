"""BART prior correlation: exact recursion, bounds, and closed forms.

The exact correlation walks every decision rule of the tree prior and is
feasible only on tiny split counts; it serves as the reference for the
truncated and pseudo-recursive variants, which in turn anchor the closed
forms used in production. All entry points share the conventions of
:mod:`bartgp.grid`: per-axis integer triples (below, between, above) plus
nonnegative axis weights, with zero-weight axes stripped before evaluation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .grid import SplitCounts, AxisWeights

__all__ = [
    'DepthSchedule',
    'TruncationSpec',
    'BoundPair',
    'KernelBudgetError',
    'depth_prob',
    'exact_corr',
    'truncated_corr',
    'pseudo_recursive_corr',
    'depth1_closed',
    'depth2_closed',
    'reference_corr',
    'chain_corr',
    'bound_pair',
    'digamma',
    'digamma_table',
    'laplace_kernel',
    'shifted_laplace_kernel',
    'power_kernel',
    'comparison_kernel',
    'COMPARISON_KERNELS',
]

EULER_GAMMA = 0.57721566490153286060651209008240243


class KernelBudgetError(RuntimeError):
    """Raised when a walked recursion exceeds its call budget."""


@dataclass(frozen=True)
class DepthSchedule:
    """Nontermination probabilities P(d) = alpha / (1 + d)**beta.

    `overrides` maps specific depths to fixed probabilities, replacing the
    power law there. This supports the substitutions used in consistency
    checks (P0 -> 1, P(d) -> 0 past a depth, ...).
    """

    alpha: float = 0.95
    beta: float = 2.0
    overrides: tuple = ()

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError(f'alpha must be in [0, 1], got {self.alpha}')
        if not self.beta >= 0:
            raise ValueError(f'beta must be >= 0, got {self.beta}')
        ov = self.overrides
        if isinstance(ov, dict):
            ov = tuple(sorted(ov.items()))
        else:
            ov = tuple((int(d), float(p)) for d, p in ov)
        for d, p in ov:
            if d < 0 or not 0 <= p <= 1:
                raise ValueError(f'invalid override P({d}) = {p}')
        object.__setattr__(self, 'overrides', ov)

    def prob(self, d):
        if d < 0:
            raise ValueError('depth must be nonnegative')
        for dd, p in self.overrides:
            if dd == d:
                return p
        return self.alpha / (1 + d) ** self.beta

    def pvals(self, upto):
        """Array of P(d) for d = 0 ... upto inclusive."""
        return np.array([self.prob(d) for d in range(upto + 1)])

    def with_override(self, d, p):
        ov = dict(self.overrides)
        ov[d] = p
        return DepthSchedule(self.alpha, self.beta, tuple(sorted(ov.items())))

    def with_p0_one(self):
        return self.with_override(0, 1.0)


@dataclass(frozen=True)
class TruncationSpec:
    """Truncation/reset configuration for the bounded kernels.

    `reset_depths` is a strictly increasing tuple (D1, ..., Dr); the
    recursion restarts from the initial counts when entering D1 ... D(r-1)
    and stops at Dr with the terminal value 1 - (1 - gamma) P(Dr).
    A plain truncation at depth D is the r = 1 case.
    """

    reset_depths: tuple
    gamma: float = 1.0

    def __post_init__(self):
        depths = tuple(int(d) for d in self.reset_depths)
        if len(depths) < 1:
            raise ValueError('need at least one depth')
        if depths[0] < 1 or any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValueError('reset depths must be strictly increasing positive '
                             f'integers, got {depths}')
        if not 0 <= self.gamma <= 1:
            raise ValueError(f'gamma must be in [0, 1], got {self.gamma}')
        object.__setattr__(self, 'reset_depths', depths)
        object.__setattr__(self, 'gamma', float(self.gamma))

    @classmethod
    def uniform(cls, D0, r, gamma=1.0):
        """The shorthand (D0, r) -> reset depths (D0, 2 D0, ..., r D0)."""
        if D0 < 1 or r < 1:
            raise ValueError('need D0 >= 1 and r >= 1')
        return cls(tuple(D0 * j for j in range(1, r + 1)), gamma)

    @property
    def max_depth(self):
        return self.reset_depths[-1]


DEFAULT_SPEC = TruncationSpec.uniform(2, 5, gamma=1.0)


@dataclass(frozen=True)
class BoundPair:
    """Lower/upper kernel bounds with the configurations that produced them."""

    lower: float
    upper: float
    spec_lower: TruncationSpec
    spec_upper: TruncationSpec

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper <= 1:
            raise ValueError(f'invalid bounds [{self.lower}, {self.upper}]')

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def midpoint(self):
        return (self.lower + self.upper) / 2


def depth_prob(sched, d):
    """Probability that a node at depth `d` is nonterminal."""
    return sched.prob(d)


def _prep(counts, weights):
    """Normalize inputs and strip zero-weight axes.

    Returns int arrays (below, between, above) and the float weight array,
    all restricted to axes with positive weight.
    """
    if not isinstance(counts, SplitCounts):
        counts = SplitCounts(*counts)
    nm, n0, np_ = counts.below, counts.between, counts.above
    if weights is None:
        w = np.ones(nm.size)
    elif isinstance(weights, AxisWeights):
        w = weights.w
    else:
        w = AxisWeights(np.asarray(weights, dtype=float)).w
    if w.size != nm.size:
        raise ValueError(f'got {nm.size} axes but {w.size} weights')
    keep = w > 0
    return nm[keep], n0[keep], np_[keep], w[keep]


def _resolve_sched(sched, p0_one):
    return sched.with_p0_one() if p0_one else sched


def exact_corr(counts, weights=None, sched=DepthSchedule(), d=0, *,
               budget=10_000_000, p0_one=False):
    """Exact BART prior sub-correlation at depth `d`, by full recursion.

    Walks every decision rule of the tree prior, so the cost is exponential
    in the total number of outside splits; intended as an oracle for tiny
    instances (roughly ``sum(n_i) <= 12``). The recursion is memoized on
    (depth, below, above); `budget` caps the number of recursive calls and a
    :class:`KernelBudgetError` is raised past it, never a wrong answer.
    """
    nm, n0, np_, w = _prep(counts, weights)
    sched = _resolve_sched(sched, p0_one)
    if nm.size == 0:
        return 1.0
    n0t = tuple(n0.tolist())
    memo = {}
    calls = [0]

    def rec(dd, tnm, tnp):
        calls[0] += 1
        if calls[0] > budget:
            raise KernelBudgetError(
                f'exact recursion exceeded {budget} calls at depth {dd}')
        key = (dd, tnm, tnp)
        val = memo.get(key)
        if val is not None:
            return val
        total = 0.0
        wsum = 0.0
        for i in range(len(w)):
            ni = tnm[i] + n0t[i] + tnp[i]
            if ni == 0:
                continue
            wsum += w[i]
            acc = 0.0
            for k in range(tnm[i]):
                acc += rec(dd + 1, tnm[:i] + (k,) + tnm[i + 1:], tnp)
            for k in range(tnp[i]):
                acc += rec(dd + 1, tnm, tnp[:i] + (k,) + tnp[i + 1:])
            total += w[i] / ni * acc
        if wsum == 0.0:
            val = 1.0
        else:
            val = 1.0 - sched.prob(dd) * (1.0 - total / wsum)
        memo[key] = val
        return val

    return rec(d, tuple(nm.tolist()), tuple(np_.tolist()))


def truncated_corr(counts, weights=None, sched=DepthSchedule(), d=0, *,
                   D, gamma, budget=10_000_000, p0_one=False):
    """Sub-correlation truncated at depth `D`, by walking the recursion.

    At depth `D` the remaining subtree is replaced by 1 when no splits lie
    between the points, else by ``1 - (1 - gamma) P(D)``; gamma = 0 gives a
    lower bound on the exact value, gamma = 1 an upper bound, and the result
    is affine in gamma in between.
    """
    if d > D:
        raise ValueError(f'need d <= D, got d={d}, D={D}')
    if not 0 <= gamma <= 1:
        raise ValueError(f'gamma must be in [0, 1], got {gamma}')
    nm, n0, np_, w = _prep(counts, weights)
    sched = _resolve_sched(sched, p0_one)
    if nm.size == 0:
        return 1.0
    n0t = tuple(n0.tolist())
    n0_nonzero = any(n0t)
    terminal = 1.0 - (1.0 - gamma) * sched.prob(D)
    memo = {}
    calls = [0]

    def rec(dd, tnm, tnp):
        calls[0] += 1
        if calls[0] > budget:
            raise KernelBudgetError(
                f'truncated recursion exceeded {budget} calls at depth {dd}')
        if dd == D:
            return terminal if n0_nonzero else 1.0
        key = (dd, tnm, tnp)
        val = memo.get(key)
        if val is not None:
            return val
        total = 0.0
        wsum = 0.0
        for i in range(len(w)):
            ni = tnm[i] + n0t[i] + tnp[i]
            if ni == 0:
                continue
            wsum += w[i]
            acc = 0.0
            for k in range(tnm[i]):
                acc += rec(dd + 1, tnm[:i] + (k,) + tnm[i + 1:], tnp)
            for k in range(tnp[i]):
                acc += rec(dd + 1, tnm, tnp[:i] + (k,) + tnp[i + 1:])
            total += w[i] / ni * acc
        if wsum == 0.0:
            val = 1.0
        else:
            val = 1.0 - sched.prob(dd) * (1.0 - total / wsum)
        memo[key] = val
        return val

    return rec(d, tuple(nm.tolist()), tuple(np_.tolist()))


def pseudo_recursive_corr(counts, weights=None, sched=DepthSchedule(), d=0, *,
                          spec, budget=10_000_000, p0_one=False):
    """Pseudo-recursive truncated sub-correlation, by walking the recursion.

    Evaluates like :func:`truncated_corr` at D = spec.max_depth, except that
    a recursive call entering one of the intermediate reset depths is
    evaluated at the original counts instead of the restricted ones handed
    down by the recursion. With gamma = 1 this is an upper bound on the
    exact correlation, improving as r grows.
    """
    if d > spec.max_depth:
        raise ValueError(f'need d <= {spec.max_depth}, got d={d}')
    nm, n0, np_, w = _prep(counts, weights)
    sched = _resolve_sched(sched, p0_one)
    if nm.size == 0:
        return 1.0
    n0t = tuple(n0.tolist())
    n0_nonzero = any(n0t)
    Dr = spec.max_depth
    resets = frozenset(spec.reset_depths[:-1])
    terminal = 1.0 - (1.0 - spec.gamma) * sched.prob(Dr)
    root_nm = tuple(nm.tolist())
    root_np = tuple(np_.tolist())
    memo = {}
    calls = [0]

    def rec(dd, tnm, tnp):
        calls[0] += 1
        if calls[0] > budget:
            raise KernelBudgetError(
                f'pseudo-recursive walk exceeded {budget} calls at depth {dd}')
        if dd == Dr:
            return terminal if n0_nonzero else 1.0
        if dd in resets:
            tnm, tnp = root_nm, root_np
        key = (dd, tnm, tnp)
        val = memo.get(key)
        if val is not None:
            return val
        total = 0.0
        wsum = 0.0
        for i in range(len(w)):
            ni = tnm[i] + n0t[i] + tnp[i]
            if ni == 0:
                continue
            wsum += w[i]
            acc = 0.0
            for k in range(tnm[i]):
                acc += rec(dd + 1, tnm[:i] + (k,) + tnm[i + 1:], tnp)
            for k in range(tnp[i]):
                acc += rec(dd + 1, tnm, tnp[:i] + (k,) + tnp[i + 1:])
            total += w[i] / ni * acc
        if wsum == 0.0:
            val = 1.0
        else:
            val = 1.0 - sched.prob(dd) * (1.0 - total / wsum)
        memo[key] = val
        return val

    return rec(d, root_nm, root_np)


def depth1_closed(counts, weights=None, sched=DepthSchedule(), d=0,
                  k_next=1.0, *, p0_one=False):
    """One collapsed recursion level: value at depth d given the level below.

    Computes ``1 - P(d) (1 - k_next (1 - (1/W) sum_i w_i n0_i/n_i))``. With
    ``k_next = 1`` this is the no-interaction upper bound reached when
    P(d+1) = 0.
    """
    nm, n0, np_, w = _prep(counts, weights)
    sched = _resolve_sched(sched, p0_one)
    if nm.size == 0 or not n0.any():
        return 1.0
    n = nm + n0 + np_
    active = n > 0
    W = w[active].sum()
    frac = (w[active] * n0[active] / n[active]).sum()
    return 1.0 - sched.prob(d) * (1.0 - k_next * (1.0 - frac / W))


def digamma(x):
    """Digamma function for positive real arguments.

    Shifts the argument above 10 with the recurrence psi(x+1) = psi(x) + 1/x,
    then applies the asymptotic series with six Bernoulli terms. Absolute
    error is below 1e-12 for x >= 1.
    """
    x = float(x)
    if not x > 0:
        raise ValueError(f'digamma requires x > 0, got {x}')
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = inv2 * (1 / 12 - inv2 * (1 / 120 - inv2 * (1 / 252 - inv2 * (
        1 / 240 - inv2 * (1 / 132 - inv2 * (691 / 32760))))))
    return acc + math.log(x) - 0.5 / x - series


def digamma_table(nmax):
    """psi(k) for k = 0 ... nmax as an array; entry 0 is a nan placeholder.

    Built from the exact recurrence psi(k+1) = psi(k) + 1/k, so it doubles
    as the harmonic-sum identity. All integer digamma lookups in the package
    go through this table, keeping the scalar and matrix paths consistent.
    """
    if nmax < 1:
        raise ValueError('need nmax >= 1')
    out = np.empty(nmax + 1)
    out[0] = np.nan
    out[1] = -EULER_GAMMA
    if nmax >= 2:
        out[2:] = -EULER_GAMMA + np.cumsum(1.0 / np.arange(1, nmax))
    return out


def _depth2_terms(nm, n0, np_, w, psi):
    """Geometric ingredients of the two-level closed form, batched.

    Parameters are (B, p) int arrays, weights (p,), and a digamma table
    covering indices up to ``max(n) + 1``. Returns per-row (S, T, W, allzero)
    where the collapsed two-level value at depth d with terminal value kdd is
    ``1 - P(d) (1 - ((1 - P(d+1)) S + P(d+1) kdd T) / W)``.

    Every division is guarded so that rows or axes where a term's count
    condition fails contribute an exact 0, never a nan.
    """
    nm = np.asarray(nm)
    n0 = np.asarray(n0)
    np_ = np.asarray(np_)
    n = nm + n0 + np_
    active = n > 0
    nsafe = np.where(active, n, 1)
    waxis = w * active
    W = waxis.sum(axis=-1)
    frac0 = waxis * n0 / nsafe
    S = W - frac0.sum(axis=-1)
    allzero = ~np.any(n0 > 0, axis=-1)

    # W with axis i emptied on one side; the axis drops out of the weight
    # total only if emptying it removes its last splits
    Wm = W[..., None] - w * (active & (n0 + np_ == 0))
    Wp = W[..., None] - w * (active & (n0 + nm == 0))
    Wm = np.where(Wm > 0, Wm, 1.0)
    Wp = np.where(Wp > 0, Wp, 1.0)

    Wcol = np.where(W > 0, W, 1.0)[..., None]
    t1 = (S[..., None] + frac0) * (1.0 / Wm + 1.0 / Wp
                                   + (nm + np_ - 2) / Wcol)
    sp = n0 + np_
    sm = n0 + nm
    g1 = np.where(sp > 0, np_ / np.where(sp > 0, sp, 1), 0.0) - 1.0
    g2 = np.where(sm > 0, nm / np.where(sm > 0, sm, 1), 0.0) - 1.0
    # psi[0] is a nan placeholder; dead axes are masked out below, so look
    # them up at a safe index instead of relying on 0 * nan
    tpsi = (w * n0 / Wcol) * (2 * psi[nsafe] - psi[1 + sm] - psi[1 + sp])
    inner = t1 + (w / Wm) * g1 + (w / Wp) * g2 - tpsi
    T = (np.where(active, w / nsafe, 0.0) * inner).sum(axis=-1)
    return S, T, W, allzero


def _chain_from_terms(S, T, W, pvals, reset_depths, gamma, start=0,
                      terminal=None):
    """Chain the collapsed one/two-level forms through the reset depths.

    `reset_depths` must produce segments of span 1 or 2 starting at `start`.
    S, T, W may be scalars or arrays (broadcast together); `terminal`
    overrides the bottom value 1 - (1 - gamma) P(D_r).
    """
    bounds = (start,) + tuple(reset_depths)
    v = terminal if terminal is not None else \
        1.0 - (1.0 - gamma) * pvals[bounds[-1]]
    Wsafe = np.where(W > 0, W, 1.0)
    for a, b in zip(bounds[-2::-1], bounds[::-1]):
        span = b - a
        if span == 2:
            v = 1.0 - pvals[a] * (1.0 - ((1.0 - pvals[a + 1]) * S
                                         + pvals[a + 1] * v * T) / Wsafe)
        elif span == 1:
            v = 1.0 - pvals[a] * (1.0 - v * S / Wsafe)
        else:
            raise ValueError(f'segment ({a}, {b}) has span {span} > 2')
    return v


def depth2_closed(counts, weights=None, sched=DepthSchedule(), d=0,
                  gamma=1.0, *, k_next=None, p0_one=False):
    """Two collapsed recursion levels in closed form.

    Equals the walked truncated recursion with D = d + 2 up to roundoff
    (within 1e-10 absolute). `k_next` overrides the terminal value
    ``1 - (1 - gamma) P(d+2)``, which is what allows chaining the formula
    through the reset depths of the pseudo-recursive kernel.
    """
    nm, n0, np_, w = _prep(counts, weights)
    sched = _resolve_sched(sched, p0_one)
    if nm.size == 0 or not n0.any():
        return 1.0
    psi = digamma_table(int((nm + n0 + np_).max()) + 1)
    S, T, W, _ = _depth2_terms(nm[None, :], n0[None, :], np_[None, :], w, psi)
    pvals = sched.pvals(d + 2)
    terminal = k_next if k_next is not None else \
        1.0 - (1.0 - gamma) * pvals[d + 2]
    v = _chain_from_terms(S[0], T[0], W[0], pvals, (d + 2,), gamma,
                          start=d, terminal=terminal)
    return float(v)


def reference_corr(counts, weights=None, sched=DepthSchedule(), *,
                   spec=DEFAULT_SPEC, p0_one=False):
    """Production estimator of the BART correlation.

    By default this is the pseudo-recursive upper bound with reset depths
    (2, 4, 6, 8, 10) and gamma = 1, computed without any recursion by
    chaining the two-level closed form at each reset. Any spec whose
    segments all span one or two levels is accepted.
    """
    nm, n0, np_, w = _prep(counts, weights)
    sched = _resolve_sched(sched, p0_one)
    if nm.size == 0 or not n0.any():
        return 1.0
    psi = digamma_table(int((nm + n0 + np_).max()) + 1)
    S, T, W, _ = _depth2_terms(nm[None, :], n0[None, :], np_[None, :], w, psi)
    pvals = sched.pvals(spec.max_depth)
    v = _chain_from_terms(S[0], T[0], W[0], pvals, spec.reset_depths,
                          spec.gamma)
    return float(v)


class _SegmentWalk:
    """Level-by-level expansion of the recursion below a fixed root.

    The recursion from a root state only ever decrements the below/above
    counts, so the expansion tree can be built once (it does not depend on
    depth offsets or terminal values) and reused to evaluate every segment
    of a pseudo-recursive chain. Each level stores the raw expansion with
    the children of a parent contiguous, so the upward pass is a segmented
    sum. The bottom two levels of each segment are collapsed with the
    closed form, so a segment spanning s levels only walks s - 2.
    """

    def __init__(self, nm, n0, np_, w, max_states=2_000_000):
        self.w = w
        self.n0 = n0
        self.p = nm.size
        root = np.concatenate([nm, np_])[None, :]
        # per level: (states, child coefs, parent start offsets, child counts)
        self.levels = [root]
        self.coefs = []
        self.offsets = []
        self.ccounts = []
        self.max_states = max_states
        self._terms = {}
        nmax = int((nm + n0 + np_).max(initial=0)) + 1
        self.psi = digamma_table(max(nmax, 1))

    def _grow(self):
        states = self.levels[-1]
        p = self.p
        nstates = states.shape[0]
        n = states[:, :p] + self.n0 + states[:, p:]
        cellcnt = states.ravel()
        total = int(cellcnt.sum())
        if sum(lv.shape[0] for lv in self.levels) + total > self.max_states:
            raise KernelBudgetError(
                f'segment walk exceeded {self.max_states} states')
        c = states.sum(axis=1)
        if total == 0:
            children = np.empty((0, 2 * p), dtype=states.dtype)
            coef = np.empty(0)
        else:
            # children grouped by parent (row-major over (parent, column))
            cell = np.repeat(np.arange(nstates * 2 * p), cellcnt)
            par = cell // (2 * p)
            col = cell % (2 * p)
            starts = np.concatenate([[0], np.cumsum(cellcnt)[:-1]])
            k = np.arange(total) - np.repeat(starts, cellcnt)
            children = states[par].copy()
            children[np.arange(total), col] = k
            coef = self.w[col % p] / n[par, col % p]
        self.levels.append(children)
        self.coefs.append(coef)
        self.offsets.append(np.concatenate([[0], np.cumsum(c)[:-1]]))
        self.ccounts.append(c)

    def ensure_depth(self, nlevels):
        while len(self.levels) - 1 < nlevels:
            self._grow()

    def terms(self, level):
        """(S, T, W) of the two-level closed form at each state of a level."""
        out = self._terms.get(level)
        if out is None:
            states = self.levels[level]
            nm = states[:, :self.p]
            np_ = states[:, self.p:]
            n0 = np.broadcast_to(self.n0, nm.shape)
            S, T, W, _ = _depth2_terms(nm, n0, np_, self.w, self.psi)
            out = (S, T, W)
            self._terms[level] = out
        return out

    def wsum(self, level):
        states = self.levels[level]
        n = states[:, :self.p] + self.n0 + states[:, self.p:]
        return (self.w * (n > 0)).sum(axis=1)

    @property
    def n_states(self):
        return sum(lv.shape[0] for lv in self.levels)

    def segment(self, pvals, start, span, terminal):
        """Value at the root of a segment of `span` levels.

        `terminal` replaces every call that reaches depth start + span. The
        root sits at depth `start`; P values are taken from `pvals`.
        """
        if span <= 0:
            raise ValueError('span must be positive')
        if span <= 2:
            S, T, W = self.terms(0)
            return float(_chain_from_terms(
                S[0], T[0], W[0], pvals, (start + span,), 1.0,
                start=start, terminal=terminal))
        nwalk = span - 2
        self.ensure_depth(nwalk)
        S, T, W = self.terms(nwalk)
        vals = _chain_from_terms(
            S, T, W, pvals, (start + span,), 1.0,
            start=start + nwalk, terminal=terminal)
        for level in range(nwalk - 1, -1, -1):
            coef = self.coefs[level]
            off = self.offsets[level]
            c = self.ccounts[level]
            nstates = self.levels[level].shape[0]
            agg = np.zeros(nstates)
            nonempty = c > 0
            if coef.size:
                agg[nonempty] = np.add.reduceat(coef * vals, off[nonempty])
            W = self.wsum(level)
            Wsafe = np.where(W > 0, W, 1.0)
            vals = np.where(W > 0,
                            1.0 - pvals[start + level] * (1.0 - agg / Wsafe),
                            1.0)
        return float(vals[0])


def chain_corr(counts, weights=None, sched=DepthSchedule(), *, spec,
               p0_one=False, max_states=2_000_000, walk=None):
    """Pseudo-recursive kernel evaluated segment by segment.

    Mathematically identical to :func:`pseudo_recursive_corr` but organized
    around the fact that every reset re-enters the original counts: the
    value is a chain of independent segment evaluations, each walked only
    where the collapsed closed forms cannot cover it. Pass a reused `walk`
    (from :func:`make_walk`) when evaluating many specs at the same counts.
    """
    nm, n0, np_, w = _prep(counts, weights)
    sched = _resolve_sched(sched, p0_one)
    if nm.size == 0 or not n0.any():
        return 1.0
    if walk is None:
        walk = _SegmentWalk(nm, n0, np_, w, max_states)
    bounds = (0,) + tuple(spec.reset_depths)
    pvals = sched.pvals(spec.max_depth)
    v = 1.0 - (1.0 - spec.gamma) * pvals[spec.max_depth]
    for a, b in zip(bounds[-2::-1], bounds[::-1]):
        v = walk.segment(pvals, a, b - a, v)
    return float(v)


def make_walk(counts, weights=None, *, max_states=2_000_000):
    """Build the reusable state expansion for :func:`chain_corr`."""
    nm, n0, np_, w = _prep(counts, weights)
    return _SegmentWalk(nm, n0, np_, w, max_states)


def bound_pair(counts, weights=None, sched=DepthSchedule(), *, D0=2, r=5,
               p0_one=False, max_states=2_000_000):
    """Efficiently computable bounds [k^{D0}_{0,0}, k^{D0,r}_{0,1}].

    The lower bound is the plain truncation at depth D0 with gamma = 0; the
    upper bound is the pseudo-recursive kernel with reset depths
    (D0, 2 D0, ..., r D0) and gamma = 1. Both are valid correlation
    functions in their own right.
    """
    nm, n0, np_, w = _prep(counts, weights)
    spec_lo = TruncationSpec.uniform(D0, 1, gamma=0.0)
    spec_up = TruncationSpec.uniform(D0, r, gamma=1.0)
    sched = _resolve_sched(sched, p0_one)
    if nm.size == 0 or not n0.any():
        return BoundPair(1.0, 1.0, spec_lo, spec_up)
    walk = _SegmentWalk(nm, n0, np_, w, max_states)
    lo = chain_corr((nm, n0, np_), w, sched, spec=spec_lo, walk=walk)
    up = chain_corr((nm, n0, np_), w, sched, spec=spec_up, walk=walk)
    lo = min(max(lo, 0.0), 1.0)
    up = min(max(up, lo), 1.0)
    return BoundPair(lo, up, spec_lo, spec_up)


def _l1(x, xp):
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if x.shape != xp.shape or x.ndim != 1:
        raise ValueError('points must be 1d of equal length')
    return np.abs(x - xp).sum(), x.size


def laplace_kernel(x, xp, eta):
    """exp(-eta * |x - x'|_1), the classical rough approximation."""
    if not eta > 0:
        raise ValueError('eta must be positive')
    dist, _ = _l1(x, xp)
    return float(np.exp(-eta * dist))


def shifted_laplace_kernel(x, xp, eta, alpha=0.95):
    """Intercept-shifted Laplace kernel on [0, 1]^p.

    Valid (positive semi-definite) on the unit hypercube; matches the BART
    correlation at coincident points (1) and at opposite corners (1 - alpha),
    and its small-eta limit is the no-interaction straight profile.
    """
    if not eta > 0:
        raise ValueError('eta must be positive')
    if not 0 < alpha <= 1:
        raise ValueError('alpha must be in (0, 1]')
    dist, p = _l1(x, xp)
    _check_unit_cube(x, xp)
    ea = eta * alpha
    return float(1 - alpha + alpha / (1 - np.exp(-ea))
                 * (np.exp(-ea * dist / p) - np.exp(-ea)))


def power_kernel(x, xp, q, alpha=0.95):
    """1 - alpha + alpha (1 - |x - x'|_1 / p)^q on [0, 1]^p.

    Positive semi-definiteness is proven only for integer q; for non-integer
    q >= 1 it holds in every numerical check tried but remains unproven, and
    the registry flags it accordingly.
    """
    if not q >= 1:
        raise ValueError('q must be >= 1')
    if not 0 < alpha <= 1:
        raise ValueError('alpha must be in (0, 1]')
    dist, p = _l1(x, xp)
    _check_unit_cube(x, xp)
    return float(1 - alpha + alpha * (1 - dist / p) ** q)


def _check_unit_cube(x, xp):
    if np.any(x < 0) or np.any(x > 1) or np.any(xp < 0) or np.any(xp > 1):
        raise ValueError('points must lie in [0, 1]^p')


COMPARISON_KERNELS = {
    'laplace': {'func': laplace_kernel, 'params': ('eta',),
                'psd_proven': True},
    'shifted_laplace': {'func': shifted_laplace_kernel,
                        'params': ('eta', 'alpha'), 'psd_proven': True},
    'power': {'func': power_kernel, 'params': ('q', 'alpha'),
              'psd_proven': False,
              'note': 'PSD unproven for non-integer q'},
}


def comparison_kernel(x, xp, kind, **params):
    """Evaluate one of the simple comparison kernels by name.

    Returns ``(value, metadata)`` where the metadata echoes the kind,
    parameters, and whether positive semi-definiteness is proven.
    """
    try:
        entry = COMPARISON_KERNELS[kind]
    except KeyError:
        raise ValueError(f'unknown comparison kernel {kind!r}') from None
    value = entry['func'](x, xp, **params)
    meta = {'kind': kind, 'params': params,
            'psd_proven': entry['psd_proven']}
    if 'note' in entry:
        meta['note'] = entry['note']
    return value, meta

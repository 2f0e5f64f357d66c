"""BART prior correlation kernel and its infinite-trees GP regression.

The package computes the exact prior correlation function of Bayesian
Additive Regression Trees by walking the tree-generating recursion, bounds
it with truncated and pseudo-recursive variants, collapses two recursion
levels into a closed form to The production estimator, and runs Gaussian
process regression with the resulting kernel. A generative tree-prior
sampler provides the independent cross-check for every kernel variant.
"""

from .grid import SplitGrid, SplitCounts, AxisWeights, build_grid, \
    count_splits
from .kernel import (DepthSchedule, TruncationSpec, BoundPair,
                     KernelBudgetError, depth_prob, exact_corr,
                     truncated_corr, pseudo_recursive_corr, depth1_closed,
                     depth2_closed, reference_corr, chain_corr, bound_pair,
                     digamma, digamma_table, laplace_kernel,
                     shifted_laplace_kernel, power_kernel, comparison_kernel)
from .kmatrix import (KernelMatrixRequest, corr_matrix, cov_matrix,
                      derive_leaf_moments, matrix_grad_fd, HAVE_COMPILED)

__version__ = '0.1.0'

"""Classical comparison algorithms.

These exist for relative comparison in sweeps, reconstructed from
their standard formulations: top-eigenvector PCA, diagonal
thresholding of the Gram diagonal, soft-thresholded covariance, and
limited brute force over sign patterns with greedy support growth.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .linalg import gram, top_eigenvector, truncate_top
from .models import Instance
from .recovery import RecoveryResult, pattern_arrays, pattern_count

COV_THRESH_C = 4.0  # default multiplier in tau = c * sqrt(ln(2 + d/k^2) / n)


def _result(inst: Instance, estimate: np.ndarray, start: float,
            patterns: int = 0) -> RecoveryResult:
    return RecoveryResult(
        estimate=estimate,
        correlation=float(abs(estimate @ inst.spike.values)),
        candidates_evaluated=0,
        patterns_enumerated=patterns,
        wall_time=time.perf_counter() - start,
    )


def _sym_data(inst: Instance) -> np.ndarray:
    Y = inst.data
    return (Y + Y.T) / 2.0


def vanilla_pca(inst: Instance) -> RecoveryResult:
    """Top eigenvector of the empirical covariance (or of Y itself for
    square models); no sparsity exploitation."""
    start = time.perf_counter()
    if inst.wishart_type:
        M = gram(inst.data) / inst.n
    else:
        M = _sym_data(inst)
    x, _ = top_eigenvector(M, tol=1e-8, max_iters=50_000, strict=False)
    return _result(inst, x, start)


def diagonal_thresholding(inst: Instance, k: int) -> RecoveryResult:
    """Top eigenvector of the principal submatrix on the k largest
    diagonal entries of Y^T Y; ties break toward the lower index."""
    if not inst.wishart_type:
        raise ValueError("diagonal thresholding expects a wishart-type instance")
    start = time.perf_counter()
    G = gram(inst.data)
    order = np.argsort(-np.diag(G), kind="stable")
    idx = np.sort(order[:k])
    sub = G[np.ix_(idx, idx)]
    x_sub, _ = top_eigenvector(sub, tol=1e-8, max_iters=50_000, strict=False)
    x = np.zeros(G.shape[0])
    x[idx] = x_sub
    return _result(inst, x, start)


def soft_threshold(M: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def default_cov_tau(inst: Instance, k: int, c: float = COV_THRESH_C) -> float:
    d = inst.spike.dim
    return c * math.sqrt(math.log(2.0 + d / k**2) / inst.n)


def covariance_thresholding(inst: Instance, k: int,
                            tau: float | None = None) -> RecoveryResult:
    """Soft-threshold the off-diagonal of (1/n) Y^T Y - Id at tau, take
    the top eigenvector, keep its k largest entries, renormalize."""
    if not inst.wishart_type:
        raise ValueError("covariance thresholding expects a wishart-type instance")
    start = time.perf_counter()
    if tau is None:
        tau = default_cov_tau(inst, k)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    d = inst.spike.dim
    M = gram(inst.data) / inst.n - np.eye(d)
    off = soft_threshold(M, tau)
    np.fill_diagonal(off, np.diag(M))
    x, _ = top_eigenvector(off, tol=1e-8, max_iters=50_000, strict=False)
    x = truncate_top(x, k)
    norm = np.linalg.norm(x)
    if norm > 0:
        x = x / norm
    return _result(inst, x, start)


def limited_brute_force(inst: Instance, k: int, t: int) -> RecoveryResult:
    """argmax of s^T G s over canonical sign patterns, support grown
    greedily to size k, then the top eigenvector of that submatrix.

    The growth step adds the coordinate (and sign) maximizing the gain
    2*|(G s)_c| + G_cc of the sign-vector quadratic form; ties break
    toward the lower index.  (Reconstructed recovery step: the source
    description ends at the argmax.)
    """
    if not 1 <= t <= k <= inst.spike.dim:
        raise ValueError("need 1 <= t <= k <= d")
    start = time.perf_counter()
    d = inst.spike.dim
    G = gram(inst.data) / inst.n if inst.wishart_type else _sym_data(inst)

    supports, signs = pattern_arrays(d, t)
    S = np.zeros((supports.shape[0], d))
    rows = np.repeat(np.arange(supports.shape[0]), t)
    S[rows, supports.ravel()] = signs.ravel().astype(np.float64)
    scores = np.einsum("bi,ij,bj->b", S, G, S)
    best = int(np.argmax(scores))

    s = S[best].copy()
    chosen = set(int(i) for i in supports[best])
    while len(chosen) < k:
        gs = G @ s
        gains = 2.0 * np.abs(gs) + np.diag(G)
        gains[list(chosen)] = -np.inf
        c = int(np.argmax(gains))
        s[c] = 1.0 if gs[c] >= 0 else -1.0
        chosen.add(c)
    idx = np.sort(np.array(list(chosen)))
    sub = G[np.ix_(idx, idx)]
    x_sub, _ = top_eigenvector(sub, tol=1e-8, max_iters=50_000, strict=False)
    x = np.zeros(d)
    x[idx] = x_sub
    return _result(inst, x, start, patterns=pattern_count(d, t))

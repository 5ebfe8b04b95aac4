"""Dense symmetric linear algebra shared by the recovery pipelines.

All matrices are plain float64 ``numpy`` arrays.  Symmetry is a checked
precondition (``ensure_symmetric``) rather than a wrapper type; masked
matrices are materialized as compact principal submatrices, never as
full-size Hadamard products, because the active sets the pipeline
produces are small.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

SYM_RTOL = 1e-12


class PowerIterationError(RuntimeError):
    """Raised when power iteration misses the residual target.

    Carries the best iterate so callers can keep it and tag the result
    as unconverged instead of aborting a long enumeration.
    """

    def __init__(self, residual: float, vector: np.ndarray, value: float):
        super().__init__(
            f"power iteration did not converge: residual {residual:.3e}"
        )
        self.residual = residual
        self.vector = vector
        self.value = value


def power_start(indices: int | np.ndarray) -> np.ndarray:
    """Deterministic start vector for power iteration.

    All-ones with a fixed aperiodic perturbation: a plain ones start is
    exactly orthogonal to any balanced sign profile (e.g. flat spikes
    with as many + as - entries), which would make power iteration
    converge to a non-dominant eigenvector.  Pass an index array to get
    the profile on a subset of global coordinates.
    """
    idx = np.arange(indices) if isinstance(indices, int) else np.asarray(indices)
    x = 1.0 + 0.25 * np.sin(2.7 * idx + 0.9)
    return x / np.linalg.norm(x)


def _restart_profile(d: int) -> np.ndarray:
    x = 1.0 + 0.5 * np.cos(1.3 * np.arange(d) + 0.4)
    return x / np.linalg.norm(x)


def ensure_symmetric(M: np.ndarray, rtol: float = SYM_RTOL) -> np.ndarray:
    """Validate near-symmetry of ``M`` and return an exactly symmetric copy.

    Rejects ``M`` when any |M_ij - M_ji| exceeds rtol * (1 + |M_ij|).
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    gap = np.abs(M - M.T)
    bound = rtol * (1.0 + np.abs(M))
    if np.any(gap > bound):
        worst = float(np.max(gap - bound))
        raise ValueError(f"matrix is not symmetric (violation {worst:.3e})")
    return (M + M.T) / 2.0


def gram(Y: np.ndarray) -> np.ndarray:
    """Y^T Y.  Callers subtract n*Id themselves where the pipeline needs it."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-d array, got shape {Y.shape}")
    G = Y.T @ Y
    return (G + G.T) / 2.0


def top_eigenvector(
    M: np.ndarray,
    tol: float = 1e-9,
    max_iters: int | None = None,
    strict: bool = True,
    start: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Top eigenpair (algebraically largest) of a symmetric matrix.

    Shifted power iteration: iterating on M + c*Id with c = ||M||_F makes
    the algebraically largest eigenvalue dominant in magnitude.  The start
    vector is the normalized all-ones vector; if the first half of the
    budget stalls (start orthogonal to the dominant eigenspace, or a tie),
    iteration restarts once from a deterministic perturbed start.

    Returns (x, value) with ||M x - value*x|| <= tol * ||M||_F.  On budget
    exhaustion raises PowerIterationError carrying the best pair, unless
    strict=False, in which case the best pair is returned.
    """
    M = ensure_symmetric(M)
    d = M.shape[0]
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iters is None:
        max_iters = 10 * d + 1000

    fro = float(np.linalg.norm(M))
    if d == 1:
        return np.array([1.0]), float(M[0, 0])
    if fro == 0.0:
        return power_start(d), 0.0

    target = tol * fro

    def run(x0: np.ndarray) -> tuple[np.ndarray, float, float]:
        x = x0 / np.linalg.norm(x0)
        best = (x, float(x @ (M @ x)), np.inf)
        budget = max(1, max_iters)
        for it in range(1, budget + 1):
            y = M @ x + fro * x
            ny = np.linalg.norm(y)
            if ny == 0.0:
                # x is an eigenvector of eigenvalue exactly -||M||_F
                break
            x = y / ny
            if it % 8 == 0 or it == budget:
                Mx = M @ x
                value = float(x @ Mx)
                residual = float(np.linalg.norm(Mx - value * x))
                if residual < best[2]:
                    best = (x, value, residual)
                if residual <= target:
                    return best
        return best

    x, value, residual = run(power_start(d) if start is None else start)
    if residual > target:
        # deterministic restart against an unlucky orthogonal start
        x2, value2, residual2 = run(_restart_profile(d))
        if residual2 < residual:
            x, value, residual = x2, value2, residual2
    if residual > target and strict:
        raise PowerIterationError(residual, x, value)
    return x, value


def masked(M: np.ndarray, active: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Principal submatrix of M on the active indices, plus the index map.

    An eigenvector of the submatrix, zero-padded back through the index
    map, is an eigenvector of M o (zz^T) with the same eigenvalue.
    An empty selector yields a 0x0 matrix (callers skip those).
    """
    M = np.asarray(M, dtype=np.float64)
    active = np.asarray(active, dtype=bool)
    if active.shape != (M.shape[0],):
        raise ValueError("selector length must match matrix dimension")
    idx = np.flatnonzero(active)
    return M[np.ix_(idx, idx)], idx


def truncate_top(x: np.ndarray, k: int) -> np.ndarray:
    """Zero all but the k largest-magnitude entries (values unchanged).

    Ties break toward the lower index.  k >= len(x) returns a copy.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    x = np.asarray(x, dtype=np.float64)
    out = x.copy()
    if k >= x.size:
        return out
    order = np.argsort(-np.abs(x), kind="stable")
    out[order[k:]] = 0.0
    return out


def ksparse_norm_oracle(M: np.ndarray, k: int) -> float:
    """max over k-sparse unit x of x^T M x, by support enumeration.

    Equals the max over size-k supports S of lambda_max(M[S, S]).  Guarded
    brute force: dim <= 20 and C(dim, k) <= 1e5.
    """
    M = ensure_symmetric(M)
    d = M.shape[0]
    if not 1 <= k <= d:
        raise ValueError("k must be in [1, dim]")
    if d > 20:
        raise ValueError("oracle limited to dim <= 20")
    from math import comb

    if comb(d, k) > 100_000:
        raise ValueError("oracle limited to C(dim, k) <= 1e5 supports")
    if k == d:
        return float(np.linalg.eigvalsh(M)[-1])
    best = -np.inf
    for support in combinations(range(d), k):
        sub = M[np.ix_(support, support)]
        best = max(best, float(np.linalg.eigvalsh(sub)[-1]))
    return best

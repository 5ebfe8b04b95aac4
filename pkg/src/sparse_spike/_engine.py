"""Vectorized masked-eigenproblem solver behind ``build_candidates``.

The enumeration produces thousands of principal-submatrix eigenproblems
per threshold level.  This module groups them by selector mask,
deduplicates exact repeats, and runs shifted power iteration on all
unique masks at once: compact zero-padded batches when every block is
small, full-width Hadamard-masked iterations otherwise.  The math is
identical to ``linalg.top_eigenvector`` applied per block; only the
batching differs.
"""

from __future__ import annotations

import numpy as np

from .linalg import PowerIterationError, power_start, top_eigenvector

COMPACT_MAX = 32        # pad-and-batch blocks up to this size
CHECK_EVERY = 10        # residual check cadence


def _canonical_sign(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry is positive."""
    tops = np.argmax(np.abs(vectors), axis=1)
    flips = np.sign(vectors[np.arange(vectors.shape[0]), tops])
    flips[flips == 0] = 1.0
    return vectors * flips[:, None]


def _batched_power_full(A: np.ndarray, masks: np.ndarray, tol: float,
                        max_iters: int):
    """Top eigenpair of A o (z z^T) for each mask row, full-width.

    Iterates X <- normalize(mask o (A X) + fro * X) with per-block shift
    fro = ||A o zz^T||_F, which makes the algebraically largest
    eigenvalue dominant.  Returns (vectors, values, converged).
    """
    U, d = masks.shape
    Mk = masks.astype(np.float64)
    fro = np.sqrt(np.maximum(0.0, ((Mk @ (A * A)) * Mk).sum(axis=1)))
    X = Mk * power_start(np.arange(d))[None, :]
    X /= np.linalg.norm(X, axis=1)[:, None]

    theta = np.zeros(U)
    res = np.full(U, np.inf)
    target = tol * np.maximum(fro, 1e-300)
    for it in range(1, max_iters + 1):
        AX = (X @ A) * Mk
        Y = AX + fro[:, None] * X
        norms = np.linalg.norm(Y, axis=1)
        norms[norms == 0.0] = 1.0
        X = Y / norms[:, None]
        if it % CHECK_EVERY == 0 or it == max_iters:
            AX = (X @ A) * Mk
            theta = (AX * X).sum(axis=1)
            res = np.linalg.norm(AX - theta[:, None] * X, axis=1)
            if np.all(res <= target):
                break
    return _canonical_sign(X), theta, res <= target


def _batched_power_compact(A: np.ndarray, masks: np.ndarray, tol: float,
                           max_iters: int):
    """Same as the full-width path, but on zero-padded extracted blocks.

    Start vectors are zero on the padding, and the shift is applied only
    through the block, so padding coordinates never activate.
    """
    U, d = masks.shape
    counts = masks.sum(axis=1)
    m_max = int(counts.max())
    profile = power_start(np.arange(d)) * np.sqrt(d)  # un-normalized texture
    blocks = np.zeros((U, m_max, m_max))
    starts = np.zeros((U, m_max))
    for u in range(U):
        idx = np.flatnonzero(masks[u])
        m = idx.size
        blocks[u, :m, :m] = A[np.ix_(idx, idx)]
        starts[u, :m] = profile[idx]
    starts /= np.linalg.norm(starts, axis=1)[:, None]
    fro = np.sqrt((blocks * blocks).sum(axis=(1, 2)))
    pad_live = starts != 0.0  # real coordinates

    X = starts
    theta = np.zeros(U)
    res = np.full(U, np.inf)
    target = tol * np.maximum(fro, 1e-300)
    for it in range(1, max_iters + 1):
        BX = np.matmul(blocks, X[:, :, None])[:, :, 0]
        Y = BX + fro[:, None] * np.where(pad_live, X, 0.0)
        norms = np.linalg.norm(Y, axis=1)
        norms[norms == 0.0] = 1.0
        X = Y / norms[:, None]
        if it % CHECK_EVERY == 0 or it == max_iters:
            BX = np.matmul(blocks, X[:, :, None])[:, :, 0]
            theta = (BX * X).sum(axis=1)
            res = np.linalg.norm(BX - theta[:, None] * X, axis=1)
            if np.all(res <= target):
                break

    vectors = np.zeros((U, d))
    for u in range(U):
        idx = np.flatnonzero(masks[u])
        vectors[u, idx] = X[u, :idx.size]
    return _canonical_sign(vectors), theta, res <= target


class BatchedMaskSolver:
    """Mask -> (padded top eigenvector, eigenvalue, converged) with a
    global cache keyed by the exact active set."""

    def __init__(self, A: np.ndarray, k: int, mode: str, config):
        self.A = np.asarray(A, dtype=np.float64)
        self.k = k
        self.mode = mode
        self.config = config
        self.cache: dict[bytes, tuple | None] = {}

    def __call__(self, masks: np.ndarray) -> list[tuple | None]:
        keys = [np.packbits(row).tobytes() for row in masks]
        fresh: dict[bytes, int] = {}
        for i, key in enumerate(keys):
            if key not in self.cache and key not in fresh:
                fresh[key] = i
        if fresh:
            todo = np.stack([masks[i] for i in fresh.values()])
            counts = todo.sum(axis=1)
            usable = counts >= self.config.min_active
            for key, ok in zip(fresh, usable):
                if not ok:
                    self.cache[key] = None
            if np.any(usable):
                self._solve_batch(np.array(list(fresh.keys()), dtype=object)[usable],
                                  todo[usable])
        return [self.cache[key] for key in keys]

    def _solve_batch(self, keys, masks: np.ndarray) -> None:
        counts = masks.sum(axis=1)
        tol = self.config.eigen_tol
        cap = self.config.engine_iters
        if counts.max() <= COMPACT_MAX:
            vecs, vals, conv = _batched_power_compact(self.A, masks, tol, cap)
        else:
            vecs, vals, conv = _batched_power_full(self.A, masks, tol, cap)
        if self.mode != "robust":
            for key, vec, value, ok in zip(keys, vecs, vals, conv):
                self.cache[key] = (vec, float(value), bool(ok))
            return
        # rank-one fast path: an l1-feasible top eigenvector is the exact
        # Basic-SDP maximizer of its block
        l1sq = np.abs(vecs).sum(axis=1) ** 2
        exact = conv & (l1sq <= self.k * (1.0 + 1e-3))
        for i, key in enumerate(keys):
            if exact[i]:
                self.cache[key] = (vecs[i], float(vals[i]), True)
                continue
            idx = np.flatnonzero(masks[i])
            sub = self.A[np.ix_(idx, idx)]
            vec_s, value, converged = robust_block_vector(
                sub, self.k, self.config, top_hint=vecs[i, idx])
            vec = np.zeros(self.A.shape[0])
            vec[idx] = vec_s
            vec = _canonical_sign(vec[None])[0]
            self.cache[key] = (vec, float(value), converged)


def robust_block_vector(sub: np.ndarray, k: int, config,
                        top_hint: np.ndarray | None = None):
    """Top eigenvector of the Basic-SDP maximizer over P_k on a block.

    When the plain top eigenvector u of the block already satisfies the
    l1 constraint (||u||_1^2 <= k), u u^T is the exact maximizer and the
    conditional-gradient solve is skipped.
    """
    from .sdp import solve_basic_sdp

    m = sub.shape[0]
    junk_size = config.sdp_junk_size
    if junk_size is None:
        junk_size = max(16, 3 * k)
    iters = config.sdp_junk_iters if m > junk_size else config.sdp_iters
    if top_hint is None:
        try:
            u, value = top_eigenvector(sub, tol=1e-8, max_iters=10 * m + 300,
                                       strict=True)
            eig_converged = True
        except PowerIterationError as err:
            u, value, eig_converged = err.vector, err.value, False
        if eig_converged and np.sum(np.abs(u)) ** 2 <= k * (1.0 + 1e-3):
            return u, float(value), True
        top_hint = u
    iterate = solve_basic_sdp(sub, k, iters=iters,
                              tol=config.sdp_tol_scale * np.linalg.norm(sub),
                              top_hint=top_hint)
    x, _ = top_eigenvector(iterate.matrix, tol=1e-8, strict=False)
    return x, float(x @ sub @ x), bool(iterate.converged)

"""Subset-thresholding recovery.

Pipeline: enumerate t-sparse sign patterns, mark the coordinates
"adjacent" to each pattern (selector), take the top eigenvector of the
data matrix masked to the adjacent set (or the Basic-SDP maximizer in
robust mode), collect candidates over a geometric grid of thresholds,
and list-decode the final estimate by quadratic-form maximization over
sparsified candidates.

Thresholding is on the absolute value |(G s)_i| >= r*t*scale, and only
one of each {s, -s} pair is enumerated: the absolute-value selector of
s equals the union of the one-sided selectors of s and -s, and the
masked matrices for s and -s coincide.  Canonical patterns therefore
pin the first sign to +1, giving C(d,t) * 2^(t-1) patterns.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator

import numpy as np

from . import _engine
from .linalg import gram, top_eigenvector, truncate_top
from .models import Instance


class RecoveryError(RuntimeError):
    pass


@dataclass(frozen=True)
class SignPattern:
    """t support indices with +-1 signs; canonical form has signs[0] = +1."""

    support: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        if len(self.support) != len(self.signs) or not self.support:
            raise ValueError("support and signs must be nonempty, same length")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise ValueError("support must be strictly increasing")
        if any(s not in (-1, 1) for s in self.signs):
            raise ValueError("signs must be +-1")

    @property
    def t(self) -> int:
        return len(self.support)

    def as_vector(self, d: int) -> np.ndarray:
        s = np.zeros(d)
        s[list(self.support)] = self.signs
        return s


@dataclass(frozen=True, eq=False)
class Candidate:
    """One entry of the candidate list with its provenance."""

    vector: np.ndarray
    pattern: SignPattern
    r: float
    mode: str
    eigenvalue: float
    converged: bool = True


@dataclass(eq=False)
class RecoveryResult:
    estimate: np.ndarray
    correlation: float | None
    candidates_evaluated: int
    patterns_enumerated: int
    wall_time: float
    flags: tuple[str, ...] = ()


@dataclass
class RecoverConfig:
    """Solver knobs for the enumeration pipeline.

    engine "batched" vectorizes the per-pattern eigenproblems (grouped
    by selector mask, deduplicated); "looped" runs the one-pattern-at-a-
    time reference path.  Both produce the same candidates up to
    floating-point noise.
    """

    engine: str = "batched"
    eigen_tol: float = 1e-9
    eigen_iters: int | None = None     # looped path; None -> 10*m + 1000
    engine_iters: int = 160            # batched path iteration cap
    sdp_iters: int = 400
    sdp_tol_scale: float = 1e-3
    sdp_junk_size: int | None = None   # None -> automatic max(16, 3k);
    sdp_junk_iters: int = 60           # larger blocks get this budget
    min_active: int = 2                # selectors smaller than this are skipped


def pattern_count(d: int, t: int) -> int:
    return math.comb(d, t) * 2 ** (t - 1)


def enumerate_patterns(d: int, t: int) -> Iterator[SignPattern]:
    """Canonical patterns: supports lexicographic, signs counting in
    binary with the first sign pinned to +1."""
    if not 1 <= t <= d:
        raise ValueError(f"need 1 <= t <= d, got t={t}, d={d}")
    n_sign = 2 ** (t - 1)
    for support in combinations(range(d), t):
        for m in range(n_sign):
            signs = tuple(
                1 if i == 0 or not (m >> (t - 1 - i)) & 1 else -1
                for i in range(t)
            )
            yield SignPattern(support=support, signs=signs)


def pattern_arrays(d: int, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Supports (B,t) and signs (B,t) of the canonical enumeration."""
    count = pattern_count(d, t)
    supports = np.empty((count, t), dtype=np.int64)
    signs = np.empty((count, t), dtype=np.int8)
    row = 0
    n_sign = 2 ** (t - 1)
    sign_block = np.ones((n_sign, t), dtype=np.int8)
    for m in range(n_sign):
        for i in range(1, t):
            if (m >> (t - 1 - i)) & 1:
                sign_block[m, i] = -1
    for support in combinations(range(d), t):
        supports[row:row + n_sign] = support
        signs[row:row + n_sign] = sign_block
        row += n_sign
    return supports, signs


def r_grid(n_or_d: int) -> list[float]:
    """Geometric threshold grid 1, 1/2, 1/4, ... down to the first value
    <= 1/n.  Any r* in [1/n, 1] has a grid point in [r*/2, r*]."""
    if n_or_d < 2:
        raise ValueError("grid needs n >= 2")
    grid = []
    r = 1.0
    while True:
        grid.append(r)
        if r <= 1.0 / n_or_d:
            break
        r /= 2.0
    return grid


def selector(G: np.ndarray, s: SignPattern, r: float, scale: float) -> np.ndarray:
    """Boolean adjacency vector: i is active iff i is in supp(s) or
    |(G s)_i| >= r * t * scale."""
    if r <= 0 or scale <= 0:
        raise ValueError("r and scale must be positive")
    G = np.asarray(G, dtype=np.float64)
    idx = np.asarray(s.support)
    gs = G[:, idx] @ np.asarray(s.signs, dtype=np.float64)
    active = np.abs(gs) >= r * s.t * scale
    active[idx] = True
    return active


def _matrices(inst: Instance) -> tuple[np.ndarray, np.ndarray, float, int]:
    """(selector matrix, eigen matrix, selector scale, grid size source).

    Wishart-type: selectors use Y^T Y with scale n; eigenproblems use
    the centered Y^T Y - n*Id (uniform shift on the masked block, kept
    for numerical headroom).  Wigner: selectors use Y row-wise with
    scale 1; eigenproblems use the symmetrized Y.
    """
    if inst.wishart_type:
        G = gram(inst.data)
        A = G - inst.n * np.eye(G.shape[0])
        return G, A, float(inst.n), inst.n
    Y = inst.data
    return Y, (Y + Y.T) / 2.0, 1.0, inst.spike.dim


def build_candidates(
    inst: Instance,
    t: int,
    k: int,
    mode: str = "classical",
    config: RecoverConfig | None = None,
) -> list[Candidate]:
    """Candidate list over all canonical patterns and grid thresholds.

    Identical selector masks are solved once and shared; every (s, r)
    pair with a usable selector still contributes its own Candidate.
    """
    if mode not in ("classical", "robust"):
        raise ValueError(f"unknown mode {mode!r}")
    if inst.model == "symmetric":
        raise ValueError("symmetric instances are handled by the huber module")
    config = config or RecoverConfig()
    d = inst.spike.dim
    if not 1 <= t <= k <= d:
        raise ValueError(f"need 1 <= t <= k <= d, got t={t}, k={k}, d={d}")

    G_sel, A_eig, scale, grid_n = _matrices(inst)
    grid = r_grid(grid_n)
    supports, signs = pattern_arrays(d, t)
    patterns = list(enumerate_patterns(d, t))

    if config.engine == "batched":
        solve = _engine.BatchedMaskSolver(A_eig, k, mode, config)
    elif config.engine == "looped":
        solve = _LoopedMaskSolver(A_eig, k, mode, config)
    else:
        raise ValueError(f"unknown engine {config.engine!r}")

    # (G s) for every canonical pattern, reused across the whole grid
    S = np.zeros((len(patterns), d))
    rows = np.repeat(np.arange(len(patterns)), t)
    S[rows, supports.ravel()] = signs.ravel().astype(np.float64)
    GS = S @ G_sel.T

    out: list[Candidate] = []
    for r in grid:
        masks = np.abs(GS) >= r * t * scale
        masks[rows, supports.ravel()] = True
        solved = solve(masks)
        for b, rec in enumerate(solved):
            if rec is None:
                continue
            vec, eigenvalue, converged = rec
            out.append(Candidate(vector=vec, pattern=patterns[b], r=r,
                                 mode=mode, eigenvalue=eigenvalue,
                                 converged=converged))
    return out


class _LoopedMaskSolver:
    """Reference path: one masked eigenproblem (or SDP) per unique mask."""

    def __init__(self, A, k, mode, config: RecoverConfig):
        self.A = A
        self.k = k
        self.mode = mode
        self.config = config
        self.cache: dict[bytes, tuple | None] = {}

    def __call__(self, masks: np.ndarray) -> list[tuple | None]:
        out = []
        for row in masks:
            key = np.packbits(row).tobytes()
            if key not in self.cache:
                self.cache[key] = self._solve(row)
            out.append(self.cache[key])
        return out

    def _solve(self, active: np.ndarray):
        idx = np.flatnonzero(active)
        if idx.size < self.config.min_active:
            return None
        sub = self.A[np.ix_(idx, idx)]
        sub = (sub + sub.T) / 2.0
        if self.mode == "robust":
            vec_s, eigenvalue, converged = _engine.robust_block_vector(
                sub, self.k, self.config)
        else:
            try:
                vec_s, eigenvalue = top_eigenvector(
                    sub, tol=self.config.eigen_tol,
                    max_iters=self.config.eigen_iters, strict=True)
                converged = True
            except Exception as err:
                from .linalg import PowerIterationError
                if not isinstance(err, PowerIterationError):
                    raise
                vec_s, eigenvalue, converged = err.vector, err.value, False
        vec = np.zeros(self.A.shape[0])
        vec[idx] = vec_s
        top = int(np.argmax(np.abs(vec)))
        if vec[top] < 0:
            vec = -vec
        return vec, float(eigenvalue), converged


def list_decode(
    candidates: list[Candidate] | list[np.ndarray],
    M: np.ndarray,
    k: int,
    delta: float,
) -> np.ndarray:
    """Sparsify each candidate to its k' = min(d, ceil(100 k / delta^2))
    largest entries and return the one maximizing x^T M x, normalized.

    If some list entry has |<v, x>| >= 1 - delta and every k'-sparse unit
    u satisfies u^T N u <= kappa for the noise part N of M = lambda vv^T
    + N, the output v-hat satisfies |<v-hat, v>| >= 1 - 4*delta -
    2*kappa/lambda.
    """
    if not candidates:
        raise ValueError("empty candidate list")
    if not 0 < delta <= 0.1:
        raise ValueError("delta must lie in (0, 0.1]")
    vectors = [c.vector if isinstance(c, Candidate) else np.asarray(c)
               for c in candidates]
    d = vectors[0].shape[0]
    k_prime = min(d, math.ceil(100 * k / delta**2))
    T = np.stack([truncate_top(x, k_prime) for x in vectors])
    scores = np.einsum("bi,ij,bj->b", T, M, T)
    best = T[int(np.argmax(scores))]
    norm = np.linalg.norm(best)
    if norm == 0.0:
        raise RecoveryError("all candidates truncated to zero")
    return best / norm


def recover(
    inst: Instance,
    k: int,
    t: int,
    delta: float = 0.05,
    mode: str = "classical",
    config: RecoverConfig | None = None,
) -> RecoveryResult:
    """Full pipeline: candidates over the r grid, then list decoding
    against Y^T Y (wishart-type) or Y (wigner)."""
    start = time.perf_counter()
    candidates = build_candidates(inst, t, k, mode=mode, config=config)
    if not candidates:
        raise RecoveryError("no usable selectors produced any candidate")
    M = gram(inst.data) if inst.wishart_type else inst.data
    estimate = list_decode(candidates, M, k, delta)
    correlation = float(abs(estimate @ inst.spike.values))
    flags = ()
    if any(not c.converged for c in candidates):
        flags = ("eigen-unconverged-candidates",)
    return RecoveryResult(
        estimate=estimate,
        correlation=correlation,
        candidates_evaluated=len(candidates),
        patterns_enumerated=pattern_count(inst.spike.dim, t),
        wall_time=time.perf_counter() - start,
        flags=flags,
    )

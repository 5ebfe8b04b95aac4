"""Heavy-tailed symmetric-noise recovery.

The observation Y = lambda * v v^T + N (iid symmetric noise, no moment
assumptions) is clamped entrywise at +-h.  Sign patterns are enumerated
exactly as in the Gaussian pipeline, but with a single fixed threshold
(lambda is a required input here, so no grid is needed), and on each
masked block the Huber loss F_h(Y_block - X) is minimized over

    P_Q = {X PSD, Tr X <= lambda, ||X||_1 <= lambda * k}.

The first pattern whose minimizer has Frobenius norm at least
(1 - 10*delta) * lambda is accepted and its top eigenvector returned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .linalg import top_eigenvector
from .models import Instance
from .recovery import (RecoveryResult, SignPattern, enumerate_patterns,
                       pattern_count)

FEAS_TOL = 1e-3


@dataclass(frozen=True)
class HuberConfig:
    """Knobs for the symmetric-noise pipeline.

    ``h`` defaults to 3 * lam * A^2 / k (resolved against k at call
    time), with A the assumed flatness bound ||v||_inf <= A / sqrt(k).
    The theorem statement allows A up to 100; for flat spikes A = 1.5
    is a comfortable practical bound.
    """

    lam: float
    alpha: float = 0.5
    A: float = 1.5
    delta: float = 0.02
    h: float | None = None
    iters: int = 600
    tol: float = 1e-6

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.A < 1:
            raise ValueError("A must be at least 1")
        if not 0 < self.delta <= 0.1:
            raise ValueError("delta must lie in (0, 0.1]")

    def clamp_level(self, k: int) -> float:
        if self.h is not None:
            return self.h
        return 3.0 * self.lam * self.A**2 / k


@dataclass(eq=False)
class BlockSolution:
    matrix: np.ndarray
    frobenius: float
    trace_ok: bool
    l1_ok: bool
    pattern: SignPattern
    converged: bool = True

    def __post_init__(self):
        recomputed = float(np.linalg.norm(self.matrix))
        if abs(recomputed - self.frobenius) > 1e-10 * (1.0 + recomputed):
            raise ValueError("frobenius does not match matrix entries")


def clamp(Y: np.ndarray, h: float) -> np.ndarray:
    """Entrywise saturation at +-h."""
    if h <= 0:
        raise ValueError("h must be positive")
    return np.clip(Y, -h, h)


def huber_loss(x: np.ndarray, h: float) -> tuple[float, np.ndarray]:
    """Sum of phi_h over entries: quadratic core x^2/2 on |x| <= h,
    linear tails h|x| - h^2/2.  The gradient is the clip function."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=np.float64)
    a = np.abs(x)
    value = float(np.where(a <= h, 0.5 * x * x, h * a - 0.5 * h * h).sum())
    return value, np.clip(x, -h, h)


def minimize_huber(
    Y_block: np.ndarray,
    lam: float,
    k: int,
    h: float,
    iters: int = 600,
    tol: float = 1e-6,
) -> tuple[np.ndarray, bool]:
    """Approximate argmin of F_h(Y_block - X) over P_Q.

    Conditional gradient on {X PSD, Tr X <= lambda}: the linear oracle
    is theta * u u^T with theta in {0, lambda} and u the bottom
    eigenvector of the working gradient; the l1 bound is enforced by
    the same exact-penalty doubling scheme as the Basic-SDP solver.
    Returns (X, converged); the iterate is feasible by construction.
    """
    Y_block = np.asarray(Y_block, dtype=np.float64)
    m = Y_block.shape[0]
    if m == 0:
        raise ValueError("empty block")
    if lam <= 0 or k < 1 or h <= 0:
        raise ValueError("lam, k, h must be positive")
    l1_cap = lam * k

    def objective(X: np.ndarray, rho: float) -> float:
        value, _ = huber_loss((Y_block - X).ravel(), h)
        return value + rho * max(0.0, float(np.abs(X).sum()) - l1_cap)

    def gradient(X: np.ndarray, rho: float) -> np.ndarray:
        G = -np.clip(Y_block - X, -h, h)
        G = (G + G.T) / 2.0
        if rho > 0.0 and float(np.abs(X).sum()) > l1_cap * (1.0 + FEAS_TOL):
            G = G + rho * np.sign(X)
        return G

    X = np.zeros((m, m))
    best = (objective(X, 0.0), X.copy())
    spent = 0
    rho = 0.0
    rounds = 0
    lmo_start = None
    while rounds < 6 and spent < iters:
        rounds += 1
        stall = 0
        for it in range(max(8, iters // 6)):
            if spent >= iters:
                break
            spent += 1
            G = gradient(X, rho)
            u, neg = top_eigenvector(-G, tol=1e-6, max_iters=120,
                                     strict=False, start=lmo_start)
            lmo_start = u
            # LMO over {S PSD, Tr S <= lam}: lam*uu^T if it descends, else 0
            S = lam * np.outer(u, u) if neg > 0.0 else np.zeros((m, m))
            D = S - X
            gd = float(np.sum(G * D))
            if gd >= -tol * (1.0 + abs(best[0])):
                stall += 1
                if stall >= 2:
                    break
            gamma0 = min(1.0, 2.0 / (it + 2.0))
            cur = objective(X, rho)
            step_best = (cur, X)
            # exact step for the quadratic core of the loss, as a candidate
            dd = float(np.sum(D * D))
            gamma_q = min(1.0, max(0.0, -gd / dd)) if dd > 0 else 0.0
            for gamma in (0.25 * gamma0, 0.5 * gamma0, gamma0,
                          min(1.0, 2.0 * gamma0), gamma_q):
                Xg = X + gamma * D
                val = objective(Xg, rho)
                if val < step_best[0]:
                    step_best = (val, Xg)
            X = step_best[1]
            unpenalized = objective(X, 0.0)
            if (float(np.abs(X).sum()) <= l1_cap * (1.0 + FEAS_TOL)
                    and unpenalized < best[0]):
                best = (unpenalized, X.copy())
        if float(np.abs(X).sum()) <= l1_cap * (1.0 + FEAS_TOL):
            break
        rho = 2.0 * rho if rho > 0.0 else max(1e-8, 0.1 * h)

    X = best[1]
    # certify feasibility of the returned iterate
    feasible = (float(np.trace(X)) <= lam * (1.0 + 1e-6)
                and float(np.abs(X).sum()) <= l1_cap * (1.0 + FEAS_TOL))
    return X, feasible and spent < iters


def block_solution(T: np.ndarray, active: np.ndarray, pattern: SignPattern,
                   cfg: HuberConfig, k: int) -> BlockSolution:
    idx = np.flatnonzero(active)
    sub = T[np.ix_(idx, idx)]
    sub = (sub + sub.T) / 2.0
    X, converged = minimize_huber(sub, cfg.lam, k, cfg.clamp_level(k),
                                  iters=cfg.iters, tol=cfg.tol)
    return BlockSolution(
        matrix=X,
        frobenius=float(np.linalg.norm(X)),
        trace_ok=float(np.trace(X)) <= cfg.lam * (1.0 + 1e-6),
        l1_ok=float(np.abs(X).sum()) <= cfg.lam * k * (1.0 + FEAS_TOL),
        pattern=pattern,
        converged=converged,
    )


def recover_symmetric(inst: Instance, k: int, t: int,
                      cfg: HuberConfig) -> RecoveryResult:
    """Clamp, enumerate patterns at the fixed threshold, solve blocks in
    canonical order, accept the first block with Frobenius norm at
    least (1 - 10*delta) * lambda.

    If no block passes, the maximal-Frobenius block is returned with a
    "no-acceptance" flag.
    """
    if inst.model != "symmetric":
        raise ValueError("recover_symmetric expects a symmetric-model instance")
    d = inst.spike.dim
    if not 1 <= t <= k <= d:
        raise ValueError(f"need 1 <= t <= k <= d, got t={t}, k={k}, d={d}")
    start = time.perf_counter()
    T = clamp(inst.data, cfg.clamp_level(k))
    r = cfg.lam * cfg.delta**2 * cfg.alpha / (10.0 * k)
    threshold = r * t
    accept_level = (1.0 - 10.0 * cfg.delta) * cfg.lam

    patterns = list(enumerate_patterns(d, t))
    supports, signs = pattern_arrays(d, t)
    S = np.zeros((len(patterns), d))
    rows = np.repeat(np.arange(len(patterns)), t)
    S[rows, supports.ravel()] = signs.ravel().astype(np.float64)
    TS = S @ T.T
    masks = np.abs(TS) >= threshold
    masks[rows, supports.ravel()] = True
    packed = np.packbits(masks, axis=1)

    cache: dict[bytes, BlockSolution] = {}
    accepted: BlockSolution | None = None
    fallback: BlockSolution | None = None
    examined = 0
    for b, pattern in enumerate(patterns):
        examined += 1
        key = packed[b].tobytes()
        sol = cache.get(key)
        if sol is None:
            sol = block_solution(T, masks[b], pattern, cfg, k)
            cache[key] = sol
        if fallback is None or sol.frobenius > fallback.frobenius:
            fallback = replace_pattern(sol, pattern)
        if sol.frobenius >= accept_level:
            accepted = replace_pattern(sol, pattern)
            break

    chosen = accepted if accepted is not None else fallback
    active = _pattern_active(T, chosen.pattern, threshold)
    idx = np.flatnonzero(active)
    x_block, _ = top_eigenvector(chosen.matrix, tol=1e-8, strict=False)
    estimate = np.zeros(d)
    estimate[idx] = x_block
    top = int(np.argmax(np.abs(estimate)))
    if estimate[top] < 0:
        estimate = -estimate
    flags = () if accepted is not None else ("no-acceptance",)
    return RecoveryResult(
        estimate=estimate,
        correlation=float(abs(estimate @ inst.spike.values)),
        candidates_evaluated=examined,
        patterns_enumerated=pattern_count(d, t),
        wall_time=time.perf_counter() - start,
        flags=flags,
    )


def replace_pattern(sol: BlockSolution, pattern: SignPattern) -> BlockSolution:
    if sol.pattern == pattern:
        return sol
    return BlockSolution(matrix=sol.matrix, frobenius=sol.frobenius,
                         trace_ok=sol.trace_ok, l1_ok=sol.l1_ok,
                         pattern=pattern, converged=sol.converged)


def _pattern_active(T: np.ndarray, pattern: SignPattern,
                    threshold: float) -> np.ndarray:
    idx = np.asarray(pattern.support)
    ts = T[:, idx] @ np.asarray(pattern.signs, dtype=np.float64)
    active = np.abs(ts) >= threshold
    active[idx] = True
    return active

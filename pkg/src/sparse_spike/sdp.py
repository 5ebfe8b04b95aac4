"""Approximate maximization of <X, M> over the Basic-SDP feasible set

    P_k = {X PSD, Tr X = 1, ||X||_1 <= k}.

Conditional gradient on the spectahedron {X PSD, Tr X = 1} (whose
linear oracle is a rank-one step from the top eigenvector of the
working supergradient) with an exact penalty rho * (||X||_1 - k)_+ on
the l1 excess.  rho starts at 0 and is raised by doubling, then refined
by bisection, until the returned iterate satisfies the l1 bound.

The reported gap is a valid optimality certificate from the dual
family

    max over P_k of <X, M>  <=  lambda_max(M - rho*Z) + rho*k

for any rho >= 0 and any |Z_ij| <= 1; a few subgradient refinements of
Z tighten it.  Certificates (trace, l1, minimum eigenvalue, gap) are
recomputed from the returned matrix, never taken from solver state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import ensure_symmetric, top_eigenvector

FEAS_TOL = 1e-3          # accepted relative slack on ||X||_1 <= k
MAX_ROUNDS = 12          # penalty doubling + bisection rounds


@dataclass(eq=False)
class PsdIterate:
    """A feasible point of P_k with its certificates."""

    matrix: np.ndarray
    trace: float
    l1: float
    min_eig: float
    gap: float
    objective: float
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)


def _l1(X: np.ndarray) -> float:
    return float(np.abs(X).sum())


def _feasible(X: np.ndarray, k: int) -> bool:
    return _l1(X) <= k * (1.0 + FEAS_TOL)


def _lmax(M: np.ndarray) -> tuple[float, np.ndarray]:
    """Exact (LAPACK) top eigenpair; used for certificates only."""
    vals, vecs = np.linalg.eigh(M)
    return float(vals[-1]), vecs[:, -1]


def dual_bound(M: np.ndarray, k: int, rho: float, refine: int = 25) -> float:
    """Upper bound on max over P_k of <X, M> for one penalty level."""
    if rho <= 0.0:
        return _lmax(M)[0]
    Z = np.clip(M / rho, -1.0, 1.0)
    val, v = _lmax(M - rho * Z)
    best = val + rho * k
    for step in range(refine):
        Z = np.clip(Z + (1.0 / (step + 2.0)) * np.outer(v, v), -1.0, 1.0)
        val, v = _lmax(M - rho * Z)
        best = min(best, val + rho * k)
    return best


def _rank_one_seeds(M: np.ndarray, k: int,
                    u: np.ndarray) -> list[np.ndarray]:
    """Cheap feasible candidates: the best diagonal vertex, plus
    renormalized top-j truncations of the top eigenvector while the l1
    constraint allows them."""
    d = M.shape[0]
    seeds = []
    j = int(np.argmax(np.diag(M)))
    e = np.zeros(d)
    e[j] = 1.0
    seeds.append(e)
    order = np.argsort(-np.abs(u), kind="stable")
    for keep in range(1, d + 1):
        w = np.zeros(d)
        w[order[:keep]] = u[order[:keep]]
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break
        w /= norm
        if np.sum(np.abs(w)) ** 2 > k * (1.0 + FEAS_TOL):
            break
        seeds.append(w)
    return seeds


def solve_basic_sdp(
    M: np.ndarray,
    k: int,
    iters: int = 2000,
    tol: float | None = None,
    refine: int | None = None,
    top_hint: np.ndarray | None = None,
) -> PsdIterate:
    """Best feasible iterate found within the iteration budget.

    ``iters`` is the total conditional-gradient step budget across all
    penalty rounds.  On termination with gap <= tol the iterate is
    marked converged; otherwise the best achieved point is returned
    with its honest gap and converged=False.
    """
    M = ensure_symmetric(M)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    if k < 1:
        raise ValueError("k must be at least 1")
    d = M.shape[0]
    fro = float(np.linalg.norm(M))
    if tol is None:
        tol = 1e-3 * fro
    if refine is None:
        refine = 25 if d <= 32 else 4

    history: list[float] = []
    best_X: np.ndarray | None = None
    best_obj = -np.inf

    def consider(X: np.ndarray) -> None:
        nonlocal best_X, best_obj
        if _feasible(X, k):
            obj = float(np.sum(X * M))
            if obj > best_obj:
                best_obj, best_X = obj, X.copy()

    if top_hint is None:
        u0, _ = top_eigenvector(M, tol=1e-8, strict=False)
    else:
        u0 = top_hint / np.linalg.norm(top_hint)
    for w in _rank_one_seeds(M, k, u0):
        consider(np.outer(w, w))
        history.append(best_obj)

    X = np.outer(u0, u0)
    consider(X)

    steps_per_round = max(8, iters // MAX_ROUNDS)
    spent = 0
    lmo_start = [u0]

    def fw_round(rho: float, X: np.ndarray) -> np.ndarray:
        nonlocal spent
        for it in range(steps_per_round):
            if spent >= iters:
                break
            spent += 1
            violated = rho > 0.0 and not _feasible(X, k)
            G = M - rho * np.sign(X) if violated else M
            G = (G + G.T) / 2.0
            # loose, warm-started eigensolve: the linear oracle tolerates it
            u, _ = top_eigenvector(G, tol=1e-6, max_iters=80, strict=False,
                                   start=lmo_start[0])
            lmo_start[0] = u
            S = np.outer(u, u)
            gamma0 = 2.0 / (it + 2.0)
            best_step, best_val = None, -np.inf
            for gamma in (0.25 * gamma0, 0.5 * gamma0, gamma0,
                          min(1.0, 2.0 * gamma0), 1.0):
                Xg = (1.0 - gamma) * X + gamma * S
                consider(Xg)
                val = float(np.sum(Xg * M)) - rho * max(0.0, _l1(Xg) - k)
                if val > best_val:
                    best_step, best_val = Xg, val
            X = best_step
            history.append(best_obj)
        return X

    X = fw_round(0.0, X)
    tried_rho = [0.0]
    if not _feasible(X, k):
        rho_lo = 0.0           # highest penalty seen infeasible
        rho_hi = None          # lowest penalty seen feasible
        rho = max(1e-8, 0.1 * float(np.max(np.abs(M))))
        for _ in range(MAX_ROUNDS - 1):
            if spent >= iters:
                break
            X = fw_round(rho, X)
            tried_rho.append(rho)
            if _feasible(X, k):
                rho_hi = rho
            else:
                rho_lo = max(rho_lo, rho)
            if rho_hi is None:
                rho = 2.0 * rho
            else:
                rho = 0.5 * (rho_lo + rho_hi)

    # best_X always exists: the diagonal vertex seed is feasible
    X = best_X
    trace = float(np.trace(X))
    if trace > 0:
        X = X / trace
    objective = float(np.sum(X * M))

    upper = dual_bound(M, k, 0.0)
    for rho in tried_rho[1:] or [max(1e-8, float(np.max(np.abs(M))))]:
        for mult in (1.0, 2.0):
            upper = min(upper, dual_bound(M, k, mult * rho, refine=refine))
    gap = max(0.0, upper - objective)

    eigvals = np.linalg.eigvalsh(X)
    return PsdIterate(
        matrix=X,
        trace=float(np.trace(X)),
        l1=_l1(X),
        min_eig=float(eigvals[0]),
        gap=gap,
        objective=objective,
        converged=bool(gap <= tol),
        history=history,
    )


def top_of_solution(iterate: PsdIterate) -> np.ndarray:
    """Unit top eigenvector of the solver output."""
    x, _ = top_eigenvector(iterate.matrix, tol=1e-9, max_iters=50_000,
                           strict=False)
    return x

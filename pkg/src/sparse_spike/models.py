"""Synthetic instance generators for the four data models.

Models
------
wishart          Y = sqrt(beta) * u v^T + W,  u ~ N(0,1)^n, W ~ N(0,1)^{n x d}
wigner           Y = lambda * v v^T + W,      W ~ N(0,1)^{d x d}
planted-vector   Y = R B: rows of B are n-1 Gaussian d-vectors plus
                 ||g_n|| * v^T, R a Haar rotation of R^n
symmetric        Y = lambda * v v^T + N,      N iid symmetric about zero

Every instance carries its ground-truth spike and the master seed.  All
randomness is drawn from per-component sub-generators
(``seeding.component_rng``), so the signal and noise terms of any
instance can be regenerated independently; ``decompose`` returns them.

Adversarial perturbations are a fixed menu (``make_adversary``); custom
E matrices can be injected by editing a serialized instance file
instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .seeding import component_rng

MODELS = ("wishart", "wigner", "planted-vector", "symmetric")
NOISE_FAMILIES = ("gaussian", "cauchy", "scaled-rademacher", "custom-symmetric")
ADVERSARY_KINDS = ("projection", "signal-erasing", "column-spike")


@dataclass(frozen=True, eq=False)
class SparseSpike:
    """A k-sparse unit vector with its support.

    ``flat`` means every nonzero entry is +-1/sqrt(k).
    """

    values: np.ndarray
    support: np.ndarray
    flat: bool

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        support = np.asarray(self.support, dtype=np.int64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", support)
        k = support.size
        if k == 0:
            raise ValueError("support must be nonempty")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        nz = np.flatnonzero(values)
        if nz.size != k or not np.array_equal(nz, support):
            raise ValueError("nonzeros must sit exactly on the support")
        norm = np.linalg.norm(values)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"spike norm {norm} is not 1")
        if self.flat:
            mag = np.abs(values[support])
            if np.any(np.abs(mag - 1.0 / math.sqrt(k)) > 1e-12):
                raise ValueError("flat spike entries must be +-1/sqrt(k)")

    @property
    def dim(self) -> int:
        return self.values.size

    @property
    def k(self) -> int:
        return self.support.size


@dataclass(frozen=True)
class NoiseSpec:
    """Entrywise noise family for the symmetric model.

    ``alpha`` is the declared lower bound on Pr[|N_ij| <= 1]; for the
    built-in families it defaults to the exact value.  A custom family
    must supply ``sampler(rng, size) -> array`` and explicitly declare
    symmetry about zero; undeclared custom noise is rejected.
    """

    family: str
    scale: float = 1.0
    alpha: float | None = None
    sampler: object = None
    symmetric: bool | None = None

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.family == "custom-symmetric":
            if self.sampler is None:
                raise ValueError("custom-symmetric requires a sampler")
            if self.symmetric is not True:
                raise ValueError("asymmetric custom noise rejected: "
                                 "declare symmetric=True")
        if self.alpha is None:
            object.__setattr__(self, "alpha", self._default_alpha())
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")

    def _default_alpha(self) -> float | None:
        if self.family == "gaussian":
            return math.erf(1.0 / (self.scale * math.sqrt(2.0)))
        if self.family == "cauchy":
            return (2.0 / math.pi) * math.atan(1.0 / self.scale)
        if self.family == "scaled-rademacher":
            return 1.0 if self.scale <= 1.0 else None
        return None

    def draw(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        if self.family == "gaussian":
            return self.scale * rng.standard_normal(shape)
        if self.family == "cauchy":
            return self.scale * rng.standard_cauchy(shape)
        if self.family == "scaled-rademacher":
            return self.scale * (2.0 * rng.integers(0, 2, size=shape) - 1.0)
        return np.asarray(self.sampler(rng, shape), dtype=np.float64)


@dataclass(frozen=True)
class Perturbation:
    kind: str
    strength: float
    seed: int


@dataclass(frozen=True, eq=False)
class Instance:
    """One generated data matrix with its ground truth."""

    model: str
    data: np.ndarray
    spike: SparseSpike
    signal: float
    seed: int
    perturbation: Perturbation | None = None
    noise: NoiseSpec | None = None
    n: int | None = None  # sample count for wishart-type models

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.signal < 0:
            raise ValueError("signal must be nonnegative")
        d = self.spike.dim
        rows, cols = self.data.shape
        if cols != d:
            raise ValueError("data columns must match spike dimension")
        if self.model in ("wigner", "symmetric") and rows != d:
            raise ValueError(f"{self.model} data must be d x d")
        if self.model in ("wishart", "planted-vector") and self.n != rows:
            raise ValueError("row count must equal n for sample models")

    @property
    def wishart_type(self) -> bool:
        return self.model in ("wishart", "planted-vector")


def gen_sparse_spike(d: int, k: int, flat: bool, seed: int) -> SparseSpike:
    """Uniformly random support of size k; flat signs or normalized Gaussian."""
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    rng = component_rng(seed, "spike")
    support = np.sort(rng.choice(d, size=k, replace=False)).astype(np.int64)
    values = np.zeros(d)
    if flat:
        signs = 2.0 * rng.integers(0, 2, size=k) - 1.0
        values[support] = signs / math.sqrt(k)
    else:
        entries = rng.standard_normal(k)
        while np.linalg.norm(entries) == 0.0:  # pragma: no cover
            entries = rng.standard_normal(k)
        values[support] = entries / np.linalg.norm(entries)
    return SparseSpike(values=values, support=support, flat=flat)


def gen_wishart(n: int, spike: SparseSpike, beta: float, seed: int) -> Instance:
    """Y = sqrt(beta) u v^T + W with independently regenerable u and W."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    u = component_rng(seed, "u").standard_normal(n)
    W = component_rng(seed, "W").standard_normal((n, spike.dim))
    data = math.sqrt(beta) * np.outer(u, spike.values) + W
    return Instance(model="wishart", data=data, spike=spike,
                    signal=float(beta), seed=seed, n=n)


def gen_wigner(spike: SparseSpike, lam: float, seed: int) -> Instance:
    """Y = lambda v v^T + W with W an iid (not symmetrized) Gaussian matrix."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    d = spike.dim
    W = component_rng(seed, "W").standard_normal((d, d))
    data = lam * np.outer(spike.values, spike.values) + W
    return Instance(model="wigner", data=data, spike=spike,
                    signal=float(lam), seed=seed)


def haar_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed rotation: QR of a Gaussian matrix, R-diagonal
    sign-corrected to be positive."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def gen_planted_vector(n: int, spike: SparseSpike, seed: int) -> Instance:
    """Random n-dimensional subspace of R^d spanned by n-1 Gaussian
    vectors and the sparse spike.

    Y = R B where B stacks g_1^T .. g_{n-1}^T and ||g_n|| v^T.  Writing
    u = chi * R_n (chi an independent chi_n draw, R_n the last column of
    R), Y decomposes exactly as

        Y = sqrt(beta) u v^T + W' - (1/||u||^2) u u^T W',

    with W' = R G (G the matrix of all n Gaussian rows) and the realized
    beta = ||g_n||^2 / ||u||^2 = ||u^T W'||^2 / ||u||^4.
    """
    d = spike.dim
    if not 2 <= n < d:
        raise ValueError(f"need d > n >= 2, got n={n}, d={d}")
    G = component_rng(seed, "g").standard_normal((n, d))
    R = haar_rotation(n, component_rng(seed, "rotation"))
    gn_norm = np.linalg.norm(G[-1])
    B = np.vstack([G[:-1], gn_norm * spike.values])
    data = R @ B
    u_scale = np.linalg.norm(component_rng(seed, "u_scale").standard_normal(n))
    beta = float(gn_norm**2 / u_scale**2)
    return Instance(model="planted-vector", data=data, spike=spike,
                    signal=beta, seed=seed, n=n)


def gen_symmetric(spike: SparseSpike, lam: float, noise: NoiseSpec,
                  seed: int) -> Instance:
    """Y = lambda v v^T + N with iid symmetric noise entries."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    d = spike.dim
    N = noise.draw(component_rng(seed, "N"), (d, d))
    data = lam * np.outer(spike.values, spike.values) + N
    return Instance(model="symmetric", data=data, spike=spike,
                    signal=float(lam), seed=seed, noise=noise)


def signal_term(inst: Instance) -> np.ndarray:
    """The planted rank-one term, regenerated from the stored seed."""
    v = inst.spike.values
    if inst.model == "wishart":
        u = component_rng(inst.seed, "u").standard_normal(inst.n)
        return math.sqrt(inst.signal) * np.outer(u, v)
    if inst.model in ("wigner", "symmetric"):
        return inst.signal * np.outer(v, v)
    if inst.model == "planted-vector":
        G = component_rng(inst.seed, "g").standard_normal((inst.n, inst.spike.dim))
        R = haar_rotation(inst.n, component_rng(inst.seed, "rotation"))
        return np.linalg.norm(G[-1]) * np.outer(R[:, -1], v)
    raise ValueError(inst.model)


def noise_term(inst: Instance) -> np.ndarray:
    """The additive noise term, regenerated from the stored seed."""
    d = inst.spike.dim
    if inst.model == "wishart":
        return component_rng(inst.seed, "W").standard_normal((inst.n, d))
    if inst.model == "wigner":
        return component_rng(inst.seed, "W").standard_normal((d, d))
    if inst.model == "symmetric":
        return inst.noise.draw(component_rng(inst.seed, "N"), (d, d))
    if inst.model == "planted-vector":
        G = component_rng(inst.seed, "g").standard_normal((inst.n, d))
        R = haar_rotation(inst.n, component_rng(inst.seed, "rotation"))
        W = R @ G
        # project out the R_n direction: what survives of W in the data
        return W - np.outer(R[:, -1], R[:, -1] @ W)
    raise ValueError(inst.model)


def decompose(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """(signal, noise) such that signal + noise (+ E, if perturbed)
    reproduces inst.data."""
    return signal_term(inst), noise_term(inst)


def max_column_norm(E: np.ndarray) -> float:
    """The 1->2 operator norm: maximal Euclidean column norm."""
    return float(np.sqrt(np.max(np.sum(E * E, axis=0)))) if E.size else 0.0


def adversary_matrix(inst: Instance, kind: str, strength: float,
                     seed: int) -> np.ndarray:
    """Build the perturbation E for ``make_adversary`` (exposed for tests).

    Column-norm kinds are rescaled so the max column norm equals
    ``strength`` exactly; the wigner entrywise kind has ||E||_inf equal
    to ``strength`` instead.
    """
    if kind not in ADVERSARY_KINDS:
        raise ValueError(f"unknown adversary kind {kind!r}")
    if inst.model not in ("wishart", "wigner"):
        raise ValueError("adversary applies to wishart and wigner instances "
                         "(planted-vector carries its own perturbation; "
                         "symmetric has none defined)")
    if strength < 0:
        raise ValueError("strength must be nonnegative")
    rows, cols = inst.data.shape
    if strength == 0.0:
        return np.zeros((rows, cols))

    if kind == "column-spike":
        if inst.model == "wigner":
            # entrywise bias: ||E||_inf = strength
            return np.full((rows, cols), strength)
        rng = component_rng(seed, "adv_x")
        x = rng.standard_normal(rows)
        x /= np.linalg.norm(x)
        j = int(rng.integers(0, cols))
        E = np.zeros((rows, cols))
        E[:, j] = strength * x
        return E

    if kind == "projection":
        W = noise_term(inst)
        if inst.model == "wishart":
            u = component_rng(inst.seed, "u").standard_normal(inst.n)
        else:
            u = component_rng(seed, "adv_x").standard_normal(rows)
        base = -np.outer(u, u @ W) / (u @ u)
    else:  # signal-erasing
        base = -signal_term(inst)
    norm = max_column_norm(base)
    if norm == 0.0:
        return np.zeros((rows, cols))
    return (strength / norm) * base


def make_adversary(inst: Instance, kind: str, strength: float,
                   seed: int = 0) -> Instance:
    """New instance with data Y + E for one of the menu perturbations."""
    E = adversary_matrix(inst, kind, strength, seed)
    data = inst.data if strength == 0.0 else inst.data + E
    return replace(inst, data=data,
                   perturbation=Perturbation(kind, float(strength), int(seed)))

"""Sparse spike recovery from noisy matrix data.

Subset-thresholding recovery algorithms for the Wishart, Wigner,
planted-vector and heavy-tailed symmetric-noise models, classical
baselines, and a reproducible Monte-Carlo sweep harness.
"""

from .models import (Instance, NoiseSpec, Perturbation, SparseSpike,
                     gen_planted_vector, gen_sparse_spike, gen_symmetric,
                     gen_wigner, gen_wishart, make_adversary)
from .io import load_instance, save_instance
from .linalg import (gram, ksparse_norm_oracle, masked, top_eigenvector,
                     truncate_top)
from .recovery import (Candidate, RecoverConfig, RecoveryResult, SignPattern,
                       build_candidates, enumerate_patterns, list_decode,
                       pattern_count, r_grid, recover, selector)
from .sdp import PsdIterate, solve_basic_sdp, top_of_solution
from .huber import HuberConfig, clamp, huber_loss, minimize_huber, recover_symmetric
from .baselines import (covariance_thresholding, diagonal_thresholding,
                        limited_brute_force, vanilla_pca)
from .harness import SweepConfig, SweepRow, run_sweep, rows_to_csv, summarize

__all__ = [
    "Instance", "NoiseSpec", "Perturbation", "SparseSpike",
    "gen_sparse_spike", "gen_wishart", "gen_wigner", "gen_planted_vector",
    "gen_symmetric", "make_adversary", "load_instance", "save_instance",
    "gram", "top_eigenvector", "masked", "truncate_top", "ksparse_norm_oracle",
    "SignPattern", "Candidate", "RecoveryResult", "RecoverConfig",
    "enumerate_patterns", "pattern_count", "r_grid", "selector",
    "build_candidates", "list_decode", "recover",
    "PsdIterate", "solve_basic_sdp", "top_of_solution",
    "HuberConfig", "clamp", "huber_loss", "minimize_huber", "recover_symmetric",
    "vanilla_pca", "diagonal_thresholding", "covariance_thresholding",
    "limited_brute_force",
    "SweepConfig", "SweepRow", "run_sweep", "rows_to_csv", "summarize",
]

__version__ = "0.1.0"

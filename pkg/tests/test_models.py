"""Generator tests: invariants, pinned-seed reconstruction, adversary norms."""

import math

import numpy as np
import pytest

from sparse_spike import models
from sparse_spike.models import (NoiseSpec, gen_planted_vector,
                                 gen_sparse_spike, gen_symmetric, gen_wigner,
                                 gen_wishart, make_adversary, max_column_norm)
from sparse_spike.seeding import component_rng


def unit_spike(d, index):
    values = np.zeros(d)
    values[index] = 1.0
    return models.SparseSpike(values=values, support=np.array([index]), flat=True)


class TestSparseSpike:
    def test_flat_all_k_equals_d(self):
        spike = gen_sparse_spike(4, 4, True, seed=0)
        assert np.all(np.abs(spike.values) == 0.5)
        assert abs(np.linalg.norm(spike.values) - 1.0) < 1e-12

    def test_one_dimensional(self):
        for seed in range(5):
            spike = gen_sparse_spike(1, 1, False, seed=seed)
            assert spike.values[0] in (1.0, -1.0)

    def test_gaussian_profile_invariants(self):
        spike = gen_sparse_spike(100, 10, False, seed=7)
        assert np.count_nonzero(spike.values) == 10
        assert abs(np.linalg.norm(spike.values) - 1.0) < 1e-12
        assert np.array_equal(np.flatnonzero(spike.values), spike.support)

    @pytest.mark.parametrize("k", [0, 5])
    def test_bad_sparsity_rejected(self, k):
        with pytest.raises(ValueError):
            gen_sparse_spike(4, k, True, seed=0)

    def test_invariant_enforced(self):
        with pytest.raises(ValueError):
            models.SparseSpike(values=np.array([0.5, 0.5]),
                               support=np.array([0, 1]), flat=False)


class TestWishart:
    def test_zero_signal_is_pure_noise(self):
        spike = gen_sparse_spike(8, 2, True, seed=3)
        inst = gen_wishart(16, spike, 0.0, seed=3)
        W = component_rng(3, "W").standard_normal((16, 8))
        assert np.array_equal(inst.data, W)

    def test_rank_one_term_reconstructed(self):
        spike = unit_spike(2, 0)
        inst = gen_wishart(2, spike, 4.0, seed=11)
        u = component_rng(11, "u").standard_normal(2)
        W = component_rng(11, "W").standard_normal((2, 2))
        assert np.allclose(inst.data - W, 2.0 * np.outer(u, spike.values),
                           atol=1e-12)

    def test_off_support_columns_bit_exact(self):
        spike = gen_sparse_spike(10, 3, True, seed=5)
        inst = gen_wishart(20, spike, 7.5, seed=5)
        W = component_rng(5, "W").standard_normal((20, 10))
        off = sorted(set(range(10)) - set(spike.support.tolist()))
        assert np.array_equal(inst.data[:, off], W[:, off])


class TestWigner:
    def test_zero_signal(self):
        spike = gen_sparse_spike(6, 2, True, seed=1)
        inst = gen_wigner(spike, 0.0, seed=1)
        W = component_rng(1, "W").standard_normal((6, 6))
        assert np.array_equal(inst.data, W)

    def test_unit_spike_touches_one_entry(self):
        spike = unit_spike(5, 0)
        inst = gen_wigner(spike, 3.0, seed=2)
        W = component_rng(2, "W").standard_normal((5, 5))
        diff = inst.data - W
        assert abs(diff[0, 0] - 3.0) < 1e-12
        diff[0, 0] = 0.0
        assert np.all(diff == 0.0)

    def test_frobenius_of_signal(self):
        spike = gen_sparse_spike(12, 5, False, seed=9)
        inst = gen_wigner(spike, 2.5, seed=9)
        W = component_rng(9, "W").standard_normal((12, 12))
        assert abs(np.linalg.norm(inst.data - W) - 2.5) < 1e-10


class TestPlantedVector:
    def test_row_space_preserved(self):
        spike = gen_sparse_spike(24, 4, True, seed=13)
        inst = gen_planted_vector(8, spike, seed=13)
        G = component_rng(13, "g").standard_normal((8, 24))
        B = np.vstack([G[:-1], np.linalg.norm(G[-1]) * spike.values])
        # projection of each B row onto the row space of Y
        Q, _ = np.linalg.qr(inst.data.T)
        for row in B:
            residual = row - Q @ (Q.T @ row)
            assert np.linalg.norm(residual) <= 1e-8

    def test_rotation_orthogonal(self):
        R = models.haar_rotation(16, component_rng(4, "rotation"))
        assert np.max(np.abs(R.T @ R - np.eye(16))) <= 1e-10

    def test_reduction_identity(self):
        # Y = sqrt(beta) u v^T + (Id - uu^T/||u||^2) W' exactly, with
        # W' = R G and u = chi * R_n
        spike = gen_sparse_spike(24, 4, False, seed=21)
        inst = gen_planted_vector(8, spike, seed=21)
        G = component_rng(21, "g").standard_normal((8, 24))
        R = models.haar_rotation(8, component_rng(21, "rotation"))
        chi = np.linalg.norm(component_rng(21, "u_scale").standard_normal(8))
        u = chi * R[:, -1]
        W = R @ G
        lhs = inst.data - math.sqrt(inst.signal) * np.outer(u, spike.values) \
            - (W - np.outer(u, u @ W) / (u @ u))
        assert np.max(np.abs(lhs)) <= 1e-8
        assert abs(inst.signal - np.linalg.norm(G[-1])**2 / chi**2) < 1e-12

    def test_realized_beta_concentrates(self):
        betas = [gen_planted_vector(64, gen_sparse_spike(256, 16, True, s),
                                    seed=s).signal for s in range(50)]
        assert abs(np.mean(betas) - 256 / 64) <= 0.2 * (256 / 64)

    def test_dimension_guard(self):
        spike = gen_sparse_spike(8, 2, True, seed=0)
        with pytest.raises(ValueError):
            gen_planted_vector(8, spike, seed=0)


class TestSymmetric:
    def test_cauchy_median_near_zero(self):
        spike = gen_sparse_spike(200, 10, True, seed=2)
        inst = gen_symmetric(spike, 0.0, NoiseSpec("cauchy", 1.0), seed=2)
        assert abs(np.median(inst.data)) <= 0.05

    def test_rademacher_entries(self):
        spike = gen_sparse_spike(16, 4, True, seed=6)
        inst = gen_symmetric(spike, 3.0, NoiseSpec("scaled-rademacher", 1.0),
                             seed=6)
        noise = inst.data - 3.0 * np.outer(spike.values, spike.values)
        assert np.all(np.isin(noise, (-1.0, 1.0)))

    def test_cauchy_alpha_bound_empirical(self):
        spec = NoiseSpec("cauchy", 1.0)
        assert spec.alpha == pytest.approx(0.5)
        draws = spec.draw(component_rng(0, "alpha-check"), (100_000,))
        frac = np.mean(np.abs(draws) <= 1.0)
        sigma = math.sqrt(0.5 * 0.5 / 100_000)
        assert frac >= spec.alpha - 3 * sigma

    def test_asymmetric_custom_rejected(self):
        with pytest.raises(ValueError, match="asymmetric"):
            NoiseSpec("custom-symmetric", 1.0,
                      sampler=lambda rng, size: rng.exponential(size=size))

    def test_custom_symmetric_accepted(self):
        spec = NoiseSpec(
            "custom-symmetric", 1.0, alpha=0.3, symmetric=True,
            sampler=lambda rng, size: rng.standard_normal(size) ** 3)
        spike = gen_sparse_spike(8, 2, True, seed=0)
        inst = gen_symmetric(spike, 1.0, spec, seed=0)
        assert inst.data.shape == (8, 8)


class TestAdversary:
    def wishart(self, seed=17, beta=3.0):
        spike = gen_sparse_spike(12, 4, True, seed=seed)
        return gen_wishart(32, spike, beta, seed=seed)

    def test_zero_strength_bit_exact(self):
        inst = self.wishart()
        out = make_adversary(inst, "projection", 0.0, seed=1)
        assert np.array_equal(out.data, inst.data)

    @pytest.mark.parametrize("kind", ["projection", "signal-erasing",
                                      "column-spike"])
    def test_column_norm_matches_strength(self, kind):
        inst = self.wishart()
        E = models.adversary_matrix(inst, kind, 1.75, seed=4)
        assert abs(max_column_norm(E) - 1.75) <= 1e-10

    def test_wigner_bias_kind_infinity_norm(self):
        spike = gen_sparse_spike(10, 3, True, seed=8)
        inst = gen_wigner(spike, 2.0, seed=8)
        E = models.adversary_matrix(inst, "column-spike", 0.3, seed=8)
        assert np.max(np.abs(E)) == pytest.approx(0.3)
        assert np.all(E == 0.3)

    def test_signal_erasing_matches_noise_statistics(self):
        spike = gen_sparse_spike(16, 8, True, seed=23)
        inst = gen_wishart(2048, spike, 2.0, seed=23)
        signal = models.signal_term(inst)
        strength = max_column_norm(signal)
        out = make_adversary(inst, "signal-erasing", strength, seed=23)
        norms = np.linalg.norm(out.data, axis=0)
        on = norms[spike.support]
        off = np.delete(norms, spike.support)
        assert abs(on.mean() - off.mean()) <= 0.05 * off.mean()

    def test_rejected_models(self):
        spike = gen_sparse_spike(16, 3, True, seed=3)
        pv = gen_planted_vector(6, spike, seed=3)
        with pytest.raises(ValueError):
            make_adversary(pv, "projection", 1.0, seed=0)
        sym = gen_symmetric(spike, 1.0, NoiseSpec("cauchy"), seed=3)
        with pytest.raises(ValueError):
            make_adversary(sym, "column-spike", 1.0, seed=0)


class TestDeterminismAndReconstruction:
    def test_identical_seed_identical_bytes(self):
        a = gen_wishart(20, gen_sparse_spike(10, 3, True, 42), 1.5, seed=42)
        b = gen_wishart(20, gen_sparse_spike(10, 3, True, 42), 1.5, seed=42)
        assert a.data.tobytes() == b.data.tobytes()
        assert a.spike.values.tobytes() == b.spike.values.tobytes()

    @pytest.mark.parametrize("maker", [
        lambda s: gen_wishart(16, gen_sparse_spike(8, 3, True, s), 2.0, s),
        lambda s: gen_wigner(gen_sparse_spike(8, 3, False, s), 1.5, s),
        lambda s: gen_planted_vector(6, gen_sparse_spike(16, 3, True, s), s),
        lambda s: gen_symmetric(gen_sparse_spike(8, 3, True, s), 2.0,
                                NoiseSpec("cauchy"), s),
    ])
    def test_signal_plus_noise_reproduces_data(self, maker):
        inst = maker(31)
        signal, noise = models.decompose(inst)
        assert np.max(np.abs(inst.data - signal - noise)) <= 1e-10

    def test_adversary_reconstruction(self):
        inst = gen_wishart(16, gen_sparse_spike(8, 3, True, 5), 2.0, seed=5)
        out = make_adversary(inst, "projection", 0.8, seed=9)
        E = models.adversary_matrix(inst, "projection", 0.8, seed=9)
        signal, noise = models.decompose(inst)
        assert np.max(np.abs(out.data - signal - noise - E)) <= 1e-10

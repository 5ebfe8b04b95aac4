"""Enumeration, selectors, grids, candidates and list decoding.

The selector oracle below re-evaluates the adjacency definition with
scalar loops, as the union of the one-sided rules for s and -s; the
pipeline's absolute-value selector must match it entry-exactly.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from sparse_spike import models
from sparse_spike.linalg import gram, ksparse_norm_oracle
from sparse_spike.recovery import (Candidate, RecoverConfig, RecoveryError,
                                   SignPattern, build_candidates,
                                   enumerate_patterns, list_decode,
                                   pattern_arrays, pattern_count, r_grid,
                                   recover, selector)


def brute_force_selector(G, s: SignPattern, r, scale):
    """One-sided adjacency for s, OR one-sided adjacency for -s."""
    d = G.shape[0]
    active = np.zeros(d, dtype=bool)
    for i in range(d):
        if i in s.support:
            active[i] = True
            continue
        for signs in (s.signs, tuple(-x for x in s.signs)):
            total = 0.0
            for j, sigma in zip(s.support, signs):
                total += G[i, j] * sigma
            if total >= r * s.t * scale:
                active[i] = True
    return active


class TestEnumeration:
    def test_t1_d3(self):
        pats = list(enumerate_patterns(3, 1))
        assert [p.support for p in pats] == [(0,), (1,), (2,)]
        assert all(p.signs == (1,) for p in pats)

    def test_t2_d3_counts_and_signs(self):
        pats = list(enumerate_patterns(3, 2))
        assert len(pats) == 6
        assert pats[0].support == (0, 1) and pats[0].signs == (1, 1)
        assert pats[1].support == (0, 1) and pats[1].signs == (1, -1)
        assert all(p.signs[0] == 1 for p in pats)

    def test_counting_formula(self):
        assert pattern_count(10, 3) == math.comb(10, 3) * 4 == 480
        assert len(list(enumerate_patterns(10, 3))) == 480

    def test_supports_lexicographic(self):
        pats = list(enumerate_patterns(5, 2))
        supports = [p.support for p in pats[::2]]
        assert supports == sorted(supports)

    def test_t_too_large(self):
        with pytest.raises(ValueError):
            list(enumerate_patterns(3, 4))

    def test_arrays_match_iterator(self):
        supports, signs = pattern_arrays(6, 2)
        pats = list(enumerate_patterns(6, 2))
        assert supports.shape == (len(pats), 2)
        for row, pat in enumerate(pats):
            assert tuple(supports[row]) == pat.support
            assert tuple(signs[row]) == pat.signs


class TestSelector:
    G = np.array([[2.0, 0, 1], [0, 2, 0], [1, 0, 2]])

    def test_high_threshold(self):
        s = SignPattern(support=(0,), signs=(1,))
        assert np.array_equal(selector(self.G, s, 1.5, 1.0),
                              np.array([True, False, False]))

    def test_low_threshold(self):
        s = SignPattern(support=(0,), signs=(1,))
        assert np.array_equal(selector(self.G, s, 0.5, 1.0),
                              np.array([True, False, True]))

    def test_unreachable_threshold_keeps_support(self):
        s = SignPattern(support=(1,), signs=(1,))
        assert np.array_equal(selector(self.G, s, 1e12, 1.0),
                              np.array([False, True, False]))

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(40)
        for _ in range(100):
            d = int(rng.integers(2, 9))
            n = int(rng.integers(2, 13))
            t = int(rng.integers(1, min(2, d) + 1))
            Y = rng.standard_normal((n, d))
            G = gram(Y)
            pats = list(enumerate_patterns(d, t))
            s = pats[int(rng.integers(0, len(pats)))]
            r = float(rng.uniform(0.01, 2.0))
            got = selector(G, s, r, float(n))
            want = brute_force_selector(G, s, r, float(n))
            assert np.array_equal(got, want)

    def test_monotone_in_r(self):
        rng = np.random.default_rng(8)
        G = gram(rng.standard_normal((12, 9)))
        s = SignPattern(support=(1, 4), signs=(1, -1))
        prev = None
        for r in r_grid(12):  # descending thresholds
            active = selector(G, s, r, 12.0)
            if prev is not None:
                assert np.all(prev <= active)  # smaller r activates more
            prev = active

    def test_sign_symmetry(self):
        rng = np.random.default_rng(9)
        G = gram(rng.standard_normal((10, 7)))
        s = SignPattern(support=(0, 3, 5), signs=(1, -1, 1))
        neg = SignPattern(support=(0, 3, 5), signs=(-1, 1, -1))
        a, b = selector(G, s, 0.3, 10.0), selector(G, neg, 0.3, 10.0)
        assert np.array_equal(a, b)
        assert np.array_equal(G[np.ix_(np.flatnonzero(a), np.flatnonzero(a))],
                              G[np.ix_(np.flatnonzero(b), np.flatnonzero(b))])


class TestRGrid:
    def test_n8(self):
        assert r_grid(8) == [1.0, 0.5, 0.25, 0.125]

    def test_n2(self):
        assert r_grid(2) == [1.0, 0.5]

    def test_containment(self):
        rng = np.random.default_rng(14)
        for _ in range(1000):
            n = int(rng.integers(2, 5000))
            target = float(rng.uniform(1.0 / n, 1.0))
            grid = r_grid(n)
            assert len(grid) <= math.ceil(math.log2(n)) + 1
            assert any(target / 2 <= g <= target for g in grid)


def noiseless_wigner(d, k, lam, seed):
    spike = models.gen_sparse_spike(d, k, True, seed)
    inst = models.gen_wigner(spike, lam, seed)
    return replace(inst, data=lam * np.outer(spike.values, spike.values))


class TestBuildCandidates:
    def test_count_bound(self):
        inst = models.gen_wigner(models.gen_sparse_spike(3, 2, True, 0), 1.0, 0)
        out = build_candidates(inst, t=1, k=2)
        assert len(out) <= 3 * len(r_grid(3))

    def test_noiseless_rank_one_recovers_on_correct_pattern(self):
        inst = noiseless_wigner(10, 4, 6.0, seed=3)
        out = build_candidates(inst, t=2, k=4)
        support = set(inst.spike.support.tolist())
        hits = [c for c in out
                if set(c.pattern.support) <= support and c.r <= 0.5]
        assert hits
        best = max(abs(c.vector @ inst.spike.values) for c in hits)
        assert best >= 1 - 1e-8

    def test_nonzeros_inside_active_set(self):
        inst = models.gen_wigner(models.gen_sparse_spike(9, 3, False, 5), 2.0, 5)
        for c in build_candidates(inst, t=1, k=3):
            active = selector(inst.data, c.pattern, c.r, 1.0)
            assert np.all(active[np.abs(c.vector) > 0])

    def test_symmetric_model_rejected(self):
        inst = models.gen_symmetric(models.gen_sparse_spike(6, 2, True, 0),
                                    1.0, models.NoiseSpec("cauchy"), 0)
        with pytest.raises(ValueError, match="huber"):
            build_candidates(inst, t=1, k=2)

    @pytest.mark.parametrize("model", ["wishart", "wigner"])
    def test_engines_agree(self, model):
        spike = models.gen_sparse_spike(14, 4, True, 19)
        if model == "wishart":
            inst = models.gen_wishart(40, spike, 3.0, seed=19)
        else:
            inst = models.gen_wigner(spike, 8.0, seed=19)
        a = build_candidates(inst, t=2, k=4,
                             config=RecoverConfig(engine="batched",
                                                  engine_iters=5000))
        b = build_candidates(inst, t=2, k=4,
                             config=RecoverConfig(engine="looped"))
        assert len(a) == len(b)
        agree = 0
        for ca, cb in zip(a, b):
            assert ca.pattern == cb.pattern and ca.r == cb.r
            if ca.converged and cb.converged:
                assert abs(ca.eigenvalue - cb.eigenvalue) <= 1e-5 * (
                    1 + abs(cb.eigenvalue))
                assert abs(ca.vector @ cb.vector) >= 1 - 1e-5
                agree += 1
        assert agree >= len(a) // 2


class TestListDecode:
    def test_picks_larger_quadratic_form(self):
        e1, e2 = np.eye(2)
        out = list_decode([e1, e2], np.diag([10.0, 1.0]), k=1, delta=0.05)
        assert np.allclose(out, e1)

    def test_exact_lemma_case_zero_noise(self):
        v = np.zeros(5)
        v[0] = 1.0
        M = 10.0 * np.outer(v, v)
        out = list_decode([v.copy()], M, k=1, delta=0.05)
        assert abs(out @ v) >= 1 - 1e-12

    def test_lemma_bound_constructed_instances(self):
        rng = np.random.default_rng(77)
        for _ in range(200):
            d = int(rng.integers(3, 11))
            k = int(rng.integers(1, 3))
            delta = float(rng.uniform(0.02, 0.09))
            support = rng.choice(d, k, replace=False)
            v = np.zeros(d)
            v[support] = rng.standard_normal(k)
            v /= np.linalg.norm(v)
            N = rng.standard_normal((d, d))
            N = (N + N.T) / 2.0
            k_prime = min(d, math.ceil(100 * k / delta**2))
            kappa = ksparse_norm_oracle(N, k_prime)
            lam = float(rng.uniform(4.0, 8.0)) * max(1.0, abs(kappa))
            M = lam * np.outer(v, v) + N
            # planted candidate at correlation >= 1 - delta
            noise_dir = rng.standard_normal(d)
            noise_dir -= (noise_dir @ v) * v
            noise_dir /= np.linalg.norm(noise_dir)
            planted = (1 - delta) * v + math.sqrt(1 - (1 - delta)**2) * noise_dir
            junk = [rng.standard_normal(d) for _ in range(3)]
            junk = [x / np.linalg.norm(x) for x in junk]
            out = list_decode([planted] + junk, M, k=k, delta=delta)
            assert abs(out @ v) >= 1 - 4 * delta - 2 * kappa / lam

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            list_decode([], np.eye(2), k=1, delta=0.05)

    def test_delta_range(self):
        with pytest.raises(ValueError):
            list_decode([np.ones(2) / np.sqrt(2)], np.eye(2), k=1, delta=0.2)


class TestRecover:
    def test_noiseless_wigner_exact(self):
        inst = noiseless_wigner(12, 4, 1.0, seed=2)
        for t in (1, 2):
            res = recover(inst, k=4, t=t, delta=0.05)
            assert res.correlation >= 1 - 1e-8
            assert res.patterns_enumerated == pattern_count(12, t)

    def test_null_model_low_correlation(self):
        hits = 0
        for seed in range(5):
            spike = models.gen_sparse_spike(32, 4, True, seed)
            inst = models.gen_wishart(64, spike, 0.0, seed=seed)
            res = recover(inst, k=4, t=1, delta=0.05)
            hits += res.correlation <= 0.6
        assert hits >= 4

    def test_strong_signal_recovers(self):
        spike = models.gen_sparse_spike(24, 4, True, 3)
        inst = models.gen_wishart(96, spike, 4.0, seed=3)
        res = recover(inst, k=4, t=1, delta=0.05)
        assert res.correlation >= 0.9

    def test_planted_vector_robust_mode(self):
        spike = models.gen_sparse_spike(48, 4, True, 7)
        inst = models.gen_planted_vector(16, spike, seed=7)
        res = recover(inst, k=4, t=1, delta=0.05, mode="robust")
        assert res.correlation >= 0.9

    def test_null_safety_of_decoded_quadratic_form(self):
        # the decoded vector is k'-sparse, so its form against Y^T Y is
        # bounded by the brute-force k'-sparse norm of the centered Gram
        # plus n
        for seed in range(5):
            spike = models.gen_sparse_spike(8, 2, True, seed)
            inst = models.gen_wishart(10, spike, 0.0, seed=seed)
            res = recover(inst, k=2, t=1, delta=0.05)
            G = gram(inst.data)
            centered = G - 10 * np.eye(8)
            bound = ksparse_norm_oracle(centered, 8) + 10
            assert res.estimate @ G @ res.estimate <= bound + 1e-9

    def test_parameter_validation(self):
        inst = noiseless_wigner(6, 2, 1.0, seed=0)
        with pytest.raises(ValueError):
            recover(inst, k=2, t=3, delta=0.05)
        with pytest.raises(ValueError):
            recover(inst, k=2, t=1, delta=0.3)
        with pytest.raises(ValueError):
            recover(inst, k=2, t=1, delta=0.05, mode="quantum")

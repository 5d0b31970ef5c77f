"""Oracle-simulator behavior: LRU exactness, op streams, determinism."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from lfperf.prng import substream_seed
from lfperf.sim import SimConfig, build_random_bst, gen_ops, simulate_full, simulate_lru
from lfperf.sim.core import exponential_ks
from lfperf.sim.opgen import OP_DELETE, OP_INSERT, OP_SEARCH
from lfperf.sim.randtree import subtree_size_samples
from lfperf.workload import CacheLevel, OpMix, PlatformSpec, StructureSpec, WorkloadSpec


def tiny_platform(**overrides):
    base = dict(
        data_levels=(CacheLevel(100_000, 4.0),),
        tlb_levels=(CacheLevel(64, 1.0),),
        memory_latency=120.0,
        page_walk_latency=40.0,
        t_cas_by_sockets={1: 60.0, 2: 120.0},
        t_rec_low=80.0,
        t_rec_high=200.0,
        threads_per_socket=(8, 8),
        t_app=40.0,
        t_cmp=3.0,
    )
    base.update(overrides)
    return PlatformSpec(**base)


class TestLru:
    def test_single_line_repeated(self):
        res = simulate_lru(np.zeros(100, dtype=np.int64), capacity=4)
        assert res.hits[0] == 99
        assert res.aggregate_hit_ratio == pytest.approx(0.99)

    def test_round_robin_thrash(self):
        trace = np.tile(np.arange(5), 200)
        res = simulate_lru(trace, capacity=4)
        assert res.hits.sum() == 0

    def test_round_robin_fits(self):
        trace = np.tile(np.arange(4), 200)
        res = simulate_lru(trace, capacity=4)
        assert res.hits.sum() == 4 * 200 - 4

    def test_inclusion_property(self):
        rng = np.random.default_rng(7)
        trace = rng.integers(0, 64, size=20_000)
        small = simulate_lru(trace, capacity=8)
        big = simulate_lru(trace, capacity=16)
        assert (big.hits >= small.hits).all()

    def test_lru_exact_small(self):
        # Hand-checked: capacity 2, trace a b a c b.
        trace = np.array([0, 1, 0, 2, 1])
        res = simulate_lru(trace, capacity=2)
        assert res.hits.tolist() == [1, 0, 0]


class TestRandomBst:
    def test_sorted_permutation_is_right_spine(self):
        tree = build_random_bst(np.arange(1, 9))
        tree.validate()
        assert tree.subtree_size[0] == 8
        assert tree.depth.tolist() == list(range(8))
        assert (tree.left == -1).all()

    def test_three_keys_all_permutations(self):
        # Middle key roots the tree for 2 of 6 permutations.
        import itertools

        count3 = 0
        for perm in itertools.permutations([1, 2, 3]):
            tree = build_random_bst(np.array(perm))
            tree.validate()
            if tree.subtree_size[1] == 3:
                count3 += 1
        assert count3 == 2

    def test_duplicate_keys_rejected(self):
        with pytest.raises(ValueError):
            build_random_bst(np.array([1, 2, 2]))

    def test_fast_sampler_matches_tree_build(self):
        sizes = subtree_size_samples(6, 200, seed=5)
        assert sizes.shape == (200, 6)
        assert (sizes >= 1).all() and (sizes <= 6).all()
        # Every permutation has exactly one full-subtree node (the root).
        assert ((sizes == 6).sum(axis=1) == 1).all()
        # Root probability per position is 1/6.
        root_freq = (sizes == 6).mean(axis=0)
        assert abs(root_freq.mean() - 1 / 6) < 1e-12


class TestGenOps:
    def test_search_only_has_no_updates(self):
        w = WorkloadSpec(key_range=16, mix=OpMix.balanced(0.0))
        kinds, _ = gen_ops(w, seed=3, n=10_000)
        assert (kinds == OP_SEARCH).all()

    def test_uniform_two_keys(self):
        w = WorkloadSpec(key_range=2, mix=OpMix.balanced(0.0))
        _, keys = gen_ops(w, seed=11, n=1_000_000)
        freq = (keys == 1).mean()
        sigma = 0.5 / np.sqrt(len(keys))
        assert abs(freq - 0.5) < 3 * sigma

    def test_zipf_head_frequency(self):
        w = WorkloadSpec(key_range=100, distribution="zipf", zipf_alpha=1.1,
                         mix=OpMix.balanced(0.0))
        _, keys = gen_ops(w, seed=12, n=1_000_000)
        want = w.key_probs()[1]
        freq = (keys == 1).mean()
        sigma = np.sqrt(want * (1 - want) / len(keys))
        assert abs(freq - want) < 3 * sigma

    def test_chi_square_uniform(self):
        w = WorkloadSpec(key_range=32, mix=OpMix.balanced(0.4))
        kinds, keys = gen_ops(w, seed=13, n=1_000_000)
        counts = np.bincount(keys, minlength=33)[1:]
        _, p = stats.chisquare(counts)
        assert p > 1e-4
        ins_frac = (kinds == OP_INSERT).mean()
        del_frac = (kinds == OP_DELETE).mean()
        assert abs(ins_frac - 0.2) < 0.002
        assert abs(del_frac - 0.2) < 0.002


class TestSimulateFull:
    def test_closed_form_single_thread(self):
        # One thread, caches that never fill, search-only: every op costs
        # t_app + (k'+1) * (t_cmp + L1 + TLB1) once warm.
        r = 8
        w = WorkloadSpec(key_range=r, threads=1, mix=OpMix.balanced(0.0))
        s = StructureSpec(kind="ll")
        p = tiny_platform()
        cfg = SimConfig(w, s, p, seed=21, ops_per_thread=4000, warmup_ops_per_thread=500)
        report = simulate_full(cfg)
        kinds, keys = gen_ops(w, substream_seed(cfg.seed, 0), 4500)
        measured_keys = keys[500:]
        per_touch = p.t_cmp + 4.0 + 1.0
        cycles = (40.0 + (measured_keys + 1) * per_touch).sum()
        want = 4000 / cycles
        assert report.throughput == pytest.approx(want, rel=1e-9)

    def test_determinism(self):
        w = WorkloadSpec(key_range=64, threads=4, mix=OpMix.balanced(0.3))
        s = StructureSpec(kind="sl")
        cfg = SimConfig(w, s, tiny_platform(), seed=5, ops_per_thread=2000,
                        warmup_ops_per_thread=200, tracked_keys=(7,))
        a = simulate_full(cfg)
        b = simulate_full(cfg)
        assert a.throughput == b.throughput
        np.testing.assert_array_equal(a.touches, b.touches)
        np.testing.assert_array_equal(a.event_histogram, b.event_histogram)
        np.testing.assert_array_equal(a.interarrival[7], b.interarrival[7])

    def test_occupancy_accounting(self):
        w = WorkloadSpec(key_range=32, threads=2, mix=OpMix.balanced(0.5))
        cfg = SimConfig(w, StructureSpec(kind="ht", load_factor=2), tiny_platform(),
                        seed=9, ops_per_thread=3000, warmup_ops_per_thread=300)
        report = simulate_full(cfg)
        np.testing.assert_allclose(report.thread_charged, report.thread_end, rtol=1e-12)

    def test_search_only_emits_no_cas(self):
        w = WorkloadSpec(key_range=32, threads=2, mix=OpMix.balanced(0.0))
        cfg = SimConfig(w, StructureSpec(kind="bst"), tiny_platform(), seed=4,
                        ops_per_thread=2000, warmup_ops_per_thread=100)
        report = simulate_full(cfg)
        assert report.coh_misses.sum() == 0
        assert report.stall_events.sum() == 0
        assert (report.touches == report.reads).all()

    def test_event_count_at_least_one(self):
        w = WorkloadSpec(key_range=16, threads=1, mix=OpMix.balanced(0.5))
        for kind in ("ll", "ht", "sl", "bst"):
            cfg = SimConfig(w, StructureSpec(kind=kind), tiny_platform(), seed=2,
                            ops_per_thread=500, warmup_ops_per_thread=50)
            report = simulate_full(cfg)
            hist = report.event_histogram
            assert hist.sum() == 500
            assert hist[0] == 0  # every op touches at least one node


class TestInterarrival:
    def test_tracked_key_stats(self):
        w = WorkloadSpec(key_range=256, threads=2, mix=OpMix.balanced(0.2))
        cfg = SimConfig(w, StructureSpec(kind="ll"), tiny_platform(), seed=6,
                        ops_per_thread=30_000, warmup_ops_per_thread=2_000,
                        tracked_keys=(40,))
        from lfperf.sim import interarrival

        stats = interarrival(cfg, 40)
        assert stats.sufficient and len(stats.samples) >= 1000
        assert stats.mean_gap > 0
        assert 0 <= stats.ks_stat <= 1
        with pytest.raises(Exception):
            interarrival(cfg, 41)  # not tracked

    def test_hot_key_under_locality_is_reported_not_hidden(self):
        # A frequently-shared prefix node in a chain sees strongly dependent
        # arrivals; the fit may be poor but the statistics are still
        # computed and reported.
        w = WorkloadSpec(key_range=128, threads=2, distribution="zipf",
                         zipf_alpha=1.1, mix=OpMix.balanced(0.2))
        cfg = SimConfig(w, StructureSpec(kind="ll"), tiny_platform(), seed=15,
                        ops_per_thread=20_000, warmup_ops_per_thread=2_000,
                        tracked_keys=(2,))
        from lfperf.sim import interarrival

        stats = interarrival(cfg, 2)
        assert len(stats.samples) >= 1000
        assert np.isfinite(stats.ks_stat) and np.isfinite(stats.p_value)

    def test_exponential_self_test(self):
        rng = np.random.default_rng(0)
        ps = []
        for _ in range(20):
            gaps = rng.exponential(scale=100.0, size=3000)
            _, p, enough = exponential_ks(gaps)
            assert enough
            ps.append(p)
        assert sum(p > 0.01 for p in ps) >= 18

    def test_poisson_generator_piped_in(self):
        rng = np.random.default_rng(42)
        gaps = rng.exponential(scale=7.0, size=5000)
        stat, p, _ = exponential_ks(gaps)
        assert p > 0.01
        assert stat < 0.03

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfperf.workload import (
    CacheLevel,
    ConfigError,
    OpMix,
    PlatformSpec,
    SpecError,
    StructureSpec,
    WorkloadSpec,
    effective_t_cas,
    effective_t_rec,
    key_prob,
    op_select_prob,
    p_last_insert,
    parse_platform_config,
    parse_workload_config,
    write_platform_config,
)


def make_platform(**overrides):
    base = dict(
        data_levels=(CacheLevel(512, 4.0), CacheLevel(4096, 16.0)),
        tlb_levels=(CacheLevel(16, 1.0), CacheLevel(128, 8.0)),
        memory_latency=120.0,
        page_walk_latency=40.0,
        t_cas_by_sockets={1: 60.0, 2: 120.0},
        t_rec_low=80.0,
        t_rec_high=200.0,
        threads_per_socket=(4, 4),
        t_app=40.0,
        t_cmp=3.0,
    )
    base.update(overrides)
    return PlatformSpec(**base)


class TestKeyProb:
    def test_uniform(self):
        w = WorkloadSpec(key_range=10)
        assert key_prob(w, 3) == pytest.approx(0.1)

    def test_zipf_single_key(self):
        w = WorkloadSpec(key_range=1, distribution="zipf", zipf_alpha=1.1)
        assert key_prob(w, 1) == pytest.approx(1.0)

    def test_zipf_against_direct_summation(self):
        # Frozen from a pure-python harmonic sum with math.fsum.
        h = math.fsum(j ** (-1.1) for j in range(1, 101))
        w = WorkloadSpec(key_range=100, distribution="zipf", zipf_alpha=1.1)
        assert key_prob(w, 1) == pytest.approx(1.0 / h, rel=1e-12)
        assert key_prob(w, 1) == pytest.approx(0.23375277805516437, rel=1e-10)

    @given(st.integers(1, 200), st.sampled_from(["uniform", "zipf"]))
    @settings(max_examples=30, deadline=None)
    def test_sums_to_one(self, r, dist):
        w = WorkloadSpec(key_range=r, distribution=dist, zipf_alpha=1.1)
        total = math.fsum(key_prob(w, k) for k in range(1, r + 1))
        assert abs(total - 1.0) < 1e-12

    def test_out_of_range(self):
        w = WorkloadSpec(key_range=10)
        with pytest.raises(SpecError):
            key_prob(w, 0)
        with pytest.raises(SpecError):
            key_prob(w, 11)


class TestOpSelectProb:
    def test_balanced(self):
        w = WorkloadSpec(key_range=10, mix=OpMix.balanced(0.2))
        assert op_select_prob(w, "ins", 1) == pytest.approx(0.01)

    def test_search_only(self):
        w = WorkloadSpec(key_range=10, mix=OpMix.balanced(0.0))
        assert op_select_prob(w, "ins", 4) == 0.0

    def test_asymmetric(self):
        w = WorkloadSpec(key_range=4, mix=OpMix.asymmetric(0.3, 0.1, 0.6))
        assert op_select_prob(w, "del", 2) == pytest.approx(0.025)

    def test_total_mass(self):
        w = WorkloadSpec(
            key_range=7,
            mix=OpMix.balanced(0.3),
            per_key_mix={3: OpMix.asymmetric(0.5, 0.25, 0.25)},
        )
        total = math.fsum(
            op_select_prob(w, op, k)
            for op in ("ins", "del", "src")
            for k in range(1, 8)
        )
        assert abs(total - 1.0) < 1e-12


class TestPLastInsert:
    def test_balanced(self):
        w = WorkloadSpec(key_range=5, mix=OpMix.balanced(0.4))
        assert p_last_insert(w, 2) == pytest.approx(0.5)

    def test_asymmetric(self):
        w = WorkloadSpec(key_range=5, mix=OpMix.asymmetric(0.3, 0.1, 0.6))
        assert p_last_insert(w, 1) == pytest.approx(0.75)

    def test_delete_only(self):
        w = WorkloadSpec(key_range=5, mix=OpMix.asymmetric(0.0, 1.0, 0.0))
        assert p_last_insert(w, 1) == 0.0

    def test_search_only_prefilled(self):
        w = WorkloadSpec(key_range=5, mix=OpMix.balanced(0.0))
        assert p_last_insert(w, 1) == 1.0

    @given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(1e-3, 1e3))
    @settings(max_examples=50, deadline=None)
    def test_invariant_under_mix_scaling(self, ins, dele, scale):
        # Scaling the whole update mix cannot change the ratio.
        total = ins + dele
        ratio = ins / total
        scaled = (ins * scale) / (ins * scale + dele * scale)
        assert scaled == pytest.approx(ratio, rel=1e-12)


class TestEffectiveTrec:
    def test_single_socket(self):
        p = make_platform()
        assert effective_t_rec(p, 4) == pytest.approx(80.0)

    def test_even_split_is_max(self):
        p = make_platform()
        assert effective_t_rec(p, 8) == pytest.approx(80.0 + (200.0 - 80.0) / 2)

    def test_direct_evaluation(self):
        p = make_platform(t_rec_low=100.0, t_rec_high=300.0, threads_per_socket=(8, 8))
        assert effective_t_rec(p, 16) == pytest.approx(200.0)

    def test_symmetry(self):
        # Mixing term must be symmetric in (n1, P - n1).
        p = make_platform(t_rec_low=10.0, t_rec_high=50.0, threads_per_socket=(6, 6))
        for threads in range(7, 13):
            n1 = min(threads, 6)
            frac = n1 / threads
            mirrored = (threads - n1) / threads
            direct = p.t_rec_low + 2 * frac * (1 - frac) * (p.t_rec_high - p.t_rec_low)
            swapped = p.t_rec_low + 2 * mirrored * (1 - mirrored) * (p.t_rec_high - p.t_rec_low)
            assert effective_t_rec(p, threads) == pytest.approx(direct)
            assert direct == pytest.approx(swapped)

    def test_range_bounds(self):
        p = make_platform()
        for threads in range(1, 9):
            v = effective_t_rec(p, threads)
            assert p.t_rec_low <= v <= p.t_rec_low + (p.t_rec_high - p.t_rec_low) / 2

    def test_exceeding_topology(self):
        with pytest.raises(SpecError):
            effective_t_rec(make_platform(), 9)


def test_effective_t_cas_socket_switch():
    p = make_platform()
    assert effective_t_cas(p, 4) == 60.0
    assert effective_t_cas(p, 5) == 120.0


class TestSpecValidation:
    def test_bad_fractions(self):
        with pytest.raises(SpecError):
            OpMix.asymmetric(0.9, 0.3, -0.2)
        with pytest.raises(SpecError):
            OpMix.balanced(1.5)

    def test_cache_capacity_order(self):
        with pytest.raises(SpecError):
            make_platform(data_levels=(CacheLevel(512, 4.0), CacheLevel(512, 16.0)))

    def test_cacheline_divides_page(self):
        with pytest.raises(SpecError):
            make_platform(cacheline_size=48)

    def test_packed_needs_small_nodes(self):
        s = StructureSpec(kind="ht", layout="packed", node_size=40)
        with pytest.raises(SpecError):
            s.validate_layout(make_platform())
        StructureSpec(kind="ht", layout="packed", node_size=32).validate_layout(make_platform())

    def test_page_budget(self):
        p = make_platform()
        s = StructureSpec(kind="ll", pages=1)
        with pytest.raises(SpecError):
            s.page_count(4096, p)
        assert StructureSpec(kind="ll").page_count(4096, p) == 65  # 4098 lines / 64


class TestConfigFiles:
    def test_workload_roundtrip(self, tmp_path):
        cfg = tmp_path / "workload.cfg"
        cfg.write_text("range = 512\ndist = zipf\nzipf_alpha = 1.1\nupdate_pct = 20\nthreads = 4\n")
        w = parse_workload_config(cfg)
        assert w.key_range == 512 and w.threads == 4
        assert w.mix.insert == pytest.approx(0.1)

    def test_asymmetric_mix(self, tmp_path):
        cfg = tmp_path / "workload.cfg"
        cfg.write_text("range = 64\ndist = uniform\nins_pct = 30\ndel_pct = 10\nthreads = 2\n")
        w = parse_workload_config(cfg)
        assert w.mix.search == pytest.approx(0.6)

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "workload.cfg"
        cfg.write_text("range = 64\ndist = uniform\nupdate_pct = 0\nthreads = 1\ntypo_key = 3\n")
        with pytest.raises(ConfigError) as err:
            parse_workload_config(cfg)
        assert "typo_key" in str(err.value)
        assert ":5" in str(err.value)

    def test_missing_key(self, tmp_path):
        cfg = tmp_path / "workload.cfg"
        cfg.write_text("range = 64\ndist = uniform\nupdate_pct = 0\n")
        with pytest.raises(ConfigError) as err:
            parse_workload_config(cfg)
        assert "threads" in str(err.value)

    def test_platform_roundtrip(self, tmp_path):
        p = make_platform()
        path = tmp_path / "platform.cfg"
        write_platform_config(p, path)
        q = parse_platform_config(path)
        assert q == p

    def test_platform_bad_value(self, tmp_path):
        path = tmp_path / "platform.cfg"
        path.write_text("dcache.L1.lines = lots\n")
        with pytest.raises(ConfigError) as err:
            parse_platform_config(path)
        assert "dcache.L1.lines" in str(err.value)

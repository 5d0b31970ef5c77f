"""Skip-list presence and event probabilities against enumeration."""

from __future__ import annotations

import numpy as np
import pytest

from lfperf.rates import (
    ROUTING,
    VALUE,
    _sl_tail_presence,
    build_rate_table,
    sl_cas_prob,
    sl_height_masses,
    sl_presence,
    sl_read_prob,
)
from lfperf.workload import OpMix, StructureSpec, WorkloadSpec

from oracles import (
    skiplist_config_weights,
    skiplist_search_visits,
    skiplist_update_cas,
)


class TestPresence:
    def test_first_flip(self):
        assert sl_presence(1, 0, h_max=4, p_in=1.0) == pytest.approx(0.5)

    def test_masses_with_tail(self):
        masses = [sl_presence(1, h, h_max=3, p_in=1.0) for h in range(4)]
        assert masses == pytest.approx([0.5, 0.25, 0.125, 0.125])

    def test_sums_to_p_in(self):
        for h_max in (1, 3, 7):
            total = sum(sl_presence(1, h, h_max, p_in=0.37) for h in range(h_max + 1))
            assert total == pytest.approx(0.37, abs=1e-12)

    def test_monte_carlo_coin_flips(self):
        # Height = number of successful promotions, capped at h_max.
        rng = np.random.default_rng(123)
        h_max = 5
        n = 1_000_000
        draws = rng.random((n, h_max)) < 0.5
        heights = np.minimum(draws.argmin(axis=1) + draws.all(axis=1) * h_max, h_max)
        masses = sl_height_masses(h_max)
        for h in range(h_max + 1):
            freq = (heights == h).mean()
            sigma = np.sqrt(masses[h] * (1 - masses[h]) / n)
            assert abs(freq - masses[h]) < 3 * sigma


class TestReadProb:
    def test_target_itself(self):
        w = WorkloadSpec(key_range=8, mix=OpMix.balanced(0.4))
        from lfperf.workload import presence_probs

        tails = _sl_tail_presence(presence_probs(w), 3, 0.5)
        assert sl_read_prob(5, 1, 5, tails) == 1.0

    def test_empty_product(self):
        tails = np.zeros((10, 5))
        tails[0, :4] = 1.0
        tails[9, :4] = 1.0
        assert sl_read_prob(2, 0, 7, tails) == 1.0

    def test_exhaustive_enumeration_with_reference_search(self):
        # R=4, h_max=2: every (absent | height) combination, replayed through
        # a sequential search; visit frequency of (k, h) given that height
        # must match the formula exactly.
        r, h_max = 4, 2
        w = WorkloadSpec(key_range=r, mix=OpMix.balanced(0.5))
        from lfperf.workload import presence_probs

        p_in = presence_probs(w)
        masses = sl_height_masses(h_max)
        tails = _sl_tail_presence(p_in, h_max, 0.5)
        for k_target in range(1, r + 1):
            visit_w = np.zeros((r + 2, h_max + 1))
            node_w = np.zeros((r + 2, h_max + 1))
            for heights, weight in skiplist_config_weights(p_in, masses, r):
                visited = skiplist_search_visits(heights, h_max, k_target, r)
                for k, h in heights.items():
                    node_w[k, h] += weight
                    if k in visited:
                        visit_w[k, h] += weight
            for k in range(1, r + 1):
                for h in range(h_max + 1):
                    want = visit_w[k, h] / node_w[k, h]
                    got = sl_read_prob(k, h, k_target, tails)
                    assert got == pytest.approx(want, abs=1e-12), (k, h, k_target)

    def test_sentinels_always_read(self):
        w = WorkloadSpec(key_range=6, mix=OpMix.balanced(0.2))
        from lfperf.workload import presence_probs

        tails = _sl_tail_presence(presence_probs(w), 3, 0.5)
        for k_target in range(1, 7):
            assert sl_read_prob(0, 3, k_target, tails) == 1.0


class TestSkipListTable:
    def test_read_rates_match_enumeration(self):
        # Aggregated a_read must equal the enumeration-weighted visit rate.
        r, h_max = 4, 2
        w = WorkloadSpec(key_range=r, threads=2, mix=OpMix.balanced(0.5))
        s = StructureSpec(kind="sl", h_max=h_max)
        table = build_rate_table(w, s)
        from lfperf.workload import presence_probs

        p_in = presence_probs(w)
        masses = sl_height_masses(h_max)
        kp = w.key_probs()
        visit_w = np.zeros((r + 2, h_max + 1))
        node_w = np.zeros((r + 2, h_max + 1))
        sent_w = 0.0
        for heights, weight in skiplist_config_weights(p_in, masses, r):
            for k_target in range(1, r + 1):
                mass = weight * kp[k_target]
                visited = skiplist_search_visits(heights, h_max, k_target, r)
                for k, h in heights.items():
                    node_w[k, h] += mass
                    if k in visited:
                        visit_w[k, h] += mass
                if (r + 1) in visited:
                    sent_w += mass
        for i, node in enumerate(table.nodes):
            if node.kind != VALUE or node.key in (0, r + 1):
                continue
            want = visit_w[node.key, node.height] / node_w[node.key, node.height]
            got = table.a_read[i] * w.threads
            assert got == pytest.approx(want, rel=1e-10), (node.key, node.height)
        tail_idx = next(i for i, n in enumerate(table.nodes)
                        if n.kind == VALUE and n.key == r + 1)
        assert table.a_read[tail_idx] * w.threads == pytest.approx(sent_w, rel=1e-10)

    def test_routing_reads_are_a_subset_of_value_reads(self):
        # Every routing consultation follows a read of the valued node, but
        # overshoot landings past the target read the valued node only.
        w = WorkloadSpec(key_range=8, threads=1, mix=OpMix.balanced(0.3))
        table = build_rate_table(w, StructureSpec(kind="sl", h_max=3))
        by_node = {(n.kind, n.key, n.height): i for i, n in enumerate(table.nodes)}
        for (kind, k, h), i in by_node.items():
            if kind == ROUTING and k not in (0, 9):
                j = by_node[(VALUE, k, h)]
                assert table.a_read[i] < table.a_read[j]
                if k < 8:  # the last key is never moved on from
                    assert table.a_read[i] > 0

    def test_no_routing_nodes_at_ground_level(self):
        w = WorkloadSpec(key_range=8, threads=1, mix=OpMix.balanced(0.3))
        table = build_rate_table(w, StructureSpec(kind="sl", h_max=3))
        assert not any(n.kind == ROUTING and n.height == 0 and n.key not in (0, 9)
                       for n in table.nodes)

    def test_presence_mass_per_key(self):
        w = WorkloadSpec(key_range=8, threads=1, mix=OpMix.asymmetric(0.3, 0.1, 0.6))
        table = build_rate_table(w, StructureSpec(kind="sl", h_max=4))
        per_key = {}
        for i, n in enumerate(table.nodes):
            if n.kind == VALUE and n.key not in (0, 9):
                per_key[n.key] = per_key.get(n.key, 0.0) + table.presence[i]
        for k, total in per_key.items():
            assert total == pytest.approx(0.75, abs=1e-12)

    def test_del_cas_mark_at_target(self):
        w = WorkloadSpec(key_range=6, threads=1, mix=OpMix.balanced(0.4))
        table = build_rate_table(w, StructureSpec(kind="sl", h_max=2))
        ins, dele, _ = w.op_mass()
        for i, n in enumerate(table.nodes):
            if n.kind == VALUE and n.key not in (0, 7):
                assert table.a_cas[i] >= dele[n.key] - 1e-12


class TestCasProb:
    def test_mark_and_zero_cases(self):
        w = WorkloadSpec(key_range=6, mix=OpMix.balanced(0.4))
        from lfperf.workload import presence_probs

        masses = sl_height_masses(2)
        tails = _sl_tail_presence(presence_probs(w), 2, 0.5)
        assert sl_cas_prob(4, 1, VALUE, 4, "del", 0.5, tails, masses) == 1.0
        assert sl_cas_prob(5, 0, VALUE, 4, "ins", 0.5, tails, masses) == 0.0
        assert sl_cas_prob(4, 0, VALUE, 4, "ins", 0.5, tails, masses) == 0.0
        assert sl_cas_prob(5, 1, ROUTING, 4, "del", 0.5, tails, masses) == 0.0

    def test_against_update_trace_enumeration(self):
        # Every configuration x height-draw, replayed through the reference
        # predecessor logic; conditional CAS probabilities must match.
        r, h_max = 4, 2
        w = WorkloadSpec(key_range=r, mix=OpMix.balanced(0.5))
        from lfperf.workload import presence_probs

        p_in = presence_probs(w)
        masses = sl_height_masses(h_max)
        tails = _sl_tail_presence(p_in, h_max, 0.5)
        for k_target in (2, 4):
            for op in ("ins", "del"):
                hit_w = {}
                node_w = {}
                for heights, weight in skiplist_config_weights(p_in, masses, r):
                    if op == "ins":
                        success = k_target not in heights
                        draws = [(g, masses[g]) for g in range(h_max + 1)] if success else [(0, 1.0)]
                    else:
                        success = k_target in heights
                        draws = [(0, 1.0)]
                    for g, g_mass in draws:
                        cas = (skiplist_update_cas(heights, h_max, k_target, op, g, r)
                               if success else set())
                        for k, h in heights.items():
                            node = (VALUE, k, h)
                            node_w[node] = node_w.get(node, 0.0) + weight * g_mass
                            if ("value", k) in cas:
                                hit_w[node] = hit_w.get(node, 0.0) + weight * g_mass
                            if h >= 1:
                                rnode = (ROUTING, k, h)
                                node_w[rnode] = node_w.get(rnode, 0.0) + weight * g_mass
                                if ("routing", k) in cas:
                                    hit_w[rnode] = hit_w.get(rnode, 0.0) + weight * g_mass
                        # head sentinels
                        for kind, name in ((VALUE, "value"), (ROUTING, "routing")):
                            node = (kind, 0, h_max)
                            node_w[node] = node_w.get(node, 0.0) + weight * g_mass
                            if (name, 0) in cas:
                                hit_w[node] = hit_w.get(node, 0.0) + weight * g_mass
                for (kind, k, h), den in node_w.items():
                    want = hit_w.get((kind, k, h), 0.0) / den
                    got = sl_cas_prob(k, h, kind, k_target, op, p_in[k_target],
                                      tails, masses)
                    assert got == pytest.approx(want, abs=1e-12), (kind, k, h, op)

    def test_table_cas_matches_enumeration(self):
        r, h_max = 4, 2
        w = WorkloadSpec(key_range=r, threads=2, mix=OpMix.asymmetric(0.3, 0.2, 0.5))
        table = build_rate_table(w, StructureSpec(kind="sl", h_max=h_max))
        from lfperf.workload import presence_probs

        p_in = presence_probs(w)
        masses = sl_height_masses(h_max)
        tails = _sl_tail_presence(p_in, h_max, 0.5)
        ins, dele, _ = w.op_mass()
        for i, n in enumerate(table.nodes):
            if n.kind not in (VALUE, ROUTING) or n.key in (0, r + 1):
                continue
            want = sum(
                ins[kt] * sl_cas_prob(n.key, n.height, n.kind, kt, "ins",
                                      p_in[kt], tails, masses)
                + dele[kt] * sl_cas_prob(n.key, n.height, n.kind, kt, "del",
                                         p_in[kt], tails, masses)
                for kt in range(1, r + 1)
            ) / w.threads
            assert table.a_cas[i] == pytest.approx(want, abs=1e-12), (n.kind, n.key, n.height)

"""Driver for the discrete-event simulator: config, prefill, report."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lfperf import prng
from lfperf.rates import sl_height_masses
from lfperf.sim import _kernels
from lfperf.workload import (
    EXTERNAL_BST,
    HASH_TABLE,
    LINKED_LIST,
    PACKED,
    SKIP_LIST,
    PlatformSpec,
    SpecError,
    StructureSpec,
    WorkloadSpec,
    effective_t_cas,
    effective_t_rec,
    presence_probs,
)

_STRUCT_CODE = {LINKED_LIST: 0, HASH_TABLE: 1, SKIP_LIST: 2, EXTERNAL_BST: 3}

# Dedicated PRNG lanes so op streams, prefill, and slot shuffling never collide.
LANE_PRESENCE = 1 << 32
LANE_HEIGHTS = (1 << 32) + 1
LANE_PERMUTATION = (1 << 32) + 2
LANE_SHUFFLE = (1 << 32) + 3


@dataclass
class SimConfig:
    workload: WorkloadSpec
    structure: StructureSpec
    platform: PlatformSpec
    seed: int = 1
    ops_per_thread: int = 20_000
    warmup_ops_per_thread: int = 4_000
    tracked_keys: tuple[int, ...] = ()
    shuffle_packed_slots: bool = False
    max_track_samples: int = 200_000

    def __post_init__(self):
        if self.ops_per_thread < 1:
            raise SpecError("ops_per_thread must be >= 1")
        if self.warmup_ops_per_thread < 0:
            raise SpecError("warmup must be >= 0")
        for k in self.tracked_keys:
            if not 1 <= k <= self.workload.key_range:
                raise SpecError(f"tracked key {k} outside the key range")


@dataclass
class SimReport:
    config: SimConfig
    throughput: float            # ops per cycle over the measured window
    measured_ops: int
    measured_cycles: float
    slot_of_node: dict
    slot_to_line: np.ndarray
    touches: np.ndarray          # per line, measured phase
    reads: np.ndarray
    served_level: np.ndarray     # per line x (levels..., memory)
    tlb_served: np.ndarray
    coh_misses: np.ndarray
    stall_events: np.ndarray
    stall_cycles: float
    event_histogram: np.ndarray
    interarrival: dict[int, np.ndarray] = field(default_factory=dict)
    thread_end: np.ndarray | None = None
    thread_charged: np.ndarray | None = None

    def data_hit_cum(self) -> np.ndarray:
        """Per-line cumulative data hit ratio by level (coherence excluded)."""
        den = np.maximum(1, self.touches - self.coh_misses)
        cum = np.cumsum(self.served_level[:, :-1], axis=1)
        return cum / den[:, None]

    def coh_ratio(self) -> np.ndarray:
        return self.coh_misses / np.maximum(1, self.touches)


def _slot_layout(w: WorkloadSpec, s: StructureSpec):
    """Total slot count and the node -> slot mapping helpers."""
    r = w.key_range
    if s.kind == LINKED_LIST:
        return r + 2, {("value", k): k for k in range(r + 2)}
    if s.kind == HASH_TABLE:
        b = s.bucket_count(r)
        slots = {("value", k): k - 1 for k in range(1, r + 1)}
        for bb in range(1, b + 1):
            slots[("head", bb)] = r + bb - 1
            slots[("tail", bb)] = r + b + bb - 1
        return r + 2 * b, slots
    if s.kind == SKIP_LIST:
        hcap = s.height_cap(r) + 1
        slots = {}
        for k in range(r + 2):
            for h in range(hcap):
                slots[("value", k, h)] = k * hcap + h
                slots[("routing", k, h)] = (r + 2) * hcap + k * hcap + h
        return 2 * (r + 2) * hcap, slots
    slots = {("internal", k): k for k in range(r + 1)}
    slots[("internal", -1)] = r + 1
    for k in range(1, r + 1):
        slots[("external", k)] = r + 1 + k
    slots[("external", 0)] = 2 * r + 2
    return 2 * r + 3, slots


def _mappings(n_slots: int, s: StructureSpec, platform: PlatformSpec, pages: int,
              seed: int, shuffle: bool):
    order = np.arange(n_slots, dtype=np.int64)
    if s.layout == PACKED and shuffle:
        lane = prng.substream_seed(seed, LANE_SHUFFLE)
        for i in range(n_slots - 1, 0, -1):
            j = prng.stream_value(lane, i) % (i + 1)
            order[i], order[j] = order[j], order[i]
    if s.layout == PACKED:
        line_of_order = np.arange(n_slots, dtype=np.int64) // 2
        slot_to_line = np.empty(n_slots, dtype=np.int64)
        slot_to_line[order] = line_of_order
        n_lines = (n_slots + 1) // 2
    else:
        slot_to_line = order
        n_lines = n_slots
    line_to_page = np.arange(n_lines, dtype=np.int64) % pages
    return slot_to_line, line_to_page, n_lines, pages


def _prefill_presence(cfg: SimConfig) -> np.ndarray:
    w = cfg.workload
    p_in = presence_probs(w)
    lane = prng.substream_seed(cfg.seed, LANE_PRESENCE)
    present = np.zeros(w.key_range + 1, dtype=bool)
    for k in range(1, w.key_range + 1):
        present[k] = prng.u01(prng.stream_value(lane, k)) < p_in[k]
    for k in cfg.tracked_keys:
        present[k] = True
    return present


def _build_state(cfg: SimConfig, present: np.ndarray):
    """Initial structure arrays in kernel layout."""
    w, s = cfg.workload, cfg.structure
    r = w.key_range
    empty_i = np.zeros(0, dtype=np.int64)
    chain_nxt = chain_key_of = chain_node_slot = bucket_head = empty_i
    sl_heights = empty_i
    sl_nxt = np.zeros((1, 1), dtype=np.int64)
    bst_left = bst_right = empty_i
    h_max = 1
    lf = 1

    if s.kind in (LINKED_LIST, HASH_TABLE):
        if s.kind == LINKED_LIST:
            n_ids = r + 2
            chain_key_of = np.arange(n_ids, dtype=np.int64)
            chain_node_slot = np.arange(n_ids, dtype=np.int64)
            bucket_head = np.zeros(1, dtype=np.int64)
            chains = [(0, r + 1, [k for k in range(1, r + 1) if present[k]])]
        else:
            b = s.bucket_count(r)
            lf = s.load_factor
            n_ids = r + 2 * b + 1
            chain_key_of = np.zeros(n_ids, dtype=np.int64)
            chain_node_slot = np.zeros(n_ids, dtype=np.int64)
            for k in range(1, r + 1):
                chain_key_of[k] = k
                chain_node_slot[k] = k - 1
            bucket_head = np.zeros(b + 1, dtype=np.int64)
            chains = []
            for bb in range(1, b + 1):
                head = r + bb
                tail = r + b + bb
                chain_key_of[head] = 0
                chain_key_of[tail] = r + 1
                chain_node_slot[head] = r + bb - 1
                chain_node_slot[tail] = r + b + bb - 1
                bucket_head[bb] = head
                lo = (bb - 1) * lf + 1
                hi = min(bb * lf, r)
                chains.append((head, tail, [k for k in range(lo, hi + 1) if present[k]]))
        chain_nxt = np.zeros(n_ids, dtype=np.int64)
        for head, tail, keys in chains:
            cur = head
            for k in keys:
                chain_nxt[cur] = k
                cur = k
            chain_nxt[cur] = tail

    elif s.kind == SKIP_LIST:
        h_max = s.height_cap(r)
        masses = sl_height_masses(h_max, s.appearance_prob)
        cum = np.cumsum(masses)
        cum[-1] = 1.0
        lane = prng.substream_seed(cfg.seed, LANE_HEIGHTS)
        sl_heights = np.full(r + 2, -1, dtype=np.int64)
        sl_heights[0] = sl_heights[r + 1] = h_max
        for k in range(1, r + 1):
            if present[k]:
                u = prng.u01(prng.stream_value(lane, k))
                sl_heights[k] = int(np.searchsorted(cum, u, side="right"))
        sl_nxt = np.zeros((h_max + 1, r + 2), dtype=np.int64)
        for level in range(h_max + 1):
            cur = 0
            for k in range(1, r + 1):
                if sl_heights[k] >= level:
                    sl_nxt[level, cur] = k
                    cur = k
            sl_nxt[level, cur] = r + 1

    else:
        bst_left = np.zeros(r + 1, dtype=np.int64)
        bst_right = np.zeros(r + 1, dtype=np.int64)
        lane = prng.substream_seed(cfg.seed, LANE_PERMUTATION)
        keys = [k for k in range(1, r + 1) if present[k]]
        for i in range(len(keys) - 1, 0, -1):
            j = prng.stream_value(lane, i) % (i + 1)
            keys[i], keys[j] = keys[j], keys[i]
        for key in keys:
            p, cur = 0, bst_right[0]
            while cur > 0:
                p = cur
                cur = bst_left[cur] if key < cur else bst_right[cur]
            if cur == 0:
                leaf = 0
            else:
                leaf = -cur
            if leaf == 0:
                new_child = -key
            else:
                nk = max(key, leaf)
                bst_left[nk] = -min(key, leaf)
                bst_right[nk] = -nk
                new_child = nk
            if p != 0 and key < p:
                bst_left[p] = new_child
            else:
                bst_right[p] = new_child

    return (chain_nxt, chain_key_of, chain_node_slot, bucket_head, lf,
            sl_heights, sl_nxt, h_max, bst_left, bst_right)


def _tracked_slots(cfg: SimConfig, slots: dict, sl_heights) -> list[int]:
    out = []
    for k in cfg.tracked_keys:
        if cfg.structure.kind == SKIP_LIST:
            out.append(slots[("value", k, int(sl_heights[k]))])
        elif cfg.structure.kind == EXTERNAL_BST:
            out.append(slots[("external", k)])
        else:
            out.append(slots[("value", k)])
    return out


def simulate_full(cfg: SimConfig) -> SimReport:
    """Run the simulator; deterministic for a given config and seed."""
    w, s, platform = cfg.workload, cfg.structure, cfg.platform
    s.validate_layout(platform)
    r = w.key_range
    threads = w.threads
    pages = s.page_count(r, platform)

    n_slots, slots = _slot_layout(w, s)
    slot_to_line, line_to_page, n_lines, n_pages = _mappings(
        n_slots, s, platform, pages, cfg.seed, cfg.shuffle_packed_slots)

    present = _prefill_presence(cfg)
    (chain_nxt, chain_key_of, chain_node_slot, bucket_head, lf,
     sl_heights, sl_nxt, h_max, bst_left, bst_right) = _build_state(cfg, present)

    key_cdf = np.cumsum(w.key_probs()[1:])
    key_cdf[-1] = 1.0
    ins_thresh = np.full(r + 1, w.mix.insert)
    upd_thresh = np.full(r + 1, w.mix.insert + w.mix.delete)
    for k, m in w.per_key_mix.items():
        ins_thresh[k] = m.insert
        upd_thresh[k] = m.insert + m.delete
    height_cum = np.cumsum(sl_height_masses(s.height_cap(r), s.appearance_prob))
    height_cum[-1] = 1.0
    no_delete = np.zeros(r + 1, dtype=np.bool_)
    for k in cfg.tracked_keys:
        no_delete[k] = True

    tracked = _tracked_slots(cfg, slots, sl_heights)
    tracked_of_line = np.full(n_lines, -1, dtype=np.int64)
    for i, slot in enumerate(tracked):
        tracked_of_line[slot_to_line[slot]] = i
    track_times = np.zeros((max(1, len(tracked)), cfg.max_track_samples))
    track_counts = np.zeros(max(1, len(tracked)), dtype=np.int64)

    thread_seeds = np.array(
        [prng.substream_seed(cfg.seed, t) for t in range(threads)], dtype=np.uint64)

    data_caps = np.array([lv.capacity for lv in platform.data_levels], dtype=np.int64)
    data_lat = np.array([lv.hit_latency for lv in platform.data_levels])
    tlb_caps = np.array([lv.capacity for lv in platform.tlb_levels], dtype=np.int64)
    tlb_lat = np.array([lv.hit_latency for lv in platform.tlb_levels])

    (end_time, warm_time, touches, reads, served, tlb_served, coh_misses,
     stall_events, stall_cycles, hist, t_now, charged) = _kernels.run_sim(
        _STRUCT_CODE[s.kind], threads, cfg.warmup_ops_per_thread, cfg.ops_per_thread,
        thread_seeds,
        key_cdf, ins_thresh, upd_thresh, height_cum, no_delete,
        platform.t_app, platform.t_cmp,
        effective_t_cas(platform, threads), effective_t_rec(platform, threads),
        platform.memory_latency, platform.page_walk_latency,
        data_caps, data_lat, tlb_caps, tlb_lat,
        slot_to_line, line_to_page, n_lines, n_pages,
        chain_nxt, chain_key_of, chain_node_slot, bucket_head, lf,
        sl_heights.copy() if s.kind == SKIP_LIST else sl_heights,
        sl_nxt, h_max, bst_left, bst_right, r,
        tracked_of_line, track_times, track_counts,
    )

    measured_ops = threads * cfg.ops_per_thread
    cycles = end_time - warm_time
    gaps = {}
    for i, k in enumerate(cfg.tracked_keys):
        times = track_times[i, : track_counts[i]]
        gaps[k] = np.diff(times)
    return SimReport(
        config=cfg, throughput=measured_ops / cycles, measured_ops=measured_ops,
        measured_cycles=cycles, slot_of_node=slots, slot_to_line=slot_to_line,
        touches=touches, reads=reads, served_level=served, tlb_served=tlb_served,
        coh_misses=coh_misses, stall_events=stall_events, stall_cycles=stall_cycles,
        event_histogram=hist, interarrival=gaps, thread_end=t_now,
        thread_charged=charged,
    )


@dataclass
class InterarrivalStats:
    key: int
    samples: np.ndarray
    mean_gap: float
    ks_stat: float
    p_value: float
    sufficient: bool


def exponential_ks(gaps: np.ndarray, min_samples: int = 1000) -> tuple[float, float, bool]:
    """KS distance of the gaps against an exponential with the same mean."""
    from scipy import stats

    if len(gaps) == 0 or gaps.mean() <= 0:
        return float("nan"), 0.0, False
    res = stats.kstest(gaps, "expon", args=(0.0, float(gaps.mean())))
    return float(res.statistic), float(res.pvalue), len(gaps) >= min_samples


def interarrival(cfg: SimConfig, key: int) -> InterarrivalStats:
    """Gap samples between read events on one tracked key's node."""
    if key not in cfg.tracked_keys:
        raise SpecError(f"key {key} is not tracked in the config")
    report = simulate_full(cfg)
    gaps = report.interarrival[key]
    stat, pval, enough = exponential_ks(gaps)
    mean = float(gaps.mean()) if len(gaps) else float("nan")
    return InterarrivalStats(key, gaps, mean, stat, pval, enough)

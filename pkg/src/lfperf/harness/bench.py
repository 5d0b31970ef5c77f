"""Threaded throughput measurement over the real structure implementations."""

from __future__ import annotations

import bisect
import os
import threading
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from lfperf import prng
from lfperf.harness.bst import LockFreeExternalBst
from lfperf.harness.epoch import EpochReclaimer, ReclamationStats
from lfperf.harness.hashtable import LockFreeHashTable
from lfperf.harness.harris import HarrisList
from lfperf.harness.skiplist import LockFreeSkipList
from lfperf.workload import (
    EXTERNAL_BST,
    HASH_TABLE,
    LINKED_LIST,
    SKIP_LIST,
    SpecError,
    StructureSpec,
    WorkloadSpec,
    presence_probs,
)


@dataclass
class BenchConfig:
    workload: WorkloadSpec
    structure: StructureSpec
    warmup_seconds: float = 1.0
    measure_seconds: float = 3.0
    tracked_keys: tuple[int, ...] = ()
    pinning: dict[int, int] | None = None  # thread index -> cpu; None = fill-first
    pin: bool = True
    seed: int = 1
    clock_ghz: float = 1.0  # converts wall-clock gaps to cycle units

    def __post_init__(self):
        if self.warmup_seconds < 0 or self.measure_seconds <= 0:
            raise SpecError("warmup must be >= 0 and measure window > 0")
        for k in self.tracked_keys:
            if not 1 <= k <= self.workload.key_range:
                raise SpecError(f"tracked key {k} outside the key range")


@dataclass
class BenchReport:
    config: BenchConfig
    measured_ops_per_s: float
    per_thread_ops: list[int]
    duration_s: float
    total_ops: int
    interarrival: dict[int, np.ndarray] = field(default_factory=dict)
    reclamation: ReclamationStats = field(default_factory=ReclamationStats)
    pinned: bool = False


def build_structure(w: WorkloadSpec, s: StructureSpec, reclaimer=None,
                    tracked=None, probe=None):
    if s.kind == LINKED_LIST:
        return HarrisList(w.key_range, reclaimer, tracked=tracked, probe=probe)
    if s.kind == HASH_TABLE:
        return LockFreeHashTable(w.key_range, s.load_factor, reclaimer,
                                 tracked=tracked, probe=probe)
    if s.kind == SKIP_LIST:
        return LockFreeSkipList(w.key_range, s.h_max, s.appearance_prob,
                                reclaimer=reclaimer, tracked=tracked, probe=probe)
    if s.kind == EXTERNAL_BST:
        return LockFreeExternalBst(w.key_range, reclaimer, tracked=tracked,
                                   probe=probe)
    raise SpecError(f"unsupported structure kind {s.kind!r}")


def prefill(structure, w: WorkloadSpec, seed: int, tracked=()) -> int:
    """Insert each key with its stationary presence probability."""
    p_in = presence_probs(w)
    lane = prng.substream_seed(seed, 7 << 30)
    count = 0
    for k in range(1, w.key_range + 1):
        if k in tracked or prng.u01(prng.stream_value(lane, k)) < p_in[k]:
            structure.insert(k, k)
            count += 1
    return count


def _pin_current_thread(cpu: int) -> bool:
    try:
        os.sched_setaffinity(threading.get_native_id(), {cpu})
        return True
    except (OSError, AttributeError):
        return False


def fill_first_pinning(threads: int) -> dict[int, int]:
    cpus = sorted(os.sched_getaffinity(0))
    return {t: cpus[t % len(cpus)] for t in range(threads)}


def run_bench(cfg: BenchConfig) -> BenchReport:
    w = cfg.workload
    threads = w.threads
    tracked = tuple(cfg.tracked_keys)
    stamp_lists: dict[int, list[int]] = {k: [] for k in tracked}
    stamp_lock = threading.Lock()
    tls = threading.local()

    def probe(key: int) -> None:
        sink = getattr(tls, "stamps", None)
        if sink is not None:
            sink.append((key, time.perf_counter_ns()))

    reclaimer = EpochReclaimer()
    structure = build_structure(w, cfg.structure, reclaimer,
                                tracked=tracked or None,
                                probe=probe if tracked else None)
    prefill(structure, w, cfg.seed, tracked)

    cdf = np.cumsum(w.key_probs()[1:])
    cdf[-1] = 1.0
    cdf_list = cdf.tolist()
    pin_map = cfg.pinning or fill_first_pinning(threads)

    counters = [[0] for _ in range(threads)]
    stop = threading.Event()
    barrier = threading.Barrier(threads + 1)
    pin_results: list[bool] = [False] * threads
    recl_stats: list[ReclamationStats] = [ReclamationStats() for _ in range(threads)]
    tracked_set = frozenset(tracked)

    def worker(tid: int) -> None:
        if cfg.pin:
            pin_results[tid] = _pin_current_thread(pin_map[tid])
        tls.stamps = [] if tracked else None
        rng_seed = prng.substream_seed(cfg.seed, tid)
        import random

        rng = random.Random(rng_seed)
        ins_frac = w.mix.insert
        upd_frac = w.mix.insert + w.mix.delete
        count = counters[tid]
        barrier.wait()
        search = structure.search
        insert = structure.insert
        delete = structure.delete
        while not stop.is_set():
            for _ in range(64):
                key = bisect.bisect_right(cdf_list, rng.random()) + 1
                u = rng.random()
                if u < ins_frac:
                    insert(key, key)
                elif u < upd_frac and key not in tracked_set:
                    delete(key)
                else:
                    search(key)
            count[0] += 64
        recl_stats[tid].merge(reclaimer.drain_stats())
        if tracked:
            with stamp_lock:
                for key, ts in tls.stamps:
                    stamp_lists[key].append(ts)

    pool = [threading.Thread(target=worker, args=(t,), daemon=True)
            for t in range(threads)]
    for th in pool:
        th.start()
    barrier.wait()
    time.sleep(cfg.warmup_seconds)
    start_counts = [c[0] for c in counters]
    t0 = time.perf_counter()
    time.sleep(cfg.measure_seconds)
    end_counts = [c[0] for c in counters]
    duration = time.perf_counter() - t0
    stop.set()
    for th in pool:
        th.join()

    if cfg.pin and not all(pin_results):
        warnings.warn("thread pinning failed for some workers; results are unpinned",
                      RuntimeWarning, stacklevel=2)

    per_thread = [e - s for s, e in zip(start_counts, end_counts)]
    total = sum(per_thread)
    gaps = {}
    for key, stamps in stamp_lists.items():
        ts = np.sort(np.asarray(stamps, dtype=np.int64))
        gaps[key] = np.diff(ts) * cfg.clock_ghz  # ns -> cycles
    recl = ReclamationStats()
    for st in recl_stats:
        recl.merge(st)
    return BenchReport(
        config=cfg, measured_ops_per_s=total / duration, per_thread_ops=per_thread,
        duration_s=duration, total_ops=total, interarrival=gaps,
        reclamation=recl, pinned=all(pin_results) if cfg.pin else False,
    )

"""Platform calibration probes: cache/TLB load chains and CAS ping-pong.

Python cannot time single loads, so the measurement loops live in a tiny C
kernel compiled on demand with the system compiler and driven through
ctypes.  Timestamps come from the x86 cycle counter when available, with a
monotonic-clock nanosecond fallback on other architectures (values are then
nanoseconds, not cycles; the emitted config notes which).
"""

from __future__ import annotations

import ctypes
import hashlib
import os
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lfperf.workload import CacheLevel, PlatformSpec, write_platform_config

_KERNEL_SOURCE = r"""
#define _GNU_SOURCE
#include <pthread.h>
#include <sched.h>
#include <stdint.h>
#include <time.h>

static inline uint64_t ticks(void) {
#if defined(__x86_64__) || defined(__i386__)
    uint32_t lo, hi;
    __asm__ __volatile__("lfence; rdtsc" : "=a"(lo), "=d"(hi));
    return ((uint64_t)hi << 32) | lo;
#else
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000000ull + (uint64_t)ts.tv_nsec;
#endif
}

int uses_tsc(void) {
#if defined(__x86_64__) || defined(__i386__)
    return 1;
#else
    return 0;
#endif
}

double chase(void **start, long iters) {
    void *p = *start;
    uint64_t t0 = ticks();
    for (long i = 0; i < iters; i++) {
        p = *(void **)p;
    }
    uint64_t t1 = ticks();
    /* keep the chain live */
    if (p == (void *)1) return -1.0;
    return (double)(t1 - t0) / (double)iters;
}

double cas_loop(long iters) {
    static volatile long word;
    long expected = 0;
    uint64_t t0 = ticks();
    for (long i = 0; i < iters; i++) {
        __sync_bool_compare_and_swap(&word, expected, expected + 1);
        expected++;
    }
    uint64_t t1 = ticks();
    return (double)(t1 - t0) / (double)iters;
}

struct pingpong {
    volatile long turn;
    volatile long payload;
    long iters;
    int cpu_a, cpu_b;
    double result_a;
    int mode; /* 0: cas handoff, 1: read-after-remote-write */
};

static void pin_self(int cpu) {
    if (cpu < 0) return;
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(cpu, &set);
    pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
}

static void *pp_a(void *arg) {
    struct pingpong *pp = (struct pingpong *)arg;
    pin_self(pp->cpu_a);
    uint64_t total = 0;
    for (long i = 0; i < pp->iters; i++) {
        while (pp->turn != 0) {}
        uint64_t t0 = ticks();
        if (pp->mode == 0) {
            __sync_bool_compare_and_swap(&pp->payload, pp->payload, i);
        } else {
            total += (uint64_t)pp->payload * 0; /* force the read below */
            long v = pp->payload;
            (void)v;
        }
        uint64_t t1 = ticks();
        total += t1 - t0;
        pp->turn = 1;
    }
    pp->result_a = (double)total / (double)pp->iters;
    return 0;
}

static void *pp_b(void *arg) {
    struct pingpong *pp = (struct pingpong *)arg;
    pin_self(pp->cpu_b);
    for (long i = 0; i < pp->iters; i++) {
        while (pp->turn != 1) {}
        if (pp->mode == 0) {
            __sync_bool_compare_and_swap(&pp->payload, pp->payload, -i);
        } else {
            pp->payload = i;
        }
        pp->turn = 0;
    }
    return 0;
}

double pingpong_run(int cpu_a, int cpu_b, long iters, int mode) {
    struct pingpong pp = {1, 0, iters, cpu_a, cpu_b, 0.0, mode};
    pthread_t ta, tb;
    pthread_create(&ta, 0, pp_a, &pp);
    pthread_create(&tb, 0, pp_b, &pp);
    pp.turn = 1; /* b goes first */
    pthread_join(ta, 0);
    pthread_join(tb, 0);
    return pp.result_a;
}
"""


class CalibrationError(RuntimeError):
    pass


def _build_kernel() -> ctypes.CDLL:
    digest = hashlib.sha256(_KERNEL_SOURCE.encode()).hexdigest()[:16]
    cache_dir = Path(tempfile.gettempdir()) / "lfperf-kernel"
    cache_dir.mkdir(exist_ok=True)
    so_path = cache_dir / f"probes-{digest}.so"
    if not so_path.exists():
        src = cache_dir / f"probes-{digest}.c"
        src.write_text(_KERNEL_SOURCE)
        cc = os.environ.get("CC", "cc")
        cmd = [cc, "-O2", "-shared", "-fPIC", "-o", str(so_path), str(src), "-lpthread"]
        try:
            subprocess.run(cmd, check=True, capture_output=True)
        except (subprocess.CalledProcessError, FileNotFoundError) as e:
            raise CalibrationError(f"cannot build the measurement kernel: {e}") from e
    lib = ctypes.CDLL(str(so_path))
    lib.chase.restype = ctypes.c_double
    lib.chase.argtypes = [ctypes.c_void_p, ctypes.c_long]
    lib.cas_loop.restype = ctypes.c_double
    lib.cas_loop.argtypes = [ctypes.c_long]
    lib.pingpong_run.restype = ctypes.c_double
    lib.pingpong_run.argtypes = [ctypes.c_int, ctypes.c_int, ctypes.c_long, ctypes.c_int]
    lib.uses_tsc.restype = ctypes.c_int
    return lib


def _chain_latency(lib, n_slots: int, stride_slots: int, iters: int, seed: int) -> float:
    """Cycles per load over a shuffled dependent pointer cycle."""
    idx = np.arange(n_slots, dtype=np.int64) * stride_slots
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_slots)
    buf = np.zeros(n_slots * stride_slots, dtype=np.uintp)
    base = buf.ctypes.data
    for i in range(n_slots):
        src = idx[order[i]]
        dst = idx[order[(i + 1) % n_slots]]
        buf[src] = base + dst * buf.itemsize
    start = ctypes.c_void_p(int(base + int(idx[order[0]]) * buf.itemsize))
    lib.chase(start, min(iters, 4 * n_slots))  # warm
    best = min(lib.chase(start, iters) for _ in range(3))
    return best


def detect_cache_levels() -> list[tuple[int, int]]:
    """(level, capacity_bytes) for data/unified caches from sysfs."""
    out = []
    base = Path("/sys/devices/system/cpu/cpu0/cache")
    if not base.exists():
        return out
    for entry in sorted(base.glob("index*")):
        try:
            ctype = (entry / "type").read_text().strip()
            level = int((entry / "level").read_text())
            size = (entry / "size").read_text().strip()
        except OSError:
            continue
        if ctype not in ("Data", "Unified"):
            continue
        mult = 1024 if size.endswith("K") else (1024 * 1024 if size.endswith("M") else 1)
        out.append((level, int(size.rstrip("KM")) * mult))
    return sorted(out)


def detect_cores_per_socket() -> int:
    packages: dict[str, int] = {}
    base = Path("/sys/devices/system/cpu")
    for entry in base.glob("cpu[0-9]*"):
        pkg = entry / "topology/physical_package_id"
        if pkg.exists():
            packages[pkg.read_text().strip()] = packages.get(pkg.read_text().strip(), 0) + 1
    if packages:
        return max(packages.values())
    return len(os.sched_getaffinity(0))


@dataclass
class CalibrationResult:
    platform: PlatformSpec
    uses_tsc: bool
    notes: list[str]


def calibrate(quick: bool = False, tlb_l1: int = 64, tlb_l2: int = 1024,
              cacheline: int = 64, page: int = 4096,
              t_app: float = 30.0, t_cmp: float = 3.0) -> CalibrationResult:
    """Measure data-cache/TLB/CAS latencies and assemble a platform spec.

    Run on a quiet machine; repeated runs should agree within ~10% per
    entry.  TLB capacities are not discoverable from sysfs and default to
    typical values unless overridden.
    """
    lib = _build_kernel()
    notes = []
    iters = 200_000 if quick else 2_000_000
    line_slots = cacheline // 8

    caches = detect_cache_levels()
    if not caches:
        caches = [(1, 32 * 1024), (2, 1024 * 1024)]
        notes.append("sysfs cache discovery unavailable; using default sizes")
    levels = []
    for level, size_bytes in caches:
        n_lines = max(64, size_bytes // cacheline // 2)  # stay inside the level
        lat = _chain_latency(lib, n_lines, line_slots, iters, seed=level)
        levels.append(CacheLevel(size_bytes // cacheline, round(lat, 2)))
    big = max(64 * 1024 * 1024 // cacheline, 4 * caches[-1][1] // cacheline)
    mem_lat = _chain_latency(lib, big, line_slots, iters // 4, seed=99)

    # One hop per page: translation cost dominates once the page set
    # overflows the TLB; subtract the in-cache load cost.
    page_slots = page // 8
    tlb_hit = _chain_latency(lib, min(tlb_l1 // 2, 32), page_slots, iters, seed=7)
    walk = _chain_latency(lib, 16 * tlb_l2, page_slots, iters // 8, seed=8)
    tlb_l2_lat = _chain_latency(lib, 2 * tlb_l1, page_slots, iters // 2, seed=9)

    cpus = sorted(os.sched_getaffinity(0))
    cores_per_socket = detect_cores_per_socket()
    same = (cpus[0], cpus[1]) if len(cpus) > 1 else (cpus[0], cpus[0])
    cross = None
    for c in cpus[1:]:
        if (c // cores_per_socket) != (cpus[0] // cores_per_socket):
            cross = (cpus[0], c)
            break
    pp_iters = 20_000 if quick else 200_000
    cas_local = lib.cas_loop(iters)
    cas_same = lib.pingpong_run(same[0], same[1], pp_iters, 0)
    rec_same = lib.pingpong_run(same[0], same[1], pp_iters, 1)
    if cross:
        cas_cross = lib.pingpong_run(cross[0], cross[1], pp_iters, 0)
        rec_cross = lib.pingpong_run(cross[0], cross[1], pp_iters, 1)
    else:
        cas_cross, rec_cross = cas_same * 2.0, rec_same * 2.0
        notes.append("single socket visible; cross-socket costs extrapolated x2")

    l1_lat = levels[0].hit_latency
    platform = PlatformSpec(
        data_levels=tuple(levels),
        tlb_levels=(
            CacheLevel(tlb_l1, round(max(1.0, tlb_hit - l1_lat), 2)),
            CacheLevel(tlb_l2, round(max(2.0, tlb_l2_lat - l1_lat), 2)),
        ),
        memory_latency=round(mem_lat, 2),
        page_walk_latency=round(max(4.0, walk - mem_lat), 2),
        t_cas_by_sockets={1: round(max(cas_local, cas_same), 2),
                          2: round(cas_cross, 2)},
        t_rec_low=round(rec_same, 2),
        t_rec_high=round(max(rec_cross, rec_same), 2),
        threads_per_socket=(cores_per_socket, cores_per_socket),
        t_app=t_app,
        t_cmp=t_cmp,
        cacheline_size=cacheline,
        page_size=page,
    )
    return CalibrationResult(platform, bool(lib.uses_tsc()), notes)


def calibrate_to_file(path, **kwargs) -> CalibrationResult:
    result = calibrate(**kwargs)
    write_platform_config(result.platform, path)
    return result

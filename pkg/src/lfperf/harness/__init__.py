"""Concurrent search-structure implementations and measurement harness.

CPython cannot execute a hardware compare-and-swap on object fields, so the
atomic primitives here emulate CAS with a short per-reference critical
section.  The algorithms themselves keep their lock-free shape: retry
loops, logical deletion marks, and cooperative unlinking, with no lock held
across a traversal.  Throughput numbers from this harness characterize the
algorithms under the interpreter, not bare-metal latencies; the calibration
probes (native code) are the bridge to hardware-level model inputs.

Node memory layout is likewise interpreter-managed: the padded/packed
toggle drives the analytical model and the simulator's line mappings, not
the harness's allocations.
"""

from lfperf.harness.harris import HarrisList
from lfperf.harness.hashtable import LockFreeHashTable
from lfperf.harness.skiplist import LockFreeSkipList
from lfperf.harness.bst import LockFreeExternalBst
from lfperf.harness.bench import BenchConfig, BenchReport, build_structure, run_bench

__all__ = [
    "HarrisList",
    "LockFreeHashTable",
    "LockFreeSkipList",
    "LockFreeExternalBst",
    "BenchConfig",
    "BenchReport",
    "build_structure",
    "run_bench",
]

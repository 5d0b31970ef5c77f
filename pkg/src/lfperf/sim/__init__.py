"""Deterministic discrete-event oracle simulator.

Single-threaded and seed-reproducible; it replays exact structure
traversals against per-thread LRU caches, a TLB, and a single-writer
coherence state, and is the ground truth behind the analytical model's
approximations.
"""

from lfperf.sim.lru import simulate_lru
from lfperf.sim.randtree import build_random_bst
from lfperf.sim.opgen import gen_ops
from lfperf.sim.core import SimConfig, SimReport, interarrival, simulate_full

__all__ = [
    "simulate_lru",
    "build_random_bst",
    "gen_ops",
    "SimConfig",
    "SimReport",
    "simulate_full",
    "interarrival",
]

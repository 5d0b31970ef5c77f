"""Throughput prediction for lock-free concurrent search data structures.

The package has three legs that share workload/platform/structure
specifications and one CSV schema:

* an analytical model (``rates``, ``latency``, ``solver``) that predicts
  steady-state throughput from event-rate and latency decompositions,
* a deterministic discrete-event simulator (``sim``) used as the ground
  truth for the model's approximations,
* a threaded benchmark harness (``harness``) with real structure
  implementations and platform calibration probes.
"""

from lfperf.workload import (
    OpMix,
    PlatformSpec,
    StructureSpec,
    WorkloadSpec,
)
from lfperf.rates import RateTable, build_rate_table
from lfperf.latency import LatencyProfile, build_latency_profile
from lfperf.solver import ThroughputSolution, solve

__all__ = [
    "OpMix",
    "PlatformSpec",
    "StructureSpec",
    "WorkloadSpec",
    "RateTable",
    "build_rate_table",
    "LatencyProfile",
    "build_latency_profile",
    "ThroughputSolution",
    "solve",
    "predict",
]


def predict(workload, structure, platform):
    """One-shot prediction: specs in, throughput solution out."""
    rates = build_rate_table(workload, structure)
    profile = build_latency_profile(rates, structure, platform, workload.threads)
    return solve(rates, profile, workload.threads)

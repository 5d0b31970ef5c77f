"""Close the model: occupancy conservation turns per-node rates and
latencies into a single quadratic whose positive root is the throughput.

Each node's expected thread occupancy is (total arrival rate) x (expected
traversal latency).  Structure-node rates in the RateTable are per-thread,
so their total arrival is threads * a_i * T; the application node's stored
rate is already the total (one op start per operation).  Summing occupancy
over all nodes must give the thread count:

    sum_i p_i * A_i * T * (b_i * T + c_i) = P,   A_i = arrival coefficient

which is A*T^2 + Bq*T - P = 0 with A = sum p A b and Bq = sum p A c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from lfperf.latency import LatencyProfile
from lfperf.rates import RateTable
from lfperf.workload import SpecError

# Below this quadratic coefficient the linear solution avoids cancellation.
TINY_A = 1e-18

DEFAULT_CLOCK_HZ = 1e9


@dataclass
class ThroughputSolution:
    throughput: float            # operations per cycle
    quad_a: float                # sum p_i A_i b_i
    quad_b: float                # sum p_i A_i c_i
    threads: int
    occupancy: np.ndarray        # expected threads resident per node
    events_per_op: float
    factor_shares: dict[str, float] = field(default_factory=dict)

    def ops_per_second(self, clock_hz: float = DEFAULT_CLOCK_HZ) -> float:
        return self.throughput * clock_hz

    def residual(self) -> float:
        """Relative residual of the quadratic at the returned root."""
        t = self.throughput
        value = self.quad_a * t * t + self.quad_b * t - self.threads
        return abs(value) / self.threads


def solve(rates: RateTable, profile: LatencyProfile,
          threads: int) -> ThroughputSolution:
    """Unique positive throughput root plus per-node diagnostics."""
    arrival = rates.a_read + rates.a_cas
    arrival = arrival * threads
    arrival[rates.app_index] = rates.a_read[rates.app_index]  # already total

    b = profile.b
    c = profile.c
    if (c <= 0).all():
        raise SpecError("latency profile has no constant cost; cannot solve")
    p = rates.presence
    quad_a = float((p * arrival * b).sum())
    quad_b = float((p * arrival * c).sum())
    if quad_b <= 0:
        raise SpecError(f"malformed profile: constant coefficient {quad_b} <= 0")
    if quad_a < 0:
        raise SpecError(f"malformed profile: quadratic coefficient {quad_a} < 0")

    if quad_a < TINY_A:
        t = threads / quad_b
    else:
        t = (-quad_b + math.sqrt(quad_b * quad_b + 4.0 * quad_a * threads)) / (2.0 * quad_a)
    occupancy = p * arrival * t * (b * t + c)

    shares = _factor_shares(rates, profile, arrival, t)
    return ThroughputSolution(
        throughput=t, quad_a=quad_a, quad_b=quad_b, threads=threads,
        occupancy=occupancy, events_per_op=rates.events_per_op(),
        factor_shares=shares,
    )


def _factor_shares(rates: RateTable, profile: LatencyProfile, arrival, t):
    """Fraction of total thread time spent in each latency factor."""
    p = rates.presence
    weight = p * arrival * t
    stall = float((weight * profile.e_stall_coeff * t).sum())
    parts = {
        "app": float(weight[rates.app_index] * profile.t_app),
        "cas_execute": float((weight * profile.e_cas).sum()),
        "stall": stall,
        "recovery": float((weight * profile.e_rec).sum()),
        "data_cache": float((weight * profile.e_data).sum()),
        "tlb": float((weight * profile.e_tlb).sum()),
    }
    cmp_vec = profile.t_cmp_vec.copy()
    cmp_vec[rates.app_index] = 0.0
    parts["compute"] = float((weight * cmp_vec).sum())
    total = sum(parts.values())
    if total > 0:
        parts = {k: v / total for k, v in parts.items()}
    return parts


@dataclass
class SweepRow:
    structure: str
    key_range: int
    distribution: str
    update_pct: float
    threads: int
    layout: str
    solution: ThroughputSolution | None
    error: str = ""


def sweep(workload, structure, platform, thread_counts, update_fractions=None):
    """Solve a (threads x update-fraction) grid; failures annotate their row."""
    from lfperf.latency import build_latency_profile
    from lfperf.rates import build_rate_table
    from lfperf.workload import OpMix, WorkloadSpec

    rows: list[SweepRow] = []
    updates = [None] if update_fractions is None else list(update_fractions)
    for u in updates:
        if u is None:
            w_base = workload
            u_pct = workload.mix.update_fraction * 100.0
        else:
            w_base = WorkloadSpec(
                key_range=workload.key_range, distribution=workload.distribution,
                zipf_alpha=workload.zipf_alpha, mix=OpMix.balanced(u),
                threads=workload.threads, per_key_mix=workload.per_key_mix,
            )
            u_pct = u * 100.0
        table = build_rate_table(w_base, structure)
        for p_threads in thread_counts:
            row = SweepRow(structure.kind, workload.key_range, workload.distribution,
                           u_pct, p_threads, structure.layout, None)
            try:
                scaled = table.scaled_to_threads(p_threads)
                profile = build_latency_profile(scaled, structure, platform, p_threads)
                row.solution = solve(scaled, profile, p_threads)
            except (SpecError, ValueError) as e:
                row.error = str(e)
            rows.append(row)
    return rows

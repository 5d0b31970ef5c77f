"""Expected per-node traversal latency split into throughput-proportional
and constant parts.

For node i the expected traversal latency is ``b_i * T + c_i`` where T is
the (unknown) throughput.  The constant part collects CAS execution, the
invalidation-recovery penalty, data-cache and TLB hit costs derived from
LRU characteristic times, and the per-node compute cost; the linear part is
the stall induced by other threads' in-flight CAS windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lfperf.rates import RateTable
from lfperf.workload import (
    PACKED,
    PlatformSpec,
    SpecError,
    StructureSpec,
    effective_t_cas,
    effective_t_rec,
)

NEVER_FILLS = math.inf

BISECT_RTOL = 1e-9


def cas_execute(a_read: float, a_cas: float, t_cas: float) -> float:
    """Expected CAS-execution cost per traversal: only the CAS share pays."""
    total = a_read + a_cas
    if total <= 0.0:
        raise SpecError("cas_execute needs a positive total event rate")
    return t_cas * a_cas / total

def stall_coeff(a_cas: float, threads: int, t_cas: float) -> float:
    """Throughput coefficient of the expected stall behind other threads' CAS.

    The other P-1 threads hold the line for t_cas each time; an arrival in
    that window waits half of it on average.  The CAS rate itself is
    a_cas * T, so the expectation is linear in T and this returns the slope.
    """
    if threads < 1:
        raise SpecError("thread count must be >= 1")
    return a_cas * (threads - 1) * t_cas * t_cas / 2.0


def recovery(a_read: float, a_cas: float, threads: int, t_rec: float) -> float:
    """Expected invalidation-recovery cost per traversal.

    A traversal pays t_rec when the last event on the line was another
    thread's CAS; reads of other threads do not invalidate, our own do not
    count as foreign.
    """
    denom = a_cas * threads + a_read
    if denom <= 0.0:
        return 0.0
    return t_rec * (a_cas * (threads - 1)) / denom


def coherence_miss_prob(a_read: float, a_cas: float, threads: int) -> float:
    denom = a_cas * threads + a_read
    if denom <= 0.0:
        return 0.0
    return a_cas * (threads - 1) / denom


def _bisect_increasing(f, t_lo: float, t_hi: float) -> float:
    """Root of an increasing function, bisected to BISECT_RTOL relative."""
    f_lo = f(t_lo)
    while f_lo > 0.0:
        t_lo /= 2.0
        f_lo = f(t_lo)
        if t_lo < 1e-300:
            return t_lo
    f_hi = f(t_hi)
    while f_hi < 0.0:
        t_hi *= 2.0
        f_hi = f(t_hi)
        if t_hi > 1e300:
            return t_hi
    while t_hi - t_lo > BISECT_RTOL * t_hi:
        mid = 0.5 * (t_lo + t_hi)
        if f(mid) < 0.0:
            t_lo = mid
        else:
            t_hi = mid
    return 0.5 * (t_lo + t_hi)


_BIN_THRESHOLD = 200_000
_N_BINS = 2048


class _RateBins:
    """Log-rate quantization of a (presence, rate) population.

    Bins conserve total presence and carry presence-weighted mean rates plus
    power sums of presence for product-form equations; fixed-point root
    solves over millions of near-duplicate virtual nodes collapse to a few
    thousand terms with sub-1e-6 relative error.
    """

    def __init__(self, presence, rates):
        active = (rates > 0) & (presence > 0)
        p = presence[active]
        r = rates[active]
        self.total_presence = float(p.sum())
        if len(r) == 0:
            self.weight = np.zeros(0)
            self.rate = np.zeros(0)
            self.pow2 = np.zeros(0)
            self.pow3 = np.zeros(0)
            self.pow4 = np.zeros(0)
            return
        logr = np.log(r)
        lo, hi = float(logr.min()), float(logr.max())
        span = max(hi - lo, 1e-12)
        idx = np.minimum((_N_BINS * (logr - lo) / span).astype(np.int64), _N_BINS - 1)
        self.weight = np.bincount(idx, weights=p, minlength=_N_BINS)
        mass_r = np.bincount(idx, weights=p * r, minlength=_N_BINS)
        keep = self.weight > 0
        self.rate = mass_r[keep] / self.weight[keep]
        self.pow2 = np.bincount(idx, weights=p * p, minlength=_N_BINS)[keep]
        self.pow3 = np.bincount(idx, weights=p**3, minlength=_N_BINS)[keep]
        self.pow4 = np.bincount(idx, weights=p**4, minlength=_N_BINS)[keep]
        self.weight = self.weight[keep]

    def filled(self, t: float) -> float:
        return float((self.weight * -np.expm1(-self.rate * t)).sum())

    def pages_touched(self, t: float, pages: int) -> float:
        c = -np.expm1(-self.rate * t) / pages
        log_prod = -(c * self.weight + c**2 / 2.0 * self.pow2
                     + c**3 / 3.0 * self.pow3 + c**4 / 4.0 * self.pow4).sum()
        return pages * -np.expm1(log_prod)


def char_time(presence, rates, capacity: float, weights=None) -> float:
    """Characteristic time of an LRU cache under masked independent references.

    Solves sum_i w_i * p_i * (1 - exp(-r_i t)) = capacity; returns
    NEVER_FILLS when the live population cannot fill the cache (hit ratio 1).
    ``weights`` scales each node's contribution (used by the packed layout,
    where only the first reference of a shared line counts).
    """
    p = np.asarray(presence, dtype=float)
    r = np.asarray(rates, dtype=float)
    if not (np.isfinite(p).all() and np.isfinite(r).all()):
        raise SpecError("non-finite inputs to char_time")
    if (r < 0).any() or capacity <= 0:
        raise SpecError("rates must be >= 0 and capacity > 0")
    w = np.ones_like(p) if weights is None else np.asarray(weights, dtype=float)
    active = r > 0.0
    limit = float((w[active] * p[active]).sum())
    if limit <= capacity:
        return NEVER_FILLS
    pw = w[active] * p[active]
    ra = r[active]
    if len(ra) > _BIN_THRESHOLD:
        bins = _RateBins(pw, ra)
        filled = lambda t: bins.filled(t) - capacity  # noqa: E731
    else:
        def filled(t: float) -> float:
            return float((pw * -np.expm1(-ra * t)).sum()) - capacity

    t0 = 1.0 / float(ra.sum())
    return _bisect_increasing(filled, t0, t0)


def tlb_char_time(presence, rates, pages: int, capacity: float) -> float:
    """Characteristic time of a TLB over pages shared by many nodes.

    Node i lands on any given page with probability p_i / M; the expected
    number of distinct pages touched by time t is
    M * (1 - prod_i((M - p_i)/M + p_i e^{-r_i t}/M)).
    """
    if pages < 1 or capacity < 1:
        raise SpecError("pages and TLB capacity must be >= 1")
    p = np.asarray(presence, dtype=float)
    r = np.asarray(rates, dtype=float)
    if pages <= capacity:
        return NEVER_FILLS
    active = (r > 0.0) & (p > 0.0)
    p = p[active]
    r = r[active]
    base = (pages - p) / pages

    limit = pages * -np.expm1(np.log(base).sum()) if len(p) else 0.0
    if limit <= capacity:
        return NEVER_FILLS
    if len(r) > _BIN_THRESHOLD:
        bins = _RateBins(p, r)
        touched = lambda t: bins.pages_touched(t, pages) - capacity  # noqa: E731
    else:
        def touched(t: float) -> float:
            terms = base + p * np.exp(-r * t) / pages
            log_prod = np.log(terms).sum()
            return pages * -np.expm1(log_prod) - capacity

    t0 = 1.0 / float(r.sum())
    return _bisect_increasing(touched, t0, t0)


def page_rates(presence, rates, pages: int) -> np.ndarray:
    """Per-node page reference rate: own rate plus expected co-tenants."""
    p = np.asarray(presence, dtype=float)
    r = np.asarray(rates, dtype=float)
    total = float((p * r).sum())
    return r + (total - p * r) / pages


def hit_ratios(rates, t_char: float) -> np.ndarray:
    r = np.asarray(rates, dtype=float)
    if t_char is NEVER_FILLS or math.isinf(t_char):
        return np.ones_like(r)
    return -np.expm1(-r * t_char)


@dataclass
class CharTimes:
    data: list[float]  # one per data level; inf = never fills
    tlb: list[float]

    def __post_init__(self):
        for seq in (self.data, self.tlb):
            finite = [t for t in seq if math.isfinite(t)]
            if any(b <= a for a, b in zip(finite, finite[1:])):
                raise SpecError(f"characteristic times must increase with capacity: {seq}")


@dataclass
class PackingAdjustment:
    slots: int
    a_read_extra: np.ndarray
    a_cas_extra: np.ndarray


@dataclass
class LatencyProfile:
    rates: RateTable
    threads: int
    t_cas: float
    t_rec: float
    t_cmp: float
    t_app: float
    char_times: CharTimes
    e_cas: np.ndarray
    e_stall_coeff: np.ndarray  # b_i
    e_rec: np.ndarray
    coh_prob: np.ndarray
    data_hit_cum: np.ndarray   # nodes x levels, cumulative hit probability
    tlb_hit_cum: np.ndarray
    e_data: np.ndarray
    e_tlb: np.ndarray
    packing: PackingAdjustment | None = None

    @property
    def b(self) -> np.ndarray:
        return self.e_stall_coeff

    @property
    def c(self) -> np.ndarray:
        return self.e_cas + self.e_rec + self.e_data + self.e_tlb + self.t_cmp_vec

    @property
    def t_cmp_vec(self) -> np.ndarray:
        # The application node's whole cost is the inter-operation work.
        v = np.full(len(self.rates.nodes), self.t_cmp)
        v[self.rates.app_index] = self.t_app
        return v


def packing_adjustment(table: RateTable, slots: int) -> PackingAdjustment:
    """Expected extra line traffic from the node sharing a cacheline.

    With nodes spread uniformly over ``slots`` allocation slots (two per
    line), any other live node shares our line with probability 1/(slots-1).
    """
    m = table.structure_mask
    live = table.presence * m
    read_total = float((live * table.a_read).sum())
    cas_total = float((live * table.a_cas).sum())
    if slots <= float(live.sum()):
        raise SpecError(f"{slots} slots cannot host the expected live population")
    read_extra = (read_total - live * table.a_read) / (slots - 1)
    cas_extra = (cas_total - live * table.a_cas) / (slots - 1)
    read_extra[table.app_index] = 0.0
    cas_extra[table.app_index] = 0.0
    return PackingAdjustment(slots, read_extra, cas_extra)


def build_latency_profile(table: RateTable, structure: StructureSpec,
                          platform: PlatformSpec, threads: int) -> LatencyProfile:
    """Evaluate every latency factor for every node of a rate table."""
    structure.validate_layout(platform)
    t_cas = effective_t_cas(platform, threads)
    t_rec = effective_t_rec(platform, threads)
    n = len(table.nodes)
    m = table.structure_mask

    a_read = table.a_read.copy()
    a_cas = table.a_cas.copy()
    packing = None
    read_eff = a_read
    cas_eff = a_cas
    che_presence = table.presence.copy()
    che_rates = a_read.copy()
    che_weights = None
    pages = structure.page_count(table.key_range, platform)
    if structure.layout == PACKED:
        slots = 2 * pages * platform.page_size // platform.cacheline_size
        packing = packing_adjustment(table, slots)
        read_eff = a_read + packing.a_read_extra
        cas_eff = a_cas + packing.a_cas_extra
        che_rates = read_eff.copy()
        with np.errstate(invalid="ignore", divide="ignore"):
            share = np.where(read_eff > 0, a_read / np.where(read_eff > 0, read_eff, 1.0), 0.0)
        che_weights = share

    # The application node never competes for cache capacity.
    che_presence[table.app_index] = 0.0

    data_times = [
        char_time(che_presence, che_rates, lv.capacity, weights=che_weights)
        for lv in platform.data_levels
    ]
    tlb_presence = che_presence
    tlb_times = [
        tlb_char_time(tlb_presence, a_read, pages, lv.capacity)
        for lv in platform.tlb_levels
    ]
    times = CharTimes(data_times, tlb_times)

    nd = len(platform.data_levels)
    data_cum = np.ones((n, nd))
    for j, t in enumerate(data_times):
        data_cum[:, j] = hit_ratios(che_rates, t)
    data_cum[table.app_index, :] = 1.0
    np.maximum.accumulate(data_cum, axis=1, out=data_cum)

    nt = len(platform.tlb_levels)
    z = page_rates(che_presence, a_read, pages)
    tlb_cum = np.ones((n, nt))
    for j, t in enumerate(tlb_times):
        tlb_cum[:, j] = hit_ratios(z, t)
    tlb_cum[table.app_index, :] = 1.0
    np.maximum.accumulate(tlb_cum, axis=1, out=tlb_cum)

    total = a_read + a_cas
    with np.errstate(invalid="ignore", divide="ignore"):
        e_cas = np.where(total > 0, t_cas * a_cas / np.where(total > 0, total, 1.0), 0.0)
        read_share = np.where(total > 0, a_read / np.where(total > 0, total, 1.0), 1.0)
    b = cas_eff * (threads - 1) * t_cas * t_cas / 2.0
    denom = cas_eff * threads + read_eff
    with np.errstate(invalid="ignore", divide="ignore"):
        coh = np.where(denom > 0, cas_eff * (threads - 1) / np.where(denom > 0, denom, 1.0), 0.0)

    # A CAS event always follows a read of the same node within the same
    # operation, so it finds the line and its translation first-level hot
    # and cannot be the victim of a foreign invalidation; only the read
    # share of events pays the hierarchy and recovery costs.
    e_rec = read_share * coh * t_rec

    # Data side: hits at successive levels, memory beyond the last, all
    # masked out when the access is served by coherence recovery instead.
    lat = np.array([lv.hit_latency for lv in platform.data_levels])
    step = np.diff(np.concatenate((np.zeros((n, 1)), data_cum), axis=1), axis=1)
    e_data = (step * lat).sum(axis=1) + (1.0 - data_cum[:, -1]) * platform.memory_latency
    e_data = read_share * (1.0 - coh) * e_data + (1.0 - read_share) * lat[0]
    # Translation costs are charged regardless of coherence state.
    tlat = np.array([lv.hit_latency for lv in platform.tlb_levels])
    tstep = np.diff(np.concatenate((np.zeros((n, 1)), tlb_cum), axis=1), axis=1)
    e_tlb = (tstep * tlat).sum(axis=1) + (1.0 - tlb_cum[:, -1]) * platform.page_walk_latency
    e_tlb = read_share * e_tlb + (1.0 - read_share) * tlat[0]

    for arr in (e_cas, b, e_rec, e_data, e_tlb):
        arr[table.app_index] = 0.0

    return LatencyProfile(
        rates=table, threads=threads, t_cas=t_cas, t_rec=t_rec,
        t_cmp=platform.t_cmp, t_app=platform.t_app, char_times=times,
        e_cas=e_cas, e_stall_coeff=b, e_rec=e_rec, coh_prob=coh,
        data_hit_cum=data_cum, tlb_hit_cum=tlb_cum, e_data=e_data, e_tlb=e_tlb,
        packing=packing,
    )


def dump_latency_csv(profile: LatencyProfile, path) -> None:
    import csv

    nd = profile.data_hit_cum.shape[1]
    nt = profile.tlb_hit_cum.shape[1]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["node_kind", "key", "height", "b", "c", "e_cas", "e_stall_coeff", "e_rec"]
            + [f"hit_l{j + 1}" for j in range(nd)]
            + [f"tlb_hit_l{j + 1}" for j in range(nt)]
        )
        c = profile.c
        for i, node in enumerate(profile.rates.nodes):
            kind, key, height = node.label()
            writer.writerow(
                [kind, key, height, f"{profile.b[i]:.12g}", f"{c[i]:.12g}",
                 f"{profile.e_cas[i]:.12g}", f"{profile.e_stall_coeff[i]:.12g}",
                 f"{profile.e_rec[i]:.12g}"]
                + [f"{profile.data_hit_cum[i, j]:.9g}" for j in range(nd)]
                + [f"{profile.tlb_hit_cum[i, j]:.9g}" for j in range(nt)]
            )

"""Workload, platform, and structure specifications plus scalar helpers.

Everything here is immutable after construction and safe to share across
threads.  All latencies are CPU cycles; capacities are cachelines for data
caches and pages for TLBs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

UNIFORM = "uniform"
ZIPF = "zipf"

LINKED_LIST = "ll"
HASH_TABLE = "ht"
SKIP_LIST = "sl"
EXTERNAL_BST = "bst"

STRUCTURE_KINDS = (LINKED_LIST, HASH_TABLE, SKIP_LIST, EXTERNAL_BST)

PADDED = "padded"
PACKED = "packed"


class SpecError(ValueError):
    """A specification field violates an invariant."""


class ConfigError(ValueError):
    """A config file cannot be parsed; carries file/line diagnostics."""

    def __init__(self, path: str, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class OpMix:
    """Operation-type selection probabilities (insert, delete, search)."""

    insert: float
    delete: float
    search: float

    @staticmethod
    def balanced(update_fraction: float) -> "OpMix":
        if not 0.0 <= update_fraction <= 1.0:
            raise SpecError(f"update fraction {update_fraction} outside [0, 1]")
        return OpMix(update_fraction / 2.0, update_fraction / 2.0, 1.0 - update_fraction)

    @staticmethod
    def asymmetric(insert: float, delete: float, search: float) -> "OpMix":
        return OpMix(insert, delete, search)

    def __post_init__(self):
        for name, v in (("insert", self.insert), ("delete", self.delete), ("search", self.search)):
            if not 0.0 <= v <= 1.0:
                raise SpecError(f"{name} fraction {v} outside [0, 1]")
        if abs(self.insert + self.delete + self.search - 1.0) > 1e-9:
            raise SpecError("operation fractions must sum to 1")

    @property
    def update_fraction(self) -> float:
        return self.insert + self.delete


@dataclass(frozen=True)
class WorkloadSpec:
    """Memoryless stationary key/operation selection over keys 1..key_range."""

    key_range: int
    distribution: str = UNIFORM
    zipf_alpha: float = 1.1
    mix: OpMix = field(default_factory=lambda: OpMix.balanced(0.0))
    threads: int = 1
    # Per-key override of the conditional op mix: key -> OpMix used when that
    # key is drawn.  Key selection probabilities are unaffected.
    per_key_mix: dict[int, OpMix] = field(default_factory=dict)

    def __post_init__(self):
        if self.key_range < 1:
            raise SpecError(f"key range must be >= 1, got {self.key_range}")
        if self.threads < 1:
            raise SpecError(f"thread count must be >= 1, got {self.threads}")
        if self.distribution not in (UNIFORM, ZIPF):
            raise SpecError(f"unknown key distribution {self.distribution!r}")
        if self.distribution == ZIPF and not self.zipf_alpha > 0.0:
            raise SpecError(f"zipf alpha must be > 0, got {self.zipf_alpha}")
        for k in self.per_key_mix:
            if not 1 <= k <= self.key_range:
                raise SpecError(f"per-key override key {k} outside 1..{self.key_range}")

    def key_probs(self) -> np.ndarray:
        """Key selection probabilities, 1-based (index 0 unused, always 0)."""
        r = self.key_range
        out = np.zeros(r + 1)
        if self.distribution == UNIFORM:
            out[1:] = 1.0 / r
        else:
            # Direct normalization; no asymptotic approximation.
            weights = np.arange(1, r + 1, dtype=float) ** (-self.zipf_alpha)
            out[1:] = weights / weights.sum()
        return out

    def mix_for_key(self, k: int) -> OpMix:
        return self.per_key_mix.get(k, self.mix)

    def op_mass(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(insert, delete, search) selection mass per key, 1-based arrays."""
        kp = self.key_probs()
        ins = kp * self.mix.insert
        dele = kp * self.mix.delete
        src = kp * self.mix.search
        for k, m in self.per_key_mix.items():
            ins[k] = kp[k] * m.insert
            dele[k] = kp[k] * m.delete
            src[k] = kp[k] * m.search
        return ins, dele, src


def key_prob(w: WorkloadSpec, k: int) -> float:
    """Probability that an operation targets key ``k``."""
    if not 1 <= k <= w.key_range:
        raise SpecError(f"key {k} outside 1..{w.key_range}")
    return float(w.key_probs()[k])


def op_select_prob(w: WorkloadSpec, op: str, k: int) -> float:
    """Probability that the next operation is ``op`` on key ``k``."""
    if op not in ("ins", "del", "src"):
        raise SpecError(f"unknown op kind {op!r}")
    mix = w.mix_for_key(k)
    frac = {"ins": mix.insert, "del": mix.delete, "src": mix.search}[op]
    return key_prob(w, k) * frac


def p_last_insert(w: WorkloadSpec, k: int) -> float:
    """Probability that the most recent update on key ``k`` was an insert.

    Search-only keys have no update history; the structure is pre-filled for
    those, so the stationary presence is taken to be 1.
    """
    mix = w.mix_for_key(k)
    tot = mix.insert + mix.delete
    if tot <= 0.0:
        return 1.0
    return mix.insert / tot


def presence_probs(w: WorkloadSpec) -> np.ndarray:
    """Stationary presence probability per key, 1-based array."""
    out = np.empty(w.key_range + 1)
    out[0] = 0.0
    base = p_last_insert_mix(w.mix)
    out[1:] = base
    for k in w.per_key_mix:
        out[k] = p_last_insert(w, k)
    return out


def p_last_insert_mix(mix: OpMix) -> float:
    tot = mix.insert + mix.delete
    return 1.0 if tot <= 0.0 else mix.insert / tot


@dataclass(frozen=True)
class CacheLevel:
    """One cache level: capacity (lines or pages) and hit latency in cycles."""

    capacity: int
    hit_latency: float

    def __post_init__(self):
        if self.capacity < 1:
            raise SpecError(f"cache capacity must be >= 1, got {self.capacity}")
        if self.hit_latency < 0:
            raise SpecError("hit latency must be >= 0")


@dataclass(frozen=True)
class PlatformSpec:
    data_levels: tuple[CacheLevel, ...]
    tlb_levels: tuple[CacheLevel, ...]
    memory_latency: float
    page_walk_latency: float
    t_cas_by_sockets: dict[int, float]
    t_rec_low: float
    t_rec_high: float
    threads_per_socket: tuple[int, ...]
    t_app: float
    t_cmp: float
    cacheline_size: int = 64
    page_size: int = 4096

    def __post_init__(self):
        if not self.data_levels:
            raise SpecError("at least one data cache level is required")
        if not self.tlb_levels:
            raise SpecError("at least one TLB level is required")
        for levels, what in ((self.data_levels, "data cache"), (self.tlb_levels, "TLB")):
            caps = [lv.capacity for lv in levels]
            if any(b <= a for a, b in zip(caps, caps[1:])):
                raise SpecError(f"{what} capacities must be strictly increasing: {caps}")
        for name, v in (
            ("memory latency", self.memory_latency),
            ("page walk latency", self.page_walk_latency),
            ("t_rec low", self.t_rec_low),
            ("t_rec high", self.t_rec_high),
            ("t_app", self.t_app),
            ("t_cmp", self.t_cmp),
        ):
            if v < 0:
                raise SpecError(f"{name} must be >= 0")
        if self.t_rec_high < self.t_rec_low:
            raise SpecError("t_rec high must be >= t_rec low")
        if any(v < 0 for v in self.t_cas_by_sockets.values()):
            raise SpecError("t_cas must be >= 0")
        if not self.threads_per_socket or any(c < 1 for c in self.threads_per_socket):
            raise SpecError("topology needs >= 1 core per socket")
        if self.cacheline_size < 1 or self.page_size % self.cacheline_size != 0:
            raise SpecError("cacheline size must divide page size")

    @property
    def total_cores(self) -> int:
        return sum(self.threads_per_socket)

    @property
    def lines_per_page(self) -> int:
        return self.page_size // self.cacheline_size


def effective_t_rec(p: PlatformSpec, threads: int) -> float:
    """Average invalidation-recovery latency under fill-first pinning.

    With n1 threads on the first socket, the chance that a modification came
    from the other socket mixes the low/high recovery costs quadratically:
    t_low + 2*(n1/P)*(1 - n1/P)*(t_high - t_low).
    """
    if threads < 1:
        raise SpecError("thread count must be >= 1")
    if threads > p.total_cores:
        raise SpecError(f"{threads} threads exceed topology ({p.total_cores} cores)")
    n1 = min(threads, p.threads_per_socket[0])
    frac = n1 / threads
    return p.t_rec_low + 2.0 * frac * (1.0 - frac) * (p.t_rec_high - p.t_rec_low)


def effective_t_cas(p: PlatformSpec, threads: int) -> float:
    """CAS latency for the number of sockets the thread count activates."""
    if threads > p.total_cores:
        raise SpecError(f"{threads} threads exceed topology ({p.total_cores} cores)")
    sockets = 1 if threads <= p.threads_per_socket[0] else 2
    if sockets not in p.t_cas_by_sockets:
        sockets = max(p.t_cas_by_sockets)
    return p.t_cas_by_sockets[sockets]


@dataclass(frozen=True)
class StructureSpec:
    """Which structure to model and how its nodes are laid out in memory."""

    kind: str
    load_factor: int = 2          # hash table: expected keys per bucket
    h_max: int | None = None      # skip list: tallest level; default ceil(log2 R)
    appearance_prob: float = 0.5  # skip list: per-level promotion probability
    layout: str = PADDED
    pages: int | None = None      # pages backing the node pool; default minimal
    node_size: int = 24

    def __post_init__(self):
        if self.kind not in STRUCTURE_KINDS:
            raise SpecError(f"unknown structure kind {self.kind!r}")
        if self.kind == HASH_TABLE and self.load_factor < 1:
            raise SpecError("load factor must be >= 1")
        if self.h_max is not None and self.h_max < 1:
            raise SpecError("h_max must be >= 1")
        if not 0.0 < self.appearance_prob < 1.0:
            raise SpecError("appearance probability must be in (0, 1)")
        if self.layout not in (PADDED, PACKED):
            raise SpecError(f"unknown layout {self.layout!r}")
        if self.pages is not None and self.pages < 1:
            raise SpecError("page count must be >= 1")
        if self.node_size < 1:
            raise SpecError("node size must be >= 1")

    def bucket_count(self, key_range: int) -> int:
        return max(1, math.ceil(key_range / self.load_factor))

    def height_cap(self, key_range: int) -> int:
        if self.h_max is not None:
            return self.h_max
        return max(1, math.ceil(math.log2(max(2, key_range))))

    def live_node_capacity(self, key_range: int) -> int:
        """Worst-case number of simultaneously live nodes (incl. sentinels)."""
        if self.kind == LINKED_LIST:
            return key_range + 2
        if self.kind == HASH_TABLE:
            return key_range + 2 * self.bucket_count(key_range)
        if self.kind == SKIP_LIST:
            return 2 * (key_range + 2)
        return 2 * key_range + 2

    def validate_layout(self, platform: PlatformSpec) -> None:
        if self.layout == PACKED and 2 * self.node_size > platform.cacheline_size:
            raise SpecError(
                f"packed layout needs 2*node_size <= cacheline "
                f"({2 * self.node_size} > {platform.cacheline_size})"
            )

    def page_count(self, key_range: int, platform: PlatformSpec) -> int:
        """Pages backing the structure; defaults to the minimal footprint.

        Packed layouts keep one spare line so the slot pool strictly exceeds
        the worst-case live population.
        """
        lines = self.live_node_capacity(key_range)
        if self.layout == PACKED:
            lines = lines // 2 + 1
        minimal = max(1, math.ceil(lines / platform.lines_per_page))
        if self.pages is None:
            return minimal
        if self.pages < minimal:
            raise SpecError(
                f"{self.pages} pages cannot hold the worst-case footprint "
                f"({minimal} pages needed)"
            )
        return self.pages


# -- flat key=value config files -------------------------------------------

def _read_flat(path: str | Path) -> dict[str, tuple[int, str]]:
    entries: dict[str, tuple[int, str]] = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(str(path), None, f"cannot read: {e.strerror}") from e
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(str(path), lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(str(path), lineno, "empty key or value")
        if key in entries:
            raise ConfigError(str(path), lineno, f"duplicate key '{key}'")
        entries[key] = (lineno, value)
    return entries


def _take(entries, path, key, conv, default=None, required=True):
    if key not in entries:
        if required and default is None:
            raise ConfigError(str(path), None, f"missing required key '{key}'")
        return default
    lineno, raw = entries.pop(key)
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(str(path), lineno, f"bad value for '{key}': {raw!r}") from None


def _reject_unknown(entries, path):
    if entries:
        key, (lineno, _) = next(iter(entries.items()))
        raise ConfigError(str(path), lineno, f"unknown key '{key}'")


def parse_workload_config(path: str | Path) -> WorkloadSpec:
    """Parse workload.cfg (keys: range, dist, zipf_alpha, update_pct or
    ins_pct/del_pct, threads)."""
    entries = _read_flat(path)
    key_range = _take(entries, path, "range", int)
    dist = _take(entries, path, "dist", str)
    if dist not in (UNIFORM, ZIPF):
        raise ConfigError(str(path), None, f"dist must be uniform or zipf, got {dist!r}")
    alpha = _take(entries, path, "zipf_alpha", float, default=1.1, required=(dist == ZIPF))
    threads = _take(entries, path, "threads", int)
    has_update = "update_pct" in entries
    has_asym = "ins_pct" in entries or "del_pct" in entries
    if has_update and has_asym:
        raise ConfigError(str(path), None, "give either update_pct or ins_pct/del_pct, not both")
    if has_update:
        update = _take(entries, path, "update_pct", float)
        mix = OpMix.balanced(update / 100.0)
    elif has_asym:
        ins = _take(entries, path, "ins_pct", float)
        dele = _take(entries, path, "del_pct", float)
        mix = OpMix.asymmetric(ins / 100.0, dele / 100.0, 1.0 - (ins + dele) / 100.0)
    else:
        raise ConfigError(str(path), None, "missing update_pct (or ins_pct/del_pct)")
    _reject_unknown(entries, path)
    try:
        return WorkloadSpec(key_range=key_range, distribution=dist, zipf_alpha=alpha,
                            mix=mix, threads=threads)
    except SpecError as e:
        raise ConfigError(str(path), None, str(e)) from e


def parse_platform_config(path: str | Path) -> PlatformSpec:
    """Parse platform.cfg; see docs/formats.md for the full key set."""
    entries = _read_flat(path)

    def levels(prefix: str, cap_key: str) -> tuple[CacheLevel, ...]:
        out = []
        i = 1
        while f"{prefix}.L{i}.{cap_key}" in entries:
            cap = _take(entries, path, f"{prefix}.L{i}.{cap_key}", int)
            lat = _take(entries, path, f"{prefix}.L{i}.lat", float)
            out.append(CacheLevel(cap, lat))
            i += 1
        if not out:
            raise ConfigError(str(path), None, f"missing '{prefix}.L1.{cap_key}'")
        return tuple(out)

    data = levels("dcache", "lines")
    tlb = levels("tlb", "pages")
    mem = _take(entries, path, "mem_lat", float)
    walk = _take(entries, path, "pagewalk_lat", float)
    cas1 = _take(entries, path, "t_cas.1s", float)
    cas2 = _take(entries, path, "t_cas.2s", float, default=cas1, required=False)
    rec_low = _take(entries, path, "t_rec.low", float)
    rec_high = _take(entries, path, "t_rec.high", float)
    cores = _take(entries, path, "cores_per_socket", int)
    t_app = _take(entries, path, "t_app", float)
    t_cmp = _take(entries, path, "t_cmp", float)
    line = _take(entries, path, "cacheline", int, default=64, required=False)
    page = _take(entries, path, "page", int, default=4096, required=False)
    _reject_unknown(entries, path)
    try:
        return PlatformSpec(
            data_levels=data, tlb_levels=tlb, memory_latency=mem, page_walk_latency=walk,
            t_cas_by_sockets={1: cas1, 2: cas2}, t_rec_low=rec_low, t_rec_high=rec_high,
            threads_per_socket=(cores, cores), t_app=t_app, t_cmp=t_cmp,
            cacheline_size=line, page_size=page,
        )
    except SpecError as e:
        raise ConfigError(str(path), None, str(e)) from e


def write_platform_config(p: PlatformSpec, path: str | Path) -> None:
    lines = []
    for i, lv in enumerate(p.data_levels, start=1):
        lines.append(f"dcache.L{i}.lines = {lv.capacity}")
        lines.append(f"dcache.L{i}.lat = {lv.hit_latency:g}")
    for i, lv in enumerate(p.tlb_levels, start=1):
        lines.append(f"tlb.L{i}.pages = {lv.capacity}")
        lines.append(f"tlb.L{i}.lat = {lv.hit_latency:g}")
    lines.append(f"mem_lat = {p.memory_latency:g}")
    lines.append(f"pagewalk_lat = {p.page_walk_latency:g}")
    lines.append(f"t_cas.1s = {p.t_cas_by_sockets.get(1, 0):g}")
    lines.append(f"t_cas.2s = {p.t_cas_by_sockets.get(2, p.t_cas_by_sockets.get(1, 0)):g}")
    lines.append(f"t_rec.low = {p.t_rec_low:g}")
    lines.append(f"t_rec.high = {p.t_rec_high:g}")
    lines.append(f"cores_per_socket = {p.threads_per_socket[0]}")
    lines.append(f"t_app = {p.t_app:g}")
    lines.append(f"t_cmp = {p.t_cmp:g}")
    lines.append(f"cacheline = {p.cacheline_size}")
    lines.append(f"page = {p.page_size}")
    Path(path).write_text("\n".join(lines) + "\n")

"""Epoch-based reclamation with per-thread retire lists.

Threads announce the global epoch while inside an operation; a retired node
is reclaimable once the global epoch has advanced twice past its retirement
epoch, which guarantees no announced reader can still hold a reference.
The epoch advances opportunistically whenever a retire list fills.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass

from lfperf.harness.atomics import AtomicInt

RETIRE_BATCH = 128


@dataclass
class ReclamationStats:
    retired: int = 0
    reclaimed: int = 0
    epochs_advanced: int = 0
    stuck_scans: int = 0

    def merge(self, other: "ReclamationStats") -> None:
        self.retired += other.retired
        self.reclaimed += other.reclaimed
        self.epochs_advanced += other.epochs_advanced
        self.stuck_scans += other.stuck_scans


class _Slot:
    __slots__ = ("active_epoch",)

    def __init__(self):
        self.active_epoch = -1  # -1 = quiescent


class EpochReclaimer:
    def __init__(self, retire_batch: int = RETIRE_BATCH):
        self.global_epoch = AtomicInt(0)
        self.retire_batch = retire_batch
        self._registry: dict[int, _Slot] = {}
        self._registry_lock = threading.Lock()
        self._tls = threading.local()

    def _slot(self) -> _Slot:
        slot = getattr(self._tls, "slot", None)
        if slot is None:
            slot = _Slot()
            self._tls.slot = slot
            self._tls.retired = []  # (epoch, node)
            self._tls.stats = ReclamationStats()
            with self._registry_lock:
                self._registry[threading.get_ident()] = slot
        return slot

    @contextmanager
    def guard(self):
        slot = self._slot()
        slot.active_epoch = self.global_epoch.get()
        try:
            yield
        finally:
            slot.active_epoch = -1

    def retire(self, node) -> None:
        slot = self._slot()
        retired = self._tls.retired
        retired.append((self.global_epoch.get(), node))
        self._tls.stats.retired += 1
        if len(retired) >= self.retire_batch:
            self._try_advance()
            self._scan()

    def _try_advance(self) -> None:
        current = self.global_epoch.get()
        with self._registry_lock:
            slots = list(self._registry.values())
        if all(s.active_epoch in (-1, current) for s in slots):
            if self.global_epoch.compare_and_set(current, current + 1):
                self._tls.stats.epochs_advanced += 1

    def _scan(self) -> None:
        safe_before = self.global_epoch.get() - 1
        retired = self._tls.retired
        keep = [entry for entry in retired if entry[0] >= safe_before]
        freed = len(retired) - len(keep)
        if freed:
            self._tls.stats.reclaimed += freed  # dropped refs; gc does the rest
            self._tls.retired = keep
        else:
            self._tls.stats.stuck_scans += 1

    def drain_stats(self) -> ReclamationStats:
        """Aggregate of the calling thread's counters (call after joins for
        per-thread totals collected by the bench loop)."""
        stats = getattr(self._tls, "stats", None)
        return stats if stats is not None else ReclamationStats()

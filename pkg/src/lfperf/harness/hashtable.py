"""Chained hash table: one lock-free list per bucket, sequential key mapping."""

from __future__ import annotations

import math

from lfperf.harness.epoch import EpochReclaimer
from lfperf.harness.harris import HarrisList


class LockFreeHashTable:
    def __init__(self, key_range: int, load_factor: int = 2,
                 reclaimer: EpochReclaimer | None = None, tracked=None, probe=None):
        if load_factor < 1:
            raise ValueError("load factor must be >= 1")
        self.key_range = key_range
        self.load_factor = load_factor
        self.buckets_count = max(1, math.ceil(key_range / load_factor))
        self.reclaimer = reclaimer or EpochReclaimer()
        self.buckets = [
            HarrisList(key_range, self.reclaimer, tracked=tracked, probe=probe,
                       low_key=b * load_factor)
            for b in range(self.buckets_count)
        ]

    def _bucket(self, key: int) -> HarrisList:
        return self.buckets[(key - 1) // self.load_factor]

    def insert(self, key: int, value=None) -> bool:
        return self._bucket(key).insert(key, value)

    def delete(self, key: int) -> bool:
        return self._bucket(key).delete(key)

    def search(self, key: int):
        return self._bucket(key).search(key)

    def keys(self) -> list[int]:
        out = []
        for bucket in self.buckets:
            out.extend(bucket.keys())
        return out

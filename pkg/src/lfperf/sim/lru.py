"""Exact LRU cache replay over a line-id trace."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


@numba.njit(cache=True)
def _lru_kernel(trace, capacity, n_lines):
    # Circular doubly-linked recency list with the sentinel at index n_lines.
    sent = n_lines
    nxt = np.empty(n_lines + 1, dtype=np.int64)
    prv = np.empty(n_lines + 1, dtype=np.int64)
    nxt[sent] = sent
    prv[sent] = sent
    resident = np.zeros(n_lines, dtype=np.bool_)
    hits = np.zeros(n_lines, dtype=np.int64)
    accesses = np.zeros(n_lines, dtype=np.int64)
    count = 0
    for idx in range(trace.shape[0]):
        line = trace[idx]
        accesses[line] += 1
        if resident[line]:
            hits[line] += 1
            nxt[prv[line]] = nxt[line]
            prv[nxt[line]] = prv[line]
        else:
            if count == capacity:
                victim = prv[sent]
                nxt[prv[victim]] = sent
                prv[sent] = prv[victim]
                resident[victim] = False
            else:
                count += 1
            resident[line] = True
        first = nxt[sent]
        nxt[line] = first
        prv[line] = sent
        prv[first] = line
        nxt[sent] = line
    return hits, accesses


@dataclass
class LruResult:
    hits: np.ndarray
    accesses: np.ndarray

    def hit_ratio(self) -> np.ndarray:
        out = np.zeros_like(self.hits, dtype=float)
        touched = self.accesses > 0
        out[touched] = self.hits[touched] / self.accesses[touched]
        return out

    @property
    def aggregate_hit_ratio(self) -> float:
        total = self.accesses.sum()
        return float(self.hits.sum() / total) if total else 0.0


def simulate_lru(trace, capacity: int, n_lines: int | None = None) -> LruResult:
    """Replay a reference trace through a fully associative LRU cache.

    A line's first touch is always a miss.  Returns per-line hit and access
    counts; capacity is in lines.
    """
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    trace = np.ascontiguousarray(trace, dtype=np.int64)
    if trace.size == 0:
        raise ValueError("empty trace")
    if n_lines is None:
        n_lines = int(trace.max()) + 1
    hits, accesses = _lru_kernel(trace, capacity, n_lines)
    return LruResult(hits, accesses)

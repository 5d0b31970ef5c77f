"""Vectorized operation-stream generation from the counter-based PRNG.

Each operation consumes a fixed window of four counter values (key draw,
op-kind draw, height draw, spare), so any op of any stream can be
regenerated independently; the simulator kernels use the identical layout.
"""

from __future__ import annotations

import numpy as np

from lfperf.prng import GOLDEN_GAMMA
from lfperf.workload import WorkloadSpec

WORDS_PER_OP = 4
W_KEY, W_KIND, W_HEIGHT, W_SPARE = range(WORDS_PER_OP)

OP_SEARCH, OP_INSERT, OP_DELETE = 0, 1, 2

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GAMMA = np.uint64(GOLDEN_GAMMA)


def mix64_array(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= _M1
    x ^= x >> np.uint64(27)
    x *= _M2
    x ^= x >> np.uint64(31)
    return x


def stream_words(seed: int, op_indices: np.ndarray, word: int) -> np.ndarray:
    counters = op_indices.astype(np.uint64) * np.uint64(WORDS_PER_OP) + np.uint64(word + 1)
    return mix64_array(np.uint64(seed) + counters * _GAMMA)


def unit_floats(words: np.ndarray) -> np.ndarray:
    return (words >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def gen_ops(w: WorkloadSpec, seed: int, n: int):
    """Generate n operations of one stream: (kinds, keys) arrays.

    Kinds are OP_SEARCH/OP_INSERT/OP_DELETE; keys are 1-based.  The stream
    is stationary and memoryless: op i depends only on (seed, i).
    """
    if n < 1:
        raise ValueError("need at least one operation")
    idx = np.arange(n, dtype=np.uint64)
    key_u = unit_floats(stream_words(seed, idx, W_KEY))
    cdf = np.cumsum(w.key_probs()[1:])
    cdf[-1] = 1.0
    keys = np.searchsorted(cdf, key_u, side="right") + 1

    kind_u = unit_floats(stream_words(seed, idx, W_KIND))
    ins_thresh = np.empty(w.key_range + 1)
    upd_thresh = np.empty(w.key_range + 1)
    ins_thresh[1:] = w.mix.insert
    upd_thresh[1:] = w.mix.insert + w.mix.delete
    for k, m in w.per_key_mix.items():
        ins_thresh[k] = m.insert
        upd_thresh[k] = m.insert + m.delete
    kinds = np.full(n, OP_SEARCH, dtype=np.int8)
    kinds[kind_u < upd_thresh[keys]] = OP_DELETE
    kinds[kind_u < ins_thresh[keys]] = OP_INSERT
    return kinds, keys.astype(np.int64)


def height_draws(w_struct_masses: np.ndarray, seed: int, op_indices: np.ndarray) -> np.ndarray:
    """Skip-list height per op from the cumulative height-mass table."""
    u = unit_floats(stream_words(seed, op_indices, W_HEIGHT))
    cum = np.cumsum(w_struct_masses)
    cum[-1] = 1.0
    return np.searchsorted(cum, u, side="right")

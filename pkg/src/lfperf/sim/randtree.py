"""Binary search trees grown from random insertion orders.

Used as the ground truth for traversal frequencies and subtree-size mass
functions of the tree model: the first key of the permutation becomes the
root, later keys descend into place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


@dataclass
class RandomBst:
    keys: np.ndarray       # sorted key values
    root: int
    left: np.ndarray       # child index or -1, aligned with keys
    right: np.ndarray
    depth: np.ndarray
    subtree_size: np.ndarray

    def validate(self) -> None:
        def check(i, lo, hi):
            if i < 0:
                return 0
            k = self.keys[i]
            assert lo < k < hi, "search order violated"
            size = 1 + check(self.left[i], lo, k) + check(self.right[i], k, hi)
            assert size == self.subtree_size[i], "inconsistent subtree size"
            return size

        total = check(self.root, -np.inf, np.inf)
        assert total == len(self.keys)


def build_random_bst(permutation) -> RandomBst:
    """Insert keys in the given order; duplicates are rejected."""
    perm = np.asarray(permutation)
    keys = np.unique(perm)
    if len(keys) != len(perm):
        raise ValueError("permutation contains duplicate keys")
    index = {k: i for i, k in enumerate(keys)}
    n = len(keys)
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    size = np.zeros(n, dtype=np.int64)
    root = index[perm[0]]
    size[root] = 1
    for key in perm[1:]:
        i = index[key]
        cur = root
        d = 0
        while True:
            size[cur] += 1
            d += 1
            if key < keys[cur]:
                if left[cur] < 0:
                    left[cur] = i
                    break
                cur = left[cur]
            else:
                if right[cur] < 0:
                    right[cur] = i
                    break
                cur = right[cur]
        depth[i] = d
        size[i] = 1
    return RandomBst(keys, root, left, right, depth, size)


@numba.njit(cache=True)
def subtree_size_samples(n_keys, n_perms, seed):
    """Subtree sizes for every key over many random permutations.

    Returns an (n_perms, n_keys) array; row p gives the subtree size of the
    node holding each key (by ascending key position) in the tree built
    from the p-th permutation.  The size of a node's subtree spans exactly
    the keys between its nearest higher-priority neighbours.
    """
    out = np.empty((n_perms, n_keys), dtype=np.int64)
    prio = np.empty(n_keys, dtype=np.int64)
    stack = np.empty(n_keys + 1, dtype=np.int64)
    left = np.empty(n_keys, dtype=np.int64)
    state = np.uint64(seed)
    gamma = np.uint64(0x9E3779B97F4A7C15)
    for p in range(n_perms):
        # Fisher-Yates over priorities.
        for i in range(n_keys):
            prio[i] = i
        for i in range(n_keys - 1, 0, -1):
            state += gamma
            z = state
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
            j = int(z % np.uint64(i + 1))
            prio[i], prio[j] = prio[j], prio[i]
        # Nearest higher-priority neighbour on each side bounds the subtree.
        top = 0
        for i in range(n_keys):
            while top > 0 and prio[stack[top - 1]] < prio[i]:
                top -= 1
            left[i] = stack[top - 1] if top > 0 else -1
            stack[top] = i
            top += 1
        top = 0
        for i in range(n_keys - 1, -1, -1):
            while top > 0 and prio[stack[top - 1]] < prio[i]:
                top -= 1
            r = stack[top - 1] if top > 0 else n_keys
            out[p, i] = r - left[i] - 1
            stack[top] = i
            top += 1
    return out


@numba.njit(cache=True)
def traversal_hits(n_keys, n_perms, seed, pairs):
    """For each (node, target) pair: how often the node lies on the search
    path over random permutations.  A node is on the path iff it has the
    highest priority among the keys between it and the target, inclusive."""
    hits = np.zeros(pairs.shape[0], dtype=np.int64)
    prio = np.empty(n_keys, dtype=np.int64)
    state = np.uint64(seed)
    gamma = np.uint64(0x9E3779B97F4A7C15)
    for p in range(n_perms):
        for i in range(n_keys):
            prio[i] = i
        for i in range(n_keys - 1, 0, -1):
            state += gamma
            z = state
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
            j = int(z % np.uint64(i + 1))
            prio[i], prio[j] = prio[j], prio[i]
        for q in range(pairs.shape[0]):
            node = pairs[q, 0]
            target = pairs[q, 1]
            if node <= target:
                lo, hi = node, target       # highest priority in [node, target]
            else:
                lo, hi = target + 1, node   # highest priority in (target, node]
            best = lo
            for i in range(lo + 1, hi + 1):
                if prio[i] > prio[best]:
                    best = i
            if best == node:
                hits[q] += 1
    return hits

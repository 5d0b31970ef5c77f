"""Independent brute-force oracles used by the test suite.

These deliberately avoid the formulas under test: chain probabilities come
from enumerating every presence subset and walking the structure, skip-list
probabilities from enumerating per-key (absent | height) configurations and
replaying a reference search.
"""

from __future__ import annotations

import itertools

import numpy as np


def subset_weights(p):
    """Yield (present_set, probability) over all subsets of positions 1..L.

    p is indexed 0..L+1 with sentinel positions 0 and L+1 pinned present.
    """
    inner = list(range(1, len(p) - 1))
    for bits in itertools.product((0, 1), repeat=len(inner)):
        weight = 1.0
        present = set()
        for pos, bit in zip(inner, bits):
            if bit:
                weight *= p[pos]
                present.add(pos)
            else:
                weight *= 1.0 - p[pos]
        yield present, weight


def chain_walk(present: set[int], last: int, k_target: int, op: str):
    """(reads, cas) node positions for one op against one presence subset."""
    reads = {0}
    for i in sorted(present):
        if i < k_target:
            reads.add(i)
    at_or_after = sorted(i for i in present if i >= k_target)
    first = at_or_after[0] if at_or_after else last
    reads.add(first)
    cas = set()
    if op == "ins" and k_target not in present:
        below = [0] + sorted(i for i in present if i < k_target)
        cas.add(below[-1])
    elif op == "del" and k_target in present:
        below = [0] + sorted(i for i in present if i < k_target)
        cas.add(k_target)
        cas.add(below[-1])
    return reads, cas


def chain_event_prob(p, k_target: int, k_node: int, op: str, event: str) -> float:
    """P(event at k_node | k_node present) by exhaustive enumeration."""
    last = len(p) - 1
    num = 0.0
    den = 0.0
    for present, weight in subset_weights(p):
        in_struct = k_node in present or k_node in (0, last)
        if not in_struct:
            continue
        den += weight
        reads, cas = chain_walk(present, last, k_target, op)
        hits = reads if event == "read" else cas
        if k_node in hits:
            num += weight
    return num / den if den > 0 else 0.0


def chain_event_probs_all(p):
    """All conditional event probabilities of a chain in one enumeration.

    Returns (read, cas_ins, cas_del) arrays indexed [target, node] with the
    probability that an op on `target` triggers the event on `node`, given
    the node is present.  p is indexed 0..L+1 with pinned sentinels.
    """
    last = len(p) - 1
    read = np.zeros((last, last + 1))
    cas_ins = np.zeros((last, last + 1))
    cas_del = np.zeros((last, last + 1))
    node_w = np.zeros(last + 1)
    for present, weight in subset_weights(p):
        members = present | {0, last}
        for i in members:
            node_w[i] += weight
        ordered = sorted(present)
        for k_target in range(1, last):
            below = [i for i in ordered if i < k_target]
            at_or_after = [i for i in ordered if i >= k_target]
            first = at_or_after[0] if at_or_after else last
            for i in below:
                read[k_target, i] += weight
            read[k_target, 0] += weight
            read[k_target, first] += weight
            pred = below[-1] if below else 0
            if k_target not in present:
                cas_ins[k_target, pred] += weight
            else:
                cas_del[k_target, k_target] += weight
                cas_del[k_target, pred] += weight
    for i in range(last + 1):
        if node_w[i] > 0:
            read[:, i] /= node_w[i]
            cas_ins[:, i] /= node_w[i]
            cas_del[:, i] /= node_w[i]
    return read, cas_ins, cas_del


def chain_rate_oracle(p, key_mass, ins_mass, del_mass, threads: int):
    """(a_read, a_cas) per chain position via enumeration over the op mix."""
    last = len(p) - 1
    a_read = np.zeros(last + 1)
    a_cas = np.zeros(last + 1)
    for present, weight in subset_weights(p):
        members = present | {0, last}
        for k_target in range(1, last):
            for op, mass in (("src", key_mass[k_target] - ins_mass[k_target] - del_mass[k_target]),
                             ("ins", ins_mass[k_target]),
                             ("del", del_mass[k_target])):
                if mass <= 0.0:
                    continue
                reads, cas = chain_walk(present, last, k_target, op)
                for i in reads & members:
                    a_read[i] += weight * mass
                for i in cas & members:
                    a_cas[i] += weight * mass
    for i in range(last + 1):
        p_i = 1.0 if i in (0, last) else p[i]
        if p_i > 0:
            a_read[i] /= p_i
            a_cas[i] /= p_i
    return a_read / threads, a_cas / threads


# -- skip list reference -----------------------------------------------------

def skiplist_search_visits(heights: dict[int, int], h_max: int, k_target: int,
                           key_range: int, stop_on_target: bool = True) -> set[int]:
    """Keys whose valued node a top-down search reads, for one configuration.

    heights maps present keys to their level; sentinels 0 and key_range+1
    stand at h_max.  At each level the search hops right through keys below
    the target and reads the first key at or past it before dropping down.
    With stop_on_target the descent ends as soon as the target key itself is
    encountered (a plain search); updates descend all the way to collect
    per-level predecessors.
    """
    levels = dict(heights)
    levels[0] = h_max
    levels[key_range + 1] = h_max
    keys_sorted = sorted(levels)
    visited = {0}
    x = 0
    for level in range(h_max, -1, -1):
        while True:
            nxt = next(y for y in keys_sorted if y > x and levels[y] >= level)
            visited.add(nxt)
            if nxt == k_target and stop_on_target:
                return visited
            if nxt < k_target:
                x = nxt
            else:
                break
    return visited


def skiplist_config_weights(p_in, height_mass, key_range: int):
    """Yield (heights dict, weight) over every per-key (absent|height) combo."""
    options = [None] + list(range(len(height_mass)))
    for combo in itertools.product(options, repeat=key_range):
        weight = 1.0
        heights = {}
        for k, choice in enumerate(combo, start=1):
            if choice is None:
                weight *= 1.0 - p_in[k]
            else:
                weight *= p_in[k] * height_mass[choice]
                heights[k] = choice
        if weight > 0.0:
            yield heights, weight


def skiplist_update_cas(heights: dict[int, int], h_max: int, k_target: int,
                        op: str, g_draw: int, key_range: int) -> set:
    """(kind, key) pairs CAS'd by one update against one configuration.

    Mirrors the linking discipline: level-0 links live in valued nodes,
    upper links in routing nodes; the predecessor at level L is the last
    key below the target standing at least that tall.
    """
    levels = dict(heights)
    levels[0] = h_max
    levels[key_range + 1] = h_max
    present = k_target in heights
    cas = set()

    def pred(level):
        return max(y for y in levels if y < k_target and levels[y] >= level)

    if op == "ins" and not present:
        for lev in range(0, g_draw + 1):
            cas.add(("value" if lev == 0 else "routing", pred(lev)))
    elif op == "del" and present:
        h = heights[k_target]
        cas.add(("value", k_target))
        if h >= 1:
            cas.add(("routing", k_target))
        for lev in range(0, h + 1):
            cas.add(("value" if lev == 0 else "routing", pred(lev)))
    return cas


def zipf_mass(r: int, alpha: float) -> np.ndarray:
    h = sum(j ** (-alpha) for j in range(1, r + 1))
    out = np.zeros(r + 1)
    for k in range(1, r + 1):
        out[k] = k ** (-alpha) / h
    return out

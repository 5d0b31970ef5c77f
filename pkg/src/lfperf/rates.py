"""Per-node presence probabilities and normalized Read/CAS event rates.

For every potential node of a structure this module computes

* ``presence``: the stationary probability that the node is linked in, and
* ``a_read`` / ``a_cas``: per-thread event rates divided by throughput,
  i.e. the probability that one operation of the stationary mix triggers
  the event on that node (given the node is present), divided by the
  thread count.

Rates are aggregated over the whole operation mix with linear-time
recurrences; the per-pair probability functions are kept in their direct
product form so they can be checked against brute-force enumeration.

The synthetic application node rides along at index 0 with ``a_read = 1``:
its events are operation starts, whose total rate equals the throughput
itself rather than a per-thread share.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lfperf.workload import (
    EXTERNAL_BST,
    HASH_TABLE,
    LINKED_LIST,
    SKIP_LIST,
    ZIPF,
    SpecError,
    StructureSpec,
    WorkloadSpec,
    presence_probs,
)

APP = "app"
VALUE = "value"      # LL node, HT slot, SL valued node, with key
ROUTING = "routing"  # SL routing node
INTERNAL = "internal"
EXTERNAL = "external"
HEAD = "head"        # chain head sentinel (key = bucket for HT, 0 for LL)
TAIL = "tail"


@dataclass(frozen=True)
class NodeId:
    kind: str
    key: int = 0
    height: int = -1  # SL level, BST virtual index; -1 where inapplicable
    bucket: int = -1  # HT bucket; -1 elsewhere

    def label(self) -> tuple[str, str, str]:
        h = "" if self.height < 0 else str(self.height)
        return (self.kind, str(self.key), h)


class NodeArray:
    """Compact node-identity storage; materializes NodeId objects on demand.

    Virtual decompositions can produce millions of rows, so identities live
    in parallel integer arrays rather than a list of dataclass instances.
    """

    def __init__(self, kinds, keys, heights, buckets=None):
        self.kinds = list(kinds) if not isinstance(kinds, list) else kinds
        self.keys = np.asarray(keys, dtype=np.int64)
        self.heights = np.asarray(heights, dtype=np.int64)
        self.buckets = (np.full(len(self.keys), -1, dtype=np.int64)
                        if buckets is None else np.asarray(buckets, dtype=np.int64))

    @classmethod
    def from_rows(cls, rows):
        kinds, keys, heights, buckets = [], [], [], []
        for row in rows:
            kind, key, height, bucket = (row + (-1, -1))[:4] if len(row) < 4 else row
            kinds.append(kind)
            keys.append(key)
            heights.append(height)
            buckets.append(bucket)
        return cls(kinds, keys, heights, buckets)

    def __len__(self):
        return len(self.kinds)

    def __getitem__(self, i) -> NodeId:
        return NodeId(self.kinds[i], int(self.keys[i]), int(self.heights[i]),
                      int(self.buckets[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


@dataclass
class RateTable:
    nodes: "list[NodeId] | NodeArray"
    presence: np.ndarray
    a_read: np.ndarray
    a_cas: np.ndarray
    threads: int
    key_range: int = 0
    app_index: int = 0

    def __post_init__(self):
        n = len(self.nodes)
        assert self.presence.shape == (n,) and self.a_read.shape == (n,)
        if (self.a_read < -1e-15).any() or (self.a_cas < -1e-15).any():
            raise SpecError("negative event rate")
        np.clip(self.a_read, 0.0, None, out=self.a_read)
        np.clip(self.a_cas, 0.0, None, out=self.a_cas)

    @property
    def structure_mask(self) -> np.ndarray:
        mask = np.ones(len(self.nodes), dtype=bool)
        mask[self.app_index] = False
        return mask

    def events_per_op(self) -> float:
        """Expected structure-node events per operation."""
        m = self.structure_mask
        tot = self.presence[m] * (self.a_read[m] + self.a_cas[m])
        return float(tot.sum()) * self.threads

    def scaled_to_threads(self, threads: int) -> "RateTable":
        """Same workload mix re-expressed for a different thread count."""
        factor = self.threads / threads
        a_read = self.a_read * factor
        a_cas = self.a_cas * factor
        a_read[self.app_index] = self.a_read[self.app_index]
        a_cas[self.app_index] = self.a_cas[self.app_index]
        return RateTable(self.nodes, self.presence.copy(), a_read, a_cas, threads,
                         self.key_range, self.app_index)


# -- linked list / hash-table chain probabilities ---------------------------

def ll_read_prob(k_target: int, k_node: int, presence) -> float:
    """P(an operation on k_target reads the chain node at k_node | present).

    Nodes at or before the target are always read; a node past the target is
    read only when every slot from the target up to it is empty.
    """
    if k_node <= k_target:
        return 1.0
    out = 1.0
    for i in range(k_target, k_node):
        out *= 1.0 - presence[i]
    return out


def ll_cas_prob(k_target: int, k_node: int, op: str, presence) -> float:
    """P(op on k_target CASes the chain node at k_node | present)."""
    if op == "ins":
        if k_node >= k_target:
            return 0.0
        out = 1.0
        for i in range(k_node + 1, k_target + 1):
            out *= 1.0 - presence[i]
        return out
    if op == "del":
        if k_node == k_target:
            return 1.0
        if k_node > k_target:
            return 0.0
        out = presence[k_target]
        for i in range(k_node + 1, k_target):
            out *= 1.0 - presence[i]
        return out
    raise SpecError(f"op {op!r} has no CAS events")


def ht_read_prob(b_target, k_target, b_node, k_node, presence_chain) -> float:
    """Hash-table read probability; chains in different buckets never meet."""
    if b_target != b_node:
        return 0.0
    return ll_read_prob(k_target, k_node, presence_chain)


def ht_cas_prob(b_target, k_target, b_node, k_node, op, presence_chain) -> float:
    if b_target != b_node:
        return 0.0
    return ll_cas_prob(k_target, k_node, op, presence_chain)


def _chain_rates(p: np.ndarray, w: np.ndarray, im: np.ndarray, dm: np.ndarray):
    """Aggregate read/CAS rates along one chain.

    Arrays are indexed by chain position 0..L+1 where 0 and L+1 are the head
    and tail sentinels (p[0] = p[L+1] = 1) and positions 1..L carry the key
    masses w (any op), im (inserts), dm (deletes).  Returns per-position
    (read, cas) sums over the operation mix, not yet divided by the thread
    count.
    """
    n = len(p)            # L + 2
    last = n - 1
    q = 1.0 - p
    read = np.zeros(n)
    cas = np.zeros(n)

    # Reads from targets at or past the node: suffix mass of w.
    suffix = np.zeros(n + 1)
    for k in range(last - 1, 0, -1):
        suffix[k] = suffix[k + 1] + w[k]
    # Reads from targets before the node: U(k) = q[k-1] * (w[k-1] + U(k-1)).
    u = 0.0
    for k in range(1, n):
        prev_w = w[k - 1] if 1 <= k - 1 <= last - 1 else 0.0
        u = q[k - 1] * (prev_w + u)
        read[k] = u
    read[0] = 0.0
    read += suffix[: n]
    read[0] = suffix[1]  # head sentinel is read by every op on the chain

    # Successful inserts CAS the predecessor: V(k) = q[k+1] * (im[k+1] + V(k+1)).
    v = 0.0
    # Successful deletes CAS the predecessor: G(k) = dm[k+1]*p[k+1] + q[k+1]*G(k+1),
    # and mark the victim itself.
    g = 0.0
    for k in range(last - 1, -1, -1):
        nxt_im = im[k + 1] if 1 <= k + 1 <= last - 1 else 0.0
        nxt_dm = dm[k + 1] if 1 <= k + 1 <= last - 1 else 0.0
        v = q[k + 1] * (nxt_im + v)
        g = nxt_dm * p[k + 1] + q[k + 1] * g
        cas[k] = v + g
    cas[1:last] += dm[1:last]
    return read, cas


def _ll_table(w: WorkloadSpec) -> RateTable:
    r = w.key_range
    pres = presence_probs(w)
    kp = w.key_probs()
    ins, dele, _ = w.op_mass()

    p = np.ones(r + 2)
    p[1 : r + 1] = pres[1:]
    wk = np.zeros(r + 2)
    wk[1 : r + 1] = kp[1:]
    im = np.zeros(r + 2)
    im[1 : r + 1] = ins[1:]
    dm = np.zeros(r + 2)
    dm[1 : r + 1] = dele[1:]

    read, cas = _chain_rates(p, wk, im, dm)
    nodes = [NodeId(APP)]
    nodes += [NodeId(HEAD, 0)]
    nodes += [NodeId(VALUE, k) for k in range(1, r + 1)]
    nodes += [NodeId(TAIL, r + 1)]
    presence = np.concatenate(([1.0], p))
    a_read = np.concatenate(([1.0], read / w.threads))
    a_cas = np.concatenate(([0.0], cas / w.threads))
    return RateTable(nodes, presence, a_read, a_cas, w.threads, w.key_range)


def _ht_table(w: WorkloadSpec, s: StructureSpec) -> RateTable:
    r = w.key_range
    buckets = s.bucket_count(r)
    lf = s.load_factor
    pres = presence_probs(w)
    kp = w.key_probs()
    ins, dele, _ = w.op_mass()

    nodes = [NodeId(APP)]
    presence = [1.0]
    a_read = [1.0]
    a_cas = [0.0]
    for b in range(1, buckets + 1):
        lo = (b - 1) * lf + 1
        hi = min(b * lf, r)
        keys = list(range(lo, hi + 1))
        m = len(keys)
        p = np.ones(m + 2)
        wk = np.zeros(m + 2)
        im = np.zeros(m + 2)
        dm = np.zeros(m + 2)
        for j, k in enumerate(keys, start=1):
            p[j] = pres[k]
            wk[j] = kp[k]
            im[j] = ins[k]
            dm[j] = dele[k]
        read, cas = _chain_rates(p, wk, im, dm)
        nodes.append(NodeId(HEAD, b, bucket=b))
        presence.append(1.0)
        a_read.append(read[0])
        a_cas.append(cas[0])
        for j, k in enumerate(keys, start=1):
            nodes.append(NodeId(VALUE, k, bucket=b))
            presence.append(p[j])
            a_read.append(read[j])
            a_cas.append(cas[j])
        nodes.append(NodeId(TAIL, b, bucket=b))
        presence.append(1.0)
        a_read.append(read[m + 1])
        a_cas.append(cas[m + 1])
    a_read = np.asarray(a_read)
    a_cas = np.asarray(a_cas)
    a_read[1:] /= w.threads
    a_cas[1:] /= w.threads
    return RateTable(nodes, np.asarray(presence), a_read, a_cas, w.threads, w.key_range)


# -- skip list ---------------------------------------------------------------

def sl_height_masses(h_max: int, q: float = 0.5) -> np.ndarray:
    """P(height = h) for h in 0..h_max: geometric with the tail at h_max."""
    masses = np.array([(1.0 - q) * q**h for h in range(h_max + 1)])
    masses[h_max] = 1.0 - masses[:h_max].sum()
    return masses


def sl_presence(k: int, h: int, h_max: int, p_in: float, q: float = 0.5) -> float:
    """Presence probability of the level-h node of key ``k``."""
    if not 0 <= h <= h_max:
        raise SpecError(f"height {h} outside 0..{h_max}")
    return float(sl_height_masses(h_max, q)[h]) * p_in


def _sl_tail_presence(pres: np.ndarray, h_max: int, q: float) -> np.ndarray:
    """s[x, j] = P(key x is present with height >= j), shape (R+2, h_max+2).

    Row 0 and R+1 are the sentinels: present at h_max with probability 1.
    """
    r = len(pres) - 1
    masses = sl_height_masses(h_max, q)
    tails = np.concatenate((np.cumsum(masses[::-1])[::-1], [0.0]))
    s = np.zeros((r + 2, h_max + 2))
    s[1 : r + 1, :] = pres[1:, None] * tails[None, :]
    s[0, : h_max + 1] = 1.0
    s[r + 1, : h_max + 1] = 1.0
    return s


def sl_read_prob(k_node, h_node, k_target, tail_presence) -> float:
    """P(an op on k_target reads the skip-list node (k_node, h_node) | present).

    ``tail_presence[x, j]`` is the probability that key x stands at height
    >= j.  The node is visited iff no strictly taller key blocks the search
    between it and the target.
    """
    s = tail_presence
    out = 1.0
    if k_node <= k_target:
        for x in range(k_node + 1, k_target + 1):
            out *= 1.0 - s[x, h_node + 1]
    else:
        for x in range(k_target, k_node):
            out *= 1.0 - s[x, h_node]
    return out


def sl_cas_prob(k_node, h_node, kind, k_target, op, p_in_target, tail_presence,
                height_masses) -> float:
    """P(op on k_target CASes the node (kind, k_node, h_node) | present).

    Successful updates CAS the per-level predecessors of the affected key:
    the bottom link lives in the predecessor's valued node, the upper links
    in routing nodes.  A routing node of height h takes a CAS when no key in
    between reaches min(h, g), with g the affected key's drawn height;
    repeated CAS on one routing node counts once.  Deletes additionally mark
    the target's own nodes.
    """
    if op == "ins":
        if k_node >= k_target:
            return 0.0
        scale = 1.0 - p_in_target
    elif op == "del":
        if k_node == k_target:
            return 1.0
        if k_node > k_target:
            return 0.0
        scale = p_in_target
    else:
        raise SpecError(f"op {op!r} has no CAS events")
    s = tail_presence

    def blocked(level: int) -> float:
        prod = 1.0
        for x in range(k_node + 1, k_target):
            prod *= 1.0 - s[x, level]
        return prod

    if kind == VALUE:
        return scale * blocked(0)
    total = 0.0
    for g, mass in enumerate(height_masses):
        if g >= 1:
            total += mass * blocked(min(h_node, g))
    return scale * total


def _sl_table(w: WorkloadSpec, s: StructureSpec) -> RateTable:
    r = w.key_range
    h_max = s.height_cap(r)
    q = s.appearance_prob
    pres = presence_probs(w)
    kp = w.key_probs()
    ins, dele, _ = w.op_mass()
    masses = sl_height_masses(h_max, q)
    tails = _sl_tail_presence(pres, h_max, q)

    # back[j][k] = sum_{k' >= k} w[k'] * prod_{x=k+1..k'} (1 - s[x, j])
    # fwd[j][k]  = sum_{k' <= k-1} w[k'] * prod_{x=k'..k-1} (1 - s[x, j])
    nlev = h_max + 2
    back = np.zeros((nlev, r + 2))
    fwd = np.zeros((nlev, r + 2))
    for j in range(nlev):
        acc = 0.0
        for k in range(r, -1, -1):
            acc = (kp[k] if k >= 1 else 0.0) + (1.0 - tails[k + 1, j]) * acc
            back[j, k] = acc
        acc = 0.0
        for k in range(1, r + 2):
            prev_w = kp[k - 1] if k - 1 >= 1 else 0.0
            acc = (1.0 - tails[k - 1, j]) * (prev_w + acc)
            fwd[j, k] = acc

    # Link CAS: successful updates CAS the predecessor visible at each level
    # the affected key spans.  link[j][k] = sum over targets past k of the
    # update mass times P(no key in between reaches level j).
    ins_w = ins[1:] * (1.0 - pres[1:])
    del_w = dele[1:] * pres[1:]
    upd_w = np.zeros(r + 2)
    upd_w[1 : r + 1] = ins_w + del_w
    link = np.zeros((h_max + 1, r + 2))
    for j in range(h_max + 1):
        acc = 0.0
        for k in range(r, -1, -1):
            acc = upd_w[k + 1] + (1.0 - tails[k + 1, j]) * acc
            link[j, k] = acc
    # Mass of the affected key's height draw at or above each level.
    mass_above = np.concatenate((np.cumsum(masses[::-1])[::-1], [0.0]))

    nodes = [NodeId(APP)]
    presence = [1.0]
    a_read = [1.0]
    a_cas = [0.0]

    def emit(kind, k, h, p_node):
        j_up = min(h + 1, nlev - 1)
        mark = dele[k] if 1 <= k <= r else 0.0
        if kind == VALUE:
            # Valued nodes are read wherever the search lands, including the
            # per-level overshoot past the target; the bottom link CAS lands
            # on the predecessor's valued node.
            read = back[j_up, k] + fwd[h, k]
            cas = link[0, k] + mark
        else:
            # A routing node is consulted only when the search moves on from
            # its key, which never happens past the target; its links take
            # CAS at levels up to min(own height, the affected key's draw).
            read = back[j_up, k] - kp[k] if 1 <= k <= r else back[j_up, k]
            cas = mark
            for g in range(1, h_max + 1):
                cas += masses[g] * link[min(h, g), k]
        nodes.append(NodeId(kind, k, height=h))
        presence.append(p_node)
        a_read.append(read / w.threads)
        a_cas.append(cas / w.threads)

    for kind in (VALUE, ROUTING):
        emit(kind, 0, h_max, 1.0)
    for k in range(1, r + 1):
        for h in range(h_max + 1):
            p_node = masses[h] * pres[k]
            emit(VALUE, k, h, p_node)
            if h >= 1:  # keys of height 0 have no routing node
                emit(ROUTING, k, h, p_node)
    for kind in (VALUE, ROUTING):
        emit(kind, r + 1, h_max, 1.0)

    return RateTable(nodes, np.asarray(presence), np.asarray(a_read),
                     np.asarray(a_cas), w.threads, w.key_range)


# -- external binary tree ----------------------------------------------------

def expected_reciprocal_count(probs) -> float:
    """E[1 / (1 + X)] for X a sum of independent Bernoulli variables.

    Exact via the distribution of X; reduces to 1/(1+m) when all
    probabilities are 1 and to 1 for an empty interval.
    """
    dist = np.array([1.0])
    for p in probs:
        nxt = np.zeros(len(dist) + 1)
        nxt[: len(dist)] += dist * (1.0 - p)
        nxt[1:] += dist * p
        dist = nxt
    return float((dist / (1.0 + np.arange(len(dist)))).sum())


def uniform_reciprocal_counts(p: float, max_count: int) -> np.ndarray:
    """E[1 / (1 + Binomial(m, p))] for m = 0..max_count, closed form."""
    m = np.arange(max_count + 1, dtype=float)
    if p < 1e-12:
        return np.ones(max_count + 1)
    return (1.0 - (1.0 - p) ** (m + 1.0)) / (p * (m + 1.0))


def bst_internal_read_prob(k_target: int, k_node: int, presence_int) -> float:
    """Traversal probability of an internal node.

    The node is on the route iff it was inserted before every internal key
    between it and the target; with the interval population random, the
    traversal probability is the expected reciprocal of the population size
    (the plain reciprocal of the expected count under-counts short routes).
    """
    if k_node <= k_target:
        lo, hi = k_node + 1, k_target
    else:
        lo, hi = k_target + 1, k_node - 1
    return expected_reciprocal_count([presence_int[i] for i in range(lo, hi + 1)])


def bst_external_read_prob(k_target: int, k_node: int, presence_ext) -> float:
    if k_node == k_target:
        return 1.0
    if k_node < k_target:
        out = 1.0
        for i in range(k_node + 1, k_target + 1):
            out *= 1.0 - presence_ext[i]
        return out
    out = 1.0
    for i in range(1, k_node):
        out *= 1.0 - presence_ext[i]
    return out


def bst_route_weights(k_target: int, presence_int) -> tuple[float, float]:
    """Expected left/right-child shares of the nodes routing an operation.

    presence_int is 0-based over internal keys 0..R with index 0 the lower
    sentinel; a second always-on sentinel above it is accounted separately.
    Both sentinels sit at the top and route every key to the right.
    """
    r = len(presence_int) - 1
    c_right = 2.0  # the two top sentinels
    for k in range(1, k_target + 1):
        c_right += bst_internal_read_prob(k_target, k, presence_int)
    c_left = 0.0
    for k in range(k_target + 1, r + 1):
        c_left += bst_internal_read_prob(k_target, k, presence_int)
    total = c_left + c_right
    return c_left / total, c_right / total


def _interval_stats(presence, lo: int, hi: int) -> tuple[float, float]:
    """(all-absent probability, P(exactly one present)) over keys lo..hi."""
    prod = 1.0
    one = 0.0
    for i in range(lo, hi + 1):
        pi = presence[i]
        one = one * (1.0 - pi) + prod * pi
        prod *= 1.0 - pi
    return prod, one


def bst_boundary_probs(k_target: int, k_node: int, presence_int):
    """(nearest, second-nearest) probabilities that k_node bounds k_target.

    For k_node < k_target: P(k_node is the largest/second-largest present
    internal key below the target); mirrored above.  Both are conditioned on
    k_node itself being present.
    """
    if k_node < k_target:
        lo, hi = k_node + 1, k_target - 1
    elif k_node > k_target:
        lo, hi = k_target + 1, k_node - 1
    else:
        return 0.0, 0.0
    none_between, one_between = _interval_stats(presence_int, lo, hi)
    return none_between, one_between


def bst_cas_prob(k_target, k_node, op, presence_int, lw, rw) -> float:
    """P(op on k_target CASes the internal node k_node | present).

    Updates land on the parent and grandparent of the affected external
    node; the four child-orientation cases are weighted by the expected
    route composition (lw, rw).
    """
    nearest, second = bst_boundary_probs(k_target, k_node, presence_int)
    if k_node < k_target:
        weight_nearest = rw * (lw + 1.0) if op == "del" else rw * lw
        base = weight_nearest * nearest + rw * rw * second
    else:
        weight_nearest = lw * (rw + 1.0) if op == "del" else lw * rw
        base = weight_nearest * nearest + lw * lw * second
    p_t = presence_int[k_target] if k_target < len(presence_int) else 0.0
    scale = p_t if op == "del" else 1.0 - p_t
    return scale * base


# Subtree-size classes that can take update CAS under spread-out key
# selection: the new/removed external's parent roots at most 3 internals and
# its grandparent at most 7.
CAS_CLASS_CAP = 7


def bst_virtual_decompose(p_node: float, a_read: float, a_cas: float,
                          n_virtual: int, zipf_keys: bool):
    """Split an internal node into subtree-size classes.

    Returns (presence, a_read, a_cas) arrays for virtual indices 1..n.  The
    size-class mass falls off as 2/(h+1)^2 with 1/n at the full-tree class;
    read rates grow linearly with the class index.  Shares are renormalized
    so that total presence and total presence-weighted rates are preserved
    exactly.  CAS mass stays on the parent/grandparent-sized classes for
    spread-out key selection and is spread evenly when updates concentrate
    (skewed keys churn nodes through all classes).
    """
    if n_virtual < 2:
        raise SpecError(f"virtual decomposition needs >= 2 classes, got {n_virtual}")
    h = np.arange(1, n_virtual + 1, dtype=float)
    shares = 2.0 / (h + 1.0) ** 2
    shares[-1] = 1.0 / n_virtual
    shares /= shares.sum()
    presence = p_node * shares
    mean_h = float((shares * h).sum())
    read = a_read * h / mean_h
    if zipf_keys:
        cas = np.full(n_virtual, a_cas)
    else:
        top = min(CAS_CLASS_CAP, n_virtual)
        cas = np.zeros(n_virtual)
        cas[:top] = p_node * a_cas / presence[:top].sum() if p_node > 0 else 0.0
    return presence, read, cas


def _bst_table(w: WorkloadSpec, s: StructureSpec) -> RateTable:
    r = w.key_range
    pres = presence_probs(w)
    kp = w.key_probs()
    ins, dele, _ = w.op_mass()

    # Internal keys 0..R; index 0 is the lower on-path sentinel (p = 1).
    p_int = np.empty(r + 1)
    p_int[0] = 1.0
    p_int[1:] = pres[1:]
    p_ext = pres  # externals keyed 1..R

    csum = np.concatenate(([0.0], np.cumsum(p_int)))  # csum[j] = sum p_int[0..j-1]

    a_read_int = np.zeros(r + 1)
    c_right = np.full(r + 1, 2.0)  # both top sentinels route right everywhere
    c_left = np.zeros(r + 1)
    targets = np.arange(1, r + 1)
    a_read_int[0] = 1.0  # lower sentinel sits at the top: read by every op
    inner = p_int[1:]
    uniform = bool(np.ptp(inner) < 1e-12) if r > 1 else True
    if uniform:
        recip = uniform_reciprocal_counts(float(inner[0]), r)
    else:
        # Mixed per-key presence: fall back to the reciprocal of the
        # expected interval population.
        recip = None
    for k in range(1, r + 1):
        below = targets[k - 1 :]  # targets at or above the node key
        above = targets[: k - 1]
        if recip is not None:
            on_route_b = recip[below - k]
            on_route_a = recip[k - 1 - above]
        else:
            on_route_b = 1.0 / (1.0 + (csum[below + 1] - csum[k + 1]))
            on_route_a = 1.0 / (1.0 + (csum[k] - csum[above + 1]))
        a_read_int[k] = (kp[below] * on_route_b).sum() + (kp[above] * on_route_a).sum()
        c_right[k:] += on_route_b
        c_left[1:k] += on_route_a
    lw = c_left[1:] / (c_left[1:] + c_right[1:])
    rw = 1.0 - lw

    # External reads.
    q_ext = 1.0 - p_ext
    a_read_ext = np.zeros(r + 1)
    acc = 0.0  # sum_{k'>k} w[k'] prod_{i=k+1..k'} (1-p_ext)
    for k in range(r, 0, -1):
        a_read_ext[k] = kp[k] + acc
        acc = q_ext[k] * (kp[k] + acc)
    prefix_prod = np.cumprod(np.concatenate(([1.0], q_ext[1:])))
    below_mass = np.concatenate(([0.0], np.cumsum(kp[1:])))
    for k in range(1, r + 1):
        a_read_ext[k] += below_mass[k - 1] * prefix_prod[k - 1]

    # Internal CAS: parent/grandparent of the affected external node.
    ins_w = ins[1:] * (1.0 - p_ext[1:])
    del_w = dele[1:] * p_ext[1:]
    a_cas_int = np.zeros(r + 1)
    # Prefix machinery for interval all-absent / exactly-one-present sums;
    # always-present keys (the sentinel, or p = 1) are tracked separately so
    # the log-products stay finite.
    ones = np.zeros(r + 2, dtype=np.int64)
    logq = np.zeros(r + 2)
    ratio = np.zeros(r + 2)
    for i in range(0, r + 1):
        is_one = p_int[i] >= 1.0 - 1e-15
        ones[i + 1] = ones[i] + (1 if is_one else 0)
        logq[i + 1] = logq[i] + (0.0 if is_one else np.log1p(-p_int[i]))
        ratio[i + 1] = ratio[i] + (0.0 if is_one else p_int[i] / (1.0 - p_int[i]))

    def interval_stats_vec(lo, hi):
        """(all-absent, exactly-one-present) for index vectors lo..hi."""
        lo = np.minimum(lo, hi + 1)
        n1 = ones[hi + 1] - ones[lo]
        base = np.exp(logq[hi + 1] - logq[lo])
        rsum = ratio[hi + 1] - ratio[lo]
        nearest = np.where(n1 == 0, base, 0.0)
        second = np.where(n1 == 0, base * rsum, np.where(n1 == 1, base, 0.0))
        return nearest, second

    ks = np.arange(r + 1)
    for kt in range(1, r + 1):
        iw, dw = ins_w[kt - 1], del_w[kt - 1]
        if iw <= 0.0 and dw <= 0.0:
            continue
        l, rr = lw[kt - 1], rw[kt - 1]
        below = ks[:kt]
        near_b, sec_b = interval_stats_vec(below + 1, np.full(kt, kt - 1))
        a_cas_int[:kt] += (iw * rr * l + dw * rr * (l + 1.0)) * near_b \
            + (iw + dw) * rr * rr * sec_b
        above = ks[kt + 1 :]
        if len(above):
            near_a, sec_a = interval_stats_vec(np.full(len(above), kt + 1), above - 1)
            a_cas_int[kt + 1 :] += (iw * l * rr + dw * l * (rr + 1.0)) * near_a \
                + (iw + dw) * l * l * sec_a

    n_virtual = int(np.ceil(p_int.sum() + 1.0))  # live internals incl. sentinels
    zipf_keys = w.distribution == ZIPF
    decompose = n_virtual >= 2

    # Head rows: application node plus the two top sentinels.
    head_kinds = [APP, INTERNAL, INTERNAL]
    head_keys = [0, -1, 0]
    head_heights = [-1, -1, -1]
    head_presence = [1.0, 1.0, 1.0]
    head_read = [1.0, 1.0 / w.threads, a_read_int[0] / w.threads]
    head_cas = [0.0, 0.0, a_cas_int[0] / w.threads]

    read_k = a_read_int[1:] / w.threads
    cas_k = a_cas_int[1:] / w.threads
    if decompose:
        # Vectorized equivalent of bst_virtual_decompose over all keys: the
        # share and rate profiles are key-independent, only scaled.
        h = np.arange(1, n_virtual + 1, dtype=float)
        shares = 2.0 / (h + 1.0) ** 2
        shares[-1] = 1.0 / n_virtual
        shares /= shares.sum()
        mean_h = float((shares * h).sum())
        int_presence = np.outer(p_int[1:], shares).ravel()
        int_read = np.outer(read_k, h / mean_h).ravel()
        if zipf_keys:
            int_cas = np.repeat(cas_k, n_virtual)
        else:
            top = min(CAS_CLASS_CAP, n_virtual)
            profile = np.zeros(n_virtual)
            profile[:top] = 1.0 / shares[:top].sum()
            int_cas = np.outer(cas_k, profile).ravel()
        int_keys = np.repeat(np.arange(1, r + 1), n_virtual)
        int_heights = np.tile(np.arange(1, n_virtual + 1), r)
        n_int = r * n_virtual
    else:
        int_presence = p_int[1:].copy()
        int_read = read_k
        int_cas = cas_k
        int_keys = np.arange(1, r + 1)
        int_heights = np.full(r, -1)
        n_int = r

    # Updates never CAS the affected external node itself: the marking and
    # the unlink both land on parent/grandparent internals.
    kinds = head_kinds + [INTERNAL] * n_int + [EXTERNAL] * r
    keys = np.concatenate((head_keys, int_keys, np.arange(1, r + 1)))
    heights = np.concatenate((head_heights, int_heights, np.full(r, -1)))
    nodes = NodeArray(kinds, keys, heights)
    presence = np.concatenate((head_presence, int_presence, p_ext[1:]))
    a_read = np.concatenate((head_read, int_read, a_read_ext[1:] / w.threads))
    a_cas = np.concatenate((head_cas, int_cas, np.zeros(r)))
    return RateTable(nodes, presence, a_read, a_cas, w.threads, w.key_range)


def build_rate_table(w: WorkloadSpec, s: StructureSpec) -> RateTable:
    """Presence and normalized event rates for every potential node."""
    if s.kind == LINKED_LIST:
        return _ll_table(w)
    if s.kind == HASH_TABLE:
        return _ht_table(w, s)
    if s.kind == SKIP_LIST:
        return _sl_table(w, s)
    if s.kind == EXTERNAL_BST:
        return _bst_table(w, s)
    raise SpecError(f"unsupported structure kind {s.kind!r}")


def dump_rates_csv(table: RateTable, path) -> None:
    import csv

    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["node_kind", "key", "height", "presence", "a_read", "a_cas"])
        for node, p, ar, ac in zip(table.nodes, table.presence, table.a_read, table.a_cas):
            kind, key, height = node.label()
            writer.writerow([kind, key, height, f"{p:.12g}", f"{ar:.12g}", f"{ac:.12g}"])

"""Lock-free skip list with separate valued and routing nodes.

Valued nodes carry the key/value pair, the bottom-layer link, and a pointer
to their routing node; a routing node packs the upper-layer links of its
key.  Deletion marks links top-down and logically deletes at the bottom
layer; traversals unlink marked links as they pass.
"""

from __future__ import annotations

import threading
from random import Random

from lfperf.harness.atomics import AtomicMarkableReference
from lfperf.harness.epoch import EpochReclaimer


class RoutingNode:
    __slots__ = ("height", "next")

    def __init__(self, height: int):
        self.height = height  # number of upper layers (>= 1)
        self.next = [AtomicMarkableReference(None, False) for _ in range(height)]


class ValueNode:
    __slots__ = ("key", "value", "next", "routing")

    def __init__(self, key: int, value=None, height: int = 0):
        self.key = key
        self.value = value
        self.next: AtomicMarkableReference[ValueNode] = AtomicMarkableReference(None, False)
        self.routing = RoutingNode(height) if height >= 1 else None

    def link(self, level: int) -> AtomicMarkableReference:
        return self.next if level == 0 else self.routing.next[level - 1]

    @property
    def height(self) -> int:
        return self.routing.height if self.routing else 0


class LockFreeSkipList:
    def __init__(self, key_range: int, h_max: int | None = None,
                 appearance_prob: float = 0.5, seed: int = 1,
                 reclaimer: EpochReclaimer | None = None, tracked=None, probe=None):
        import math

        self.key_range = key_range
        self.h_max = h_max if h_max is not None else max(1, math.ceil(
            math.log2(max(2, key_range))))
        self.appearance_prob = appearance_prob
        self.head = ValueNode(0, height=self.h_max)
        self.tail = ValueNode(key_range + 1, height=self.h_max)
        for level in range(self.h_max + 1):
            self.head.link(level).set(self.tail, False)
        self.reclaimer = reclaimer or EpochReclaimer()
        self.tracked = frozenset(tracked) if tracked else None
        self.probe = probe
        self._seed = seed
        self._tls = threading.local()

    def _rng(self) -> Random:
        rng = getattr(self._tls, "rng", None)
        if rng is None:
            rng = Random((self._seed << 20) ^ threading.get_ident())
            self._tls.rng = rng
        return rng

    def draw_height(self) -> int:
        h = 0
        rng = self._rng()
        while h < self.h_max and rng.random() < self.appearance_prob:
            h += 1
        return h

    def _touch(self, node: ValueNode) -> None:
        if self.tracked is not None and node.key in self.tracked:
            self.probe(node.key)

    def _find(self, key: int, preds, succs) -> bool:
        """Fill per-level predecessors/successors; True iff key is present."""
        while True:
            retry = False
            pred = self.head
            for level in range(self.h_max, -1, -1):
                curr = pred.link(level).get_reference()
                while True:
                    succ, marked = curr.link(level).get()
                    while marked:
                        if not pred.link(level).compare_and_set(curr, succ, False, False):
                            retry = True
                            break
                        if level == 0:
                            self.reclaimer.retire(curr)
                        curr = succ
                        succ, marked = curr.link(level).get()
                    if retry:
                        break
                    self._touch(curr)
                    if curr.key < key:
                        pred, curr = curr, succ
                    else:
                        break
                if retry:
                    break
                preds[level] = pred
                succs[level] = curr
            if not retry:
                return succs[0].key == key

    def insert(self, key: int, value=None, height: int | None = None) -> bool:
        preds = [None] * (self.h_max + 1)
        succs = [None] * (self.h_max + 1)
        with self.reclaimer.guard():
            while True:
                if self._find(key, preds, succs):
                    return False
                h = self.draw_height() if height is None else height
                node = ValueNode(key, value, h)
                for level in range(h + 1):
                    node.link(level).set(succs[level], False)
                # Linearizes at the bottom-layer link.
                if not preds[0].link(0).compare_and_set(succs[0], node, False, False):
                    continue
                for level in range(1, h + 1):
                    while True:
                        if preds[level].link(level).compare_and_set(
                                succs[level], node, False, False):
                            break
                        if node.link(0).is_marked():  # already being deleted
                            return True
                        self._find(key, preds, succs)
                        if succs[level] is node:
                            break
                        node.link(level).set(succs[level], False)
                return True

    def delete(self, key: int) -> bool:
        preds = [None] * (self.h_max + 1)
        succs = [None] * (self.h_max + 1)
        with self.reclaimer.guard():
            if not self._find(key, preds, succs):
                return False
            victim = succs[0]
            for level in range(victim.height, 0, -1):
                succ, marked = victim.link(level).get()
                while not marked:
                    victim.link(level).compare_and_set(succ, succ, False, True)
                    succ, marked = victim.link(level).get()
            while True:
                succ, marked = victim.link(0).get()
                if marked:
                    return False  # another delete got the bottom mark
                if victim.link(0).compare_and_set(succ, succ, False, True):
                    self._find(key, preds, succs)  # physically unlink
                    return True

    def search(self, key: int):
        with self.reclaimer.guard():
            pred = self.head
            for level in range(self.h_max, -1, -1):
                curr = pred.link(level).get_reference()
                while True:
                    self._touch(curr)
                    if curr.key == key:
                        if not curr.link(0).is_marked():
                            return curr.value if curr.value is not None else True
                        return None
                    succ, marked = curr.link(level).get()
                    if marked:
                        curr = succ
                        continue
                    if curr.key < key:
                        pred, curr = curr, succ
                    else:
                        break
            return None

    def keys(self) -> list[int]:
        out = []
        curr = self.head.next.get_reference()
        while curr.key <= self.key_range:
            if not curr.next.is_marked():
                out.append(curr.key)
            curr = curr.next.get_reference()
        return out

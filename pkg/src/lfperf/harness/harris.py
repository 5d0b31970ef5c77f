"""Lock-free sorted linked list with logical deletion marks.

Deletion marks the victim's next-pointer, then unlinks; traversals help
unlink marked nodes they pass.  Membership tests are read-only.
"""

from __future__ import annotations

from lfperf.harness.atomics import AtomicMarkableReference
from lfperf.harness.epoch import EpochReclaimer


class Node:
    __slots__ = ("key", "value", "next")

    def __init__(self, key: int, value=None):
        self.key = key
        self.value = value
        self.next: AtomicMarkableReference[Node] = AtomicMarkableReference(None, False)


class HarrisList:
    def __init__(self, key_range: int, reclaimer: EpochReclaimer | None = None,
                 tracked=None, probe=None, low_key: int | None = None):
        self.low_key = -1 if low_key is None else low_key
        self.high_key = key_range + 1
        self.head = Node(self.low_key)
        self.tail = Node(self.high_key)
        self.head.next.set(self.tail, False)
        self.reclaimer = reclaimer or EpochReclaimer()
        self.tracked = frozenset(tracked) if tracked else None
        self.probe = probe

    def _touch(self, node: Node) -> None:
        if self.tracked is not None and node.key in self.tracked:
            self.probe(node.key)

    def _find(self, key: int) -> tuple[Node, Node]:
        """(pred, curr) with curr the first unmarked node at or past key;
        unlinks any marked nodes encountered."""
        while True:
            pred = self.head
            curr = pred.next.get_reference()
            retry = False
            while True:
                succ, marked = curr.next.get()
                while marked:
                    if not pred.next.compare_and_set(curr, succ, False, False):
                        retry = True
                        break
                    self.reclaimer.retire(curr)
                    curr = succ
                    succ, marked = curr.next.get()
                if retry:
                    break
                self._touch(curr)
                if curr.key >= key:
                    return pred, curr
                pred, curr = curr, succ
            if retry:
                continue

    def insert(self, key: int, value=None) -> bool:
        with self.reclaimer.guard():
            while True:
                pred, curr = self._find(key)
                if curr.key == key:
                    return False
                node = Node(key, value)
                node.next.set(curr, False)
                if pred.next.compare_and_set(curr, node, False, False):
                    return True

    def delete(self, key: int) -> bool:
        with self.reclaimer.guard():
            while True:
                pred, curr = self._find(key)
                if curr.key != key:
                    return False
                succ = curr.next.get_reference()
                if not curr.next.compare_and_set(succ, succ, False, True):
                    continue  # raced with another update on the victim
                if pred.next.compare_and_set(curr, succ, False, False):
                    self.reclaimer.retire(curr)
                return True

    def search(self, key: int):
        with self.reclaimer.guard():
            curr = self.head
            while curr.key < key:
                curr = curr.next.get_reference()
                self._touch(curr)
            if curr.key == key and not curr.next.is_marked():
                return curr.value if curr.value is not None else True
            return None

    def keys(self) -> list[int]:
        out = []
        curr = self.head.next.get_reference()
        while curr is not self.tail:
            if not curr.next.is_marked():
                out.append(curr.key)
            curr = curr.next.get_reference()
        return out

"""Lock-free external binary search tree with edge flags and tags.

Leaves hold the key/value pairs; internal nodes only route.  A delete first
flags the edge to its leaf (injection), then removes leaf and parent
together by tagging the sibling edge and swinging the grandparent edge
(cleanup); stalled updates are helped by whoever trips over them.
"""

from __future__ import annotations

from dataclasses import dataclass

from lfperf.harness.atomics import AtomicReference
from lfperf.harness.epoch import EpochReclaimer


@dataclass(frozen=True)
class Edge:
    node: "Leaf | Internal"
    flag: bool = False  # the child leaf is being deleted
    tag: bool = False   # the edge is frozen for a sibling promotion


class Leaf:
    __slots__ = ("key", "value")

    def __init__(self, key: int, value=None):
        self.key = key
        self.value = value


class Internal:
    __slots__ = ("key", "left", "right")

    def __init__(self, key: int, left, right):
        self.key = key
        self.left = AtomicReference(Edge(left))
        self.right = AtomicReference(Edge(right))

    def child_field(self, key: int) -> AtomicReference:
        return self.left if key < self.key else self.right

    def sibling_field(self, key: int) -> AtomicReference:
        return self.right if key < self.key else self.left


@dataclass
class _SeekRecord:
    ancestor: Internal
    successor: Internal
    parent: Internal
    leaf: Leaf


class LockFreeExternalBst:
    def __init__(self, key_range: int, reclaimer: EpochReclaimer | None = None,
                 tracked=None, probe=None):
        # Sentinel keys above the real range; every real key routes into the
        # left subtree of the lower sentinel internal.
        self.key_range = key_range
        inf0, inf1, inf2 = key_range + 1, key_range + 2, key_range + 3
        self.child = Internal(inf1, Leaf(inf0), Leaf(inf1))
        self.root = Internal(inf2, self.child, Leaf(inf2))
        self.reclaimer = reclaimer or EpochReclaimer()
        self.tracked = frozenset(tracked) if tracked else None
        self.probe = probe

    def _touch(self, leaf: Leaf) -> None:
        if self.tracked is not None and leaf.key in self.tracked:
            self.probe(leaf.key)

    def _seek(self, key: int) -> _SeekRecord:
        ancestor = self.root
        successor = self.child
        parent = self.child
        edge = parent.child_field(key).get()
        while isinstance(edge.node, Internal):
            if not edge.tag:
                ancestor = parent
                successor = edge.node
            parent = edge.node
            edge = parent.child_field(key).get()
        self._touch(edge.node)
        return _SeekRecord(ancestor, successor, parent, edge.node)

    def _cleanup(self, key: int, record: _SeekRecord) -> bool:
        ancestor, successor, parent = record.ancestor, record.successor, record.parent
        flag_field = parent.child_field(key)
        sibling_field = parent.sibling_field(key)
        if not flag_field.get().flag:
            # The deletion in progress is on the other side of the parent.
            flag_field, sibling_field = sibling_field, flag_field
        if not flag_field.get().flag:
            return False  # stale view; no deletion here any more
        # Freeze the sibling edge so the promotion below is safe.
        while True:
            se = sibling_field.get()
            if se.tag:
                break
            if sibling_field.compare_and_set(se, Edge(se.node, se.flag, True)):
                break
        se = sibling_field.get()
        afield = ancestor.child_field(key)
        old = afield.get()
        if old.node is not successor or old.flag or old.tag:
            return False
        if afield.compare_and_set(old, Edge(se.node, se.flag, False)):
            self.reclaimer.retire(parent)
            self.reclaimer.retire(flag_field.get().node)
            return True
        return False

    def insert(self, key: int, value=None) -> bool:
        with self.reclaimer.guard():
            while True:
                record = self._seek(key)
                leaf = record.leaf
                if leaf.key == key:
                    return False
                parent = record.parent
                field = parent.child_field(key)
                old = field.get()
                if old.node is leaf:
                    if old.flag or old.tag:
                        self._cleanup(key, record)  # help and retry
                        continue
                    new_leaf = Leaf(key, value)
                    if key < leaf.key:
                        internal = Internal(leaf.key, new_leaf, leaf)
                    else:
                        internal = Internal(key, leaf, new_leaf)
                    if field.compare_and_set(old, Edge(internal)):
                        return True

    def delete(self, key: int) -> bool:
        with self.reclaimer.guard():
            injecting = True
            victim: Leaf | None = None
            while True:
                record = self._seek(key)
                if injecting:
                    if record.leaf.key != key:
                        return False
                    victim = record.leaf
                    field = record.parent.child_field(key)
                    old = field.get()
                    if old.node is not victim:
                        continue
                    if old.flag or old.tag:
                        self._cleanup(key, record)
                        continue
                    if field.compare_and_set(old, Edge(victim, True, False)):
                        injecting = False
                        if self._cleanup(key, record):
                            return True
                else:
                    if record.leaf is not victim:
                        return True  # someone completed the removal for us
                    if self._cleanup(key, record):
                        return True

    def search(self, key: int):
        with self.reclaimer.guard():
            node = self.child
            edge = node.child_field(key).get()
            while isinstance(edge.node, Internal):
                node = edge.node
                edge = node.child_field(key).get()
            leaf = edge.node
            self._touch(leaf)
            if leaf.key == key and not edge.flag:
                return leaf.value if leaf.value is not None else True
            return None

    def keys(self) -> list[int]:
        out = []

        def walk(edge: Edge):
            node = edge.node
            if isinstance(node, Internal):
                walk(node.left.get())
                walk(node.right.get())
            elif node.key <= self.key_range and not edge.flag:
                out.append(node.key)

        walk(self.child.left.get())
        return sorted(out)

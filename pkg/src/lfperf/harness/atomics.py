"""Atomic reference cells emulating hardware CAS under CPython."""

from __future__ import annotations

import threading
from typing import Generic, TypeVar

T = TypeVar("T")


class AtomicReference(Generic[T]):
    __slots__ = ("_value", "_lock")

    def __init__(self, value: T = None):
        self._value = value
        self._lock = threading.Lock()

    def get(self) -> T:
        return self._value

    def set(self, value: T) -> None:
        with self._lock:
            self._value = value

    def compare_and_set(self, expected: T, new: T) -> bool:
        with self._lock:
            if self._value is expected:
                self._value = new
                return True
            return False


class AtomicMarkableReference(Generic[T]):
    """Reference plus a mark bit, updated together atomically."""

    __slots__ = ("_state", "_lock")

    def __init__(self, reference: T = None, mark: bool = False):
        self._state = (reference, mark)
        self._lock = threading.Lock()

    def get(self) -> tuple[T, bool]:
        return self._state

    def get_reference(self) -> T:
        return self._state[0]

    def is_marked(self) -> bool:
        return self._state[1]

    def set(self, reference: T, mark: bool) -> None:
        with self._lock:
            self._state = (reference, mark)

    def compare_and_set(self, expected_ref: T, new_ref: T,
                        expected_mark: bool, new_mark: bool) -> bool:
        with self._lock:
            ref, mark = self._state
            if ref is expected_ref and mark == expected_mark:
                self._state = (new_ref, new_mark)
                return True
            return False

    def attempt_mark(self, expected_ref: T, new_mark: bool) -> bool:
        with self._lock:
            ref, mark = self._state
            if ref is expected_ref:
                self._state = (ref, new_mark)
                return True
            return False


class AtomicInt:
    __slots__ = ("_value", "_lock")

    def __init__(self, value: int = 0):
        self._value = value
        self._lock = threading.Lock()

    def get(self) -> int:
        return self._value

    def set(self, value: int) -> None:
        with self._lock:
            self._value = value

    def compare_and_set(self, expected: int, new: int) -> bool:
        with self._lock:
            if self._value == expected:
                self._value = new
                return True
            return False

    def add_and_get(self, delta: int = 1) -> int:
        with self._lock:
            self._value += delta
            return self._value

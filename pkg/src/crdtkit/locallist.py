"""A local ordered view over present positions. Not a CRDT itself.

Keeps parallel sorted arrays of (sort key, item); its contents are always a
pure function of the underlying replicated components and can be rebuilt
from scratch at any time.
"""

from __future__ import annotations

from bisect import bisect_left
from typing import Any, Iterator


class LocalList:
    __slots__ = ("_keys", "_items")

    def __init__(self) -> None:
        self._keys: list[tuple] = []
        self._items: list[Any] = []

    def add(self, key: tuple, item: Any) -> None:
        index = bisect_left(self._keys, key)
        self._keys.insert(index, key)
        self._items.insert(index, item)

    def discard(self, key: tuple) -> bool:
        index = bisect_left(self._keys, key)
        if index < len(self._keys) and self._keys[index] == key:
            self._keys.pop(index)
            self._items.pop(index)
            return True
        return False

    def index_of(self, key: tuple) -> int | None:
        index = bisect_left(self._keys, key)
        if index < len(self._keys) and self._keys[index] == key:
            return index
        return None

    def at(self, index: int) -> Any:
        if not 0 <= index < len(self._items):
            raise IndexError(f"index {index} out of range [0, {len(self._items)})")
        return self._items[index]

    def key_at(self, index: int) -> tuple:
        if not 0 <= index < len(self._keys):
            raise IndexError(f"index {index} out of range [0, {len(self._keys)})")
        return self._keys[index]

    def clear(self) -> None:
        self._keys.clear()
        self._items.clear()

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Any]:
        return iter(self._items)

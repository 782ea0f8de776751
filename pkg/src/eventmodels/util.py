from typing import Sequence


class SeqView(Sequence):
    """Read-only window ``items[start:stop]`` without copying.

    ``stop=None`` tracks the list's current length at construction time.
    """

    __slots__ = ("_items", "_start", "_stop")

    def __init__(self, items, start=0, stop=None):
        self._items = items
        self._start = start
        self._stop = len(items) if stop is None else stop

    def __len__(self):
        return max(0, self._stop - self._start)

    def __getitem__(self, index):
        n = len(self)
        if isinstance(index, slice):
            return [self._items[self._start + i] for i in range(*index.indices(n))]
        if index < 0:
            index += n
        if not 0 <= index < n:
            raise IndexError(index)
        return self._items[self._start + index]

"""Fenwick-tree-backed index of lexical scope intervals.

Each scope is a half-open byte interval [start, end). The Fenwick array
holds +1 at every start and -1 at every end, so the prefix sum at an offset
is exactly the number of intervals containing it (the nesting depth). A
separate containment tree serves innermost-scope lookup, folding ranges,
and subtree removal; both structures stay O(log n) per update.

>>> index = FenwickScopeIndex()
>>> outer = index.insert_scope("f", 0, 100)
>>> inner = index.insert_scope("f", 10, 20)
>>> index.depth("f", 15)
2
>>> index.depth("f", 25)
1
>>> index.innermost_scope_at("f", 15) == inner
True
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

from .positions import LineIndex


class OverlapViolation(Exception):
    """New interval partially overlaps an existing one."""


class UnknownScope(Exception):
    pass


class FenwickArray:
    """Classic binary indexed tree over a fixed capacity of offsets.

    ``last_update_touches`` / ``last_query_touches`` count the cells the
    most recent operation visited, for the logarithmic-cost assertions.
    """

    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self._tree = [0] * (capacity + 1)
        self.last_update_touches = 0
        self.last_query_touches = 0

    def add(self, index: int, delta: int) -> None:
        if not 0 <= index < self.capacity:
            raise IndexError(f"offset {index} outside capacity {self.capacity}")
        self.last_update_touches = 0
        i = index + 1
        while i <= self.capacity:
            self._tree[i] += delta
            self.last_update_touches += 1
            i += i & -i

    def prefix_sum(self, index: int) -> int:
        """Sum of deltas at offsets 0..index inclusive."""
        self.last_query_touches = 0
        i = min(index, self.capacity - 1) + 1
        total = 0
        while i > 0:
            total += self._tree[i]
            self.last_query_touches += 1
            i &= i - 1
        return total


@dataclass
class ScopeInterval:
    id: int
    file: str
    start: int
    end: int
    parent: int | None = None
    fold_from: str | None = None
    fold_to: str | None = None
    name: str | None = None
    children: list[int] = field(default_factory=list)


class _FileIndex:
    def __init__(self, capacity: int = 1024) -> None:
        self.fenwick = FenwickArray(capacity)
        self.roots: list[int] = []

    def ensure_capacity(self, end: int, intervals: dict[int, ScopeInterval], file: str) -> None:
        if end < self.fenwick.capacity:
            return
        capacity = self.fenwick.capacity
        while capacity <= end:
            capacity *= 2
        rebuilt = FenwickArray(capacity)
        for interval in intervals.values():
            if interval.file == file:
                rebuilt.add(interval.start, 1)
                rebuilt.add(interval.end, -1)
        self.fenwick = rebuilt


class FenwickScopeIndex:
    """Depth queries, innermost lookup, folding ranges, subtree removal."""

    def __init__(self) -> None:
        self._intervals: dict[int, ScopeInterval] = {}
        self._files: dict[str, _FileIndex] = {}
        self._next_id = 1

    def __len__(self) -> int:
        return len(self._intervals)

    def get(self, scope_id: int) -> ScopeInterval:
        try:
            return self._intervals[scope_id]
        except KeyError:
            raise UnknownScope(f"no scope with id {scope_id}") from None

    def insert_scope(
        self,
        file: str,
        start: int,
        end: int,
        fold_from: str | None = None,
        fold_to: str | None = None,
        name: str | None = None,
    ) -> int:
        """Insert an interval; returns its id.

        The interval must nest: strictly inside its enclosing interval, and
        for each existing sibling either disjoint from it or strictly
        containing it (contained siblings are adopted as children).
        """
        if start >= end:
            raise OverlapViolation(f"empty interval [{start}, {end})")
        findex = self._files.setdefault(file, _FileIndex())
        findex.ensure_capacity(end, self._intervals, file)

        parent = self._enclosing(file, start, end)
        if parent is not None and (start, end) == (parent.start, parent.end):
            raise OverlapViolation(
                f"[{start}, {end}) duplicates scope {parent.id} exactly"
            )
        sibling_ids = findex.roots if parent is None else parent.children
        adopted: list[int] = []
        for sid in sibling_ids:
            sib = self._intervals[sid]
            if sib.end <= start or end <= sib.start:
                continue
            if start <= sib.start and sib.end <= end:
                adopted.append(sid)
                continue
            raise OverlapViolation(
                f"[{start}, {end}) partially overlaps [{sib.start}, {sib.end})"
            )

        interval = ScopeInterval(
            self._next_id, file, start, end,
            parent=None if parent is None else parent.id,
            fold_from=fold_from, fold_to=fold_to, name=name,
        )
        self._next_id += 1
        self._intervals[interval.id] = interval
        for sid in adopted:
            sibling_ids.remove(sid)
            self._intervals[sid].parent = interval.id
            interval.children.append(sid)
        self._insert_sorted(sibling_ids, interval.id)
        findex.fenwick.add(start, 1)
        findex.fenwick.add(end, -1)
        return interval.id

    def remove_scope(self, scope_id: int) -> list[int]:
        """Remove the scope and its whole subtree; returns removed ids."""
        root = self.get(scope_id)
        removed: list[int] = []
        stack = [root.id]
        while stack:
            current = self._intervals[stack.pop()]
            removed.append(current.id)
            stack.extend(current.children)
        findex = self._files[root.file]
        if root.parent is None:
            findex.roots.remove(root.id)
        else:
            self._intervals[root.parent].children.remove(root.id)
        for rid in removed:
            interval = self._intervals.pop(rid)
            findex.fenwick.add(interval.start, -1)
            findex.fenwick.add(interval.end, +1)
        return removed

    def remove_file(self, file: str) -> list[int]:
        """Drop every interval of a file (document replaced or closed)."""
        findex = self._files.get(file)
        if findex is None:
            return []
        removed: list[int] = []
        for root_id in list(findex.roots):
            removed.extend(self.remove_scope(root_id))
        return removed

    def depth(self, file: str, offset: int) -> int:
        """Number of intervals containing the offset."""
        findex = self._files.get(file)
        if findex is None or offset < 0:
            return 0
        return findex.fenwick.prefix_sum(offset)

    def innermost_scope_at(self, file: str, offset: int) -> int | None:
        """Id of the narrowest interval containing the offset, if any."""
        findex = self._files.get(file)
        if findex is None:
            return None
        found = self._descend(findex.roots, offset)
        return found

    def folding_ranges(self, file: str, line_index: LineIndex) -> list[tuple[int, int]]:
        """(startLine, endLine) per fold-delimited interval, by start offset."""
        ranges = []
        for interval in sorted(
            (iv for iv in self._intervals.values() if iv.file == file),
            key=lambda iv: (iv.start, iv.end),
        ):
            if interval.fold_from is None:
                continue
            start_line = line_index.line_of_byte(interval.start)
            end_line = line_index.line_of_byte(max(interval.start, interval.end - 1))
            ranges.append((start_line, end_line))
        return ranges

    def intervals_for_file(self, file: str) -> list[ScopeInterval]:
        return sorted(
            (iv for iv in self._intervals.values() if iv.file == file),
            key=lambda iv: (iv.start, -iv.end),
        )

    def dump(self, file: str, sample_offsets: list[int] | None = None) -> dict:
        payload = {
            "intervals": [
                {
                    "id": iv.id,
                    "start": iv.start,
                    "end": iv.end,
                    "parent": iv.parent,
                    "name": iv.name,
                    "foldFrom": iv.fold_from,
                    "foldTo": iv.fold_to,
                }
                for iv in self.intervals_for_file(file)
            ]
        }
        if sample_offsets is not None:
            payload["depths"] = {str(o): self.depth(file, o) for o in sample_offsets}
        return payload

    # -- internals

    def _enclosing(self, file: str, start: int, end: int) -> ScopeInterval | None:
        """Innermost existing interval fully containing [start, end)."""
        findex = self._files[file]
        best: ScopeInterval | None = None
        level = findex.roots
        while True:
            advanced = False
            for sid in level:
                candidate = self._intervals[sid]
                if candidate.start <= start and end <= candidate.end:
                    best = candidate
                    level = candidate.children
                    advanced = True
                    break
            if not advanced:
                return best

    def _descend(self, level: list[int], offset: int) -> int | None:
        best: int | None = None
        while level:
            starts = [self._intervals[sid].start for sid in level]
            pos = bisect_right(starts, offset) - 1
            if pos < 0:
                break
            candidate = self._intervals[level[pos]]
            if not (candidate.start <= offset < candidate.end):
                break
            best = candidate.id
            level = candidate.children
        return best

    def _insert_sorted(self, ids: list[int], new_id: int) -> None:
        # Siblings are disjoint, so ordering by start is total.
        starts = [self._intervals[i].start for i in ids]
        pos = bisect_right(starts, self._intervals[new_id].start)
        ids.insert(pos, new_id)

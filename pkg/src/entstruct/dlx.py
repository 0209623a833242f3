"""Knuth's Algorithm X with dancing links, used for exact-cover searches."""

from __future__ import annotations


class _Node:
    __slots__ = ("left", "right", "up", "down", "column", "row_id")

    def __init__(self):
        self.left = self.right = self.up = self.down = self
        self.column = None
        self.row_id = -1


class _Column(_Node):
    __slots__ = ("size", "name")

    def __init__(self, name):
        super().__init__()
        self.size = 0
        self.name = name
        self.column = self


class ExactCover:
    """Exact cover over a universe of hashable column names.

    Rows are added as (row_id, iterable of column names); `solve` yields each
    selection of row ids covering every column exactly once.
    """

    def __init__(self, columns):
        self.root = _Column("root")
        self.columns = {}
        for name in columns:
            col = _Column(name)
            col.left = self.root.left
            col.right = self.root
            self.root.left.right = col
            self.root.left = col
            self.columns[name] = col

    def add_row(self, row_id, column_names) -> None:
        first = None
        for name in column_names:
            col = self.columns[name]
            node = _Node()
            node.column = col
            node.row_id = row_id
            node.down = col
            node.up = col.up
            col.up.down = node
            col.up = node
            col.size += 1
            if first is None:
                first = node
            else:
                node.left = first.left
                node.right = first
                first.left.right = node
                first.left = node

    @staticmethod
    def _cover(col: _Column) -> None:
        col.right.left = col.left
        col.left.right = col.right
        i = col.down
        while i is not col:
            j = i.right
            while j is not i:
                j.down.up = j.up
                j.up.down = j.down
                j.column.size -= 1
                j = j.right
            i = i.down

    @staticmethod
    def _uncover(col: _Column) -> None:
        i = col.up
        while i is not col:
            j = i.left
            while j is not i:
                j.column.size += 1
                j.down.up = j
                j.up.down = j
                j = j.left
            i = i.up
        col.right.left = col
        col.left.right = col

    def solve(self, limit: int | None = None):
        """Yield solutions (lists of row ids); stops after `limit` solutions."""
        count = 0
        stack: list[int] = []

        def search():
            nonlocal count
            if limit is not None and count >= limit:
                return
            if self.root.right is self.root:
                count += 1
                yield list(stack)
                return
            # choose the smallest column to branch on
            col = self.root.right
            c = col.right
            while c is not self.root:
                if c.size < col.size:
                    col = c
                c = c.right
            if col.size == 0:
                return
            self._cover(col)
            r = col.down
            while r is not col:
                stack.append(r.row_id)
                j = r.right
                while j is not r:
                    self._cover(j.column)
                    j = j.right
                yield from search()
                j = r.left
                while j is not r:
                    self._uncover(j.column)
                    j = j.left
                stack.pop()
                if limit is not None and count >= limit:
                    break
                r = r.down
            self._uncover(col)

        yield from search()


def exact_covers(universe, rows, limit: int = 5000) -> list[list]:
    """All (up to `limit`) exact covers of `universe` by the given rows.

    `rows` maps a row id to the set of universe elements it covers.
    """
    solver = ExactCover(list(universe))
    for row_id, cols in rows.items():
        solver.add_row(row_id, cols)
    return [sorted(sol) for sol in solver.solve(limit=limit)]

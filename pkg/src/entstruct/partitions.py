"""Set partitions of {1..n}: enumeration, refinement order and structure classes.

Partitions are kept in a canonical form (blocks sorted internally and by their
least element) so that enumeration order, fixtures and serialized output are
reproducible.  Parties are labelled 1..n throughout; the string form
``"1,3|2|4"`` joins block members with ',' and blocks with '|'.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


class DomainError(ValueError):
    """An argument lies outside an operation's documented domain."""


PRODUCIBLE = "producible"
PARTITIONABLE = "partitionable"
STRETCHABLE = "stretchable"

_KIND_ALIASES = {
    "prod": PRODUCIBLE,
    "producible": PRODUCIBLE,
    "part": PARTITIONABLE,
    "partitionable": PARTITIONABLE,
    "str": STRETCHABLE,
    "stretchable": STRETCHABLE,
}


@dataclass(frozen=True, order=True)
class Partition:
    """A set partition of {1..n} in canonical block order."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    @staticmethod
    def of(n: int, blocks) -> "Partition":
        """Canonicalize and validate a collection of blocks over {1..n}."""
        canon = tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]))
        seen: set[int] = set()
        for b in canon:
            if not b:
                raise DomainError("empty block")
            seen.update(b)
        if seen != set(range(1, n + 1)) or sum(len(b) for b in canon) != n:
            raise DomainError(f"blocks {canon} do not partition {{1..{n}}}")
        return Partition(n, canon)

    @staticmethod
    def parse(text: str, n: int | None = None) -> "Partition":
        """Parse the '1,3|2|4' notation (members may also be undelimited digits)."""
        blocks = []
        for part in text.split("|"):
            part = part.strip()
            if "," in part:
                blocks.append([int(x) for x in part.split(",")])
            else:
                blocks.append([int(c) for c in part])
        total = sum(len(b) for b in blocks)
        return Partition.of(n if n is not None else total, blocks)

    def __str__(self) -> str:
        return "|".join(",".join(str(i) for i in b) for b in self.blocks)

    def block_of(self, site: int) -> tuple[int, ...]:
        for b in self.blocks:
            if site in b:
                return b
        raise DomainError(f"site {site} not in partition of {{1..{self.n}}}")

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def max_block(self) -> int:
        return max(len(b) for b in self.blocks)


@dataclass(frozen=True)
class PartitionType:
    """Multiset of block sizes, sorted descending (an integer partition of n)."""

    parts: tuple[int, ...]

    def __post_init__(self):
        if any(p < 1 for p in self.parts) or tuple(sorted(self.parts, reverse=True)) != self.parts:
            raise DomainError(f"invalid type {self.parts}")

    def __str__(self) -> str:
        return "{" + ",".join(str(p) for p in self.parts) + "}"


@dataclass(frozen=True)
class StructureClass:
    """One of the three k-indexed families of entanglement structures.

    producible: every block has at most k parties.
    partitionable: the state splits into at least k blocks.
    stretchable: (largest block size) - (number of blocks) is at most k.
    """

    kind: str
    k: int

    def __post_init__(self):
        if self.kind not in (PRODUCIBLE, PARTITIONABLE, STRETCHABLE):
            raise DomainError(f"unknown class kind {self.kind!r}")

    @staticmethod
    def parse(text: str, n: int | None = None) -> "StructureClass":
        """Parse 'prod:2', 'part:3', 'str:-1' or 'fullsep'."""
        text = text.strip().lower()
        if text in ("fullsep", "full-sep", "full"):
            if n is None:
                raise DomainError("'fullsep' needs the party count n")
            return StructureClass(PRODUCIBLE, 1)
        kind, _, kstr = text.partition(":")
        if kind not in _KIND_ALIASES or not kstr:
            raise DomainError(f"cannot parse class spec {text!r}")
        return StructureClass(_KIND_ALIASES[kind], int(kstr))

    def validate_for(self, n: int) -> None:
        if self.kind in (PRODUCIBLE, PARTITIONABLE):
            if not 1 <= self.k <= n:
                raise DomainError(f"{self.kind} requires 1 <= k <= {n}, got {self.k}")
        else:
            if not 1 - n <= self.k <= n - 1:
                raise DomainError(f"stretchable requires {1-n} <= k <= {n-1}, got {self.k}")

    def short(self) -> str:
        return {PRODUCIBLE: "prod", PARTITIONABLE: "part", STRETCHABLE: "str"}[self.kind] + f":{self.k}"


def enumerate_partitions(n: int) -> list[Partition]:
    """All set partitions of {1..n} in restricted-growth-string order."""
    if not isinstance(n, int) or not 1 <= n <= 8:
        raise DomainError(f"n must be an integer in [1, 8], got {n!r}")
    return list(_enumerate_cached(n))


@lru_cache(maxsize=None)
def _enumerate_cached(n: int) -> tuple[Partition, ...]:
    out: list[Partition] = []
    rgs = [0] * n

    def rec(i: int, top: int) -> None:
        if i == n:
            nblocks = top + 1
            blocks: list[list[int]] = [[] for _ in range(nblocks)]
            for site, label in enumerate(rgs, start=1):
                blocks[label].append(site)
            out.append(Partition.of(n, blocks))
            return
        for v in range(top + 2):
            rgs[i] = v
            rec(i + 1, max(top, v))

    rec(1, 0)  # rgs[0] is fixed to 0
    return tuple(out)


def refines(a: Partition, b: Partition) -> bool:
    """True iff every block of `a` is contained in some block of `b`."""
    if a.n != b.n:
        raise DomainError(f"partition sizes differ: {a.n} != {b.n}")
    owner = {}
    for idx, blk in enumerate(b.blocks):
        for site in blk:
            owner[site] = idx
    for blk in a.blocks:
        first = owner[blk[0]]
        if any(owner[s] != first for s in blk[1:]):
            return False
    return True


def in_class(p: Partition, c: StructureClass) -> bool:
    """Whether partition `p` realizes structure class `c`."""
    c.validate_for(p.n)
    if c.kind == PRODUCIBLE:
        return p.max_block <= c.k
    if c.kind == PARTITIONABLE:
        return p.num_blocks >= c.k
    return p.max_block - p.num_blocks <= c.k


def maximal_elements(parts: list[Partition]) -> list[Partition]:
    """Maximal elements of `parts` under refinement, in input order."""
    out = []
    for p in parts:
        if not any(q is not p and q != p and refines(p, q) for q in parts):
            out.append(p)
    return out


def gamma_max(c: StructureClass, n: int) -> list[Partition]:
    """Maximal partitions of the class: every in-class partition refines one of them."""
    c.validate_for(n)
    members = [p for p in enumerate_partitions(n) if in_class(p, c)]
    return maximal_elements(members)


def partition_type(p: Partition) -> PartitionType:
    """Descending multiset of block sizes."""
    return PartitionType(tuple(sorted((len(b) for b in p.blocks), reverse=True)))

"""Tests for set-partition enumeration, refinement and structure classes."""

import pytest

from entstruct.partitions import (
    DomainError,
    Partition,
    StructureClass,
    enumerate_partitions,
    gamma_max,
    in_class,
    maximal_elements,
    partition_type,
    refines,
)


def bell_number(n):
    """Independent oracle: Bell numbers via the Bell-triangle recurrence."""
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def test_enumerate_counts_match_bell_triangle():
    """|partitions(n)| equals the Bell number for n <= 6."""
    for n in range(1, 7):
        assert len(enumerate_partitions(n)) == bell_number(n)


def test_enumerate_single_party():
    assert [str(p) for p in enumerate_partitions(1)] == ["1"]


def test_enumerate_unique_and_canonical():
    for n in range(1, 6):
        parts = enumerate_partitions(n)
        assert len(set(parts)) == len(parts)
        for p in parts:
            assert p == Partition.of(n, p.blocks)


def test_enumerate_domain_error():
    with pytest.raises(DomainError):
        enumerate_partitions(0)
    with pytest.raises(DomainError):
        enumerate_partitions(9)


def test_refines_fig1_arrows():
    """1|2|3|4 refines 12|34; a block crossing two blocks does not refine."""
    a = Partition.parse("1|2|3|4")
    b = Partition.parse("1,2|3,4")
    assert refines(a, b)
    c = Partition.parse("1,2|3|4")
    d = Partition.parse("1,3,4|2")
    assert not refines(c, d)
    assert refines(d, d)


def test_refines_dimension_mismatch():
    with pytest.raises(DomainError):
        refines(Partition.parse("1|2"), Partition.parse("1|2|3"))


def test_refines_partial_order_exhaustive():
    """Reflexive, antisymmetric, transitive for all partitions of n <= 5."""
    for n in range(1, 6):
        parts = enumerate_partitions(n)
        for a in parts:
            assert refines(a, a)
        for a in parts:
            for b in parts:
                if a != b and refines(a, b):
                    assert not refines(b, a)
        if n <= 4:
            for a in parts:
                for b in parts:
                    if not refines(a, b):
                        continue
                    for c in parts:
                        if refines(b, c):
                            assert refines(a, c)


def test_in_class_fixtures():
    assert in_class(Partition.parse("1,2|3,4"), StructureClass.parse("prod:2"))
    assert in_class(Partition.parse("1|2|3|4"), StructureClass.parse("str:-3"))
    assert in_class(Partition.parse("1,2,3|4"), StructureClass.parse("part:2"))
    assert not in_class(Partition.parse("1,2,3|4"), StructureClass.parse("prod:2"))


def test_producible_monotone_under_refinement():
    """If a refines b and b is k-producible then a is k-producible (n <= 5)."""
    for n in range(2, 6):
        parts = enumerate_partitions(n)
        for k in range(1, n + 1):
            cls = StructureClass.parse(f"prod:{k}")
            for a in parts:
                for b in parts:
                    if refines(a, b) and in_class(b, cls):
                        assert in_class(a, cls)


def test_gamma_max_fig1_subset():
    """Maximal elements of the seven partitions shown in the lattice figure."""
    listed = [
        "1|2|3|4", "1|2|3,4", "1,3|2|4", "1,2|3|4",
        "1,3,4|2", "1,2|3,4", "1,2,3|4",
    ]
    parts = [Partition.parse(s) for s in listed]
    got = {str(p) for p in maximal_elements(parts)}
    assert got == {"1,3,4|2", "1,2|3,4", "1,2,3|4"}


def test_gamma_max_partitionable_two_of_four():
    got = gamma_max(StructureClass.parse("part:2"), 4)
    types = {str(partition_type(p)) for p in got}
    assert types == {"{2,2}", "{3,1}"}
    assert len(got) == 7


def test_gamma_max_zero_stretchable():
    got = {str(p) for p in gamma_max(StructureClass.parse("str:0"), 4)}
    assert got == {"1,2|3,4", "1,3|2,4", "1,4|2,3"}


def test_gamma_max_is_antichain_and_covers():
    """Antichain property plus coverage of every in-class partition (n <= 5)."""
    for n in range(2, 6):
        for spec in (f"prod:2", f"part:2", "str:0", f"part:{n}"):
            cls = StructureClass.parse(spec, n)
            maxima = gamma_max(cls, n)
            for a in maxima:
                for b in maxima:
                    if a != b:
                        assert not refines(a, b)
            for p in enumerate_partitions(n):
                if in_class(p, cls):
                    assert any(refines(p, g) for g in maxima)


def test_partition_type():
    assert partition_type(Partition.parse("1,3,4|2")).parts == (3, 1)
    assert partition_type(Partition.parse("1|2|3|4")).parts == (1, 1, 1, 1)
    assert partition_type(Partition.parse("1,2|3,4")).parts == (2, 2)


def test_serialization_round_trip():
    for n in range(1, 6):
        for p in enumerate_partitions(n):
            assert Partition.parse(str(p), n) == p


def test_partition_validation():
    with pytest.raises(DomainError):
        Partition.of(3, [[1, 2]])
    with pytest.raises(DomainError):
        Partition.of(3, [[1, 2], [2, 3]])
    with pytest.raises(DomainError):
        Partition.of(2, [[1], []])


def test_class_parsing_and_validation():
    assert StructureClass.parse("fullsep", 4) == StructureClass.parse("prod:1")
    assert StructureClass.parse("str:-1").k == -1
    with pytest.raises(DomainError):
        StructureClass.parse("prod:0").validate_for(4)
    with pytest.raises(DomainError):
        StructureClass.parse("str:4").validate_for(4)
    with pytest.raises(DomainError):
        StructureClass.parse("weird:1")

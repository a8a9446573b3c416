"""Vector clocks, dots, and replica id generation."""

from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from crdtkit.clock import VectorClock
from crdtkit.ids import ID_ALPHABET, Dot, check_replica_id, new_replica_id


def test_clock_basics():
    vc = VectorClock()
    assert vc.get("a") == 0
    assert not vc.covers(Dot("a", 1))
    vc.advance("a", 2)
    assert vc.covers(Dot("a", 1)) and vc.covers(Dot("a", 2))
    assert not vc.covers(Dot("a", 3))
    vc.advance("a", 1)  # never lowers
    assert vc.get("a") == 2


_clocks = st.dictionaries(
    st.sampled_from(["a", "b", "c", "d"]), st.integers(1, 50), max_size=4
)


@given(_clocks, _clocks)
def test_clock_merge_is_entrywise_max(left, right):
    vc = VectorClock(left)
    vc.merge(VectorClock(right))
    expected = {
        replica: max(left.get(replica, 0), right.get(replica, 0))
        for replica in set(left) | set(right)
    }
    assert vc.entries == expected


@given(_clocks, _clocks)
def test_clock_merge_commutes(left, right):
    one = VectorClock(left)
    one.merge(VectorClock(right))
    other = VectorClock(right)
    other.merge(VectorClock(left))
    assert one == other


def test_dot_name_roundtrip():
    dot = Dot("replica-1", 42)
    assert dot.name() == "replica-1.42"
    assert Dot.parse(dot.name()) == dot
    with pytest.raises(ValueError):
        Dot.parse("nodot")
    with pytest.raises(ValueError):
        Dot.parse(".5")


def test_replica_id_generation():
    rng = random.Random(7)
    first = new_replica_id(rng)
    assert len(first) == 10
    assert all(ch in ID_ALPHABET for ch in first)
    assert new_replica_id(random.Random(7)) == first  # seed-deterministic
    assert new_replica_id(random.Random(8)) != first


def test_replica_id_validation():
    assert check_replica_id("ok-id_9") == "ok-id_9"
    for bad in ("", "has.dot", "has\ttab", "has\x00nul"):
        with pytest.raises(ValueError):
            check_replica_id(bad)

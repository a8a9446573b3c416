"""Dense total order: placement, comparison laws, waypoint compression."""

from __future__ import annotations

import random

import pytest

from conftest import Mesh, mesh2
from crdtkit import CTotalOrder, END, START, Runtime
from crdtkit.harness.oracle import HistoryBuilder, enumerate_orders


def build_order(runtime: Runtime) -> CTotalOrder:
    return runtime.register("order", CTotalOrder)


def test_first_position_on_empty_order():
    runtime = Runtime("a")
    order = build_order(runtime)
    pos = order.create_position(START, END)
    assert order.tree.traversal() == [pos]
    assert order.compare(START, pos) == -1
    assert order.compare(pos, END) == -1


def test_sequential_creations_share_one_waypoint():
    runtime = Runtime("a")
    order = build_order(runtime)
    positions = []
    prev = START
    for _ in range(50):
        prev = order.create_position(prev, END)
        positions.append(prev)
    assert order.tree.traversal() == positions
    # One run, one waypoint: depth grows only via sibling conflicts.
    assert len(list(order.tree.waypoints())) == 1


def test_concurrent_first_positions_ordered_by_creator():
    builder = HistoryBuilder(build_order, ("a", "b"))
    builder.do("a", lambda order: order.create_position(START, END))
    builder.do("b", lambda order: order.create_position(START, END))
    verdict = enumerate_orders(builder.envelopes, build_order)
    assert verdict.passed and verdict.orders == 2
    traversal = verdict.canonical["order"]
    assert [ref[0] for ref in traversal] == ["a", "b"]


def test_compare_basics():
    runtime = Runtime("a")
    order = build_order(runtime)
    p = order.create_position(START, END)
    r = order.create_position(p, END)  # lands just after p
    assert order.compare(p, p) == 0
    assert order.compare(p, r) == -1
    assert order.compare(r, p) == 1
    with pytest.raises(ValueError):
        order.create_position(r, p)  # prev must sort before next


def test_unknown_position_rejected():
    from crdtkit import Position

    runtime = Runtime("a")
    order = build_order(runtime)
    with pytest.raises(ValueError):
        order.compare(Position("ghost", 1, 0), END)
    with pytest.raises(ValueError):
        order.create_position(Position("ghost", 1, 0), END)


def test_total_order_laws_on_random_positions():
    rng = random.Random(11)
    runtime = Runtime("a")
    order = build_order(runtime)
    for _ in range(100):
        refs = [START] + order.tree.traversal() + [END]
        i = rng.randrange(len(refs) - 1)
        order.create_position(refs[i], refs[i + 1])
    traversal = order.tree.traversal()
    assert len(traversal) == 100
    keys = [order.tree.sortkey(ref) for ref in traversal]
    assert keys == sorted(keys)  # traversal agrees with pairwise comparison
    assert len(set(keys)) == 100  # strictly total
    for _ in range(200):
        i, j = rng.randrange(100), rng.randrange(100)
        expected = 0 if i == j else (-1 if i < j else 1)
        assert order.compare(traversal[i], traversal[j]) == expected


def test_density_between_arbitrary_pairs():
    """createPosition lands strictly between prev and next, including across
    pairs separated by many existing positions."""
    rng = random.Random(23)
    mesh = Mesh(("a", "b", "zz"), build_order)
    for step in range(150):
        rid = mesh.ids[rng.randrange(3)]
        if rng.random() < 0.4:
            for other in mesh.ids:
                if other != rid and rng.random() < 0.7:
                    mesh.pump(other, rid)
        order = mesh.handles[rid]
        refs = [START] + order.tree.traversal() + [END]
        i = rng.randrange(len(refs) - 1)
        j = rng.randrange(i + 1, len(refs))
        prev, nxt = refs[i], refs[j]
        created = order.create_position(prev, nxt)
        assert prev == START or order.compare(prev, created) == -1
        assert nxt == END or order.compare(created, nxt) == -1
    mesh.sync()
    assert mesh.converged()
    traversals = {rid: mesh.handles[rid].tree.traversal() for rid in mesh.ids}
    assert traversals["a"] == traversals["b"] == traversals["zz"]


def test_fresh_replica_with_low_sequence_numbers_keeps_density():
    """A new replica's first positions carry the smallest sequence numbers;
    placing them between survivors of a deleted run must not jump the fence."""
    mesh = Mesh(("zz", "aa"), build_order)
    owner = mesh.handles["zz"]
    first = owner.create_position(START, END)
    second = owner.create_position(first, END)
    third = owner.create_position(second, END)
    mesh.sync()
    # "aa" (fresh, sequence numbers from 1) inserts between first and third,
    # i.e. across the middle position, twice over.
    joiner = mesh.handles["aa"]
    created = joiner.create_position(first, third)
    assert joiner.compare(first, created) == -1
    assert joiner.compare(created, third) == -1
    deeper = joiner.create_position(created, third)
    assert joiner.compare(created, deeper) == -1
    assert joiner.compare(deeper, third) == -1
    mesh.sync()
    assert mesh.handles["zz"].tree.traversal() == mesh.handles["aa"].tree.traversal()


def test_state_merge_unions_waypoints():
    mesh = mesh2(build_order)
    pos_a = mesh.handles["a"].create_position(START, END)
    pos_b = mesh.handles["b"].create_position(START, END)
    save_a = mesh.runtimes["a"].save_bytes()
    save_b = mesh.runtimes["b"].save_bytes()
    mesh.runtimes["a"].load_bytes(save_b)
    mesh.runtimes["b"].load_bytes(save_a)
    assert mesh.handles["a"].tree.traversal() == [pos_a, pos_b]
    assert mesh.converged()
    # Longer run wins on merge.
    mesh.handles["a"].create_position(pos_a, pos_b)
    stale = Runtime("c")
    stale_order = build_order(stale)
    stale.load_bytes(save_a)
    stale.load_bytes(mesh.runtimes["a"].save_bytes())
    assert stale_order.tree.traversal() == mesh.handles["a"].tree.traversal()


def test_merge_is_idempotent_and_commutative():
    mesh = Mesh(("a", "b", "c"), build_order)
    for rid in mesh.ids:
        order = mesh.handles[rid]
        prev = START
        for _ in range(3):
            prev = order.create_position(prev, END)
    saves = {rid: mesh.runtimes[rid].save_bytes() for rid in mesh.ids}

    def merged(order_of_loads):
        runtime = Runtime("m")
        handle = build_order(runtime)
        for rid in order_of_loads:
            runtime.load_bytes(saves[rid])
        return handle.tree.traversal()

    assert merged("abc") == merged("cba") == merged("bacabc")


def test_confluence_under_oracle_sampling():
    rng = random.Random(4)
    from crdtkit.harness.oracle import random_history
    from crdtkit.harness.schema import COMPONENT_SCHEMAS

    build, op = COMPONENT_SCHEMAS["ctotalorder"]
    for _ in range(60):
        envelopes = random_history(build, op, rng)
        if not envelopes:
            continue
        assert enumerate_orders(envelopes, build).passed

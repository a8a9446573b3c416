"""Causal delivery, dependency compression, and whole-document save/load."""

from __future__ import annotations

import pytest

from conftest import Mesh
from crdtkit import (
    CCounter,
    ContractError,
    CPrimitive,
    DecodeError,
    LoadError,
    MessageEnvelope,
    Mode,
    Runtime,
)
from crdtkit.ids import Dot
from crdtkit.saves import DocumentSave


def build_counter(runtime: Runtime) -> CCounter:
    return runtime.register("counter", CCounter)


def counter_env(sender: Dot, lamport: int, deps=(), amount: int = 1) -> MessageEnvelope:
    from crdtkit.codec import Writer

    w = Writer()
    w.sint(amount)
    return MessageEnvelope(sender, lamport, tuple(deps), ("counter",), w.getvalue())


# -- newRuntime ---------------------------------------------------------------


def test_fresh_runtime_saves_empty_causal_map():
    runtime = Runtime("a")
    build_counter(runtime)
    save = DocumentSave.decode(runtime.save_bytes())
    assert save.causal.entries == {}
    assert save.lamport == 0


def test_full_mode_delivers_dep_first_arrivals_in_order():
    runtime = Runtime("c")
    counter = build_counter(runtime)
    first = counter_env(Dot("a", 1), 1)
    second = counter_env(Dot("b", 1), 2, deps=[Dot("a", 1)])
    assert [d.meta.sender for d in runtime.receive(first)] == [Dot("a", 1)]
    assert [d.meta.sender for d in runtime.receive(second)] == [Dot("b", 1)]
    assert counter.value() == 2


def test_novc_mode_delivers_despite_missing_dep():
    runtime = Runtime("c", mode=Mode.NOVC)
    counter = build_counter(runtime)
    env = counter_env(Dot("b", 1), 2, deps=[Dot("a", 1)])
    assert len(runtime.receive(env)) == 1  # transport is trusted
    assert counter.value() == 1


def test_novc_mode_still_suppresses_duplicates():
    runtime = Runtime("c", mode=Mode.NOVC)
    counter = build_counter(runtime)
    env = counter_env(Dot("a", 1), 1)
    assert len(runtime.receive(env)) == 1
    assert runtime.receive(env) == []
    assert counter.value() == 1


# -- sendLocal ------------------------------------------------------------------


def test_first_local_op_envelope_shape():
    runtime = Runtime("a")
    counter = build_counter(runtime)
    sent = []
    runtime.on_send.append(sent.append)
    counter.add(1)
    env = sent[0]
    assert env.sender == Dot("a", 1)
    assert env.deps == ()
    assert env.lamport == 1


def test_send_after_remote_delivery_lists_latest_dot():
    runtime = Runtime("a")
    counter = build_counter(runtime)
    for k in (1, 2, 3):
        runtime.receive(counter_env(Dot("b", k), k))
    sent = []
    runtime.on_send.append(sent.append)
    counter.add(1)
    assert sent[0].deps == (Dot("b", 3),)
    assert sent[0].lamport == 4  # strictly above everything delivered


def test_sequential_sends_repeat_remote_deps_never_own():
    runtime = Runtime("a")
    counter = build_counter(runtime)
    runtime.receive(counter_env(Dot("b", 1), 1))
    sent = []
    runtime.on_send.append(sent.append)
    counter.add(1)
    counter.add(1)
    # The sender's own previous dot is implicit and never listed; with no new
    # remote traffic, the remote antichain is unchanged.
    assert sent[0].deps == (Dot("b", 1),)
    assert sent[1].deps == (Dot("b", 1),)
    assert sent[1].sender == Dot("a", 2)


def test_send_during_delivery_is_rejected():
    class Reentrant(CPrimitive):
        def poke(self):
            self.send_primitive(b"x")

        def receive_primitive(self, payload, meta):
            if not meta.is_local:
                self.send_primitive(b"y")

    runtime_a = Runtime("a")
    a = runtime_a.register("r", Reentrant)
    sent = []
    runtime_a.on_send.append(sent.append)
    a.poke()

    runtime_b = Runtime("b")
    runtime_b.register("r", Reentrant)
    with pytest.raises(ContractError):
        runtime_b.receive(sent[0])


# -- receiveEnvelope -------------------------------------------------------------


def test_duplicate_delivery_returns_empty():
    runtime = Runtime("c")
    counter = build_counter(runtime)
    env = counter_env(Dot("a", 1), 1)
    assert len(runtime.receive(env)) == 1
    assert runtime.receive(env) == []
    assert counter.value() == 1


def test_out_of_order_same_sender_is_buffered():
    runtime = Runtime("c")
    counter = build_counter(runtime)
    second = counter_env(Dot("a", 2), 2)
    first = counter_env(Dot("a", 1), 1)
    assert runtime.receive(second) == []
    assert counter.value() == 0
    delivered = runtime.receive(first)
    assert [d.meta.sender for d in delivered] == [Dot("a", 1), Dot("a", 2)]
    assert counter.value() == 2


def test_transitive_drain_across_senders():
    runtime = Runtime("c")
    build_counter(runtime)
    dependent = counter_env(Dot("b", 1), 2, deps=[Dot("a", 1)])
    assert runtime.receive(dependent) == []
    delivered = runtime.receive(counter_env(Dot("a", 1), 1))
    assert [d.meta.sender for d in delivered] == [Dot("a", 1), Dot("b", 1)]


def test_malformed_envelope_bytes_raise():
    runtime = Runtime("c")
    build_counter(runtime)
    with pytest.raises(DecodeError):
        runtime.receive(b"\xde\xad\xbe\xef")


def test_envelope_invariants_checked():
    runtime = Runtime("c")
    build_counter(runtime)
    with pytest.raises(DecodeError):  # dep on own sender
        runtime.receive(counter_env(Dot("a", 2), 2, deps=[Dot("a", 1)]))
    with pytest.raises(DecodeError):  # two deps from one replica
        runtime.receive(counter_env(Dot("a", 1), 3, deps=[Dot("b", 1), Dot("b", 2)]))
    with pytest.raises(DecodeError):  # empty path
        runtime.receive(MessageEnvelope(Dot("a", 1), 1, (), (), b""))


def test_unknown_root_component_errors():
    runtime = Runtime("c")
    build_counter(runtime)
    with pytest.raises(DecodeError):
        runtime.receive(MessageEnvelope(Dot("a", 1), 1, (), ("nope",), b"\x02"))


# -- causally-maximal dependency compression ----------------------------------------


def test_deps_empty_without_remote_traffic():
    runtime = Runtime("a")
    counter = build_counter(runtime)
    sent = []
    runtime.on_send.append(sent.append)
    counter.add(1)
    counter.add(1)
    assert sent[0].deps == () and sent[1].deps == ()


def test_linear_history_compresses_to_single_dep():
    # a1 <- b1 <- a2: after delivering all three, c's send depends on a2 only.
    mesh = Mesh(("a", "b", "c"), build_counter)
    mesh.handles["a"].add(1)  # a1
    mesh.pump("a", "b")
    mesh.handles["b"].add(1)  # b1, dep a1
    mesh.pump("b", "a")
    mesh.handles["a"].add(1)  # a2, dep b1
    mesh.sync()
    mesh.handles["c"].add(1)
    env = mesh.log["c"][0]
    assert env.deps == (Dot("a", 2),)


def test_concurrent_dots_both_listed():
    mesh = Mesh(("a", "b", "c"), build_counter)
    mesh.handles["a"].add(1)
    mesh.handles["b"].add(1)
    mesh.pump("a", "c")
    mesh.pump("b", "c")
    mesh.handles["c"].add(1)
    assert set(mesh.log["c"][0].deps) == {Dot("a", 1), Dot("b", 1)}


def test_dep_soundness_closure_covers_send_clock():
    """Closure of {self-predecessor} + deps equals the sender's clock."""
    import random

    from crdtkit.harness.oracle import causal_closures

    mesh = Mesh(("a", "b", "c"), build_counter)
    clocks: dict[Dot, dict[str, int]] = {}
    for rid in mesh.ids:
        def snap(env, _rt=mesh.runtimes[rid]):
            clocks[env.sender] = dict(_rt.vc.entries)
        mesh.runtimes[rid].on_send.append(snap)
    rng = random.Random(5)
    for _ in range(120):
        src, dst = rng.sample(mesh.ids, 2)
        if rng.random() < 0.5:
            mesh.pump(src, dst)
        mesh.handles[src].add(1)
    envelopes = [env for rid in mesh.ids for env in mesh.log[rid]]
    # Clock sums give a causal-compatible processing order for the oracle.
    envelopes.sort(key=lambda env: sum(clocks[env.sender].values()))
    closures = causal_closures(envelopes)
    for env in envelopes:
        closure_clock: dict[str, int] = {}
        for dot in closures[env.sender]:
            if dot.counter > closure_clock.get(dot.replica, 0):
                closure_clock[dot.replica] = dot.counter
        assert closure_clock == clocks[env.sender], env.sender


def test_lamport_strictly_increases_along_causality():
    mesh = Mesh(("a", "b"), build_counter)
    mesh.handles["a"].add(1)
    mesh.pump("a", "b")
    mesh.handles["b"].add(1)
    mesh.pump("b", "a")
    mesh.handles["a"].add(1)
    lamports = {env.sender: env.lamport for rid in mesh.ids for env in mesh.log[rid]}
    assert lamports[Dot("a", 1)] < lamports[Dot("b", 1)] < lamports[Dot("a", 2)]


def test_causal_summary_distinguishes_concurrent_from_prior():
    mesh = Mesh(("a", "b", "c", "d"), build_counter)
    mesh.handles["a"].add(1)  # a1
    mesh.pump("a", "b")
    mesh.handles["b"].add(1)  # b1 (causally after a1)
    mesh.handles["c"].add(1)  # c1 (concurrent with b1, saw nothing)
    d = mesh.runtimes["d"]
    metas = {}
    d.receive(mesh.log["a"][0].encode())
    d.receive(mesh.log["b"][0].encode())
    for delivery in d.receive(mesh.log["c"][0].encode()):
        metas[delivery.meta.sender] = delivery.meta
    meta_c1 = metas[Dot("c", 1)]
    # b1 was delivered at d before c1, but is not in c1's causal past.
    assert not meta_c1.in_causal_past(Dot("b", 1))
    assert not meta_c1.in_causal_past(Dot("a", 1))


def test_causal_summary_covers_true_past():
    mesh = Mesh(("a", "b", "c"), build_counter)
    mesh.handles["a"].add(1)
    mesh.pump("a", "b")
    mesh.handles["b"].add(1)
    c = mesh.runtimes["c"]
    c.receive(mesh.log["a"][0].encode())
    (delivery,) = c.receive(mesh.log["b"][0].encode())
    assert delivery.meta.in_causal_past(Dot("a", 1))
    assert not delivery.meta.in_causal_past(Dot("b", 1))  # not strictly prior


# -- saveDocument / loadDocument ------------------------------------------------------


def test_save_is_deterministic():
    runtime = Runtime("a")
    counter = build_counter(runtime)
    counter.add(3)
    assert runtime.save_bytes() == runtime.save_bytes()


def test_save_causal_map_counts_own_ops():
    runtime = Runtime("a")
    counter = build_counter(runtime)
    for _ in range(3):
        counter.add(1)
    save = DocumentSave.decode(runtime.save_bytes())
    assert save.causal.entries == {"a": 3}


def test_load_own_save_is_identity():
    runtime = Runtime("a")
    counter = build_counter(runtime)
    counter.add(5)
    before = runtime.digest()
    runtime.load_bytes(runtime.save_bytes())
    assert runtime.digest() == before
    assert counter.value() == 5


def test_fresh_replica_load_equals_source():
    source = Runtime("a")
    counter = build_counter(source)
    counter.add(2)
    counter.add(-1)
    target = Runtime("b")
    build_counter(target)
    target.load_bytes(source.save_bytes())
    assert target.digest() == source.digest()


def test_disjoint_cross_loads_converge():
    mesh = Mesh(("a", "b"), build_counter)
    mesh.handles["a"].add(4)
    mesh.handles["b"].add(-1)
    save_a = mesh.runtimes["a"].save_bytes()
    save_b = mesh.runtimes["b"].save_bytes()
    mesh.runtimes["a"].load_bytes(save_b)
    mesh.runtimes["b"].load_bytes(save_a)
    assert mesh.converged()
    assert mesh.handles["a"].value() == 3


def test_load_of_save_equals_replay_of_envelopes():
    """Op/state equivalence, checked with an independent replay oracle."""
    mesh = Mesh(("a", "b"), build_counter)
    mesh.handles["a"].add(1)
    mesh.pump("a", "b")
    mesh.handles["b"].add(2)
    mesh.sync()

    by_load = Runtime("x")
    build_counter(by_load)
    by_load.load_bytes(mesh.runtimes["a"].save_bytes())

    by_replay = Runtime("y")
    build_counter(by_replay)
    for rid in mesh.ids:
        for env in mesh.log[rid]:
            by_replay.receive(env.encode())

    assert by_load.digest() == by_replay.digest() == mesh.runtimes["a"].digest()


def test_load_unblocks_buffered_envelopes():
    mesh = Mesh(("a", "b", "c"), build_counter)
    mesh.handles["a"].add(1)
    mesh.pump("a", "b")
    mesh.handles["b"].add(1)  # depends on a1
    c = mesh.runtimes["c"]
    assert c.receive(mesh.log["b"][0].encode()) == []  # buffered: needs a1
    drained = c.load_bytes(mesh.runtimes["a"].save_bytes())  # covers a1
    assert [d.meta.sender for d in drained] == [Dot("b", 1)]
    assert mesh.handles["c"].value() == 2


def test_load_unknown_root_fails_and_leaves_state():
    runtime = Runtime("a")
    counter = build_counter(runtime)
    counter.add(1)

    other = Runtime("b")
    other.register("other-root", CCounter).add(9)
    data = other.save_bytes()
    before = runtime.digest()
    with pytest.raises(LoadError):
        runtime.load_bytes(data)
    assert runtime.digest() == before
    assert runtime.vc.entries == {"a": 1}


def test_load_garbage_raises_decode_error():
    runtime = Runtime("a")
    build_counter(runtime)
    with pytest.raises(DecodeError):
        runtime.load_bytes(b"not a save")


def test_save_load_merge_commutes_and_is_idempotent():
    mesh = Mesh(("a", "b", "c"), build_counter)
    mesh.handles["a"].add(1)
    mesh.handles["b"].add(2)
    mesh.handles["c"].add(3)
    saves = {rid: mesh.runtimes[rid].save_bytes() for rid in mesh.ids}

    def merged(order):
        runtime = Runtime("m")
        build_counter(runtime)
        for rid in order:
            runtime.load_bytes(saves[rid])
        return runtime.digest()

    assert merged("abc") == merged("cba") == merged("bac")
    assert merged("abcabc") == merged("abc")  # twice == once

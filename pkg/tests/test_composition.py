import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ism.composition import (AlphabetMismatch, Channel, Endpoint, FeedbackAlphabetMismatch,
                             IterationCapExceeded, NotSimple, PortAlreadyCoupled, SelfCoupling,
                             TickCoupling, UnknownPort, compose_loop, compose_parallel,
                             compose_sequential, compose_while, io_table, make_channel, output_env,
                             pair_char, product)
from ism.core import (Transition, TransitionSystem, inport, is_deterministic, make_system, outport,
                      reachable_states, validate_system)

from .corpus import OUT_CHARS, random_system
from .test_core import train


def increment(top=9, name="inc"):
    """Stateless successor on v0..v{top}; undefined on the last value."""
    vals = [f"v{k}" for k in range(top + 1)]
    return make_system(name, {"s"}, "s", {"i": set(vals)}, {"o": set(vals)},
                       [("s", "s", f"i.v{k}", f"o.v{k + 1}") for k in range(top)])


def identity(alphabet, name="id"):
    return make_system(name, {"s"}, "s", {"i": set(alphabet)}, {"o": set(alphabet)},
                       [("s", "s", f"i.{c}", f"o.{c}") for c in alphabet])


def counter(n=3, name="cnt"):
    """Counts ticks modulo n and reports the count."""
    return make_system(name, {f"c{k}" for k in range(n)}, "c0", {"i": {"t"}}, {"o": {f"n{k}" for k in range(n)}},
                       [(f"c{k}", f"c{(k + 1) % n}", "i.t", f"o.n{(k + 1) % n}") for k in range(n)])


def apply_table(ts, chars):
    q, out = ts.initial, []
    table = io_table(ts)
    for c in chars:
        if (q, c) not in table:
            return None
        o, q = table[(q, c)]
        out.append(o)
    return out


def test_channel_examples(bridge_model):
    t1, ctrl = bridge_model.system("train1"), bridge_model.system("controller")
    ch = make_channel(Endpoint("t1", t1, "out"), Endpoint("ctrl", ctrl, "in1"))
    assert str(ch) == "t1.out->ctrl.in1"
    with pytest.raises(PortAlreadyCoupled):
        make_channel(Endpoint("t2", t1, "out"), Endpoint("ctrl", ctrl, "in1"), [ch])
    with pytest.raises(PortAlreadyCoupled):
        make_channel(Endpoint("t1", t1, "out"), Endpoint("ctrl", ctrl, "in2"), [ch])
    with pytest.raises(SelfCoupling):
        make_channel(Endpoint("t1", t1, "out"), Endpoint("t1", t1, "in"))
    with pytest.raises(UnknownPort):
        make_channel(Endpoint("t1", t1, "nope"), Endpoint("ctrl", ctrl, "in1"))


def test_alphabet_mismatch():
    a = make_system("a", {"s"}, "s", {}, {"o": {"a", "b"}})
    b = make_system("b", {"s"}, "s", {"i": {"a"}}, {})
    with pytest.raises(AlphabetMismatch, match="'b'"):
        make_channel(Endpoint("a", a, "o"), Endpoint("b", b, "i"))


def test_tick_port_cannot_be_coupled():
    a = make_system("a", {"s"}, "s", {}, {"tick": {"t"}})
    b = make_system("b", {"s"}, "s", {"i": {"t"}}, {})
    with pytest.raises(TickCoupling):
        make_channel(Endpoint("a", a, "tick"), Endpoint("b", b, "i"))


def test_bridge_product_is_small(bridge):
    prod = bridge.product
    assert len(prod.states) <= 27
    assert prod.initial == ("away", "away", "aa")
    assert not prod.dropped


def test_single_component_product_is_isomorphic():
    ts = train()
    prod = product([ts])
    assert {s[0] for s in prod.states} == reachable_states(ts)
    assert {(pt.source[0], pt.target[0], pt.mover(0)) for pt in prod.transitions} == \
        {(t.source, t.target, t) for t in ts.transitions}


def test_free_product_interleaves():
    a, b = train("a"), counter(name="b")
    prod = product([a, b])
    assert len(prod.states) == 3 * 3
    for pt in prod.transitions:
        assert len(pt.moves) == 1


def test_rendezvous_moves_sender_and_receiver(bridge):
    prod = bridge.product
    first = prod.successors(prod.initial)
    assert first
    for pt in first:
        (ch, char), = pt.channels
        assert char == "arrived"
        assert len(pt.moves) == 2


def test_sender_without_receiver_is_recorded():
    snd = make_system("snd", {"s"}, "s", {}, {"o": {"a", "b"}}, [("s", "s", None, "o.b")])
    rcv = make_system("rcv", {"r"}, "r", {"i": {"a", "b"}}, {}, [("r", "r", "i.a", None)])
    prod = product([snd, rcv], [Channel("snd", "o", "rcv", "i")])
    assert [d.char for d in prod.dropped] == ["b"]
    assert prod.transitions == []
    assert prod.blocked and prod.blocked[0].char == "b"


def test_unknown_component_in_channel():
    with pytest.raises(UnknownPort):
        product([train()], [Channel("train", "out", "ghost", "in")])


def test_flattened_product_is_a_valid_system(bridge):
    flat = bridge.product.to_system()
    assert len(flat.states) == len(bridge.product.states)
    assert bridge.product.edge_list().startswith(f"# {len(flat.states)} states")


def test_sequential_increment_twice():
    inc = increment(3)
    twice = compose_sequential(inc, inc)
    table = {c: o for (_, c), (o, _) in io_table(twice).items()}
    assert table == {"v0": "v2", "v1": "v3"}
    assert twice.outputs[0].name == "o" and twice.inputs[0].name == "i"


def test_sequential_with_identity_keeps_table():
    inc = increment(3)
    both = compose_sequential(inc, identity(sorted(inc.outputs[0].alphabet)))
    assert {c: o for (_, c), (o, _) in io_table(both).items()} == \
        {c: o for (_, c), (o, _) in io_table(inc).items()}


def test_sequential_requires_simple_systems(tank):
    bad = make_system("g", {"a", "b"}, "a", {"i": {"v1"}}, {"o": {"v1"}},
                      [("a", "a", "i.v1", "o.v1"), ("a", "b", "i.v1", "o.v1")])
    with pytest.raises(NotSimple, match="not deterministic"):
        compose_sequential(increment(1), bad)
    with pytest.raises(NotSimple, match="exactly one"):
        compose_sequential(tank, increment())
    with pytest.raises(AlphabetMismatch):
        compose_sequential(increment(3), increment(2))


def test_parallel_of_identities_is_identity_on_pairs():
    par = compose_parallel(identity(["a", "b"]), identity(["c"], name="id2"))
    assert {c: o for (_, c), (o, _) in io_table(par).items()} == {
        pair_char("a", "c"): pair_char("a", "c"), pair_char("b", "c"): pair_char("b", "c")}


def test_parallel_counter_with_stateless():
    par = compose_parallel(counter(3), increment(2))
    assert len(par.states) == 3
    # pairwise enumeration oracle
    for seq in (["v0", "v1", "v0", "v1"], ["v1", "v1", "v0"]):
        got = apply_table(par, [pair_char("t", c) for c in seq])
        cnt = apply_table(counter(3), ["t"] * len(seq))
        inc = apply_table(increment(2), seq)
        assert got == [pair_char(a, b) for a, b in zip(cnt, inc)]


def test_loop_three_increments():
    loop = compose_loop(increment(9), 3)
    assert apply_table(loop, ["v2"]) == ["v5"]
    assert apply_table(loop, ["v7"]) is None


def test_loop_once_is_the_body():
    inc = increment(9)
    assert io_table(compose_loop(inc, 1)) == io_table(inc)
    with pytest.raises(ValueError):
        compose_loop(inc, 0)


def test_while_stops_at_first_failing_output():
    loop = compose_while(increment(10), "value < 10")
    assert apply_table(loop, ["v7"]) == ["v10"]
    assert apply_table(loop, ["v0"]) == ["v10"]
    assert output_env("v10") == {"out": "v10", "value": 10}


def test_while_with_callable_predicate():
    loop = compose_while(increment(10), lambda env: env["value"] < 4)
    assert apply_table(loop, ["v1"]) == ["v4"]
    assert apply_table(loop, ["v6"]) == ["v7"]


def test_while_cap():
    flip = make_system("flip", {"s"}, "s", {"i": {"a", "b"}}, {"o": {"a", "b"}},
                       [("s", "s", "i.a", "o.b"), ("s", "s", "i.b", "o.a")])
    with pytest.raises(IterationCapExceeded):
        compose_while(flip, "true", cap=50)


def test_feedback_alphabet_checked():
    ts = make_system("f", {"s"}, "s", {"i": {"a"}}, {"o": {"b"}}, [("s", "s", "i.a", "o.b")])
    with pytest.raises(FeedbackAlphabetMismatch):
        compose_loop(ts, 2)


# random simple systems -----------------------------------------------------

ALPHA = ("a", "b", "c")


def random_simple(rng, name, alphabet=ALPHA, max_states=3, partial=0.15):
    n = rng.randint(1, max_states)
    trans = set()
    for q in range(n):
        for c in alphabet:
            if rng.random() >= partial:
                trans.add(Transition(f"s{q}", f"s{rng.randrange(n)}", ("i", c), ("o", rng.choice(alphabet))))
    return validate_system(TransitionSystem(name, frozenset(f"s{q}" for q in range(n)), "s0",
                                            (inport("i", alphabet),), (outport("o", alphabet),),
                                            frozenset(trans)))


def run_chain(systems, chars):
    """Direct oracle: push each character through the chain, one system after another."""
    tables = [io_table(s) for s in systems]
    states = [s.initial for s in systems]
    out = []
    for c in chars:
        for k, table in enumerate(tables):
            if (states[k], c) not in table:
                return out, False
            c, states[k] = table[(states[k], c)]
        out.append(c)
    return out, True


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=150, deadline=None)
@given(seeds, st.lists(st.sampled_from(ALPHA), max_size=6))
def test_sequential_associative(seed, word):
    rng = random.Random(seed)
    f, g, h = (random_simple(rng, n) for n in "fgh")
    left = compose_sequential(compose_sequential(f, g), h)
    right = compose_sequential(f, compose_sequential(g, h))
    expected, complete = run_chain([f, g, h], word)
    for ts in (left, right):
        got = apply_table(ts, word)
        assert got == (expected if complete else None)


@settings(max_examples=150, deadline=None)
@given(seeds, st.lists(st.sampled_from(ALPHA), max_size=6), st.integers(1, 4))
def test_loop_is_repeated_sequence(seed, word, n):
    f = random_simple(random.Random(seed), "f")
    loop = compose_loop(f, n)
    # loop n matches running f n times on every character, sharing f's state
    q, out, ok = f.initial, [], True
    table = io_table(f)
    for c in word:
        for _ in range(n):
            if (q, c) not in table:
                ok = False
                break
            c, q = table[(q, c)]
        if not ok:
            break
        out.append(c)
    assert apply_table(loop, word) == (out if ok else None)


def widen(ts):
    """Let every input port also read the shared output alphabet."""
    return validate_system(TransitionSystem(ts.name, ts.states, ts.initial,
                                            tuple(inport(p.name, set(p.alphabet) | set(OUT_CHARS))
                                                  for p in ts.inputs),
                                            ts.outputs, ts.transitions, ts.accepting))


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_projection_soundness(seed):
    rng = random.Random(seed)
    a = random_system(rng, "a", max_states=4)
    b = widen(random_system(rng, "b", max_states=4))
    prod = product([a, b], [Channel("a", "out", "b", "in0")])
    comps = prod.systems
    for pt in prod.transitions:
        for k in range(2):
            t = pt.mover(k)
            if t is None:
                assert pt.source[k] == pt.target[k]
            else:
                assert t in comps[k].transitions
                assert (t.source, t.target) == (pt.source[k], pt.target[k])
        for ch, char in pt.channels:
            assert pt.mover(0).output == (ch.src_port, char)
            assert pt.mover(1).input == (ch.dst_port, char)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_total_coupling_of_simple_systems_is_deterministic(seed):
    rng = random.Random(seed)
    f, g = random_simple(rng, "f"), random_simple(rng, "g")
    prod = product([f, g], [Channel("f", "o", "g", "i")])
    assert is_deterministic(prod.to_system())

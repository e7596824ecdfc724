"""Seeded generators for systems and model files, plus brute-force oracles.

The oracles work on the raw transition list and never touch the indexes or
helpers of the library, so they are independent checks.
"""
from __future__ import annotations

import itertools
import random
from functools import lru_cache
from pathlib import Path

from ism.composition import Channel
from ism.core import Transition, TransitionSystem, inport, outport, validate_system
from ism.dsl import DocClassDecl, ModelFile, PartitionDecl, ProtocolDecl
from ism.predicates import And, Compare, Const, Lit, Not, Or, Ref

MODELS = Path(__file__).resolve().parent.parent / "src" / "ism" / "models"
CHARS = ("a", "b", "c", "d")
OUT_CHARS = ("x", "y", "z")


def random_system(rng: random.Random, name="s", max_states=5, max_chars=4, eps_rate=0.25,
                  density=None):
    """Random system with at most ``max_states`` states and ``max_chars`` input characters."""
    n = rng.randint(1, max_states)
    states = [f"q{k}" for k in range(n)]
    n_ports = rng.randint(1, 3)
    chars = list(CHARS[:rng.randint(1, max_chars)])
    rng.shuffle(chars)
    ports = []
    # deal characters out to ports, every port gets at least one
    n_ports = min(n_ports, len(chars))
    for k in range(n_ports):
        ports.append([chars[k]])
    for c in chars[n_ports:]:
        ports[rng.randrange(n_ports)].append(c)
    inputs = [inport(f"in{k}", cs) for k, cs in enumerate(ports)]
    outputs = [outport("out", OUT_CHARS[:rng.randint(1, 3)])]
    in_labels = [None] + [(p.name, c) for p in inputs for c in sorted(p.alphabet)]
    out_labels = [None] + [("out", c) for c in sorted(outputs[0].alphabet)]
    density = density if density is not None else rng.uniform(0.3, 1.6)
    trans = set()
    for _ in range(int(density * n * len(in_labels)) + 1):
        src, dst = rng.choice(states), rng.choice(states)
        i = None if rng.random() < eps_rate else rng.choice(in_labels[1:])
        trans.add(Transition(src, dst, i, rng.choice(out_labels)))
    accepting = frozenset(s for s in states if rng.random() < 0.4)
    return validate_system(TransitionSystem(name, frozenset(states), states[0], tuple(inputs),
                                            tuple(outputs), frozenset(trans), accepting))


@lru_cache(maxsize=None)
def corpus(size=300, seed=2024) -> tuple:
    rng = random.Random(seed)
    return tuple(random_system(rng, f"c{k}") for k in range(size))


def labels_of(ts) -> list:
    return [None] + [(p.name, c) for p in ts.inputs for c in sorted(p.alphabet)]


# oracles --------------------------------------------------------------------

def raw(ts) -> list:
    return [(t.source, t.target, t.input, t.output) for t in ts.transitions]


def oracle_meaning(edges, p, i) -> frozenset:
    return frozenset((o, q) for s, q, i2, o in edges if s == p and i2 == i)


def oracle_sequence(edges, p, seq) -> frozenset:
    """Enumerate every path that consumes ``seq`` one transition per character."""
    results = set()

    def walk(state, k, outs):
        if k == len(seq):
            results.add((tuple(outs), state))
            return
        for s, q, i, o in edges:
            if s == state and i == seq[k]:
                walk(q, k + 1, outs + [o])

    walk(p, 0, [])
    return frozenset(results)


def oracle_reachable(edges, initial) -> set:
    seen = {initial}
    changed = True
    while changed:
        changed = False
        for s, q, _, _ in edges:
            if s in seen and q not in seen:
                seen.add(q)
                changed = True
    return seen


def oracle_port_nondeterministic(ts, port) -> bool:
    """Brute force over the projection onto one input component, reachable sources only."""
    succ = {}
    edges = raw(ts)
    live = oracle_reachable(edges, ts.initial)
    for s, q, i, o in edges:
        if s not in live:
            continue
        key = (i[1] if i is not None and i[0] == port else None, s)
        succ.setdefault(key, set()).add(q)
    return any(len(v) > 1 for v in succ.values())


def sequences(labels, max_len=3):
    for n in range(1, max_len + 1):
        yield from itertools.product(labels, repeat=n)


# renaming ---------------------------------------------------------------------

def random_renaming(rng: random.Random, ts):
    def fresh(prefix, items):
        pool = rng.sample(range(1000), len(items))
        return {x: f"{prefix}{n}" for x, n in zip(sorted(items), pool)}

    states = fresh("r", ts.states)
    chars = fresh("k", {c for p in ts.inputs + ts.outputs for c in p.alphabet})
    ports = fresh("p", {p.name for p in ts.inputs + ts.outputs})
    return states, chars, ports


# model files --------------------------------------------------------------------

def _random_predicate(rng: random.Random, names, depth=0):
    roll = rng.random()
    if depth > 2 or roll < 0.4:
        if rng.random() < 0.15:
            return Const(rng.random() < 0.5)
        op = rng.choice(["=", "!=", "<", "<=", ">", ">="])
        right = Lit(rng.randint(-3, 5)) if rng.random() < 0.7 else Ref(rng.choice(names))
        return Compare(op, Ref(rng.choice(names)), right)
    if roll < 0.55:
        return Not(_random_predicate(rng, names, depth + 1))
    cls = And if roll < 0.8 else Or
    return cls(_random_predicate(rng, names, depth + 1), _random_predicate(rng, names, depth + 1))


def random_model(rng: random.Random) -> ModelFile:
    m = ModelFile()
    if rng.random() < 0.7:
        m.name = f"m{rng.randrange(100)}"
        if rng.random() < 0.5:
            m.version = f"{rng.randrange(5)}.{rng.randrange(10)}"
    n_sys = rng.randint(0, 3)
    for k in range(n_sys):
        ts = random_system(rng, f"sys{k}", max_states=4)
        # widen input alphabets so any "out" port can feed any input port
        wide = tuple(inport(p.name, set(p.alphabet) | set(OUT_CHARS)) for p in ts.inputs)
        if rng.random() < 0.8 and not ts.accepting:
            acc = frozenset({ts.initial})
        else:
            acc = ts.accepting
        m.systems[ts.name] = validate_system(TransitionSystem(
            ts.name, ts.states, ts.initial, wide, ts.outputs, ts.transitions, acc))
    roles_pool = [n for n, s in m.systems.items() if s.accepting]
    if roles_pool and rng.random() < 0.8:
        for pk in range(rng.randint(1, 2)):
            roles = [(f"r{j}", rng.choice(roles_pool)) for j in range(rng.randint(1, 3))]
            used_out, used_in, chans = set(), set(), set()
            for _ in range(rng.randint(0, 3)):
                (ra, sa), (rb, sb) = rng.sample(roles, 2) if len(roles) > 1 else (roles[0], roles[0])
                if ra == rb:
                    continue
                ip = rng.choice(m.systems[sb].inputs).name
                if (ra, "out") in used_out or (rb, ip) in used_in:
                    continue
                used_out.add((ra, "out"))
                used_in.add((rb, ip))
                chans.add(Channel(ra, "out", rb, ip))
            m.protocols[f"proto{pk}"] = ProtocolDecl(f"proto{pk}", tuple(roles), frozenset(chans))
    for dk in range(rng.randint(0, 2) if m.systems else 0):
        sname = rng.choice(sorted(m.systems))
        ts = m.systems[sname]
        parse = {}
        idx = 0
        for p in ts.inputs + ts.outputs:
            for c in sorted(p.alphabet):
                if rng.random() < 0.85:
                    params = (("n", idx),) if rng.random() < 0.8 else ()
                    cls = rng.choice(["alpha", "beta", "gamma"]) if params else f"solo{idx}"
                    parse[(p.name, c)] = (cls, params)
                    idx += 1
        modes = None
        if rng.random() < 0.5:
            modes = {q: (rng.choice(["m0", "m1"]), (("v", rng.randint(-2, 4)),) if rng.random() < 0.7 else ())
                     for q in ts.states}
        conds = {f"c{j}": _random_predicate(rng, ["v", "n", "w"]) for j in range(rng.randint(0, 3))}
        m.docclasses[f"dc{dk}"] = DocClassDecl(f"dc{dk}", sname, parse, modes, conds)
    for pk in range(rng.randint(0, 2) if m.systems else 0):
        sname = rng.choice(sorted(m.systems))
        classes = {}
        for t in m.systems[sname].transitions:
            classes.setdefault(f"k{rng.randrange(3)}", set()).add(t)
        m.partitions[f"part{pk}"] = PartitionDecl(f"part{pk}", sname,
                                                  {k: frozenset(v) for k, v in classes.items()})
    return m

"""Coupling systems through idealized channels.

Channels use synchronous rendezvous: a transition emitting ``x`` on a coupled
output port fires in the same product step as a transition consuming ``x`` on
the coupled input port.  Uncoupled input ports stay open to the environment
and uncoupled outputs stay observable.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .core import (TICK, ModelError, Port, Transition, TransitionSystem, ValidatedSystem,
                   inport, is_deterministic, outport, state_name, validate_system)
from .predicates import as_predicate

DEFAULT_ITERATION_CAP = 10_000


class ChannelError(ModelError):
    pass


class AlphabetMismatch(ChannelError):
    pass


class PortAlreadyCoupled(ChannelError):
    pass


class SelfCoupling(ChannelError):
    pass


class UnknownPort(ChannelError):
    pass


class TickCoupling(ChannelError):
    pass


class NotSimple(ModelError):
    pass


class FeedbackAlphabetMismatch(ModelError):
    pass


class IterationCapExceeded(ModelError):
    pass


class Endpoint(NamedTuple):
    role: str
    system: ValidatedSystem
    port: str


@dataclass(frozen=True, order=True)
class Channel:
    src_role: str
    src_port: str
    dst_role: str
    dst_port: str

    @property
    def name(self) -> str:
        return f"{self.src_role}.{self.src_port}->{self.dst_role}.{self.dst_port}"

    def __str__(self):
        return self.name


def make_channel(src: Endpoint, dst: Endpoint, existing: Sequence[Channel] = ()) -> Channel:
    if src.role == dst.role:
        raise SelfCoupling(f"cannot couple role {src.role!r} with itself")
    out = src.system.output_port(src.port)
    if out is None:
        raise UnknownPort(f"{src.role} has no output port {src.port!r}")
    inp = dst.system.input_port(dst.port)
    if inp is None:
        raise UnknownPort(f"{dst.role} has no input port {dst.port!r}")
    if TICK in (src.port, dst.port):
        raise TickCoupling(f"the {TICK!r} port is internal and cannot be coupled")
    if not out.alphabet <= inp.alphabet:
        extra = sorted(out.alphabet - inp.alphabet)
        raise AlphabetMismatch(f"{src.role}.{src.port} can send {extra}, "
                               f"which {dst.role}.{dst.port} cannot receive")
    for ch in existing:
        if (ch.src_role, ch.src_port) == (src.role, src.port):
            raise PortAlreadyCoupled(f"{src.role}.{src.port} is already coupled by {ch}")
        if (ch.dst_role, ch.dst_port) == (dst.role, dst.port):
            raise PortAlreadyCoupled(f"{dst.role}.{dst.port} is already coupled by {ch}")
    return Channel(src.role, src.port, dst.role, dst.port)


@dataclass(frozen=True)
class ProductTransition:
    source: tuple
    target: tuple
    moves: tuple                    # ((role_index, Transition), ...) sorted by index
    channels: tuple                 # ((Channel, char), ...) in firing order
    env_input: Optional[tuple] = None     # (role_index, Label)
    observable: Optional[tuple] = None    # (role_index, Label)

    def mover(self, index: int) -> Optional[Transition]:
        for i, t in self.moves:
            if i == index:
                return t
        return None


@dataclass(frozen=True)
class SenderWithoutReceiver:
    role: str
    transition: Transition
    channel: Channel
    char: str

    def __str__(self):
        return (f"{self.role}: {self.transition} emits {self.char!r} on {self.channel} "
                f"but {self.channel.dst_role} never consumes it")


@dataclass(frozen=True)
class BlockedEmission:
    """A sender able to emit at ``state`` whose receiver cannot consume."""

    state: tuple
    role: str
    transition: Transition
    channel: Channel
    char: str
    receiver_state: object


class ProductSystem:
    """Reachable part of the channel-restricted product of components."""

    def __init__(self, components, channels: Sequence[Channel] = (), max_states: int = None):
        comps = []
        for c in components:
            if isinstance(c, tuple):
                comps.append((c[0], c[1]))
            else:
                comps.append((c.name, c))
        self.names = tuple(n for n, _ in comps)
        self.systems = tuple(validate_system(s) for _, s in comps)
        if len(set(self.names)) != len(self.names):
            raise ModelError(f"duplicate component names in {self.names}")
        self.index = {n: k for k, n in enumerate(self.names)}
        checked = []
        for ch in channels:
            for role in (ch.src_role, ch.dst_role):
                if role not in self.index:
                    raise UnknownPort(f"channel {ch} references unknown component {role!r}")
            checked.append(make_channel(
                Endpoint(ch.src_role, self.systems[self.index[ch.src_role]], ch.src_port),
                Endpoint(ch.dst_role, self.systems[self.index[ch.dst_role]], ch.dst_port),
                checked))
        self.channels = tuple(checked)
        self._out_chan = {(self.index[c.src_role], c.src_port): c for c in self.channels}
        self._in_coupled = {(self.index[c.dst_role], c.dst_port) for c in self.channels}
        self.dropped = self._static_drops()
        self.blocked = []
        self.initial = tuple(s.initial for s in self.systems)
        self._succ = {}
        self._parent = {}
        self.states = []
        self._explore(max_states)

    # construction -------------------------------------------------------

    def _static_drops(self) -> tuple:
        drops = []
        for (k, port), ch in sorted(self._out_chan.items()):
            recv = self.systems[self.index[ch.dst_role]]
            consumed = {t.input[1] for t in recv.transitions
                        if t.input is not None and t.input[0] == ch.dst_port}
            for t in sorted(self.systems[k].transitions, key=Transition.sort_key):
                if t.output is not None and t.output[0] == port and t.output[1] not in consumed:
                    drops.append(SenderWithoutReceiver(self.names[k], t, ch, t.output[1]))
        return tuple(drops)

    def _chain(self, state, k, t, used):
        """Complete the rendezvous started by transition ``t`` of component ``k``."""
        out = t.output
        ch = self._out_chan.get((k, out[0])) if out is not None else None
        if ch is None:
            obs = (k, out) if out is not None else None
            return [(((k, t),), (), obs)]
        r = self.index[ch.dst_role]
        if r in used:
            return []
        consumers = self.systems[r].outgoing(state[r])
        consumers = [u for u in consumers if u.input == (ch.dst_port, out[1])]
        if not consumers:
            self.blocked.append(BlockedEmission(state, self.names[k], t, ch, out[1], state[r]))
            return []
        results = []
        for u in consumers:
            for moves, chans, obs in self._chain(state, r, u, used | {r}):
                results.append((((k, t),) + moves, ((ch, out[1]),) + chans, obs))
        return results

    def _expand(self, state) -> tuple:
        found = []
        for k, sys in enumerate(self.systems):
            for t in sys.outgoing(state[k]):
                if t.input is not None and (k, t.input[0]) in self._in_coupled:
                    continue
                env = (k, t.input) if t.input is not None else None
                for moves, chans, obs in self._chain(state, k, t, frozenset({k})):
                    target = list(state)
                    for i, u in moves:
                        target[i] = u.target
                    found.append(ProductTransition(state, tuple(target), tuple(sorted(moves, key=lambda m: m[0])),
                                                   chans, env, obs))
        found.sort(key=self.label)
        return tuple(found)

    def _explore(self, max_states):
        self._parent[self.initial] = None
        queue = deque([self.initial])
        while queue:
            s = queue.popleft()
            self.states.append(s)
            if max_states is not None and len(self.states) > max_states:
                raise ModelError(f"product exceeds {max_states} states")
            succ = self._expand(s)
            self._succ[s] = succ
            for pt in succ:
                if pt.target not in self._parent:
                    self._parent[pt.target] = pt
                    queue.append(pt.target)

    # queries ------------------------------------------------------------

    def successors(self, state) -> tuple:
        return self._succ.get(state, ())

    @property
    def transitions(self) -> list:
        return [pt for s in self.states for pt in self._succ[s]]

    def path_to(self, state) -> list:
        """Shortest sequence of product transitions from the initial state."""
        if state not in self._parent:
            raise KeyError(f"{state!r} is not reachable")
        path = []
        while self._parent[state] is not None:
            pt = self._parent[state]
            path.append(pt)
            state = pt.source
        return path[::-1]

    def accepting(self, state) -> bool:
        return all(q in s.accepting for q, s in zip(state, self.systems))

    def env(self, state) -> dict:
        return {n: state_name(q) for n, q in zip(self.names, state)}

    def format_state(self, state) -> str:
        return "(" + ",".join(state_name(q) for q in state) + ")"

    def label(self, pt: ProductTransition) -> str:
        return ",".join(f"{self.names[i]}:{t}" for i, t in pt.moves)

    def flat_port(self, k: int, port: str) -> str:
        return f"{self.names[k]}_{port}"

    def to_system(self, name: str = None) -> ValidatedSystem:
        """Flatten into a single system with identifier states and ports."""
        ins, outs = [], []
        for k, sys in enumerate(self.systems):
            for p in sys.inputs:
                if (k, p.name) not in self._in_coupled:
                    ins.append(inport(self.flat_port(k, p.name), p.alphabet))
            for p in sys.outputs:
                if (k, p.name) not in self._out_chan:
                    outs.append(outport(self.flat_port(k, p.name), p.alphabet))

        def flat(lab):
            if lab is None:
                return None
            k, (port, char) = lab
            return (self.flat_port(k, port), char)

        trans = {Transition(state_name(pt.source), state_name(pt.target), flat(pt.env_input),
                            flat(pt.observable)) for pt in self.transitions}
        return validate_system(TransitionSystem(
            name or "_".join(self.names), frozenset(state_name(s) for s in self.states),
            state_name(self.initial), tuple(ins), tuple(outs), frozenset(trans),
            frozenset(state_name(s) for s in self.states if self.accepting(s))))

    def is_deterministic(self) -> bool:
        return is_deterministic(self.to_system())

    def edge_list(self) -> str:
        """Plain edge list: one ``source target label`` line per transition."""
        lines = [f"# {len(self.states)} states, {len(self.transitions)} transitions",
                 f"initial {self.format_state(self.initial)}"]
        for pt in self.transitions:
            lines.append(f"{self.format_state(pt.source)} {self.format_state(pt.target)} {self.label(pt)}")
        return "\n".join(lines) + "\n"


def product(components, channels: Sequence[Channel] = (), max_states: int = None) -> ProductSystem:
    return ProductSystem(components, channels, max_states)


# simple-system composition ---------------------------------------------

def _require_simple(ts: ValidatedSystem, what: str):
    if len(ts.inputs) != 1 or len(ts.outputs) != 1:
        raise NotSimple(f"{what} {ts.name!r} needs exactly one input and one output port")
    if not is_deterministic(ts):
        raise NotSimple(f"{what} {ts.name!r} is not deterministic")
    for t in ts.transitions:
        if t.input is None or t.output is None:
            raise NotSimple(f"{what} {ts.name!r} has an epsilon transition {t}")


def _apply(ts: ValidatedSystem, q, char):
    """Single step of a simple system, or None where undefined."""
    hit = ts.lookup(q, (ts.inputs[0].name, char))
    if not hit:
        return None
    (out, nxt), = hit
    return out[1], nxt


def _build(name, initial, in_port: Port, out_port: Port, step_fn) -> ValidatedSystem:
    """Explore ``step_fn(state, char) -> (out_char, next) | None`` from ``initial``."""
    states, trans = {initial}, set()
    queue = deque([initial])
    while queue:
        q = queue.popleft()
        for c in sorted(in_port.alphabet):
            res = step_fn(q, c)
            if res is None:
                continue
            o, nxt = res
            trans.add(Transition(q, nxt, (in_port.name, c), (out_port.name, o)))
            if nxt not in states:
                states.add(nxt)
                queue.append(nxt)
    return validate_system(TransitionSystem(name, frozenset(states), initial, (in_port,),
                                            (out_port,), frozenset(trans)))


def compose_sequential(f: ValidatedSystem, g: ValidatedSystem, name: str = None) -> ValidatedSystem:
    """``g`` after ``f`` in one step; the coupling channel disappears."""
    _require_simple(f, "first operand")
    _require_simple(g, "second operand")
    if not f.outputs[0].alphabet <= g.inputs[0].alphabet:
        raise AlphabetMismatch(f"{f.name} outputs {sorted(f.outputs[0].alphabet - g.inputs[0].alphabet)} "
                               f"that {g.name} does not accept")

    def step_fn(q, c):
        qf, qg = q
        a = _apply(f, qf, c)
        if a is None:
            return None
        b = _apply(g, qg, a[0])
        if b is None:
            return None
        return b[0], (a[1], b[1])

    return _build(name or f"{f.name}_then_{g.name}", (f.initial, g.initial),
                  f.inputs[0], g.outputs[0], step_fn)


def pair_char(a: str, b: str) -> str:
    return f"{a}__{b}"


def compose_parallel(f: ValidatedSystem, g: ValidatedSystem, name: str = None) -> ValidatedSystem:
    _require_simple(f, "first operand")
    _require_simple(g, "second operand")
    fi, gi, fo, go = f.inputs[0], g.inputs[0], f.outputs[0], g.outputs[0]
    in_port = inport(f"{fi.name}_{gi.name}", {pair_char(a, b) for a in fi.alphabet for b in gi.alphabet})
    out_port = outport(f"{fo.name}_{go.name}", {pair_char(a, b) for a in fo.alphabet for b in go.alphabet})
    split = {pair_char(a, b): (a, b) for a in fi.alphabet for b in gi.alphabet}

    def step_fn(q, c):
        a, b = split[c]
        ra, rb = _apply(f, q[0], a), _apply(g, q[1], b)
        if ra is None or rb is None:
            return None
        return pair_char(ra[0], rb[0]), (ra[1], rb[1])

    return _build(name or f"{f.name}_par_{g.name}", (f.initial, g.initial), in_port, out_port, step_fn)


def _require_feedback(f: ValidatedSystem):
    _require_simple(f, "loop body")
    if not f.outputs[0].alphabet <= f.inputs[0].alphabet:
        raise FeedbackAlphabetMismatch(
            f"{f.name} outputs {sorted(f.outputs[0].alphabet - f.inputs[0].alphabet)} it cannot read back")


def compose_loop(f: ValidatedSystem, n: int, name: str = None) -> ValidatedSystem:
    """``f`` applied ``n`` times per composed step, output fed back as input."""
    _require_feedback(f)
    if n < 1:
        raise ValueError("loop count must be at least 1")

    def step_fn(q, c):
        for _ in range(n):
            r = _apply(f, q, c)
            if r is None:
                return None
            c, q = r
        return c, q

    return _build(name or f"{f.name}_loop{n}", f.initial, f.inputs[0], f.outputs[0], step_fn)


def trailing_int(char: str) -> Optional[int]:
    m = re.search(r"(\d+)$", char)
    return int(m.group(1)) if m else None


def output_env(char: str) -> dict:
    """Environment for predicates over an output: ``out`` and its ``value``."""
    env = {"out": char}
    v = trailing_int(char)
    if v is not None:
        env["value"] = v
    return env


def compose_while(f: ValidatedSystem, predicate, cap: int = DEFAULT_ITERATION_CAP,
                  name: str = None) -> ValidatedSystem:
    """Apply ``f`` until ``predicate`` rejects its output; that output is the result.

    ``predicate`` is predicate text, an AST, or a callable over the output
    environment (see :func:`output_env`).
    """
    _require_feedback(f)
    pred = as_predicate(predicate)

    def step_fn(q, c):
        for _ in range(cap):
            r = _apply(f, q, c)
            if r is None:
                return None
            c, q = r
            if not pred.evaluate(output_env(c)):
                return c, q
        raise IterationCapExceeded(f"{f.name}: no exit after {cap} iterations")

    return _build(name or f"{f.name}_while", f.initial, f.inputs[0], f.outputs[0], step_fn)


def io_table(ts: ValidatedSystem) -> dict:
    """``(state, input char) -> (output char, next)`` for a simple system."""
    return {(t.source, t.input[1]): (t.output[1], t.target) for t in ts.transitions}

"""Protocols: roles with acceptance states coupled by channels.

Analyses run on the reachable product graph:

* well-formedness: no open channels, every sent character has a non-empty
  meaning at the receiver's current state;
* consistency: deadlock (stuck non-accepting state), livelock (cycle that
  can never reach acceptance) and starvation (non-accepting cycle on which
  some role never moves, while acceptance is still reachable);
* safety: a state predicate holds on every reachable state.

Every finding carries a shortest witness trace that replays through
:func:`simulate` with a :class:`ScriptedResolver`.
"""
from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

from .composition import AlphabetMismatch, Channel, ProductSystem, ProductTransition, product
from .core import ModelError, ValidatedSystem, reachable_states, state_key, validate_system
from .graph import backward_reachable, has_cycle, shortest_cycle, strongly_connected_components
from .predicates import as_predicate
from .semantics import meaning

ANGELIC, DEMONIC = "angelic", "demonic"


class InvalidProtocol(ModelError):
    pass


class ReplayError(ModelError):
    pass


class ChannelViolation(ModelError):
    pass


@dataclass(frozen=True)
class Protocol:
    name: str
    roles: tuple          # ((role_name, ValidatedSystem), ...)
    channels: tuple = ()  # (Channel, ...)

    def __post_init__(self):
        roles = tuple((n, validate_system(s)) for n, s in self.roles)
        object.__setattr__(self, "roles", roles)
        chans = tuple(c if isinstance(c, Channel) else Channel(*c) for c in self.channels)
        object.__setattr__(self, "channels", chans)
        for n, s in roles:
            if not s.accepting:
                raise InvalidProtocol(f"role {n!r} ({s.name}) has no accepting state")
        self.product  # validates the channels eagerly

    @cached_property
    def product(self) -> ProductSystem:
        return product(self.roles, self.channels)

    def role(self, name: str) -> ValidatedSystem:
        return dict(self.roles)[name]


def _product_of(p) -> ProductSystem:
    return p.product if isinstance(p, Protocol) else p


# traces ------------------------------------------------------------------

@dataclass(frozen=True)
class Trace:
    initial: tuple
    steps: tuple = ()
    terminated_early: bool = False

    @property
    def final(self) -> tuple:
        return self.steps[-1].target if self.steps else self.initial

    @property
    def states(self) -> list:
        return [self.initial] + [pt.target for pt in self.steps]

    def __len__(self):
        return len(self.steps)


def channel_text(pt: ProductTransition) -> str:
    return ",".join(f"{ch.name}:{c}" for ch, c in pt.channels) or "-"


def trace_lines(prod: ProductSystem, trace: Trace) -> list:
    """One ``stateTuple | role:transition | channel:char`` line per step.

    A closing line ``finalState | - | -`` records where the trace ends.
    """
    lines = []
    for pt in trace.steps:
        lines.append(f"{prod.format_state(pt.source)} | {prod.label(pt)} | {channel_text(pt)}")
    lines.append(f"{prod.format_state(trace.final)} | - | -")
    return lines


def format_trace(prod, trace: Trace) -> str:
    return "\n".join(trace_lines(_product_of(prod), trace)) + "\n"


def _split_line(line: str):
    parts = [x.strip() for x in line.split(" | ")]
    if len(parts) != 3:
        raise ReplayError(f"malformed trace line: {line!r}")
    return parts


def script_from_trace(text: str) -> list:
    """The fired-transition column of every step line, usable as a script."""
    rows = [_split_line(l) for l in text.splitlines() if l.strip()]
    return [fired for _, fired, _ in rows if fired != "-"]


def replay_trace(p, text: str) -> Trace:
    """Re-execute a rendered trace step for step; raise on any divergence."""
    prod = _product_of(p)
    rows = [_split_line(l) for l in text.splitlines() if l.strip()]
    if not rows:
        raise ReplayError("empty trace")
    state = prod.initial
    steps = []
    for state_text, fired, chans in rows:
        if state_text != prod.format_state(state):
            raise ReplayError(f"expected state {state_text}, replay is at {prod.format_state(state)}")
        if fired == "-":
            break
        match = [pt for pt in prod.successors(state) if prod.label(pt) == fired]
        if not match:
            raise ReplayError(f"no transition {fired} from {state_text}")
        pt = match[0]
        got = channel_text(pt)
        if got != chans:
            raise ReplayError(f"channel record {chans} differs from replay {got}")
        steps.append(pt)
        state = pt.target
    return Trace(prod.initial, tuple(steps))


# findings ----------------------------------------------------------------

@dataclass
class Finding:
    kind: str
    message: str
    state: Optional[tuple] = None
    trace: Optional[Trace] = None
    role: Optional[str] = None
    cycle: tuple = ()
    details: dict = field(default_factory=dict)


@dataclass
class WellFormedReport:
    open_channels: list
    unprocessed: list

    @property
    def well_formed(self) -> bool:
        return not self.open_channels and not self.unprocessed

    @property
    def findings(self) -> list:
        return self.open_channels + self.unprocessed


@dataclass
class ConsistencyReport:
    deadlocks: list
    livelocks: list
    starvation: list

    @property
    def consistent(self) -> bool:
        return not (self.deadlocks or self.livelocks or self.starvation)

    @property
    def findings(self) -> list:
        return self.deadlocks + self.livelocks + self.starvation


def _path_trace(prod: ProductSystem, state, extra=()) -> Trace:
    return Trace(prod.initial, tuple(prod.path_to(state)) + tuple(extra))


def check_well_formed(p) -> WellFormedReport:
    prod = _product_of(p)
    open_found = {}
    for pt in prod.transitions:
        if pt.observable is not None:
            k, (port, char) = pt.observable
            key = (prod.names[k], port)
            if key not in open_found:
                open_found[key] = Finding(
                    "open-channel",
                    f"{key[0]}.{port} emits {char!r} but is not coupled",
                    pt.source, _path_trace(prod, pt.source, (pt,)), key[0],
                    details={"port": port, "char": char})
    unprocessed = []
    for b in prod.blocked:
        receiver = b.channel.dst_role
        rsys = prod.systems[prod.index[receiver]]
        lab = (b.channel.dst_port, b.char)
        assert not meaning(rsys, b.receiver_state, lab)
        unprocessed.append(Finding(
            "unprocessed",
            f"{b.role} can send {b.char!r} on {b.channel} but {receiver} has no meaning "
            f"for {lab[0]}.{lab[1]} in state {b.receiver_state}",
            b.state, _path_trace(prod, b.state), receiver,
            details={"sender": b.role, "transition": str(b.transition), "channel": b.channel.name,
                     "char": b.char, "receiver_state": b.receiver_state, "port": lab[0]}))
    return WellFormedReport(list(open_found.values()), unprocessed)


def accepting_states(p) -> frozenset:
    prod = _product_of(p)
    return frozenset(s for s in prod.states if prod.accepting(s))


def _is_env_idle(pt: ProductTransition) -> bool:
    return pt.env_input is not None and pt.target == pt.source


def _fair_closed(prod, component, allowed):
    """Sub-components a strongly fair scheduler cannot leave."""
    result = []
    work = [set(component)]
    while work:
        region = work.pop()
        changed = True
        while changed:
            changed = False
            for s in sorted(region, key=state_key):
                exits = [pt for pt in prod.successors(s)
                         if not _is_env_idle(pt) and (pt.target not in region or not allowed(pt))]
                if exits:
                    region.discard(s)
                    changed = True
        if not region:
            continue
        succ = lambda s: [pt.target for pt in prod.successors(s) if allowed(pt) and pt.target in region]
        comps = [c for c in strongly_connected_components(sorted(region, key=state_key), succ)
                 if has_cycle(c, succ)]
        if len(comps) == 1 and set(comps[0]) == region:
            result.append(comps[0])
        else:
            work.extend(set(c) for c in comps)
    return result


def _cyclic_components(prod, region: set, allowed, fair: bool) -> list:
    order = [s for s in prod.states if s in region]
    succ = lambda s: [pt.target for pt in prod.successors(s) if allowed(pt) and pt.target in region]
    comps = [c for c in strongly_connected_components(order, succ) if has_cycle(c, succ)]
    if fair:
        comps = [c2 for c in comps for c2 in _fair_closed(prod, c, allowed)]
    position = {s: n for n, s in enumerate(prod.states)}
    return sorted((sorted(c, key=position.__getitem__) for c in comps),
                  key=lambda c: position[c[0]])


def _cycle_witness(prod, comp, allowed):
    members = set(comp)
    entry = comp[0]
    edges = lambda s: [(pt, pt.target) for pt in prod.successors(s)
                       if allowed(pt) and pt.target in members]
    cycle = tuple(shortest_cycle(entry, edges))
    return entry, cycle


def check_consistency(p, env: str = ANGELIC, fair: bool = False) -> ConsistencyReport:
    """Deadlock, livelock and starvation findings on the reachable product.

    ``env`` decides how open environment inputs count: ``angelic`` assumes
    they are always offered (a state left only with environment self-loops
    is still a deadlock); ``demonic`` lets the environment withhold them.
    ``fair`` drops cycles a strongly fair scheduler would leave.
    """
    if env not in (ANGELIC, DEMONIC):
        raise ValueError(f"env must be {ANGELIC!r} or {DEMONIC!r}")
    prod = _product_of(p)
    accepting = {s for s in prod.states if prod.accepting(s)}

    deadlocks = []
    for s in prod.states:
        if s in accepting:
            continue
        outs = prod.successors(s)
        if env == ANGELIC:
            progress = [pt for pt in outs if not _is_env_idle(pt)]
        else:
            progress = [pt for pt in outs if pt.env_input is None]
        if not progress:
            deadlocks.append(Finding("deadlock", f"stuck in non-accepting state {prod.format_state(s)}",
                                     s, _path_trace(prod, s)))

    preds = defaultdict(list)
    for pt in prod.transitions:
        preds[pt.target].append(pt.source)
    coreach = backward_reachable(accepting, prod.states, lambda s: preds[s])
    moving = lambda pt: not _is_env_idle(pt)

    livelocks = []
    doomed = set(prod.states) - coreach
    for comp in _cyclic_components(prod, doomed, moving, fair):
        entry, cycle = _cycle_witness(prod, comp, moving)
        livelocks.append(Finding(
            "livelock", f"cycle of {len(comp)} states from which no accepting state is reachable",
            entry, _path_trace(prod, entry, cycle), cycle=cycle,
            details={"component": [prod.format_state(s) for s in comp]}))

    starvation = []
    live = coreach - accepting
    for k, name in enumerate(prod.names):
        idle = lambda pt, k=k: moving(pt) and pt.mover(k) is None
        for comp in _cyclic_components(prod, live, idle, fair):
            entry, cycle = _cycle_witness(prod, comp, idle)
            starvation.append(Finding(
                "starvation", f"role {name} never moves on a non-accepting cycle of {len(comp)} states",
                entry, _path_trace(prod, entry, cycle), name, cycle,
                details={"component": [prod.format_state(s) for s in comp]}))
    return ConsistencyReport(deadlocks, livelocks, starvation)


@dataclass
class SafetyResult:
    holds: bool
    state: Optional[tuple] = None
    trace: Optional[Trace] = None


def verify_safety(p, predicate) -> SafetyResult:
    """Check ``predicate`` on every reachable state (breadth-first, so the
    first counterexample has a shortest trace)."""
    prod = _product_of(p)
    pred = as_predicate(predicate)
    for s in prod.states:
        if not pred.evaluate(prod.env(s)):
            return SafetyResult(False, s, _path_trace(prod, s))
    return SafetyResult(True)


# simulation ----------------------------------------------------------------

class SeededResolver:
    """Uniform choice among enabled transitions from a seeded generator."""

    def __init__(self, seed=0):
        self.rng = random.Random(seed)

    def __call__(self, prod, state, enabled):
        return self.rng.choice(enabled)


class ScriptedResolver:
    """Replays a list of transition labels (or indices into the enabled list)."""

    def __init__(self, script: Sequence):
        self.script = list(script)
        self.pos = 0

    def __call__(self, prod, state, enabled):
        if self.pos >= len(self.script):
            return None
        choice = self.script[self.pos]
        self.pos += 1
        if isinstance(choice, int):
            return enabled[choice]
        for pt in enabled:
            if prod.label(pt) == choice:
                return pt
        raise ReplayError(f"scripted step {choice!r} not enabled in {prod.format_state(state)}")


def _check_channels(prod: ProductSystem, pt: ProductTransition):
    for ch, char in pt.channels:
        sent = pt.mover(prod.index[ch.src_role])
        got = pt.mover(prod.index[ch.dst_role])
        if sent is None or got is None or sent.output != (ch.src_port, char) \
                or got.input != (ch.dst_port, char):
            raise ChannelViolation(f"{ch} carried {char!r} inconsistently in {prod.label(pt)}")


def simulate(p, steps: int, seed=0, resolver: Callable = None) -> Trace:
    """Run the product for at most ``steps`` steps.

    The trace stops early, flagged ``terminated_early``, when no transition
    is enabled; a scripted resolver that runs out of entries also stops it.
    """
    prod = _product_of(p)
    resolver = resolver or SeededResolver(seed)
    state = prod.initial
    taken = []
    early = False
    for _ in range(steps):
        enabled = list(prod.successors(state))
        if not enabled:
            early = True
            break
        pt = resolver(prod, state, enabled)
        if pt is None:
            break
        _check_channels(prod, pt)
        taken.append(pt)
        state = pt.target
    return Trace(prod.initial, tuple(taken), early)


# sender/receiver mismatch ------------------------------------------------

@dataclass(frozen=True)
class Mismatch:
    state: object
    character: tuple
    assumed: frozenset
    actual: frozenset


def mismatch_analysis(sender_model: ValidatedSystem, actual_receiver: ValidatedSystem,
                      channel) -> list:
    """Compare the sender's model of the receiver with the receiver itself.

    ``channel`` is a :class:`Channel` (its receiving port is used) or a port
    name.  Every reachable receiver state and every character of that port
    is checked.
    """
    port = channel.dst_port if isinstance(channel, Channel) else channel
    assumed_port = sender_model.input_port(port)
    actual_port = actual_receiver.input_port(port)
    if assumed_port is None or actual_port is None:
        raise AlphabetMismatch(f"port {port!r} missing from sender model or receiver")
    if assumed_port.alphabet != actual_port.alphabet:
        raise AlphabetMismatch(f"alphabets of {port!r} differ: {sorted(assumed_port.alphabet)} "
                               f"vs {sorted(actual_port.alphabet)}")
    out = []
    for q in sorted(reachable_states(actual_receiver), key=state_key):
        for c in sorted(actual_port.alphabet):
            lab = (port, c)
            assumed = frozenset(sender_model.lookup(q, lab)) if q in sender_model.states else frozenset()
            actual = frozenset(actual_receiver.lookup(q, lab))
            if assumed != actual:
                out.append(Mismatch(q, lab, assumed, actual))
    return out

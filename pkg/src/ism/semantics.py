"""Meaning of input characters at a receiver state.

The meaning of ``i`` at ``p`` is the set of ``(output, successor)`` pairs the
transition relation offers for it.  An empty set means ``i`` is not processed
at ``p``.  Sequence meanings keep epsilon outputs as ``None`` entries; use
:func:`observable` to compare them the way a channel would.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import Label, ModelError, ValidatedSystem, label_key, reachable_states, state_key


class CycleOfEpsilon(ModelError):
    """An epsilon-input cycle was found while closing a meaning set.

    ``partial`` holds the closure computed up to detection, ``cycle`` the
    offending states.
    """

    def __init__(self, message, partial, cycle):
        super().__init__(message)
        self.partial = partial
        self.cycle = cycle


class MissingContinuation(ModelError):
    pass


@dataclass(frozen=True)
class MeaningSet:
    system: str
    state: object
    input: Label
    pairs: frozenset

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, item):
        return item in self.pairs

    @property
    def scope(self) -> int:
        """Scope for interpretation: how many readings the receiver may pick."""
        return len(self.pairs)

    def sorted_pairs(self) -> list:
        return sorted(self.pairs, key=lambda p: (label_key(p[0]), state_key(p[1])))


def meaning(ts: ValidatedSystem, p, i: Label) -> MeaningSet:
    return MeaningSet(ts.name, p, i, frozenset(ts.lookup(p, i)))


def same_meaning(ts: ValidatedSystem, p, i: Label, i2: Label) -> bool:
    return frozenset(ts.lookup(p, i)) == frozenset(ts.lookup(p, i2))


@dataclass(frozen=True)
class Substitutability:
    per_state: dict
    everywhere: bool


def substitutable(ts: ValidatedSystem, i: Label, i2: Label) -> Substitutability:
    per_state = {p: same_meaning(ts, p, i, i2) for p in ts.sorted_states()}
    everywhere = all(per_state[p] for p in reachable_states(ts))
    return Substitutability(per_state, everywhere)


def _epsilon_cycle(ts: ValidatedSystem, starts: Iterable) -> list:
    """A cycle of epsilon-input transitions reachable from ``starts``, or []."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = defaultdict(int)
    for start in starts:
        if color[start] != WHITE:
            continue
        # iterative DFS keeping the grey path for cycle extraction
        path = [start]
        color[start] = GREY
        stack = [iter(sorted({q for _, q in ts.lookup(start, None)}, key=state_key))]
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                color[path.pop()] = BLACK
                stack.pop()
                continue
            if color[nxt] == GREY:
                return path[path.index(nxt):] + [nxt]
            if color[nxt] == WHITE:
                color[nxt] = GREY
                path.append(nxt)
                stack.append(iter(sorted({q for _, q in ts.lookup(nxt, None)}, key=state_key)))
    return []


def epsilon_closure_meaning(ts: ValidatedSystem, p, i: Label) -> MeaningSet:
    """Meaning of ``i`` at ``p`` extended along epsilon-input chains.

    Each closure pair carries the last non-epsilon output seen on its chain.
    Raises :class:`CycleOfEpsilon` if an epsilon-input cycle is reachable.
    """
    base = frozenset(ts.lookup(p, i))
    result = set(base)
    queue = deque(base)
    while queue:
        o, q = queue.popleft()
        for o2, q2 in ts.lookup(q, None):
            pair = (o2 if o2 is not None else o, q2)
            if pair not in result:
                result.add(pair)
                queue.append(pair)
    closure = MeaningSet(ts.name, p, i, frozenset(result))
    cycle = _epsilon_cycle(ts, sorted({q for _, q in base}, key=state_key))
    if cycle:
        raise CycleOfEpsilon(f"{ts.name}: epsilon cycle through {cycle}", closure, cycle)
    return closure


def meaning_of_sequence(ts: ValidatedSystem, p, seq: Sequence[Label]) -> frozenset:
    """All ``(outputs, final_state)`` along chains consuming ``seq`` from ``p``."""
    if not seq:
        raise ValueError("sequence must be non-empty")
    frontier = {((), p)}
    for i in seq:
        frontier = {(outs + (o,), q2) for outs, q in frontier for o, q2 in ts.lookup(q, i)}
    return frozenset(frontier)


def _as_sequences(m) -> frozenset:
    if isinstance(m, MeaningSet):
        return frozenset(((o,), q) for o, q in m.pairs)
    return frozenset(m)


def compose_meanings(m1, continuation: Mapping) -> frozenset:
    """``{(o1.o2, q2) | (o1, q1) in m1, (o2, q2) in continuation[q1]}``."""
    result = set()
    for o1, q1 in _as_sequences(m1):
        if q1 not in continuation:
            raise MissingContinuation(f"no continuation for state {q1!r}")
        for o2, q2 in _as_sequences(continuation[q1]):
            result.add((o1 + o2, q2))
    return frozenset(result)


def observable(seq_meaning) -> frozenset:
    """Drop epsilon outputs from each output sequence."""
    return frozenset((tuple(o for o in outs if o is not None), q)
                     for outs, q in _as_sequences(seq_meaning))


def meaning_partition(ts: ValidatedSystem, p) -> list:
    """Input characters grouped into classes of equal meaning at ``p``."""
    groups = defaultdict(list)
    for lab in ts.input_labels():
        groups[frozenset(ts.lookup(p, lab))].append(lab)
    return sorted((frozenset(g) for g in groups.values()),
                  key=lambda c: min(c))

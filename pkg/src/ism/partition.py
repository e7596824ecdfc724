"""Meaning-compatible partitions of a transition relation.

Covers deterministic sub-functions, the mode/rest "state pattern", the
deterministic/exceptional split of a nondeterministic relation, and the
document-class partition into extended-automaton edges.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional

from .core import (EPS, Label, ModelError, Transition, TransitionSystem, ValidatedSystem,
                   is_deterministic, reachable_states, sorted_transitions, state_key,
                   validate_system)
from .predicates import TRUE, as_predicate


class NotAPartition(ModelError):
    pass


class IncompatiblePartition(ModelError):
    pass


class NondeterministicSource(ModelError):
    pass


class InvalidProjection(ModelError):
    pass


class UnparsableCharacter(ModelError):
    pass


class AmbiguousCondition(ModelError):
    pass


class NonInvertibleParse(ModelError):
    pass


def fields(**values) -> tuple:
    """Named integer parameters in canonical (sorted) tuple form."""
    return tuple(sorted(values.items()))


@dataclass(frozen=True)
class PartitionSpec:
    classes: Mapping

    def __post_init__(self):
        object.__setattr__(self, "classes",
                           {k: frozenset(v) for k, v in dict(self.classes).items()})

    def class_of(self, t: Transition):
        for k, members in self.classes.items():
            if t in members:
                return k
        return None

    def check(self, ts: ValidatedSystem):
        seen = {}
        for k, members in self.classes.items():
            for t in members:
                if t not in ts.transitions:
                    raise NotAPartition(f"class {k!r} holds {t}, which is not a transition of {ts.name}")
                if t in seen:
                    raise NotAPartition(f"{t} lies in classes {seen[t]!r} and {k!r}")
                seen[t] = k
        missing = ts.transitions - seen.keys()
        if missing:
            raise NotAPartition(f"transitions not covered: {', '.join(map(str, sorted_transitions(missing)))}")


class Compatibility(NamedTuple):
    ok: bool
    witness: Optional[tuple] = None  # (i, i2, p, class_id)


def check_compatibility(ts: ValidatedSystem, part: PartitionSpec) -> Compatibility:
    part.check(ts)
    labels = ts.input_labels()
    for k in sorted(part.classes, key=str):
        members = part.classes[k]
        for t in sorted_transitions(members):
            if t.input is None:
                continue
            here = frozenset(ts.lookup(t.source, t.input))
            for i2 in labels:
                if i2 == t.input or frozenset(ts.lookup(t.source, i2)) != here:
                    continue
                if Transition(t.source, t.target, i2, t.output) not in members:
                    return Compatibility(False, (t.input, i2, t.source, k))
    return Compatibility(True)


def partition_deterministic(ts: ValidatedSystem, part: PartitionSpec) -> dict:
    """One lookup table ``(input, state) -> (output, next)`` per class."""
    if not is_deterministic(ts):
        raise NondeterministicSource(f"{ts.name} is not deterministic")
    compat = check_compatibility(ts, part)
    if not compat.ok:
        raise IncompatiblePartition(f"partition is not meaning-compatible: {compat.witness}")
    return {k: {(t.input, t.source): (t.output, t.target) for t in members}
            for k, members in part.classes.items()}


def _check_projection(ts: ValidatedSystem, projection: Mapping):
    missing = [q for q in ts.sorted_states() if q not in projection]
    if missing:
        raise InvalidProjection(f"mode projection undefined for {missing}")
    images = {}
    for q in ts.states:
        img = projection[q]
        if img in images:
            raise InvalidProjection(f"states {images[img]!r} and {q!r} share projection {img!r}")
        images[img] = q


def state_pattern(ts: ValidatedSystem, part: PartitionSpec, projection: Mapping) -> dict:
    """Split every class table by the mode of its source state.

    ``projection`` maps each state to ``(mode, rest)``; the result maps
    ``(class_id, mode)`` to a table ``(input, rest) -> (output, next)``.
    """
    tables = partition_deterministic(ts, part)
    _check_projection(ts, projection)
    out = defaultdict(dict)
    for k, table in tables.items():
        for (i, p), value in table.items():
            mode, rest = projection[p]
            out[(k, mode)][(i, rest)] = value
    return dict(out)


def recompose_state_pattern(pattern: Mapping, projection: Mapping) -> dict:
    inverse = {img: q for q, img in projection.items()}
    tables = defaultdict(dict)
    for (k, mode), table in pattern.items():
        for (i, rest), value in table.items():
            tables[k][(i, inverse[(mode, rest)])] = value
    return dict(tables)


def split_exceptions(ts: ValidatedSystem) -> tuple:
    """``(deterministic, exceptional)`` transition sets.

    Per ``(state, input)`` the canonically first transition is kept; at a
    state offering both spontaneous and input-driven transitions the
    spontaneous ones are exceptional.
    """
    det, exc = set(), set()
    for q in ts.sorted_states():
        out = ts.outgoing(q)
        mixed = any(t.input is None for t in out) and any(t.input is not None for t in out)
        taken = set()
        for t in out:  # already in canonical order
            if (mixed and t.input is None) or t.input in taken:
                exc.add(t)
            else:
                det.add(t)
                taken.add(t.input)
    return frozenset(det), frozenset(exc)


def subsystem(ts: ValidatedSystem, transitions, name: str = None) -> ValidatedSystem:
    return validate_system(TransitionSystem(name or ts.name, ts.states, ts.initial, ts.inputs,
                                            ts.outputs, frozenset(transitions), ts.accepting))


@dataclass(frozen=True)
class DocClassModel:
    """Parse of characters into document classes plus mode projection.

    ``parse`` maps ``(port, char)`` to ``(doc_class, params)``; ``modes``
    maps states to ``(mode, rest)`` (all states share one mode when
    omitted); ``conditions`` maps names to predicates over rest fields and
    input parameters.
    """

    parse: Mapping
    modes: Optional[Mapping] = None
    conditions: Mapping = field(default_factory=lambda: {"true": TRUE})

    def __post_init__(self):
        object.__setattr__(self, "parse", dict(self.parse))
        object.__setattr__(self, "conditions",
                           {k: as_predicate(v) for k, v in dict(self.conditions).items()} or {"true": TRUE})
        images = {}
        for lab, img in self.parse.items():
            if img in images:
                raise NonInvertibleParse(f"{images[img]} and {lab} both parse to {img}")
            images[img] = lab

    @classmethod
    def by_port(cls, ts: ValidatedSystem, **kw) -> "DocClassModel":
        """Document class = port name; the character becomes a parameter index."""
        parse = {}
        for p in list(ts.inputs) + list(ts.outputs):
            for n, c in enumerate(sorted(p.alphabet)):
                parse[(p.name, c)] = (p.name, fields(idx=n))
        return cls(parse, **kw)

    @classmethod
    def by_character(cls, ts: ValidatedSystem, **kw) -> "DocClassModel":
        """Document class = character name (port becomes a parameter)."""
        parse = {}
        ports = sorted({p.name for p in list(ts.inputs) + list(ts.outputs)})
        for p in list(ts.inputs) + list(ts.outputs):
            for c in p.alphabet:
                parse[(p.name, c)] = (c, fields(port=ports.index(p.name)))
        return cls(parse, **kw)

    def doc_class(self, lab: Label):
        if lab is None:
            return EPS, ()
        if lab not in self.parse:
            raise UnparsableCharacter(f"no parse entry for {lab[0]}.{lab[1]}")
        return self.parse[lab]

    def project(self, q):
        if self.modes is None:
            return "any", ()
        if q not in self.modes:
            raise InvalidProjection(f"mode projection undefined for {q!r}")
        return self.modes[q]


@dataclass(frozen=True)
class ExtendedAutomatonEdge:
    from_mode: str
    to_mode: str
    input_class: str
    condition: str
    output_class: str

    def __str__(self):
        return f"{self.from_mode} --{self.input_class}, {self.condition} / {self.output_class}--> {self.to_mode}"


def _env(rest, params) -> dict:
    env = dict(rest) if not isinstance(rest, (int, str)) else {"rest": rest}
    env.update(dict(params))
    return env


def doc_class_partition(ts: ValidatedSystem, dcm: DocClassModel) -> tuple:
    """Group transitions by ``(docCls_i, docCls_o, p_mode, q_mode, cond)``.

    Output parameters never enter the key.  Returns the sorted edge list
    and the matching :class:`PartitionSpec` keyed by edge.
    """
    groups = defaultdict(set)
    for t in sorted_transitions(ts.transitions):
        in_cls, in_prm = dcm.doc_class(t.input)
        out_cls, _ = dcm.doc_class(t.output)
        p_mode, p_rest = dcm.project(t.source)
        q_mode, _ = dcm.project(t.target)
        env = _env(p_rest, in_prm)
        holding = [name for name, cond in sorted(dcm.conditions.items()) if cond.evaluate(env)]
        if len(holding) != 1:
            raise AmbiguousCondition(f"{t}: conditions {holding or 'none'} hold, expected exactly one")
        edge = ExtendedAutomatonEdge(str(p_mode), str(q_mode), in_cls, holding[0], out_cls)
        groups[edge].add(t)
    edges = sorted(groups, key=lambda e: (e.from_mode, e.input_class, e.condition,
                                         e.output_class, e.to_mode))
    return edges, PartitionSpec({e: groups[e] for e in edges})


class DocClassCheck(NamedTuple):
    ok: bool
    witness: Optional[tuple] = None  # (i, i2, p)


def verify_docclass_proposition(ts: ValidatedSystem, dcm: DocClassModel) -> DocClassCheck:
    """Characters of equal (non-empty) meaning must share a document class.

    Characters not processed at ``p`` have no reading there and are not
    compared.
    """
    labels = ts.input_labels()
    for p in sorted(reachable_states(ts), key=state_key):
        classes = defaultdict(list)
        for lab in labels:
            m = frozenset(ts.lookup(p, lab))
            if m:
                classes[m].append(lab)
        for group in classes.values():
            first = group[0]
            for other in group[1:]:
                if dcm.doc_class(first)[0] != dcm.doc_class(other)[0]:
                    return DocClassCheck(False, (first, other, p))
    return DocClassCheck(True)

"""Interface classes and the horizontal/vertical layer relation.

A pair of endpoint profiles is classified by direction first, then by
symmetry.  Receiver determinism and statefulness can be computed from a
model; sender synchronicity is always declared.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import product as cartesian

from .core import ModelError, ValidatedSystem, is_deterministic, is_stateless

SYNC, ASYNC = "synchronous", "asynchronous"
UNI, BI = "unidirectional", "bidirectional"


class UnclassifiableProfile(ModelError):
    def __init__(self, message, rule: str):
        super().__init__(message)
        self.rule = rule


class InterfaceClass(str, enum.Enum):
    PIPE = "pipe"
    OBSERVATION = "observation"
    OPERATION = "operation"
    OPERATION_WITH_EXCEPTIONS = "operation-with-exceptions"
    REMOTE_OPERATION = "remote-operation"
    PROTOCOL_MUTUAL_HINTING = "protocol-mutual-hinting"
    USE_AND_OBSERVATION = "use-and-observation"

    def __str__(self):
        return self.value


class LayerRelation(str, enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    UNDIRECTED = "undirected"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EndpointProfile:
    deterministic: bool
    stateful: bool
    sender: str = ASYNC
    direction: str = BI

    def __post_init__(self):
        if self.sender not in (SYNC, ASYNC):
            raise ValueError(f"sender must be {SYNC!r} or {ASYNC!r}, not {self.sender!r}")
        if self.direction not in (UNI, BI):
            raise ValueError(f"direction must be {UNI!r} or {BI!r}, not {self.direction!r}")

    @property
    def synchronous(self) -> bool:
        return self.sender == SYNC

    def behaviour(self) -> tuple:
        return (self.deterministic, self.stateful, self.sender)

    def __str__(self):
        return (f"{'deterministic' if self.deterministic else 'nondeterministic'}, "
                f"{'stateful' if self.stateful else 'stateless'}, {self.sender}")


def all_profiles():
    """Every combination of the four profile dimensions (16 in total)."""
    for det, st, snd, dr in cartesian((True, False), (True, False), (SYNC, ASYNC), (UNI, BI)):
        yield EndpointProfile(det, st, snd, dr)


def _symmetric(a: EndpointProfile) -> InterfaceClass:
    det, stateful, sender = a.behaviour()
    if det:
        raise UnclassifiableProfile(
            "two deterministic peers have no spontaneous step to start an exchange without an external clock",
            "symmetric-deterministic")
    if not stateful:
        raise UnclassifiableProfile(
            "reactive systems behave statefully; a stateless nondeterministic peer is ruled out",
            "symmetric-stateless")
    if sender == SYNC:
        raise UnclassifiableProfile(
            "synchronous sending conflicts with the spontaneous transitions of nondeterministic peers",
            "symmetric-synchronous")
    return InterfaceClass.PROTOCOL_MUTUAL_HINTING


def classify_interface(a: EndpointProfile, b: EndpointProfile, channels_between=None,
                       exceptions: bool = False, remote: bool = False) -> InterfaceClass:
    """Assign exactly one interface class to the pair ``(a, b)``.

    ``channels_between`` optionally gives ``(a_to_b, b_to_a)`` channel
    counts; when present it must agree with the declared directions.
    ``exceptions`` marks a call relation split into a deterministic and an
    exceptional part, ``remote`` a call across a transport.
    """
    if a.direction != b.direction:
        raise UnclassifiableProfile(f"endpoints disagree on direction ({a.direction} vs {b.direction})",
                                    "direction-mismatch")
    if channels_between is not None:
        forward, backward = channels_between
        if not forward and not backward:
            raise UnclassifiableProfile("no channel couples the endpoints", "no-coupling")
        actual = BI if forward and backward else UNI
        if actual != a.direction:
            raise UnclassifiableProfile(f"declared {a.direction} but channels are {actual}",
                                        "direction-mismatch")

    if a.direction == UNI:
        # synchronicity is irrelevant without backward communication
        if a.deterministic and b.deterministic:
            return InterfaceClass.PIPE
        return InterfaceClass.OBSERVATION

    if a.behaviour() == b.behaviour():
        return _symmetric(a)

    for caller, callee in ((a, b), (b, a)):
        if caller.synchronous and callee.deterministic:
            if remote:
                return InterfaceClass.REMOTE_OPERATION
            if exceptions:
                return InterfaceClass.OPERATION_WITH_EXCEPTIONS
            if not caller.deterministic:
                return InterfaceClass.USE_AND_OBSERVATION
            return InterfaceClass.OPERATION
    raise UnclassifiableProfile(
        "asymmetric pair without a synchronous caller facing a deterministic receiver",
        "asymmetric-no-call")


_LAYERS = {
    InterfaceClass.OPERATION: LayerRelation.VERTICAL,
    InterfaceClass.OPERATION_WITH_EXCEPTIONS: LayerRelation.VERTICAL,
    InterfaceClass.REMOTE_OPERATION: LayerRelation.VERTICAL,
    InterfaceClass.USE_AND_OBSERVATION: LayerRelation.VERTICAL,
    InterfaceClass.PROTOCOL_MUTUAL_HINTING: LayerRelation.HORIZONTAL,
    InterfaceClass.PIPE: LayerRelation.UNDIRECTED,
    InterfaceClass.OBSERVATION: LayerRelation.UNDIRECTED,
}


def classify_layer_relation(cls) -> LayerRelation:
    return _LAYERS[InterfaceClass(cls)]


def profile_from_model(ts: ValidatedSystem, sender: str, direction: str = BI) -> EndpointProfile:
    return EndpointProfile(is_deterministic(ts), not is_stateless(ts), sender, direction)

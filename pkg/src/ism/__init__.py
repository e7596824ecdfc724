"""Discrete I/O-transition systems, the meaning of exchanged characters,
meaning-compatible partitions and protocol verification."""
from .core import (EPS, TICK, ModelError, Port, Transition, TransitionSystem, ValidatedSystem,
                   check_reactive, inport, is_deterministic, is_stateless, make_system, outport,
                   reachable_states, step, validate_system)
from .semantics import (MeaningSet, compose_meanings, epsilon_closure_meaning, meaning,
                        meaning_of_sequence, meaning_partition, same_meaning, substitutable)
from .composition import (Channel, compose_loop, compose_parallel, compose_sequential, compose_while,
                          make_channel, product)
from .protocol import (Protocol, check_consistency, check_well_formed, mismatch_analysis, simulate,
                       verify_safety)
from .dsl import load_model, parse_model, serialize_model

__version__ = "0.1.0"

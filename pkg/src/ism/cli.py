"""Command-line front end: ``ism <command> MODEL.ism ...``.

Every command builds a list of :class:`Record` objects; ``--format text``
and ``--format json`` are two renderings of the same list.  Exit codes: 0
when every check passes, 1 when findings were reported, 2 for usage, parse
or lookup errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources

from . import classify as cls_mod
from .composition import (DEFAULT_ITERATION_CAP, compose_loop, compose_parallel, compose_sequential,
                          compose_while)
from .core import (EPS, ModelError, check_reactive, format_label, is_deterministic, is_stateless,
                   reachable_states, rename_system, state_key, state_name)
from .dsl import ModelFileError, format_file, load_model, serialize_system
from .partition import (DocClassModel, check_compatibility, doc_class_partition, partition_deterministic,
                        split_exceptions, verify_docclass_proposition)
from .predicates import PredicateError
from .protocol import (ANGELIC, DEMONIC, ScriptedResolver, SeededResolver, check_consistency,
                       check_well_formed, script_from_trace, simulate, trace_lines, verify_safety)
from .semantics import CycleOfEpsilon, epsilon_closure_meaning, meaning, meaning_partition, substitutable

PASS, FINDINGS, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class Record:
    """One self-contained output record."""

    kind: str
    message: str
    fields: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)

    def as_dict(self) -> dict:
        d = {"record": self.kind, "message": self.message}
        d.update(self.fields)
        if self.lines:
            d["lines"] = list(self.lines)
        return d

    def as_text(self) -> str:
        out = [f"{self.kind}: {self.message}"]
        for k, v in self.fields.items():
            if isinstance(v, (list, tuple)):
                v = ", ".join(map(str, v)) or "-"
            elif isinstance(v, dict):
                v = ", ".join(f"{a}={b}" for a, b in v.items()) or "-"
            elif isinstance(v, bool):
                v = "yes" if v else "no"
            out.append(f"  {k}: {v}")
        out += self.lines
        return "\n".join(out)


def render(records, fmt: str, stream) -> None:
    for r in records:
        if fmt == "json":
            stream.write(json.dumps(r.as_dict(), sort_keys=True) + "\n")
        else:
            stream.write(r.as_text() + "\n")


# helpers -------------------------------------------------------------------

def resolve_path(path: str) -> str:
    """Existing path as given, else a model shipped with the package."""
    if os.path.exists(path):
        return path
    shipped = resources.files("ism") / "models" / os.path.basename(path)
    if shipped.is_file():
        return str(shipped)
    raise UsageError(f"no such model file: {path}")


def _load(path):
    return load_model(resolve_path(path))


def parse_label(text: str):
    if text == EPS:
        return None
    port, dot, char = text.partition(".")
    if not dot or not port or not char:
        raise UsageError(f"expected PORT.CHAR or {EPS}, got {text!r}")
    return port, char


def _system(model, name):
    try:
        return model.system(name)
    except KeyError as e:
        raise UsageError(e.args[0])


def _sname(q) -> str:
    return q if isinstance(q, str) else repr(q)


# commands --------------------------------------------------------------------

def cmd_check(args):
    model = _load(args.model)
    names = args.systems or sorted(model.systems) or model.all_names("systems")
    records = []
    for n in names:
        ts = _system(model, n)
        rr = check_reactive(ts)
        records.append(Record("system", ts.name, {
            "states": len(ts.states),
            "reachable": len(reachable_states(ts)),
            "transitions": len(ts.transitions),
            "role": ts.is_role,
            "deterministic": is_deterministic(ts),
            "stateless": is_stateless(ts),
            "multiple_input_ports": rr.has_multiple_input_ports,
            "single_nonempty_input": rr.single_nonempty_input,
            "port_nondeterministic": dict(sorted(rr.per_component_nondeterministic.items())),
            "reactive": rr.is_reactive,
        }))
    for n in sorted(model.protocols):
        prod = model.protocol(n).product
        records.append(Record("protocol", n, {
            "roles": [f"{r}:{s}" for r, s in model.protocols[n].roles],
            "product_states": len(prod.states),
            "product_transitions": len(prod.transitions),
        }))
    return records, PASS


def cmd_meaning(args):
    model = _load(args.model)
    ts = _system(model, args.system)
    if args.state not in ts.states:
        raise UsageError(f"{ts.name} has no state {args.state!r}")
    lab = parse_label(args.input)
    try:
        m = epsilon_closure_meaning(ts, args.state, lab) if args.closure else meaning(ts, args.state, lab)
    except CycleOfEpsilon as e:
        return [Record("epsilon-cycle", str(e), {"cycle": [str(t) for t in e.cycle]})], FINDINGS
    pairs = [f"{format_label(o)} -> {_sname(q)}" for o, q in m.sorted_pairs()]
    return [Record("meaning", f"{ts.name} at {args.state} on {args.input}",
                   {"scope": m.scope, "pairs": pairs, "closure": args.closure})], PASS


def cmd_substitutable(args):
    model = _load(args.model)
    ts = _system(model, args.system)
    i, i2 = parse_label(args.first), parse_label(args.second)
    sub = substitutable(ts, i, i2)
    per = {_sname(p): sub.per_state[p] for p in sorted(sub.per_state, key=state_key)}
    verdict = "substitutable everywhere" if sub.everywhere else "not substitutable everywhere"
    return [Record("substitutable", f"{args.first} / {args.second}: {verdict}",
                   {"everywhere": sub.everywhere,
                    "same_meaning_at": [p for p, v in per.items() if v],
                    "differs_at": [p for p, v in per.items() if not v]})], \
        PASS if sub.everywhere else FINDINGS


def _table_lines(table) -> list:
    return [f"  {format_label(i)} @ {_sname(p)} -> {format_label(o)} @ {_sname(q)}"
            for (i, p), (o, q) in sorted(table.items(), key=lambda kv: (state_key(kv[0][1]), str(kv[0][0])))]


def cmd_partition(args):
    model = _load(args.model)
    records = []
    status = PASS
    if args.partition:
        ts, part = model.partition(args.partition)
        compat = check_compatibility(ts, part)
        fields = {"system": ts.name, "classes": sorted(map(str, part.classes)), "compatible": compat.ok}
        if not compat.ok:
            i, i2, p, k = compat.witness
            fields["witness"] = f"{format_label(i)} ~ {format_label(i2)} at {_sname(p)} split by class {k}"
            status = FINDINGS
        records.append(Record("partition", args.partition, fields))
        if compat.ok and is_deterministic(ts):
            for k, table in sorted(partition_deterministic(ts, part).items(), key=lambda kv: str(kv[0])):
                records.append(Record("class-table", str(k), {"entries": len(table)}, _table_lines(table)))
        return records, status

    ts = _system(model, args.system) if args.system else None
    if args.docclass:
        if args.docclass in ("ports", "characters"):
            if ts is None:
                raise UsageError("--docclass ports|characters needs a SYSTEM")
            dcm = DocClassModel.by_port(ts) if args.docclass == "ports" else DocClassModel.by_character(ts)
        else:
            try:
                ts, dcm = model.docclass(args.docclass)
            except KeyError:
                raise UsageError(f"no docclass named {args.docclass!r}")
        edges, _ = doc_class_partition(ts, dcm)
        records.append(Record("docclass-partition", f"{ts.name}: {len(edges)} edges",
                              {"system": ts.name}, [f"  {e}" for e in edges]))
        check = verify_docclass_proposition(ts, dcm)
        fields = {"holds": check.ok}
        if not check.ok:
            i, i2, p = check.witness
            fields["witness"] = (f"{format_label(i)} ~ {format_label(i2)} at {_sname(p)} but classes "
                                 f"{dcm.doc_class(i)[0]} and {dcm.doc_class(i2)[0]}")
            status = FINDINGS
        records.append(Record("docclass-proposition", ts.name, fields))
        return records, status

    if ts is None:
        raise UsageError("partition needs a SYSTEM, --partition or --docclass")
    det, exc = split_exceptions(ts)
    records.append(Record("exception-split", ts.name,
                          {"deterministic": len(det), "exceptional": len(exc)},
                          [f"  exceptional {t}" for t in sorted(exc, key=lambda t: t.sort_key())]))
    for p in sorted(reachable_states(ts), key=state_key):
        classes = ["{" + " ".join(format_label(x) for x in c) + "}" for c in meaning_partition(ts, p)]
        records.append(Record("meaning-classes", f"{ts.name} at {_sname(p)}", {"classes": classes}))
    return records, status


def cmd_compose(args):
    model = _load(args.model)
    if args.product:
        proto = model.protocol(args.product)
        prod = proto.product
        if args.edges:
            return [Record("product", proto.name, {"states": len(prod.states)},
                           prod.edge_list().rstrip("\n").split("\n"))], PASS
        flat = prod.to_system(args.name or proto.name)
        return [Record("product", proto.name,
                       {"states": len(flat.states), "deterministic": is_deterministic(flat)},
                       serialize_system(flat).split("\n"))], PASS
    ops = [o for o in ("seq", "par", "loop", "while_") if getattr(args, o) not in (None, False)]
    if len(ops) != 1:
        raise UsageError("choose exactly one of --seq, --par, --loop N, --while PRED or --product P")
    op = ops[0]
    if not args.systems:
        raise UsageError("compose needs at least one SYSTEM")
    f = _system(model, args.systems[0])
    if op in ("seq", "par"):
        if len(args.systems) != 2:
            raise UsageError(f"--{op} takes two systems")
        g = _system(model, args.systems[1])
        result = (compose_sequential if op == "seq" else compose_parallel)(f, g, args.name)
    else:
        if len(args.systems) != 1:
            raise UsageError(f"--{op.rstrip('_')} takes one system")
        if op == "loop":
            result = compose_loop(f, args.loop, args.name)
        else:
            result = compose_while(f, args.while_, args.cap, args.name)
    flat = rename_system(result, states={q: state_name(q) for q in result.states})
    return [Record("composed", flat.name, {"states": len(flat.states), "transitions": len(flat.transitions)},
                   serialize_system(flat).split("\n"))], PASS


def _finding_record(prod, f) -> Record:
    fields = {}
    if f.state is not None:
        fields["state"] = prod.format_state(f.state)
    if f.role is not None:
        fields["role"] = f.role
    for k, v in f.details.items():
        fields[k] = v
    return Record(f.kind, f.message, fields, trace_lines(prod, f.trace) if f.trace else [])


def cmd_verify(args):
    model = _load(args.model)
    try:
        proto = model.protocol(args.protocol)
    except KeyError as e:
        raise UsageError(e.args[0])
    prod = proto.product
    records = [Record("product", proto.name, {"roles": list(prod.names), "states": len(prod.states),
                                              "transitions": len(prod.transitions),
                                              "env": args.env, "fair": args.fair})]
    findings = []
    wf = check_well_formed(proto)
    findings += wf.findings
    cons = check_consistency(proto, env=args.env, fair=args.fair)
    findings += cons.findings
    records += [_finding_record(prod, f) for f in findings]
    first_trace, mark = (findings[0].trace, findings[0].state) if findings else (None, None)
    for pred in args.safety or ():
        res = verify_safety(proto, pred)
        if res.holds:
            records.append(Record("safety", f"holds on all {len(prod.states)} states", {"predicate": pred}))
        else:
            records.append(Record("safety-violation", f"violated in {prod.format_state(res.state)}",
                                  {"predicate": pred, "state": prod.format_state(res.state)},
                                  trace_lines(prod, res.trace)))
            findings.append(res)
            if first_trace is None:
                first_trace, mark = res.trace, res.state
    if args.witness and first_trace is not None:
        with open(args.witness, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(trace_lines(prod, first_trace)) + "\n")
    if args.figure:
        from .plotting import draw_product
        draw_product(prod, args.figure, first_trace, mark, f"{proto.name}: reachable product")
        records.append(Record("figure", args.figure, {}))
    ok = not findings
    records.append(Record("verdict", "pass" if ok else f"{len(findings)} finding(s)",
                          {"well_formed": wf.well_formed, "consistent": cons.consistent,
                           "deadlocks": len(cons.deadlocks), "livelocks": len(cons.livelocks),
                           "starvation": len(cons.starvation)}))
    return records, PASS if ok else FINDINGS


def _read_script(path) -> list:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if " | " in text:
        return script_from_trace(text)
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def cmd_simulate(args):
    model = _load(args.model)
    try:
        proto = model.protocol(args.protocol)
    except KeyError as e:
        raise UsageError(e.args[0])
    prod = proto.product
    resolver = ScriptedResolver(_read_script(args.script)) if args.script else SeededResolver(args.seed)
    trace = simulate(proto, args.steps, resolver=resolver)
    stuck = trace.terminated_early and not prod.accepting(trace.final)
    records = [Record("trace", f"{len(trace)} step(s)", {
        "seed": None if args.script else args.seed, "terminated_early": trace.terminated_early,
        "final": prod.format_state(trace.final)}, trace_lines(prod, trace))]
    if args.figure:
        from .plotting import draw_product
        draw_product(prod, args.figure, trace, trace.final, f"{proto.name}: simulated trace")
        records.append(Record("figure", args.figure, {}))
    return records, FINDINGS if stuck else PASS


def _sync_decls(decls) -> dict:
    out = {}
    for d in decls or ():
        name, eq, mode = d.partition("=")
        if not eq or mode not in ("sync", "async", cls_mod.SYNC, cls_mod.ASYNC):
            raise UsageError(f"--sender-sync expects NAME=sync|async, got {d!r}")
        out[name] = cls_mod.SYNC if mode.startswith("sync") else cls_mod.ASYNC
    return out


def cmd_classify(args):
    model = _load(args.model)
    a, b = _system(model, args.a), _system(model, args.b)
    sync = _sync_decls(args.sender_sync)
    unknown = set(sync) - {args.a, args.b}
    if unknown:
        raise UsageError(f"--sender-sync names unknown system(s) {sorted(unknown)}")
    pa = cls_mod.profile_from_model(a, sync.get(args.a, cls_mod.ASYNC), args.direction)
    pb = cls_mod.profile_from_model(b, sync.get(args.b, cls_mod.ASYNC), args.direction)
    fields = {"a": f"{a.name} ({pa})", "b": f"{b.name} ({pb})", "direction": args.direction}
    try:
        c = cls_mod.classify_interface(pa, pb, exceptions=args.exceptions, remote=args.remote)
    except cls_mod.UnclassifiableProfile as e:
        fields["rule"] = e.rule
        return [Record("unclassifiable", str(e), fields)], FINDINGS
    fields["layer"] = str(cls_mod.classify_layer_relation(c))
    return [Record("classification", str(c), fields)], PASS


def cmd_fmt(args):
    path = resolve_path(args.model)
    text = format_file(path)
    with open(path, encoding="utf-8") as fh:
        current = fh.read()
    if args.write:
        if text != current:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return None, PASS
    if args.check:
        return None, PASS if text == current else FINDINGS
    args.stdout.write(text)
    return None, PASS


# parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text",
                        help="output format (json: one record per line)")
    p = argparse.ArgumentParser(prog="ism", description="Analyse I/O-transition system models (.ism files).")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("check", parents=[common], help="structural properties of systems")
    s.add_argument("model")
    s.add_argument("systems", nargs="*")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("meaning", parents=[common], help="meaning of an input character at a state")
    s.add_argument("model")
    s.add_argument("system")
    s.add_argument("state")
    s.add_argument("input", metavar="PORT.CHAR")
    s.add_argument("--closure", action="store_true", help="follow spontaneous transitions afterwards")
    s.set_defaults(func=cmd_meaning)

    s = sub.add_parser("substitutable", parents=[common], help="can one character replace another")
    s.add_argument("model")
    s.add_argument("system")
    s.add_argument("first", metavar="PORT.CHAR")
    s.add_argument("second", metavar="PORT.CHAR")
    s.set_defaults(func=cmd_substitutable)

    s = sub.add_parser("partition", parents=[common], help="partitions and document classes")
    s.add_argument("model")
    s.add_argument("system", nargs="?")
    s.add_argument("--partition", metavar="NAME", help="check a partition block from the file")
    s.add_argument("--docclass", metavar="NAME",
                   help="docclass block name, or 'ports' / 'characters' for the built-in parses")
    s.set_defaults(func=cmd_partition)

    s = sub.add_parser("compose", parents=[common], help="compose simple systems or flatten a protocol")
    s.add_argument("model")
    s.add_argument("systems", nargs="*")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--seq", action="store_true")
    g.add_argument("--par", action="store_true")
    g.add_argument("--loop", type=int, metavar="N")
    g.add_argument("--while", dest="while_", metavar="PRED")
    g.add_argument("--product", metavar="PROTOCOL")
    s.add_argument("--edges", action="store_true", help="with --product: plain edge list")
    s.add_argument("--cap", type=int, default=DEFAULT_ITERATION_CAP, help="while-composition iteration cap")
    s.add_argument("--name")
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("verify", parents=[common], help="well-formedness, consistency and safety")
    s.add_argument("model")
    s.add_argument("--protocol")
    s.add_argument("--safety", action="append", metavar="PRED")
    s.add_argument("--env", choices=(ANGELIC, DEMONIC), default=ANGELIC)
    s.add_argument("--fair", action="store_true")
    s.add_argument("--witness", metavar="FILE", help="write the first witness trace here")
    s.add_argument("--figure", metavar="FILE", help="render the product graph (PNG, SVG, PDF)")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", parents=[common], help="run the protocol")
    s.add_argument("model")
    s.add_argument("--protocol")
    s.add_argument("--steps", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--script", metavar="FILE", help="trace file or one transition label per line")
    s.add_argument("--figure", metavar="FILE")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("classify", parents=[common], help="interface class of two systems")
    s.add_argument("model")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--sender-sync", action="append", metavar="NAME=sync|async")
    s.add_argument("--direction", choices=(cls_mod.UNI, cls_mod.BI), default=cls_mod.BI)
    s.add_argument("--exceptions", action="store_true")
    s.add_argument("--remote", action="store_true")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("fmt", parents=[common], help="rewrite a model file canonically")
    s.add_argument("model")
    s.add_argument("--write", action="store_true")
    s.add_argument("--check", action="store_true", help="exit 1 if the file is not canonical")
    s.set_defaults(func=cmd_fmt)
    return p


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if getattr(args, "steps", 0) is not None and getattr(args, "steps", 0) < 0:
        stderr.write("ism: error: --steps must be non-negative\n")
        return USAGE
    args.stdout = stdout
    try:
        records, code = args.func(args)
    except ModelFileError as e:
        for d in e.diagnostics:
            stderr.write(f"{e.path}:{d}\n")
        return USAGE
    except (UsageError, PredicateError, KeyError) as e:
        stderr.write(f"ism: error: {e.args[0] if e.args else e}\n")
        return USAGE
    except (ModelError, ValueError) as e:
        stderr.write(f"ism: error: {e}\n")
        return USAGE
    except OSError as e:
        stderr.write(f"ism: error: {e}\n")
        return USAGE
    if records is not None:
        render(records, args.format, stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())

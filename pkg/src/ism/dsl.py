"""Textual model format (``.ism``): parser with error recovery and canonical writer.

Grammar::

    file      := header? item*
    header    := "model" NAME ("version" STRING)? ";"
    item      := "import" STRING ";" | system | protocol | docclass | partition
    system    := "system" NAME "{" sysClause* "}"
    sysClause := "states" NAME ("," NAME)* ";"
               | "init" NAME ";"
               | ("inputs" | "outputs") port ("," port)* ";"
               | "accept" NAME ("," NAME)* ";"
               | trans
    port      := NAME "{" NAME ("," NAME)* "}"
    trans     := "trans" NAME "->" NAME ":" label "/" label ";"
    label     := "eps" | NAME "." NAME
    protocol  := "protocol" NAME "{" ("role" NAME ":" NAME ";"
                                     | "channel" NAME "." NAME "->" NAME "." NAME ";")* "}"
    docclass  := "docclass" NAME "for" NAME "{" dcClause* "}"
    dcClause  := "parse" NAME "." NAME "->" NAME params? ";"
               | "mode" NAME "->" NAME params? ";"
               | "cond" NAME ":" predicate ";"
    params    := "(" NAME "=" INT ("," NAME "=" INT)* ")"
    partition := "partition" NAME "for" NAME "{" ("class" NAME "{" trans* "}")* "}"

``#`` starts a comment.  Errors never abort parsing: the parser resynchronizes
at the next ``;`` or ``}`` and keeps collecting diagnostics.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from .composition import ChannelError, Endpoint, make_channel
from .core import (EPS, ModelError, Transition, TransitionSystem, ValidatedSystem, format_label,
                   inport, is_identifier, outport, sorted_transitions, state_key, validate_system)
from .lexer import EOF, IDENT, INT, PUNCT, STRING, Token, tokenize
from .partition import DocClassModel, PartitionSpec
from .predicates import PredicateError, PredicateParser
from .protocol import Protocol

ERROR_SEV, WARNING_SEV = "error", "warning"
TOP_KEYWORDS = ("model", "import", "system", "protocol", "docclass", "partition")


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str
    line: int
    column: int
    message: str
    token: str = ""

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class ModelFileError(ModelError):
    def __init__(self, path, diagnostics):
        first = diagnostics[0] if diagnostics else None
        super().__init__(f"{path or '<text>'}:{first}" if first else str(path))
        self.path = path
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class ProtocolDecl:
    name: str
    roles: tuple      # ((role, system_name), ...) in declaration order
    channels: frozenset


@dataclass(frozen=True)
class DocClassDecl:
    name: str
    system: str
    parse: dict           # (port, char) -> (class, params)
    modes: Optional[dict]  # state -> (mode, fields); None when no mode lines
    conditions: dict      # name -> predicate AST


@dataclass(frozen=True)
class PartitionDecl:
    name: str
    system: str
    classes: dict         # class name -> frozenset of Transition


@dataclass
class ModelFile:
    name: Optional[str] = None
    version: Optional[str] = None
    imports: tuple = ()
    systems: dict = field(default_factory=dict)
    protocols: dict = field(default_factory=dict)
    docclasses: dict = field(default_factory=dict)
    partitions: dict = field(default_factory=dict)
    imported: dict = field(default_factory=dict, compare=False, repr=False)
    path: Optional[str] = field(default=None, compare=False, repr=False)
    preamble: tuple = field(default=(), compare=False, repr=False)  # leading comment lines

    # lookups span this file and everything it imports
    def _scope(self, kind: str) -> dict:
        merged = dict(self.imported.get(kind, {}))
        merged.update(getattr(self, kind))
        return merged

    def system(self, name: str) -> ValidatedSystem:
        scope = self._scope("systems")
        if name not in scope:
            raise KeyError(f"no system named {name!r}")
        return scope[name]

    def protocol_decl(self, name: str = None) -> ProtocolDecl:
        scope = self._scope("protocols")
        if name is None:
            own = self.protocols or scope
            if len(own) != 1:
                raise KeyError(f"name a protocol; candidates: {sorted(own)}")
            name, = own
        if name not in scope:
            raise KeyError(f"no protocol named {name!r}")
        return scope[name]

    def protocol(self, name: str = None) -> Protocol:
        decl = self.protocol_decl(name)
        return Protocol(decl.name, tuple((r, self.system(s)) for r, s in decl.roles),
                        tuple(sorted(decl.channels)))

    def docclass(self, name: str) -> tuple:
        decl = self._scope("docclasses")[name]
        model = DocClassModel(decl.parse, decl.modes, decl.conditions)
        return self.system(decl.system), model

    def partition(self, name: str) -> tuple:
        decl = self._scope("partitions")[name]
        return self.system(decl.system), PartitionSpec(decl.classes)

    def all_names(self, kind: str) -> list:
        return sorted(self._scope(kind))


@dataclass
class ParseResult:
    model: ModelFile
    diagnostics: list

    @property
    def errors(self) -> list:
        return [d for d in self.diagnostics if d.severity == ERROR_SEV]

    @property
    def ok(self) -> bool:
        return not self.errors


class _Syntax(Exception):
    def __init__(self, message, token: Token):
        super().__init__(message)
        self.token = token


class _Parser:
    def __init__(self, text: str, path: Optional[str], loader):
        self.tokens = tokenize(text)
        self.pos = 0
        self.path = path
        self.loader = loader
        self.diags = []
        self.model = ModelFile(path=path)

    # token helpers -------------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in (IDENT, PUNCT) and tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise _Syntax(f"expected '{text}' but found {self.peek()}", self.peek())
        return self.advance()

    def name(self, what: str) -> Token:
        tok = self.peek()
        if tok.kind != IDENT:
            raise _Syntax(f"expected {what} but found {tok}", tok)
        return self.advance()

    def names(self, what: str) -> list:
        out = [self.name(what)]
        while self.at(","):
            self.advance()
            out.append(self.name(what))
        return out

    def integer(self) -> int:
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        tok = self.peek()
        if tok.kind != INT:
            raise _Syntax(f"expected integer but found {tok}", tok)
        self.advance()
        return sign * int(tok.text)

    def error(self, message: str, tok: Token):
        self.diags.append(ParseDiagnostic(ERROR_SEV, tok.line, tok.column, message, tok.text))

    def warning(self, message: str, tok: Token):
        self.diags.append(ParseDiagnostic(WARNING_SEV, tok.line, tok.column, message, tok.text))

    def recover(self):
        """Skip to just after the next ``;`` or up to the next ``}`` at this depth."""
        depth = 0
        while self.peek().kind != EOF:
            if self.at("{"):
                depth += 1
            elif self.at("}"):
                if depth == 0:
                    return
                depth -= 1
            elif self.at(";") and depth == 0:
                self.advance()
                return
            self.advance()

    def recover_top(self):
        """Skip to the next top-level keyword."""
        depth = 0
        while self.peek().kind != EOF:
            if self.at("{"):
                depth += 1
            elif self.at("}"):
                depth = max(depth - 1, 0)
                if depth == 0:
                    self.advance()
                    return
            elif depth == 0 and self.peek().kind == IDENT and self.peek().text in TOP_KEYWORDS:
                return
            self.advance()

    def block(self, clause):
        """``{ clause* }`` with per-clause recovery."""
        self.expect("{")
        while not self.at("}"):
            if self.peek().kind == EOF:
                raise _Syntax("unexpected end of input, missing '}'", self.peek())
            start = self.pos
            try:
                clause()
            except _Syntax as e:
                self.error(str(e), e.token)
                self.recover()
                if self.pos == start:
                    self.advance()
        self.advance()

    # file ----------------------------------------------------------------

    def parse(self) -> ModelFile:
        if self.at("model"):
            self._guard(self.header)
        while self.peek().kind != EOF:
            self._guard(self.item)
        return self.model

    def _guard(self, fn):
        start = self.pos
        try:
            fn()
        except _Syntax as e:
            self.error(str(e), e.token)
            self.recover_top()
            if self.pos == start:
                self.advance()

    def header(self):
        self.expect("model")
        self.model.name = self.name("model name").text
        if self.at("version"):
            self.advance()
            tok = self.peek()
            if tok.kind != STRING:
                raise _Syntax(f"expected version string but found {tok}", tok)
            self.advance()
            self.model.version = tok.text[1:-1]
        self.expect(";")

    def item(self):
        tok = self.peek()
        dispatch = {"import": self.import_, "system": self.system, "protocol": self.protocol,
                    "docclass": self.docclass, "partition": self.partition}
        if tok.kind == IDENT and tok.text in dispatch:
            dispatch[tok.text]()
        elif tok.kind == IDENT and tok.text == "model":
            raise _Syntax("the model header must come first", tok)
        else:
            raise _Syntax(f"expected one of {', '.join(TOP_KEYWORDS[1:])} but found {tok}", tok)

    def import_(self):
        self.expect("import")
        tok = self.peek()
        if tok.kind != STRING:
            raise _Syntax(f"expected file name string but found {tok}", tok)
        self.advance()
        self.expect(";")
        rel = tok.text[1:-1]
        if rel in self.model.imports:
            self.warning(f"{rel!r} imported twice", tok)
            return
        self.model.imports += (rel,)
        base = os.path.dirname(self.path) if self.path else os.getcwd()
        target = os.path.normpath(os.path.join(base, rel))
        try:
            sub, diags = self.loader(target)
        except OSError as e:
            self.error(f"cannot import {rel!r}: {e.strerror or e}", tok)
            return
        for d in diags:
            if d.severity == ERROR_SEV:
                self.error(f"in {rel} at {d.line}:{d.column}: {d.message}", tok)
        if sub is None:
            return
        for kind in ("systems", "protocols", "docclasses", "partitions"):
            merged = self.model.imported.setdefault(kind, {})
            merged.update(sub._scope(kind))

    # systems -------------------------------------------------------------

    def label(self, what: str):
        if self.at(EPS):
            self.advance()
            return None, None
        port = self.name(f"{what} port or 'eps'")
        self.expect(".")
        char = self.name(f"{what} character")
        return (port.text, char.text), port

    def transition(self):
        """``trans A -> B : in / out ;`` returning the raw pieces with tokens."""
        self.expect("trans")
        src = self.name("source state")
        self.expect("->")
        dst = self.name("target state")
        self.expect(":")
        lin, tin = self.label("input")
        self.expect("/")
        lout, tout = self.label("output")
        self.expect(";")
        return src, dst, (lin, tin), (lout, tout)

    def port_list(self):
        ports = []
        while True:
            name = self.name("port name")
            self.expect("{")
            chars = self.names("character")
            self.expect("}")
            ports.append((name, chars))
            if not self.at(","):
                return ports
            self.advance()

    def system(self):
        self.expect("system")
        name = self.name("system name")
        d = {"states": [], "init": [], "inputs": [], "outputs": [], "accept": [], "trans": []}

        def clause():
            tok = self.peek()
            if self.at("states") or self.at("accept"):
                self.advance()
                d[tok.text].extend(self.names("state"))
                self.expect(";")
            elif self.at("init"):
                self.advance()
                d["init"].append(self.name("initial state"))
                self.expect(";")
            elif self.at("inputs") or self.at("outputs"):
                self.advance()
                d[tok.text].extend(self.port_list())
                self.expect(";")
            elif self.at("trans"):
                d["trans"].append(self.transition())
            else:
                raise _Syntax(f"expected states, init, inputs, outputs, accept or trans but found {tok}", tok)

        self.block(clause)
        ts = self.build_system(name, d)
        if ts is not None:
            self.declare("systems", name, ts)

    def declare(self, kind: str, name: Token, value):
        if name.text in getattr(self.model, kind) or name.text in self.model.imported.get(kind, {}):
            self.error(f"duplicate {kind[:-1]} {name.text!r}", name)
        else:
            getattr(self.model, kind)[name.text] = value

    def build_system(self, name: Token, d) -> Optional[ValidatedSystem]:
        ok = True
        states = {}
        for tok in d["states"]:
            if tok.text in states:
                self.warning(f"state {tok.text!r} declared twice", tok)
            states.setdefault(tok.text, tok)
        if not states:
            self.error(f"system {name.text!r} declares no states", name)
            return None

        def known(tok):
            nonlocal ok
            if tok.text not in states:
                self.error(f"undeclared state {tok.text!r} in system {name.text!r}", tok)
                ok = False
                return False
            return True

        if len(d["init"]) != 1:
            where = d["init"][1] if len(d["init"]) > 1 else name
            self.error(f"system {name.text!r} needs exactly one init clause", where)
            ok = False
        else:
            known(d["init"][0])
        for tok in d["accept"]:
            known(tok)

        ports = {}
        for direction in ("inputs", "outputs"):
            ports[direction] = {}
            for ptok, chars in d[direction]:
                if ptok.text in ports[direction]:
                    self.error(f"duplicate {direction[:-1]} port {ptok.text!r}", ptok)
                    ok = False
                    continue
                for c in chars:
                    if c.text == EPS:
                        self.error(f"'{EPS}' cannot be declared as a character", c)
                        ok = False
                ports[direction][ptok.text] = frozenset(c.text for c in chars)

        trans = []
        seen = set()
        for src, dst, (lin, tin), (lout, tout) in d["trans"]:
            good = known(src) & known(dst)
            for lab, tok, direction in ((lin, tin, "inputs"), (lout, tout, "outputs")):
                if lab is None:
                    continue
                alphabet = ports[direction].get(lab[0])
                if alphabet is None:
                    self.error(f"unknown {direction[:-1]} port {lab[0]!r}", tok)
                    good = False
                elif lab[1] not in alphabet:
                    self.error(f"character {lab[1]!r} not in alphabet of port {lab[0]!r}", tok)
                    good = False
            if not good:
                ok = False
                continue
            t = Transition(src.text, dst.text, lin, lout)
            if t in seen:
                self.warning(f"duplicate transition {t}", src)
                continue
            seen.add(t)
            trans.append(t)
        if not ok:
            return None
        try:
            return validate_system(TransitionSystem(
                name.text, frozenset(states), d["init"][0].text,
                tuple(inport(p, a) for p, a in ports["inputs"].items()),
                tuple(outport(p, a) for p, a in ports["outputs"].items()),
                frozenset(trans), frozenset(t.text for t in d["accept"])))
        except (ModelError, ValueError) as e:
            self.error(str(e), name)
            return None

    def lookup_system(self, tok: Token) -> Optional[ValidatedSystem]:
        sysmap = self.model._scope("systems")
        if tok.text not in sysmap:
            self.error(f"unknown system {tok.text!r}", tok)
            return None
        return sysmap[tok.text]

    # protocols -----------------------------------------------------------

    def protocol(self):
        self.expect("protocol")
        name = self.name("protocol name")
        roles, channels = [], []

        def clause():
            tok = self.peek()
            if self.at("role"):
                self.advance()
                role = self.name("role name")
                self.expect(":")
                sys = self.name("system name")
                self.expect(";")
                roles.append((role, sys))
            elif self.at("channel"):
                self.advance()
                a = self.name("sending role")
                self.expect(".")
                ap = self.name("output port")
                self.expect("->")
                b = self.name("receiving role")
                self.expect(".")
                bp = self.name("input port")
                self.expect(";")
                channels.append((a, ap, b, bp))
            else:
                raise _Syntax(f"expected role or channel but found {tok}", tok)

        self.block(clause)
        ok = True
        bound = {}
        for role, sys in roles:
            if role.text in bound:
                self.error(f"role {role.text!r} declared twice", role)
                ok = False
                continue
            ts = self.lookup_system(sys)
            if ts is None:
                ok = False
                continue
            if not ts.accepting:
                self.error(f"system {sys.text!r} has no accepting state and cannot be a role", sys)
                ok = False
            bound[role.text] = (sys.text, ts)
        if not roles:
            self.error(f"protocol {name.text!r} declares no roles", name)
            ok = False
        checked = []
        for a, ap, b, bp in channels:
            if a.text not in bound or b.text not in bound:
                bad = a if a.text not in bound else b
                self.error(f"unknown role {bad.text!r}", bad)
                ok = False
                continue
            try:
                checked.append(make_channel(Endpoint(a.text, bound[a.text][1], ap.text),
                                            Endpoint(b.text, bound[b.text][1], bp.text), checked))
            except ChannelError as e:
                self.error(str(e), a)
                ok = False
        if ok:
            self.declare("protocols", name, ProtocolDecl(
                name.text, tuple((r.text, s.text) for r, s in roles), frozenset(checked)))

    # document classes ----------------------------------------------------

    def params(self) -> tuple:
        if not self.at("("):
            return ()
        self.advance()
        out = {}
        while True:
            key = self.name("parameter name")
            self.expect("=")
            if key.text in out:
                raise _Syntax(f"parameter {key.text!r} given twice", key)
            out[key.text] = self.integer()
            if not self.at(","):
                break
            self.advance()
        self.expect(")")
        return tuple(sorted(out.items()))

    def docclass(self):
        self.expect("docclass")
        name = self.name("docclass name")
        self.expect("for")
        sys_tok = self.name("system name")
        parse, modes, conds = [], [], []

        def clause():
            tok = self.peek()
            if self.at("parse"):
                self.advance()
                port = self.name("port")
                self.expect(".")
                char = self.name("character")
                self.expect("->")
                cls = self.name("document class")
                prm = self.params()
                self.expect(";")
                parse.append((port, char, cls, prm))
            elif self.at("mode"):
                self.advance()
                state = self.name("state")
                self.expect("->")
                mode = self.name("mode")
                rest = self.params()
                self.expect(";")
                modes.append((state, mode, rest))
            elif self.at("cond"):
                self.advance()
                cname = self.name("condition name")
                self.expect(":")
                pp = PredicateParser(self.tokens, self.pos)
                try:
                    pred = pp.parse()
                except PredicateError as e:
                    raise _Syntax(str(e), e.token or self.peek())
                self.pos = pp.pos
                self.expect(";")
                conds.append((cname, pred))
            else:
                raise _Syntax(f"expected parse, mode or cond but found {tok}", tok)

        self.block(clause)
        ts = self.lookup_system(sys_tok)
        if ts is None:
            return
        ok = True
        table, images = {}, {}
        for port, char, cls, prm in parse:
            p = ts.input_port(port.text) or ts.output_port(port.text)
            if p is None or char.text not in p.alphabet:
                self.error(f"{port.text}.{char.text} is not a character of {ts.name}", port)
                ok = False
                continue
            key = (port.text, char.text)
            img = (cls.text, prm)
            if key in table:
                self.error(f"{port.text}.{char.text} parsed twice", port)
                ok = False
            elif img in images:
                self.error(f"parse is not invertible: {format_label(images[img])} and "
                           f"{port.text}.{char.text} both map to {cls.text}", cls)
                ok = False
            table[key] = img
            images[img] = key
        mode_map = {}
        for state, mode, rest in modes:
            if state.text not in ts.states:
                self.error(f"undeclared state {state.text!r} in system {ts.name!r}", state)
                ok = False
            elif state.text in mode_map:
                self.error(f"mode of {state.text!r} given twice", state)
                ok = False
            mode_map[state.text] = (mode.text, rest)
        cond_map = {}
        for cname, pred in conds:
            if cname.text in cond_map:
                self.error(f"condition {cname.text!r} defined twice", cname)
                ok = False
            cond_map[cname.text] = pred
        if ok:
            self.declare("docclasses", name, DocClassDecl(name.text, sys_tok.text, table,
                                                          mode_map if modes else None, cond_map))

    # partitions ----------------------------------------------------------

    def partition(self):
        self.expect("partition")
        name = self.name("partition name")
        self.expect("for")
        sys_tok = self.name("system name")
        classes = []

        def clause():
            tok = self.peek()
            if not self.at("class"):
                raise _Syntax(f"expected class but found {tok}", tok)
            self.advance()
            cname = self.name("class name")
            members = []

            def member():
                members.append(self.transition())
            self.block(member)
            classes.append((cname, members))

        self.block(clause)
        ts = self.lookup_system(sys_tok)
        if ts is None:
            return
        ok = True
        table, owner = {}, {}
        for cname, members in classes:
            if cname.text in table:
                self.error(f"class {cname.text!r} defined twice", cname)
                ok = False
                continue
            table[cname.text] = set()
            for src, dst, (lin, _), (lout, _) in members:
                t = Transition(src.text, dst.text, lin, lout)
                if t not in ts.transitions:
                    self.error(f"{t} is not a transition of {ts.name}", src)
                    ok = False
                elif t in owner:
                    self.error(f"{t} already belongs to class {owner[t]!r}", src)
                    ok = False
                else:
                    owner[t] = cname.text
                    table[cname.text].add(t)
        missing = sorted_transitions(ts.transitions - owner.keys())
        if ok and missing:
            self.error(f"partition {name.text!r} misses {', '.join(map(str, missing))}", name)
            ok = False
        if ok:
            self.declare("partitions", name, PartitionDecl(
                name.text, sys_tok.text, {k: frozenset(v) for k, v in table.items()}))


def _make_loader():
    cache, active = {}, set()

    def load(path):
        key = os.path.realpath(path)
        if key in cache:
            return cache[key]
        if key in active:
            return None, [ParseDiagnostic(ERROR_SEV, 1, 1, f"import cycle through {path}")]
        active.add(key)
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
            parser = _Parser(text, path, load)
            model = parser.parse()
            cache[key] = (model, parser.diags)
        finally:
            active.discard(key)
        return cache[key]

    return load


def parse_model(text: str, path: str = None, _loader=None) -> ParseResult:
    """Parse model text; ``path`` anchors relative imports."""
    parser = _Parser(text, path, _loader or _make_loader())
    model = parser.parse()
    model.preamble = _leading_comments(text)
    return ParseResult(model, parser.diags)


def _leading_comments(text: str) -> tuple:
    lines = []
    for ln in text.splitlines():
        stripped = ln.strip()
        if not stripped.startswith("#"):
            if stripped:
                break
            continue
        lines.append(stripped)
    return tuple(lines)


def load_model(path: str) -> ModelFile:
    """Parse a file and raise :class:`ModelFileError` on any error diagnostic."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    result = parse_model(text, path)
    if not result.ok:
        raise ModelFileError(path, result.errors)
    return result.model


# serialization ------------------------------------------------------------

def _label_text(lab) -> str:
    return format_label(lab)


def _trans_line(t: Transition) -> str:
    return f"trans {t.source} -> {t.target} : {_label_text(t.input)} / {_label_text(t.output)};"


def _params_text(prm) -> str:
    if not prm:
        return ""
    return " (" + ", ".join(f"{k} = {v}" for k, v in prm) + ")"


def _ports_text(ports) -> str:
    return ", ".join(f"{p.name} {{{', '.join(sorted(p.alphabet))}}}" for p in ports)


def serialize_system(ts: ValidatedSystem) -> str:
    for q in ts.states:
        if not is_identifier(q):
            raise ModelError(f"state {q!r} of {ts.name} is not an identifier; flatten it first")
    lines = [f"system {ts.name} {{",
             f"  states {', '.join(sorted(ts.states, key=state_key))};",
             f"  init {ts.initial};"]
    if ts.inputs:
        lines.append(f"  inputs {_ports_text(ts.inputs)};")
    if ts.outputs:
        lines.append(f"  outputs {_ports_text(ts.outputs)};")
    if ts.accepting:
        lines.append(f"  accept {', '.join(sorted(ts.accepting, key=state_key))};")
    lines += ["  " + _trans_line(t) for t in sorted_transitions(ts.transitions)]
    lines.append("}")
    return "\n".join(lines)


def _serialize_protocol(p: ProtocolDecl) -> str:
    lines = [f"protocol {p.name} {{"]
    lines += [f"  role {r} : {s};" for r, s in p.roles]
    lines += [f"  channel {c.src_role}.{c.src_port} -> {c.dst_role}.{c.dst_port};"
              for c in sorted(p.channels)]
    lines.append("}")
    return "\n".join(lines)


def _serialize_docclass(d: DocClassDecl) -> str:
    lines = [f"docclass {d.name} for {d.system} {{"]
    for (port, char), (cls, prm) in sorted(d.parse.items()):
        lines.append(f"  parse {port}.{char} -> {cls}{_params_text(prm)};")
    for state, (mode, rest) in sorted((d.modes or {}).items()):
        lines.append(f"  mode {state} -> {mode}{_params_text(rest)};")
    for cname, pred in sorted(d.conditions.items()):
        lines.append(f"  cond {cname} : {pred};")
    lines.append("}")
    return "\n".join(lines)


def _serialize_partition(p: PartitionDecl) -> str:
    lines = [f"partition {p.name} for {p.system} {{"]
    for cname in sorted(p.classes):
        lines.append(f"  class {cname} {{")
        lines += ["    " + _trans_line(t) for t in sorted_transitions(p.classes[cname])]
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines)


def serialize_model(m: ModelFile) -> str:
    """Canonical text: header, imports, then systems, protocols, docclasses
    and partitions, each sorted by name and separated by blank lines."""
    blocks = ["\n".join(m.preamble)] if m.preamble else []
    if m.name is not None:
        version = f' version "{m.version}"' if m.version is not None else ""
        blocks.append(f"model {m.name}{version};")
    if m.imports:
        blocks.append("\n".join(f'import "{i}";' for i in m.imports))
    blocks += [serialize_system(m.systems[k]) for k in sorted(m.systems)]
    blocks += [_serialize_protocol(m.protocols[k]) for k in sorted(m.protocols)]
    blocks += [_serialize_docclass(m.docclasses[k]) for k in sorted(m.docclasses)]
    blocks += [_serialize_partition(m.partitions[k]) for k in sorted(m.partitions)]
    return "\n\n".join(blocks) + "\n" if blocks else ""


def format_file(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    result = parse_model(text, path)
    if not result.ok:
        raise ModelFileError(path, result.errors)
    return serialize_model(result.model)

"""Concrete syntax for theories, formulas and sequents.

The surface language is ASCII::

    theory Cat
      sorts ob mor
      functions
        id : ob -> mor
        d : mor -> ob
        c : mor -> ob
        . : mor * mor -> mor
      axioms
        top |- [x:ob] id(x)!
        d(g) = c(f) -||- [g:mor, f:mor] (g . f)!
    end

``t!`` abbreviates ``t = t``; ``-||-`` is a pair of sequents; single
punctuation characters declared as binary functions are written infix
(left-associative, one precedence level).  A theory with ``operators`` or
``judgments`` blocks is a relative theory over the declared base.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .syntax import (
    App,
    Atom,
    Eq,
    Formula,
    FunctionSymbol,
    Horn,
    IllFormed,
    Operator,
    Rel,
    RelationSymbol,
    RelativeTheory,
    Sequent,
    Signature,
    Term,
    Theory,
    Var,
    atom_symbols,
    check_atom_wf,
)

KEYWORDS = {"theory", "sorts", "functions", "relations", "axioms", "operators", "judgments", "end", "top"}
OP_CHARS = ".+-*/^"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<bi>-\|\|-)
  | (?P<turn>\|-)
  | (?P<arrow>->)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>[.+\-*/^])
  | (?P<punct>[\[\](),:|=!&])
    """,
    re.VERBOSE,
)


class ParseError(IllFormed):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        self.message = message
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            text = m.group()
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            elif kind in ("punct", "bi", "turn", "arrow"):
                kind = text
            tokens.append(Token(kind, text, line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# Raw (unelaborated) syntax: variables are resolved only once the context is known.


@dataclass(frozen=True)
class _Name:
    name: str
    tok: Token


@dataclass(frozen=True)
class _Call:
    fn: str
    args: tuple
    tok: Token
    explicit: bool = True


@dataclass(frozen=True)
class _RawEq:
    left: Union[_Name, _Call]
    right: Union[_Name, _Call]
    tok: Token


@dataclass(frozen=True)
class _RawRel:
    rel: str
    args: tuple
    tok: Token


class Parser:
    def __init__(self, source: str, signature: Signature | None = None):
        self.tokens = tokenize(source)
        self.i = 0
        self.sig = signature

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def advance(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        if not self.at(kind, text):
            want = text or kind
            got = self.tok.text or self.tok.kind
            raise self.error(f"expected {want!r}, found {got!r}")
        return self.advance()

    def at_sort(self) -> bool:
        return self.tok.kind == "ident" or (self.tok.kind == "op" and self.tok.text == "*")

    def sort_name(self) -> str:
        if not self.at_sort():
            raise self.error(f"expected a sort name, found {self.tok.text or self.tok.kind!r}")
        tok = self.advance()
        if self.sig is not None and tok.text not in self.sig.sorts:
            raise self.error(f"undeclared sort {tok.text!r}", tok)
        return tok.text

    def at_block_end(self) -> bool:
        return self.at("eof") or (self.tok.kind == "kw" and self.tok.text != "top")

    def end(self) -> None:
        if not self.at("eof"):
            raise self.error(f"unexpected trailing input {self.tok.text!r}")

    # -- theory

    def theory(self) -> Theory | RelativeTheory:
        self.expect("kw", "theory")
        name = self.expect("ident").text
        self.expect("kw", "sorts")
        sorts: list[str] = []
        while self.at_sort():
            tok = self.advance()
            if tok.text in sorts:
                raise self.error(f"duplicate sort {tok.text!r}", tok)
            sorts.append(tok.text)
        if not sorts:
            raise self.error("expected at least one sort")
        self.sig = Signature(tuple(sorts))
        functions: list[FunctionSymbol] = []
        relations: list[RelationSymbol] = []
        if self.at("kw", "functions"):
            self.advance()
            while self.tok.kind == "ident" or self.tok.kind == "op":
                functions.append(self.fun_decl(functions, relations))
        if self.at("kw", "relations"):
            self.advance()
            while self.tok.kind == "ident":
                relations.append(self.rel_decl(functions, relations))
        self.sig = Signature(tuple(sorts), tuple(functions), tuple(relations))
        axioms: list[Sequent] = []
        if self.at("kw", "axioms"):
            self.advance()
            while not self.at_block_end():
                axioms.extend(self.sequent())
        base = Theory(name, self.sig, tuple(axioms))
        operators: list[Operator] = []
        judgments: list[Sequent] = []
        relative = False
        if self.at("kw", "operators"):
            relative = True
            self.advance()
            while self.tok.kind in ("ident", "op"):
                operators.append(self.op_decl(operators))
            self.sig = base.signature.extend(op.symbol() for op in operators)
        if self.at("kw", "judgments"):
            if not relative:
                self.sig = base.signature
            relative = True
            self.advance()
            while not self.at_block_end():
                start = self.tok
                for j in self.sequent():
                    ops = {op.name for op in operators}
                    for atom in j.premise:
                        bad = atom_symbols(atom) & ops
                        if bad:
                            raise self.error(f"judgment premise mentions operator(s) {sorted(bad)}", start)
                    judgments.append(j)
        self.expect("kw", "end")
        self.end()
        if relative:
            try:
                return RelativeTheory(name, base, tuple(operators), tuple(judgments))
            except IllFormed as exc:
                raise ParseError(str(exc)) from None
        return base

    def _symbol_name(self, functions, relations) -> Token:
        tok = self.advance()
        if tok.kind not in ("ident", "op"):
            raise self.error(f"expected a symbol name, found {tok.text!r}", tok)
        if tok.text in {f.name for f in functions} | {r.name for r in relations}:
            raise self.error(f"duplicate symbol {tok.text!r}", tok)
        return tok

    def fun_decl(self, functions, relations) -> FunctionSymbol:
        tok = self._symbol_name(functions, relations)
        self.expect(":")
        args: list[str] = []
        if not self.at("->"):
            args.append(self.sort_name())
            while self.at("op", "*") and self.peek().kind in ("ident", "op"):
                self.advance()
                args.append(self.sort_name())
        self.expect("->")
        result = self.sort_name()
        if tok.kind == "op" and len(args) != 2:
            raise self.error(f"operator symbol {tok.text!r} must be binary", tok)
        return FunctionSymbol(tok.text, tuple(args), result)

    def rel_decl(self, functions, relations) -> RelationSymbol:
        tok = self._symbol_name(functions, relations)
        self.expect(":")
        args: list[str] = []
        if self.at("("):
            self.advance()
            self.expect(")")
        else:
            args.append(self.sort_name())
            while self.at("op", "*") and self.peek().kind in ("ident", "op"):
                self.advance()
                args.append(self.sort_name())
        return RelationSymbol(tok.text, tuple(args))

    def op_decl(self, operators) -> Operator:
        tok = self.advance()
        if tok.kind not in ("ident", "op"):
            raise self.error(f"expected an operator name, found {tok.text!r}", tok)
        if self.sig.has_symbol(tok.text) or tok.text in {o.name for o in operators}:
            raise self.error(f"duplicate symbol {tok.text!r}", tok)
        self.expect(":")
        self.expect("[")
        ctx = self.context_body(close="|")
        self.expect("|")
        raw = self.raw_formula()
        self.expect("]")
        self.expect("->")
        sort = self.sort_name()
        arity = Formula(ctx, self.elaborate(raw, ctx))
        if tok.kind == "op" and len(ctx) != 2:
            raise self.error(f"operator symbol {tok.text!r} must be binary", tok)
        return Operator(tok.text, arity, sort)

    # -- contexts, formulas, sequents

    def context(self) -> tuple[Var, ...]:
        self.expect("[")
        ctx = self.context_body(close="]")
        self.expect("]")
        return ctx

    def context_body(self, close: str) -> tuple[Var, ...]:
        ctx: list[Var] = []
        if self.at(close):
            return ()
        while True:
            tok = self.expect("ident")
            if any(v.name == tok.text for v in ctx):
                raise self.error(f"duplicate context variable {tok.text!r}", tok)
            if self.sig is not None and self.sig.has_symbol(tok.text):
                raise self.error(f"variable {tok.text!r} clashes with a symbol", tok)
            self.expect(":")
            ctx.append(Var(tok.text, self.sort_name()))
            if not self.at(","):
                return tuple(ctx)
            self.advance()

    def sequent(self) -> list[Sequent]:
        raw_premise = self.raw_formula()
        if self.at("|-"):
            both = False
        elif self.at("-||-"):
            both = True
        else:
            raise self.error(f"expected '|-' or '-||-', found {self.tok.text or self.tok.kind!r}")
        self.advance()
        ctx = self.context()
        raw_conclusion = self.raw_formula()
        premise = self.elaborate(raw_premise, ctx)
        conclusion = self.elaborate(raw_conclusion, ctx)
        if both:
            return [Sequent(ctx, premise, conclusion), Sequent(ctx, conclusion, premise)]
        return [Sequent(ctx, premise, conclusion)]

    def formula_in_context(self) -> Formula:
        ctx = self.context()
        raw = self.raw_formula()
        return Formula(ctx, self.elaborate(raw, ctx))

    def raw_formula(self) -> list:
        if self.at("kw", "top"):
            self.advance()
            return []
        atoms = [self.raw_atom()]
        while self.at("&"):
            self.advance()
            atoms.append(self.raw_atom())
        return atoms

    def raw_atom(self):
        tok = self.tok
        if tok.kind == "ident" and self.sig is not None and tok.text in self.sig.relation_map:
            self.advance()
            args = self.raw_args()
            return _RawRel(tok.text, args, tok)
        left = self.raw_term()
        if self.at("!"):
            self.advance()
            return _RawEq(left, left, tok)
        if self.at("="):
            self.advance()
            right = self.raw_term()
            return _RawEq(left, right, tok)
        raise self.error(f"expected '=' or '!' after term, found {self.tok.text or self.tok.kind!r}")

    def raw_args(self) -> tuple:
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.raw_term())
            while self.at(","):
                self.advance()
                args.append(self.raw_term())
        self.expect(")")
        return tuple(args)

    def raw_term(self):
        left = self.raw_operand()
        while self.at("op") and not self.at("op", "*") or self._infix_star():
            tok = self.advance()
            right = self.raw_operand()
            left = _Call(tok.text, (left, right), tok)
        return left

    def _infix_star(self) -> bool:
        return self.at("op", "*") and self.sig is not None and "*" in self.sig.function_map

    def raw_operand(self):
        tok = self.tok
        if tok.kind == "(":
            self.advance()
            t = self.raw_term()
            self.expect(")")
            return t
        if tok.kind == "ident":
            self.advance()
            # f(x) is an application only when the parenthesis is adjacent
            if self.at("(") and self.tok.line == tok.line and self.tok.col == tok.col + len(tok.text):
                return _Call(tok.text, self.raw_args(), tok)
            return _Name(tok.text, tok)
        raise self.error(f"expected a term, found {tok.text or tok.kind!r}")

    # -- elaboration

    def elaborate(self, raw_atoms: list, ctx: tuple[Var, ...]) -> Horn:
        env = {v.name: v for v in ctx}
        atoms: list[Atom] = []
        for raw in raw_atoms:
            if isinstance(raw, _RawRel):
                atom: Atom = Rel(raw.rel, tuple(self.elab_term(a, env) for a in raw.args))
            else:
                atom = Eq(self.elab_term(raw.left, env), self.elab_term(raw.right, env))
            try:
                check_atom_wf(atom, self.sig)
            except IllFormed as exc:
                raise self.error(str(exc), raw.tok) from None
            atoms.append(atom)
        return Horn(tuple(atoms))

    def elab_term(self, raw, env: dict[str, Var]) -> Term:
        if isinstance(raw, _Name):
            if raw.name in env:
                return env[raw.name]
            f = self.sig.function_map.get(raw.name)
            if f is not None and not f.args:
                return App(raw.name)
            raise self.error(f"unbound variable {raw.name!r}", raw.tok)
        if raw.fn not in self.sig.function_map:
            raise self.error(f"unknown function symbol {raw.fn!r}", raw.tok)
        return App(raw.fn, tuple(self.elab_term(a, env) for a in raw.args))


# ---------------------------------------------------------------------------
# Entry points


def parse_theory(source: str) -> Theory | RelativeTheory:
    return Parser(source).theory()


def _with_sig(signature: Signature | Theory | RelativeTheory) -> Signature:
    return signature if isinstance(signature, Signature) else signature.signature


def parse_formula(source: str, signature) -> Formula:
    """Parse ``[x:s, ...] atom & ...``."""
    p = Parser(source, _with_sig(signature))
    phi = p.formula_in_context()
    p.end()
    return phi


def parse_sequents(source: str, signature) -> list[Sequent]:
    p = Parser(source, _with_sig(signature))
    out = p.sequent()
    p.end()
    return out


def parse_sequent(source: str, signature) -> Sequent:
    seqs = parse_sequents(source, signature)
    if len(seqs) != 1:
        raise ParseError("expected a single sequent, got a bisequent")
    return seqs[0]


def parse_atoms(source: str, signature, context: tuple[Var, ...]) -> Horn:
    """Parse a conjunction over an explicitly given context."""
    p = Parser(source, _with_sig(signature))
    raw = p.raw_formula()
    p.end()
    return p.elaborate(raw, tuple(context))


def parse_context(source: str, signature) -> tuple[Var, ...]:
    text = source.strip()
    if not text.startswith("["):
        text = f"[{text}]"
    p = Parser(text, _with_sig(signature))
    ctx = p.context()
    p.end()
    return ctx


# ---------------------------------------------------------------------------
# Printing


def _is_infix(name: str) -> bool:
    return len(name) == 1 and name in OP_CHARS


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if _is_infix(t.fn) and len(t.args) == 2:
        return f"({format_term(t.args[0])} {t.fn} {format_term(t.args[1])})"
    return f"{t.fn}({', '.join(format_term(a) for a in t.args)})"


def format_atom(a: Atom) -> str:
    if isinstance(a, Rel):
        return f"{a.rel}({', '.join(format_term(x) for x in a.args)})"
    if a.left == a.right:
        return f"{format_term(a.left)}!"
    return f"{format_term(a.left)} = {format_term(a.right)}"


def format_horn(h: Horn) -> str:
    return " & ".join(format_atom(a) for a in h) if h.atoms else "top"


def format_context(ctx) -> str:
    return "[" + ", ".join(f"{v.name}:{v.sort}" for v in ctx) + "]"


def format_formula(phi: Formula) -> str:
    return f"{format_context(phi.context)} {format_horn(phi.body)}"


def format_sequent(s: Sequent) -> str:
    return f"{format_horn(s.premise)} |- {format_context(s.context)} {format_horn(s.conclusion)}"


def _format_sig_blocks(sig: Signature, lines: list[str]) -> None:
    lines.append("  sorts " + " ".join(sig.sorts))
    if sig.functions:
        lines.append("  functions")
        for f in sig.functions:
            lines.append(f"    {f.name} : {' * '.join(f.args)}{' ' if f.args else ''}-> {f.result}")
    if sig.relations:
        lines.append("  relations")
        for r in sig.relations:
            lines.append(f"    {r.name} : {' * '.join(r.args) if r.args else '()'}")


def format_theory(t: Theory | RelativeTheory) -> str:
    base = t.base if isinstance(t, RelativeTheory) else t
    lines = [f"theory {t.name}"]
    _format_sig_blocks(base.signature, lines)
    if base.axioms:
        lines.append("  axioms")
        lines.extend("    " + format_sequent(s) for s in base.axioms)
    if isinstance(t, RelativeTheory):
        lines.append("  operators")
        for op in t.operators:
            ctx = ", ".join(f"{v.name}:{v.sort}" for v in op.arity.context)
            lines.append(f"    {op.name} : [{ctx} | {format_horn(op.arity.body)}] -> {op.sort}")
        if t.judgments:
            lines.append("  judgments")
            lines.extend("    " + format_sequent(s) for s in t.judgments)
    lines.append("end")
    return "\n".join(lines) + "\n"

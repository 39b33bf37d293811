"""Abstract syntax for multi-sorted partial Horn theories.

Terms, atoms and Horn formulas are immutable and hashable.  Variables carry
their sort, so a formula-in-context is fully elaborated once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Union


class IllFormed(Exception):
    """Base class for well-formedness failures."""


class SortError(IllFormed):
    pass


class UnboundVariable(IllFormed):
    pass


class DuplicateSymbol(IllFormed):
    pass


class UnknownSymbol(IllFormed):
    pass


@dataclass(frozen=True, order=True)
class Var:
    name: str
    sort: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple[Term, ...] = ()

    def __str__(self) -> str:
        return f"{self.fn}({', '.join(map(str, self.args))})"


Term = Union[Var, App]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term

    @property
    def is_definedness(self) -> bool:
        return self.left == self.right

    def __str__(self) -> str:
        if self.is_definedness:
            return f"{self.left}!"
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class Rel:
    rel: str
    args: tuple[Term, ...] = ()

    def __str__(self) -> str:
        return f"{self.rel}({', '.join(map(str, self.args))})"


Atom = Union[Eq, Rel]


def defined(t: Term) -> Eq:
    """The definedness atom ``t!``, i.e. ``t = t``."""
    return Eq(t, t)


@dataclass(frozen=True)
class Horn:
    """A conjunction of atoms; the empty conjunction is truth."""

    atoms: tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))

    @property
    def is_top(self) -> bool:
        return not self.atoms

    def __and__(self, other: Horn) -> Horn:
        return Horn(self.atoms + other.atoms)

    def dedup(self) -> Horn:
        return Horn(tuple(dict.fromkeys(self.atoms)))

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __str__(self) -> str:
        return " & ".join(map(str, self.atoms)) if self.atoms else "top"


TOP = Horn()


@dataclass(frozen=True)
class Formula:
    """A Horn formula-in-context ``[x1:s1, ..., xn:sn] body``."""

    context: tuple[Var, ...]
    body: Horn = TOP

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        if not isinstance(self.body, Horn):
            object.__setattr__(self, "body", Horn(tuple(self.body)))
        _check_context(self.context)
        _check_closed(self.body.atoms, self.context)

    @property
    def sorts(self) -> tuple[str, ...]:
        return tuple(v.sort for v in self.context)

    def __str__(self) -> str:
        return f"{format_context(self.context)} {self.body}"


@dataclass(frozen=True)
class Sequent:
    context: tuple[Var, ...]
    premise: Horn = TOP
    conclusion: Horn = TOP

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        for name in ("premise", "conclusion"):
            value = getattr(self, name)
            if not isinstance(value, Horn):
                object.__setattr__(self, name, Horn(tuple(value)))
        _check_context(self.context)
        _check_closed(self.premise.atoms + self.conclusion.atoms, self.context)

    @property
    def antecedent(self) -> Formula:
        return Formula(self.context, self.premise)

    def __str__(self) -> str:
        return f"{self.premise} |- {format_context(self.context)} {self.conclusion}"


def format_context(ctx: Iterable[Var]) -> str:
    return "[" + ", ".join(f"{v.name}:{v.sort}" for v in ctx) + "]"


def _check_context(ctx: tuple[Var, ...]) -> None:
    names = [v.name for v in ctx]
    if len(set(names)) != len(names):
        raise SortError(f"context variables are not distinct: {names}")


def _check_closed(atoms: Iterable[Atom], ctx: tuple[Var, ...]) -> None:
    allowed = set(ctx)
    for atom in atoms:
        for v in atom_vars(atom):
            if v not in allowed:
                raise UnboundVariable(f"variable {v.name}:{v.sort} not in context {format_context(ctx)}")


# ---------------------------------------------------------------------------
# Signatures and theories


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    args: tuple[str, ...]
    result: str

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class RelationSymbol:
    name: str
    args: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Signature:
    sorts: tuple[str, ...]
    functions: tuple[FunctionSymbol, ...] = ()
    relations: tuple[RelationSymbol, ...] = ()

    def __post_init__(self):
        for name in ("sorts", "functions", "relations"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if len(set(self.sorts)) != len(self.sorts):
            raise DuplicateSymbol(f"duplicate sort in {self.sorts}")
        seen: set[str] = set()
        for sym in self.functions + self.relations:
            if sym.name in seen:
                raise DuplicateSymbol(f"duplicate symbol {sym.name!r}")
            seen.add(sym.name)
            mentioned = sym.args + ((sym.result,) if isinstance(sym, FunctionSymbol) else ())
            for s in mentioned:
                if s not in self.sorts:
                    raise SortError(f"symbol {sym.name!r} mentions undeclared sort {s!r}")

    @cached_property
    def function_map(self) -> dict[str, FunctionSymbol]:
        return {f.name: f for f in self.functions}

    @cached_property
    def relation_map(self) -> dict[str, RelationSymbol]:
        return {r.name: r for r in self.relations}

    def function(self, name: str) -> FunctionSymbol:
        try:
            return self.function_map[name]
        except KeyError:
            raise UnknownSymbol(f"unknown function symbol {name!r}") from None

    def relation(self, name: str) -> RelationSymbol:
        try:
            return self.relation_map[name]
        except KeyError:
            raise UnknownSymbol(f"unknown relation symbol {name!r}") from None

    def has_symbol(self, name: str) -> bool:
        return name in self.function_map or name in self.relation_map

    def extend(self, functions: Iterable[FunctionSymbol] = (), relations: Iterable[RelationSymbol] = ()) -> Signature:
        return Signature(self.sorts, self.functions + tuple(functions), self.relations + tuple(relations))

    def contains(self, other: Signature) -> bool:
        """True when every symbol of ``other`` occurs here with the same arity."""
        if not set(other.sorts) <= set(self.sorts):
            return False
        return all(self.function_map.get(f.name) == f for f in other.functions) and all(
            self.relation_map.get(r.name) == r for r in other.relations
        )


@dataclass(frozen=True)
class Theory:
    name: str
    signature: Signature
    axioms: tuple[Sequent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple(self.axioms))
        for ax in self.axioms:
            check_sequent_wf(ax, self.signature)


@dataclass(frozen=True)
class Operator:
    """An operator of a relative theory: a Horn-formula arity and a result sort."""

    name: str
    arity: Formula
    sort: str

    def symbol(self) -> FunctionSymbol:
        return FunctionSymbol(self.name, self.arity.sorts, self.sort)


@dataclass(frozen=True)
class RelativeTheory:
    name: str
    base: Theory
    operators: tuple[Operator, ...] = ()
    judgments: tuple[Sequent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(self.operators))
        object.__setattr__(self, "judgments", tuple(self.judgments))
        base = self.base.signature
        for op in self.operators:
            if base.has_symbol(op.name):
                raise DuplicateSymbol(f"operator {op.name!r} clashes with a base symbol")
            if op.sort not in base.sorts:
                raise SortError(f"operator {op.name!r} has undeclared type {op.sort!r}")
            check_formula_wf(op.arity, base)
        # raises on duplicate operator names
        sig = self.signature
        op_names = {op.name for op in self.operators}
        for j in self.judgments:
            check_sequent_wf(j, sig)
            used = set().union(*(atom_symbols(a) for a in j.premise)) if j.premise.atoms else set()
            if used & op_names:
                raise SortError(f"judgment premise mentions operators {sorted(used & op_names)}: {j}")

    @cached_property
    def signature(self) -> Signature:
        return self.base.signature.extend(op.symbol() for op in self.operators)

    def operator(self, name: str) -> Operator:
        for op in self.operators:
            if op.name == name:
                return op
        raise UnknownSymbol(f"unknown operator {name!r}")


@dataclass(frozen=True)
class TheoryMorphism:
    """Symbol-level data of a theory morphism between two signatures.

    Axiom translation is not checked here; see ``chase.is_phl_theorem``.
    """

    source: Signature
    target: Signature
    sorts: Mapping[str, str]
    functions: Mapping[str, str] = field(default_factory=dict)
    relations: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for s in self.source.sorts:
            if s not in self.sorts:
                raise UnknownSymbol(f"sort {s!r} not mapped")
            if self.sorts[s] not in self.target.sorts:
                raise SortError(f"sort image {self.sorts[s]!r} not in target")
        for f in self.source.functions:
            if f.name not in self.functions:
                raise UnknownSymbol(f"function {f.name!r} not mapped")
            g = self.target.function(self.functions[f.name])
            if g.args != tuple(self.sorts[s] for s in f.args) or g.result != self.sorts[f.result]:
                raise SortError(f"{f.name} -> {g.name} is not arity-compatible")
        for r in self.source.relations:
            if r.name not in self.relations:
                raise UnknownSymbol(f"relation {r.name!r} not mapped")
            q = self.target.relation(self.relations[r.name])
            if q.args != tuple(self.sorts[s] for s in r.args):
                raise SortError(f"{r.name} -> {q.name} is not arity-compatible")

    @classmethod
    def identity(cls, sig: Signature) -> TheoryMorphism:
        return cls.inclusion(sig, sig)

    @classmethod
    def inclusion(cls, source: Signature, target: Signature) -> TheoryMorphism:
        return cls(
            source,
            target,
            {s: s for s in source.sorts},
            {f.name: f.name for f in source.functions},
            {r.name: r.name for r in source.relations},
        )


# ---------------------------------------------------------------------------
# Traversals


def term_vars(t: Term) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    else:
        for a in t.args:
            yield from term_vars(a)


def atom_terms(atom: Atom) -> tuple[Term, ...]:
    return (atom.left, atom.right) if isinstance(atom, Eq) else atom.args


def atom_vars(atom: Atom) -> Iterator[Var]:
    for t in atom_terms(atom):
        yield from term_vars(t)


def term_symbols(t: Term) -> set[str]:
    if isinstance(t, Var):
        return set()
    out = {t.fn}
    for a in t.args:
        out |= term_symbols(a)
    return out


def atom_symbols(atom: Atom) -> set[str]:
    out = {atom.rel} if isinstance(atom, Rel) else set()
    for t in atom_terms(atom):
        out |= term_symbols(t)
    return out


def subterms(t: Term) -> Iterator[Term]:
    """Post-order: arguments before the application itself."""
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)
    yield t


# ---------------------------------------------------------------------------
# Well-formedness


def sort_of(t: Term, sig: Signature) -> str:
    if isinstance(t, Var):
        if t.sort not in sig.sorts:
            raise SortError(f"variable {t.name} has undeclared sort {t.sort!r}")
        return t.sort
    f = sig.function(t.fn)
    if len(t.args) != len(f.args):
        raise SortError(f"{t.fn} expects {len(f.args)} arguments, got {len(t.args)}")
    for i, (a, s) in enumerate(zip(t.args, f.args)):
        got = sort_of(a, sig)
        if got != s:
            raise SortError(f"argument {i + 1} of {t.fn} has sort {got}, expected {s}")
    return f.result


def check_atom_wf(atom: Atom, sig: Signature) -> None:
    if isinstance(atom, Eq):
        ls, rs = sort_of(atom.left, sig), sort_of(atom.right, sig)
        if ls != rs:
            raise SortError(f"equation between sorts {ls} and {rs}: {atom}")
        return
    r = sig.relation(atom.rel)
    if len(atom.args) != len(r.args):
        raise SortError(f"{atom.rel} expects {len(r.args)} arguments, got {len(atom.args)}")
    for i, (a, s) in enumerate(zip(atom.args, r.args)):
        got = sort_of(a, sig)
        if got != s:
            raise SortError(f"argument {i + 1} of {atom.rel} has sort {got}, expected {s}")


def check_formula_wf(phi: Formula, sig: Signature) -> None:
    for v in phi.context:
        sort_of(v, sig)
    for atom in phi.body:
        check_atom_wf(atom, sig)


def check_sequent_wf(s: Sequent, sig: Signature) -> None:
    for v in s.context:
        sort_of(v, sig)
    for atom in s.premise.atoms + s.conclusion.atoms:
        check_atom_wf(atom, sig)


# ---------------------------------------------------------------------------
# Substitution and translation


Item = Union[Term, Atom, Horn, Formula, Sequent]


def substitute(item, bindings: Mapping[Var, Term], *, strict: bool = True):
    """Simultaneous substitution of variables by terms.

    With ``strict`` every free variable must be bound.  Substituting into a
    Formula or Sequent only rewrites the body; use ``substitute_formula`` to
    also move to a new context.
    """
    for v, t in bindings.items():
        if isinstance(t, Var) and t.sort != v.sort:
            raise SortError(f"cannot substitute {t.name}:{t.sort} for {v.name}:{v.sort}")

    def term(t: Term) -> Term:
        if isinstance(t, Var):
            if t in bindings:
                return bindings[t]
            if strict:
                raise UnboundVariable(f"no binding for {t.name}:{t.sort}")
            return t
        return App(t.fn, tuple(term(a) for a in t.args))

    def atom(a: Atom) -> Atom:
        if isinstance(a, Eq):
            return Eq(term(a.left), term(a.right))
        return Rel(a.rel, tuple(term(x) for x in a.args))

    if isinstance(item, (Var, App)):
        return term(item)
    if isinstance(item, (Eq, Rel)):
        return atom(item)
    if isinstance(item, Horn):
        return Horn(tuple(atom(a) for a in item))
    raise TypeError(f"cannot substitute into {type(item).__name__}")


def substitute_checked(item, bindings: Mapping[Var, Term], sig: Signature, *, strict: bool = True):
    """``substitute`` plus a sort check of every bound term against ``sig``."""
    for v, t in bindings.items():
        got = sort_of(t, sig)
        if got != v.sort:
            raise SortError(f"term {t} has sort {got}, cannot replace {v.name}:{v.sort}")
    return substitute(item, bindings, strict=strict)


def translate(item, rho: TheoryMorphism):
    """Replace every sort, function and relation symbol along ``rho``."""

    def var(v: Var) -> Var:
        if v.sort not in rho.sorts:
            raise UnknownSymbol(f"sort {v.sort!r} not in morphism domain")
        return Var(v.name, rho.sorts[v.sort])

    def term(t: Term) -> Term:
        if isinstance(t, Var):
            return var(t)
        if t.fn not in rho.functions:
            raise UnknownSymbol(f"function {t.fn!r} not in morphism domain")
        return App(rho.functions[t.fn], tuple(term(a) for a in t.args))

    def atom(a: Atom) -> Atom:
        if isinstance(a, Eq):
            return Eq(term(a.left), term(a.right))
        if a.rel not in rho.relations:
            raise UnknownSymbol(f"relation {a.rel!r} not in morphism domain")
        return Rel(rho.relations[a.rel], tuple(term(x) for x in a.args))

    def horn(h: Horn) -> Horn:
        return Horn(tuple(atom(a) for a in h))

    if isinstance(item, (Var, App)):
        return term(item)
    if isinstance(item, (Eq, Rel)):
        return atom(item)
    if isinstance(item, Horn):
        return horn(item)
    if isinstance(item, Formula):
        return Formula(tuple(map(var, item.context)), horn(item.body))
    if isinstance(item, Sequent):
        return Sequent(tuple(map(var, item.context)), horn(item.premise), horn(item.conclusion))
    raise TypeError(f"cannot translate {type(item).__name__}")


def bisequent(ctx: tuple[Var, ...], left: Horn, right: Horn) -> tuple[Sequent, Sequent]:
    return Sequent(ctx, left, right), Sequent(ctx, right, left)


def expand_relative_theory(rt: RelativeTheory) -> Theory:
    """The ordinary theory over the base signature plus operators.

    Base axioms, then ``w(x)! -||- ar(w)`` for each operator (two sequents),
    then the judgments.
    """
    axioms = list(rt.base.axioms)
    for op in rt.operators:
        ctx = op.arity.context
        axioms.extend(bisequent(ctx, Horn((defined(App(op.name, ctx)),)), op.arity.body))
    axioms.extend(rt.judgments)
    return Theory(f"{rt.name}", rt.signature, tuple(axioms))


def rename_apart(phi: Formula, taken: set[str], prefix: str = "") -> tuple[Formula, dict[Var, Var]]:
    """Rename the context of ``phi`` so no name is in ``taken`` (which is updated)."""
    mapping: dict[Var, Var] = {}
    for v in phi.context:
        name = prefix + v.name
        i = 1
        while name in taken:
            i += 1
            name = f"{prefix}{v.name}{i}"
        taken.add(name)
        mapping[v] = Var(name, v.sort)
    new_ctx = tuple(mapping[v] for v in phi.context)
    return Formula(new_ctx, substitute(phi.body, mapping)), mapping

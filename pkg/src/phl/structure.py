"""Finite partial Σ-structures and Horn semantics on them.

Elements are small integers, scoped per sort.  Functions are partial maps
from argument tuples to elements; relations are sets of tuples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence

from .syntax import (
    App,
    Atom,
    Eq,
    Formula,
    Horn,
    IllFormed,
    Sequent,
    Signature,
    Term,
    Theory,
    TheoryMorphism,
    Var,
    atom_vars,
)

Element = int
Tuple = tuple  # a tuple of elements


class StructureError(IllFormed):
    pass


class SignatureMismatch(StructureError):
    pass


class Check(NamedTuple):
    """A boolean verdict with an optional witness explaining a failure."""

    ok: bool
    witness: object = None

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True, eq=False)
class PartialStructure:
    signature: Signature
    carriers: Mapping[str, tuple[Element, ...]]
    functions: Mapping[str, Mapping[Tuple, Element]]
    relations: Mapping[str, frozenset]

    def __post_init__(self):
        sig = self.signature
        carriers = {}
        for s in sig.sorts:
            elems = tuple(sorted(set(self.carriers.get(s, ()))))
            carriers[s] = elems
        extra = set(self.carriers) - set(sig.sorts)
        if extra:
            raise StructureError(f"carriers for undeclared sorts {sorted(extra)}")
        members = {s: frozenset(e) for s, e in carriers.items()}

        def check_tuple(sym: str, args: Sequence[str], tup: Tuple) -> None:
            if len(tup) != len(args):
                raise StructureError(f"{sym}: tuple {tup} has wrong length")
            for x, s in zip(tup, args):
                if x not in members[s]:
                    raise StructureError(f"{sym}: element {x} not in carrier of {s}")

        functions = {}
        for f in sig.functions:
            table = {}
            for args, value in dict(self.functions.get(f.name, {})).items():
                args = tuple(args)
                check_tuple(f.name, f.args, args)
                check_tuple(f.name, (f.result,), (value,))
                table[args] = value
            functions[f.name] = dict(sorted(table.items()))
        relations = {}
        for r in sig.relations:
            tuples = frozenset(tuple(t) for t in self.relations.get(r.name, ()))
            for t in tuples:
                check_tuple(r.name, r.args, t)
            relations[r.name] = tuples
        unknown = (set(self.functions) - set(functions)) | (set(self.relations) - set(relations))
        if unknown:
            raise StructureError(f"tables for undeclared symbols {sorted(unknown)}")
        object.__setattr__(self, "carriers", carriers)
        object.__setattr__(self, "functions", functions)
        object.__setattr__(self, "relations", relations)

    # Structural equality; use iso_check for the semantic comparison.
    def __eq__(self, other) -> bool:
        if not isinstance(other, PartialStructure):
            return NotImplemented
        return (
            self.signature == other.signature
            and self.carriers == other.carriers
            and self.functions == other.functions
            and self.relations == other.relations
        )

    __hash__ = None  # type: ignore[assignment]

    def size(self, sort: str | None = None) -> int:
        if sort is None:
            return sum(len(c) for c in self.carriers.values())
        return len(self.carriers[sort])

    def sizes(self) -> dict[str, int]:
        return {s: len(c) for s, c in self.carriers.items()}

    def apply(self, fn: str, args: Tuple) -> Optional[Element]:
        return self.functions[fn].get(tuple(args))

    def holds(self, rel: str, args: Tuple) -> bool:
        return tuple(args) in self.relations[rel]

    def tuples(self, sorts: Sequence[str]) -> Iterator[Tuple]:
        return itertools.product(*(self.carriers[s] for s in sorts))

    def restrict(self, subset: Mapping[str, Iterable[Element]]) -> PartialStructure:
        """The induced substructure on ``subset``: tables restricted to it."""
        keep = {s: frozenset(subset.get(s, ())) for s in self.signature.sorts}
        funcs = {}
        for f in self.signature.functions:
            funcs[f.name] = {
                a: v
                for a, v in self.functions[f.name].items()
                if v in keep[f.result] and all(x in keep[s] for x, s in zip(a, f.args))
            }
        rels = {}
        for r in self.signature.relations:
            rels[r.name] = {t for t in self.relations[r.name] if all(x in keep[s] for x, s in zip(t, r.args))}
        return PartialStructure(self.signature, {s: tuple(k) for s, k in keep.items()}, funcs, rels)

    def __repr__(self) -> str:
        return f"PartialStructure({self.sizes()})"


def make_structure(
    signature: Signature,
    carriers: Mapping[str, Iterable[Element]],
    functions: Mapping[str, Mapping[Tuple, Element] | Iterable[Sequence[Element]]] | None = None,
    relations: Mapping[str, Iterable[Sequence[Element]]] | None = None,
) -> PartialStructure:
    """Build a structure; function tables may be dicts or ``[args..., value]`` rows."""
    funcs = {}
    for name, table in (functions or {}).items():
        if isinstance(table, Mapping):
            funcs[name] = {tuple(k) if isinstance(k, tuple) else (k,): v for k, v in table.items()}
        else:
            funcs[name] = {tuple(row[:-1]): row[-1] for row in table}
    rels = {name: {tuple(t) for t in tuples} for name, tuples in (relations or {}).items()}
    return PartialStructure(signature, {s: tuple(c) for s, c in carriers.items()}, funcs, rels)


def terminal(signature: Signature) -> PartialStructure:
    """Singleton carriers, total functions, full relations."""
    carriers = {s: (0,) for s in signature.sorts}
    funcs = {f.name: {(0,) * len(f.args): 0} for f in signature.functions}
    rels = {r.name: {(0,) * len(r.args)} for r in signature.relations}
    return PartialStructure(signature, carriers, funcs, rels)


def empty_structure(signature: Signature) -> PartialStructure:
    return PartialStructure(signature, {}, {}, {})


# ---------------------------------------------------------------------------
# Interpretation


def interpret_term(M: PartialStructure, t: Term, env: Mapping[Var, Element]) -> Optional[Element]:
    """Strict evaluation: an application is defined iff its arguments are."""
    if isinstance(t, Var):
        return env[t]
    args = []
    for a in t.args:
        v = interpret_term(M, a, env)
        if v is None:
            return None
        args.append(v)
    return M.functions[t.fn].get(tuple(args))


def satisfies_atom(M: PartialStructure, atom: Atom, env: Mapping[Var, Element]) -> bool:
    if isinstance(atom, Eq):
        left = interpret_term(M, atom.left, env)
        if left is None:
            return False
        return left == interpret_term(M, atom.right, env)
    args = []
    for a in atom.args:
        v = interpret_term(M, a, env)
        if v is None:
            return False
        args.append(v)
    return tuple(args) in M.relations[atom.rel]


def satisfies(M: PartialStructure, body: Horn, env: Mapping[Var, Element]) -> bool:
    return all(satisfies_atom(M, a, env) for a in body)


def _atom_schedule(ctx: tuple[Var, ...], atoms: Sequence[Atom]) -> list[list[Atom]]:
    """Bucket atoms by the context position after which they are fully bound.

    Bucket 0 holds closed atoms; bucket i+1 those whose last variable is ctx[i].
    """
    pos = {v: i for i, v in enumerate(ctx)}
    buckets: list[list[Atom]] = [[] for _ in range(len(ctx) + 1)]
    for atom in atoms:
        last = max((pos[v] for v in atom_vars(atom)), default=-1)
        buckets[last + 1].append(atom)
    return buckets


def iter_formula(M: PartialStructure, phi: Formula) -> Iterator[Tuple]:
    """Tuples of ⟦phi⟧ in lexicographic order."""
    ctx = phi.context
    buckets = _atom_schedule(ctx, phi.body.atoms)
    env: dict[Var, Element] = {}
    if not all(satisfies_atom(M, a, env) for a in buckets[0]):
        return

    def go(i: int) -> Iterator[Tuple]:
        if i == len(ctx):
            yield tuple(env[v] for v in ctx)
            return
        v = ctx[i]
        for x in M.carriers[v.sort]:
            env[v] = x
            if all(satisfies_atom(M, a, env) for a in buckets[i + 1]):
                yield from go(i + 1)
        env.pop(v, None)

    yield from go(0)


def interpret_formula(M: PartialStructure, phi: Formula) -> set[Tuple]:
    return set(iter_formula(M, phi))


def check_sequent(M: PartialStructure, s: Sequent) -> Check:
    """Validity of ``s`` in ``M``; the witness is the first failing tuple."""
    for tup in iter_formula(M, s.antecedent):
        env = dict(zip(s.context, tup))
        if not satisfies(M, s.conclusion, env):
            return Check(False, tup)
    return Check(True)


def _require_symbols(M: PartialStructure, sig: Signature) -> None:
    if not M.signature.contains(sig):
        raise SignatureMismatch("structure signature does not cover the theory signature")


def is_model(M: PartialStructure, T: Theory) -> Check:
    """Witness on failure: ``(axiom_index, axiom, tuple)`` of the first failure."""
    _require_symbols(M, T.signature)
    for i, ax in enumerate(T.axioms):
        res = check_sequent(M, ax)
        if not res:
            return Check(False, (i, ax, res.witness))
    return Check(True)


# ---------------------------------------------------------------------------
# Homomorphisms


@dataclass(frozen=True, eq=False)
class Homomorphism:
    source: PartialStructure
    target: PartialStructure
    maps: Mapping[str, Mapping[Element, Element]]

    def __post_init__(self):
        maps = {s: dict(sorted(dict(self.maps.get(s, {})).items())) for s in self.source.signature.sorts}
        for s in self.source.signature.sorts:
            if set(maps[s]) != set(self.source.carriers[s]):
                raise StructureError(f"map on sort {s} is not total on the source carrier")
            if not set(maps[s].values()) <= set(self.target.carriers[s]):
                raise StructureError(f"map on sort {s} leaves the target carrier")
        object.__setattr__(self, "maps", maps)

    def __call__(self, sort: str, x: Element) -> Element:
        return self.maps[sort][x]

    def apply_tuple(self, sorts: Sequence[str], tup: Tuple) -> Tuple:
        return tuple(self.maps[s][x] for s, x in zip(sorts, tup))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Homomorphism):
            return NotImplemented
        return self.maps == other.maps and self.source == other.source and self.target == other.target

    __hash__ = None  # type: ignore[assignment]

    def key(self) -> tuple:
        """Hashable summary of the underlying maps, in canonical order."""
        return tuple((s, tuple(m.items())) for s, m in sorted(self.maps.items()))

    def then(self, g: Homomorphism) -> Homomorphism:
        """The composite ``g ∘ self``."""
        return Homomorphism(
            self.source, g.target, {s: {x: g.maps[s][y] for x, y in m.items()} for s, m in self.maps.items()}
        )

    def is_injective(self) -> bool:
        return all(len(set(m.values())) == len(m) for m in self.maps.values())

    def is_surjective(self) -> bool:
        return all(set(self.maps[s].values()) == set(self.target.carriers[s]) for s in self.maps)

    def image(self) -> dict[str, set[Element]]:
        return {s: set(m.values()) for s, m in self.maps.items()}

    def __repr__(self) -> str:
        return f"Homomorphism({dict(self.maps)})"


def identity(M: PartialStructure) -> Homomorphism:
    return Homomorphism(M, M, {s: {x: x for x in c} for s, c in M.carriers.items()})


def check_hom(A: PartialStructure, B: PartialStructure, maps: Mapping[str, Mapping[Element, Element]]) -> Check:
    """Preservation of definedness, values and relation tuples."""
    sig = A.signature
    for s in sig.sorts:
        m = maps.get(s, {})
        for x in A.carriers[s]:
            if x not in m:
                return Check(False, ("not-total", s, x))
            if m[x] not in B.carriers[s]:
                return Check(False, ("out-of-range", s, x))
    for f in sig.functions:
        btab = B.functions[f.name]
        for args, v in A.functions[f.name].items():
            image = tuple(maps[s][x] for s, x in zip(f.args, args))
            w = btab.get(image)
            if w is None:
                return Check(False, ("undefined", f.name, args))
            if w != maps[f.result][v]:
                return Check(False, ("value", f.name, args))
    for r in sig.relations:
        brel = B.relations[r.name]
        for t in sorted(A.relations[r.name]):
            if tuple(maps[s][x] for s, x in zip(r.args, t)) not in brel:
                return Check(False, ("relation", r.name, t))
    return Check(True)


def is_homomorphism(h: Homomorphism) -> Check:
    return check_hom(h.source, h.target, h.maps)


# ---------------------------------------------------------------------------
# Products


def product_elements(factors: Sequence[PartialStructure], sort: str) -> list[Tuple]:
    """Component tuples of the product carrier; the id of a tuple is its index."""
    return list(itertools.product(*(F.carriers[sort] for F in factors)))


def product(factors: Sequence[PartialStructure], signature: Signature | None = None) -> PartialStructure:
    """Pointwise product; a function is defined iff defined in every component."""
    if not factors:
        if signature is None:
            raise StructureError("the empty product needs an explicit signature")
        return terminal(signature)
    sig = signature or factors[0].signature
    if any(F.signature != sig for F in factors):
        raise SignatureMismatch("product factors have different signatures")
    elems = {s: product_elements(factors, s) for s in sig.sorts}
    index = {s: {t: i for i, t in enumerate(ts)} for s, ts in elems.items()}
    funcs = {}
    for f in sig.functions:
        table = {}
        # defined tuples are products of per-factor entries
        per_factor = [list(F.functions[f.name].items()) for F in factors]
        for combo in itertools.product(*per_factor):
            args = tuple(index[s][tuple(entry[0][j] for entry in combo)] for j, s in enumerate(f.args))
            value = index[f.result][tuple(entry[1] for entry in combo)]
            table[args] = value
        funcs[f.name] = table
    rels = {}
    for r in sig.relations:
        tuples = set()
        for combo in itertools.product(*(sorted(F.relations[r.name]) for F in factors)):
            tuples.add(tuple(index[s][tuple(t[j] for t in combo)] for j, s in enumerate(r.args)))
        rels[r.name] = tuples
    carriers = {s: tuple(range(len(ts))) for s, ts in elems.items()}
    return PartialStructure(sig, carriers, funcs, rels)


def projections(factors: Sequence[PartialStructure], P: PartialStructure) -> list[Homomorphism]:
    out = []
    for k, F in enumerate(factors):
        maps = {s: {i: t[k] for i, t in enumerate(product_elements(factors, s))} for s in P.signature.sorts}
        out.append(Homomorphism(P, F, maps))
    return out


def pairing(legs: Sequence[Homomorphism], factors: Sequence[PartialStructure], P: PartialStructure) -> Homomorphism:
    """The map into the product induced by ``legs`` (one per factor)."""
    X = legs[0].source if legs else None
    if X is None:
        raise StructureError("pairing needs at least one leg")
    maps = {}
    for s in P.signature.sorts:
        index = {t: i for i, t in enumerate(product_elements(factors, s))}
        maps[s] = {x: index[tuple(h.maps[s][x] for h in legs)] for x in X.carriers[s]}
    return Homomorphism(X, P, maps)


# ---------------------------------------------------------------------------
# Reducts


def reduct(M: PartialStructure, rho: TheoryMorphism) -> PartialStructure:
    """Pull ``M`` (over rho's target) back to rho's source signature."""
    if not M.signature.contains(rho.target) and M.signature != rho.target:
        raise SignatureMismatch("structure is not over the morphism's target signature")
    sig = rho.source
    carriers = {s: M.carriers[rho.sorts[s]] for s in sig.sorts}
    funcs = {f.name: dict(M.functions[rho.functions[f.name]]) for f in sig.functions}
    rels = {r.name: set(M.relations[rho.relations[r.name]]) for r in sig.relations}
    return PartialStructure(sig, carriers, funcs, rels)


def forget(M: PartialStructure, sig: Signature) -> PartialStructure:
    """Reduct along the inclusion of ``sig`` into ``M``'s signature."""
    return reduct(M, TheoryMorphism.inclusion(sig, M.signature))


def reduct_hom(h: Homomorphism, rho: TheoryMorphism) -> Homomorphism:
    A, B = reduct(h.source, rho), reduct(h.target, rho)
    return Homomorphism(A, B, {s: h.maps[rho.sorts[s]] for s in rho.source.sorts})


def expand(M: PartialStructure, signature: Signature, functions=None, relations=None) -> PartialStructure:
    """Re-type ``M`` over a larger signature, adding the given tables."""
    funcs = dict(M.functions)
    funcs.update(functions or {})
    rels = dict(M.relations)
    rels.update(relations or {})
    return PartialStructure(signature, M.carriers, funcs, rels)


def constant_term(name: str) -> App:
    return App(name)


# ---------------------------------------------------------------------------
# Homomorphism search


class _Search:
    """Backtracking over carrier elements with forward checks.

    Positions run over ``(sort, element)`` in signature-sort then id order;
    each source table entry is checked as soon as all its elements are mapped.
    """

    def __init__(self, A: PartialStructure, B: PartialStructure, injective: bool = False, fixed=None):
        if A.signature != B.signature:
            raise SignatureMismatch("homomorphism search needs equal signatures")
        self.A, self.B, self.injective = A, B, injective
        sig = A.signature
        self.positions = [(s, x) for s in sig.sorts for x in A.carriers[s]]
        index = {p: i for i, p in enumerate(self.positions)}
        self.checks: list[list[tuple]] = [[] for _ in self.positions]
        self.closed_checks: list[tuple] = []
        for f in sig.functions:
            for args, v in A.functions[f.name].items():
                elems = [index[(s, x)] for s, x in zip(f.args, args)] + [index[(f.result, v)]]
                self.checks[max(elems)].append(("f", f, args, v))
        for r in sig.relations:
            for t in sorted(A.relations[r.name]):
                elems = [index[(s, x)] for s, x in zip(r.args, t)]
                entry = ("r", r, t)
                if elems:
                    self.checks[max(elems)].append(entry)
                else:
                    self.closed_checks.append(entry)
        self.fixed = dict(fixed or {})

    def _ok(self, check, maps) -> bool:
        if check[0] == "f":
            _, f, args, v = check
            w = self.B.functions[f.name].get(tuple(maps[s][x] for s, x in zip(f.args, args)))
            return w is not None and w == maps[f.result][v]
        _, r, t = check
        return tuple(maps[s][x] for s, x in zip(r.args, t)) in self.B.relations[r.name]

    def run(self) -> Iterator[dict[str, dict[Element, Element]]]:
        maps: dict[str, dict[Element, Element]] = {s: {} for s in self.A.signature.sorts}
        if not all(self._ok(c, maps) for c in self.closed_checks):
            return
        used: dict[str, set[Element]] = {s: set() for s in maps}
        positions, B = self.positions, self.B

        def go(i: int):
            if i == len(positions):
                yield {s: dict(m) for s, m in maps.items()}
                return
            s, x = positions[i]
            choices = (self.fixed[(s, x)],) if (s, x) in self.fixed else B.carriers[s]
            for y in choices:
                if self.injective and y in used[s]:
                    continue
                maps[s][x] = y
                if all(self._ok(c, maps) for c in self.checks[i]):
                    used[s].add(y)
                    yield from go(i + 1)
                    used[s].discard(y)
                del maps[s][x]

        yield from go(0)


def iter_homs(A: PartialStructure, B: PartialStructure, *, injective: bool = False, fixed=None) -> Iterator[Homomorphism]:
    """Homomorphisms A -> B in lexicographic order of carrier assignments.

    ``fixed`` pins some elements: ``{(sort, a): b}``.
    """
    for maps in _Search(A, B, injective, fixed).run():
        yield Homomorphism(A, B, maps)


def enumerate_homs(A: PartialStructure, B: PartialStructure, **kw) -> list[Homomorphism]:
    return list(iter_homs(A, B, **kw))


def count_homs(A: PartialStructure, B: PartialStructure, **kw) -> int:
    return sum(1 for _ in _Search(A, B, kw.get("injective", False), kw.get("fixed")).run())


def find_hom(A: PartialStructure, B: PartialStructure, **kw) -> Optional[Homomorphism]:
    return next(iter_homs(A, B, **kw), None)


def inverse_maps(h: Homomorphism) -> dict[str, dict[Element, Element]]:
    return {s: {y: x for x, y in m.items()} for s, m in h.maps.items()}


def iso_check(A: PartialStructure, B: PartialStructure) -> Optional[Homomorphism]:
    """An isomorphism A -> B, or None.

    Bijective homomorphisms whose inverse is also a homomorphism; size
    equality alone is never taken as evidence.
    """
    if A.signature != B.signature or A.sizes() != B.sizes():
        return None
    for h in iter_homs(A, B, injective=True):
        if check_hom(B, A, inverse_maps(h)):
            return h
    return None


def is_iso(A: PartialStructure, B: PartialStructure) -> bool:
    return iso_check(A, B) is not None


# ---------------------------------------------------------------------------
# Closed monos, generated closed submodels, factorization


class NotAMono(StructureError):
    pass


def is_closed_mono(h: Homomorphism) -> Check:
    """Injective and reflecting definedness and relation membership.

    The witness is ``(symbol, source tuple)`` for the first reflected failure.
    """
    if not h.is_injective():
        raise NotAMono("homomorphism is not injective on every sort")
    A, B, sig = h.source, h.target, h.source.signature
    inv = inverse_maps(h)
    for f in sig.functions:
        for args in sorted(B.functions[f.name]):
            pre = [inv[s].get(y) for s, y in zip(f.args, args)]
            if any(x is None for x in pre):
                continue
            if tuple(pre) not in A.functions[f.name]:
                return Check(False, (f.name, tuple(pre)))
    for r in sig.relations:
        for t in sorted(B.relations[r.name]):
            pre = [inv[s].get(y) for s, y in zip(r.args, t)]
            if any(x is None for x in pre):
                continue
            if tuple(pre) not in A.relations[r.name]:
                return Check(False, (r.name, tuple(pre)))
    return Check(True)


def _close_by_table(B: PartialStructure, seed: Mapping[str, Iterable[Element]]) -> dict[str, set[Element]]:
    sub = {s: set(seed.get(s, ())) for s in B.signature.sorts}
    entries = [(f, a, v) for f in B.signature.functions for a, v in B.functions[f.name].items()]
    changed = True
    while changed:
        changed = False
        for f, args, v in entries:
            if v not in sub[f.result] and all(x in sub[s] for x, s in zip(args, f.args)):
                sub[f.result].add(v)
                changed = True
    return sub


def _close_by_product(B: PartialStructure, seed: Mapping[str, Iterable[Element]]) -> dict[str, set[Element]]:
    # Kleene iteration over all argument tuples of the current subset.
    sub = {s: set(seed.get(s, ())) for s in B.signature.sorts}
    while True:
        new = {s: set(xs) for s, xs in sub.items()}
        for f in B.signature.functions:
            for args in itertools.product(*(sorted(sub[s]) for s in f.args)):
                v = B.functions[f.name].get(args)
                if v is not None:
                    new[f.result].add(v)
        if new == sub:
            return sub
        sub = new


def closed_submodel_generated(
    B: PartialStructure, seed: Mapping[str, Iterable[Element]], method: str = "table"
) -> tuple[PartialStructure, Homomorphism]:
    """Smallest subset closed under defined operations, with induced tables.

    ``method="table"`` keeps B's element ids; ``method="product"`` computes the
    closure independently and renumbers the result 0..n-1 per sort.
    """
    for s, xs in seed.items():
        if not set(xs) <= set(B.carriers[s]):
            raise StructureError(f"seed not contained in carrier of {s}")
    if method == "table":
        sub = _close_by_table(B, seed)
        C = B.restrict(sub)
        return C, Homomorphism(C, B, {s: {x: x for x in C.carriers[s]} for s in C.signature.sorts})
    if method == "product":
        sub = _close_by_product(B, seed)
        ren = {s: {x: i for i, x in enumerate(sorted(xs))} for s, xs in sub.items()}
        C0 = B.restrict(sub)
        C = relabel(C0, ren)
        return C, Homomorphism(C, B, {s: {i: x for x, i in ren[s].items()} for s in ren})
    raise ValueError(f"unknown closure method {method!r}")


def relabel(M: PartialStructure, ren: Mapping[str, Mapping[Element, Element]]) -> PartialStructure:
    """Rename elements along per-sort bijections."""
    sig = M.signature
    funcs = {
        f.name: {tuple(ren[s][x] for s, x in zip(f.args, a)): ren[f.result][v] for a, v in M.functions[f.name].items()}
        for f in sig.functions
    }
    rels = {r.name: {tuple(ren[s][x] for s, x in zip(r.args, t)) for t in M.relations[r.name]} for r in sig.relations}
    carriers = {s: tuple(ren[s][x] for x in M.carriers[s]) for s in sig.sorts}
    return PartialStructure(sig, carriers, funcs, rels)


def normalize_ids(M: PartialStructure) -> PartialStructure:
    """Renumber every carrier to 0..n-1 preserving order."""
    return relabel(M, {s: {x: i for i, x in enumerate(c)} for s, c in M.carriers.items()})


def is_dense(h: Homomorphism) -> Check:
    """Image criterion: the closed submodel generated by the image is everything."""
    sub = _close_by_table(h.target, h.image())
    for s in h.target.signature.sorts:
        missing = sorted(set(h.target.carriers[s]) - sub[s])
        if missing:
            return Check(False, (s, missing[0]))
    return Check(True)


def factorize_dense_closed(h: Homomorphism, method: str = "table") -> tuple[Homomorphism, Homomorphism]:
    """``h = m ∘ e`` with ``e`` dense and ``m`` a closed mono."""
    C, m = closed_submodel_generated(h.target, h.image(), method)
    back = inverse_maps(m)
    e = Homomorphism(h.source, C, {s: {x: back[s][y] for x, y in hm.items()} for s, hm in h.maps.items()})
    return e, m

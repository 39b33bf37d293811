"""Bounded chase with congruence closure.

The engine builds the term model of a presentation modulo the theory: nodes
are hash-consed applications over generators, merged by a union-find and
kept congruence-closed.  Rules are matched semi-naively: every table entry
carries the round in which it last changed, and a round only enumerates
matches that use at least one entry from the previous round.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Optional, Sequence

from .structure import (
    Element,
    Homomorphism,
    PartialStructure,
    check_hom,
    interpret_term,
    reduct,
    satisfies,
)
from .syntax import (
    App,
    Atom,
    Eq,
    Formula,
    Horn,
    Rel,
    Sequent,
    Term,
    Theory,
    TheoryMorphism,
    Var,
    check_formula_wf,
    defined,
    substitute,
)

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10_000
ORDERS = ("fifo", "reversed")


@dataclass(frozen=True)
class Presentation:
    """Generators (as sorted variables) and atomic facts over them."""

    theory: Theory
    generators: tuple[Var, ...]
    facts: Horn = Horn()

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if not isinstance(self.facts, Horn):
            object.__setattr__(self, "facts", Horn(tuple(self.facts)))
        check_formula_wf(self.formula, self.theory.signature)

    @property
    def formula(self) -> Formula:
        return Formula(self.generators, self.facts)

    @classmethod
    def of_formula(cls, phi: Formula, theory: Theory) -> Presentation:
        return cls(theory, phi.context, phi.body)


@dataclass(frozen=True, eq=False)
class Saturated:
    model: PartialStructure
    class_of: Mapping[str, Element]
    generators: tuple[Var, ...]
    steps: int
    rounds: int
    terms: Mapping[str, tuple[Term, ...]] = field(default_factory=dict)
    unit: Optional[Homomorphism] = None

    saturated = True

    @property
    def generator_tuple(self) -> tuple[Element, ...]:
        """The tuple [x⃗]_T of generator classes, in generator order."""
        return tuple(self.class_of[v.name] for v in self.generators)

    @property
    def env(self) -> dict[Var, Element]:
        return {v: self.class_of[v.name] for v in self.generators}

    def term_of(self, sort: str, x: Element) -> Term:
        """A representative term over the generators for element ``x``."""
        return self.terms[sort][x]


@dataclass(frozen=True, eq=False)
class BudgetExceeded:
    steps: int
    rounds: int
    sizes: Mapping[str, int]
    snapshot: PartialStructure

    saturated = False


ChaseOutcome = Saturated | BudgetExceeded


class Derivability(enum.Enum):
    PROVED = "Proved"
    REFUTED = "Refuted"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


class ChaseError(Exception):
    """Engine-side failure: budget trouble or an internal inconsistency."""


# ---------------------------------------------------------------------------
# Rules: premises flattened into join constraints


@dataclass
class _Rule:
    index: int
    sequent: Sequent
    constraints: list[tuple]  # ("F", f, arg_slots, out_slot) | ("R", rel, arg_slots) | ("N", sort, slot)
    var_slots: tuple[int, ...]  # slot of each context variable
    nslots: int


def _compile(index: int, s: Sequent, sig) -> _Rule:
    parent: list[int] = []
    sorts: list[str] = []

    def fresh(sort: str) -> int:
        parent.append(len(parent))
        sorts.append(sort)
        return len(parent) - 1

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    var_slot = {v: fresh(v.sort) for v in s.context}
    apps: list[tuple[str, tuple[int, ...], int]] = []
    rels: list[tuple[str, tuple[int, ...]]] = []

    def flat(t: Term) -> int:
        if isinstance(t, Var):
            return var_slot[t]
        args = tuple(flat(a) for a in t.args)
        out = fresh(sig.function(t.fn).result)
        apps.append((t.fn, args, out))
        return out

    for atom in s.premise:
        if isinstance(atom, Eq):
            left, right = flat(atom.left), flat(atom.right)
            a, b = find(left), find(right)
            if a != b:
                parent[b] = a
        else:
            rels.append((atom.rel, tuple(flat(a) for a in atom.args)))

    # congruence on the pattern itself: equal keys force equal outputs
    changed = True
    while changed:
        changed = False
        seen: dict[tuple, int] = {}
        for fn, args, out in apps:
            key = (fn, tuple(find(a) for a in args))
            if key in seen and find(seen[key]) != find(out):
                parent[find(out)] = find(seen[key])
                changed = True
            seen.setdefault(key, out)

    constraints: list[tuple] = []
    done = set()
    covered = set()
    for fn, args, out in apps:
        c = ("F", fn, tuple(find(a) for a in args), find(out))
        if c not in done:
            done.add(c)
            constraints.append(c)
            covered.update(c[2])
            covered.add(c[3])
    for rel, args in rels:
        c = ("R", rel, tuple(find(a) for a in args))
        if c not in done:
            done.add(c)
            constraints.append(c)
            covered.update(c[2])
    for v in s.context:
        slot = find(var_slot[v])
        if slot not in covered:
            covered.add(slot)
            constraints.append(("N", v.sort, slot))
    return _Rule(index, s, constraints, tuple(find(var_slot[v]) for v in s.context), len(parent))


# ---------------------------------------------------------------------------
# Engine state


class ChaseState:
    """Mutable working state of one chase; not shared between threads."""

    def __init__(self, theory: Theory, order: str = "fifo"):
        if order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}")
        self.theory = theory
        self.sig = theory.signature
        self.order = order
        self.parent: list[int] = []
        self.size: list[int] = []
        self.sort: list[str] = []
        self.origin: list[object] = []  # Var for generators, (fn, arg nodes) otherwise
        self.node_stamp: list[int] = []
        self.funcs: dict[str, dict[tuple, list[int]]] = {f.name: {} for f in self.sig.functions}
        self.rels: dict[str, dict[tuple, int]] = {r.name: {} for r in self.sig.relations}
        self.clock = -1
        self.recent: dict[tuple[str, str], list] = {}
        self.delta_log: dict[tuple[str, str], list] = {}
        self.index_cache: dict[tuple, dict] = {}
        self.merges = 0
        self.index_merges = -1  # merge count when index_cache was last valid
        self.dirty = False
        self.steps = 0
        self.rounds = 0
        self.rules = [_compile(i, ax, self.sig) for i, ax in enumerate(theory.axioms)]

    # -- union-find ---------------------------------------------------------

    def _touched(self, kind: str, sym: str, key) -> None:
        self.recent.setdefault((kind, sym), []).append(key)

    def new_node(self, sort: str, origin) -> int:
        n = len(self.parent)
        self.parent.append(n)
        self.size.append(1)
        self.sort.append(sort)
        self.origin.append(origin)
        self.node_stamp.append(self.clock + 1)
        self._touched("N", sort, n)
        return n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        if self.sort[a] != self.sort[b]:
            raise ChaseError(f"cannot merge nodes of sorts {self.sort[a]} and {self.sort[b]}")
        # union by size; equal sizes break ties by node id, direction set by order
        prefer_low = self.order == "fifo"
        if (self.size[a], -a if prefer_low else a) < (self.size[b], -b if prefer_low else b):
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        self.merges += 1
        self.node_stamp[a] = self.clock + 1
        self._touched("N", self.sort[a], a)
        self.dirty = True
        return True

    # -- terms --------------------------------------------------------------

    def lookup(self, t: Term, env: Mapping[Var, int]) -> Optional[int]:
        if isinstance(t, Var):
            return self.find(env[t])
        args = []
        for a in t.args:
            n = self.lookup(a, env)
            if n is None:
                return None
            args.append(n)
        entry = self.funcs[t.fn].get(tuple(args))
        return None if entry is None else self.find(entry[0])

    def ensure(self, t: Term, env: Mapping[Var, int]) -> int:
        if isinstance(t, Var):
            return self.find(env[t])
        args = tuple(self.ensure(a, env) for a in t.args)
        args = tuple(self.find(a) for a in args)
        table = self.funcs[t.fn]
        entry = table.get(args)
        if entry is not None:
            return self.find(entry[0])
        n = self.new_node(self.sig.function(t.fn).result, (t.fn, args))
        table[args] = [n, self.clock + 1]
        self._touched("F", t.fn, args)
        return n

    def holds(self, atom: Atom, env: Mapping[Var, int]) -> bool:
        if isinstance(atom, Eq):
            left = self.lookup(atom.left, env)
            return left is not None and left == self.lookup(atom.right, env)
        args = []
        for a in atom.args:
            n = self.lookup(a, env)
            if n is None:
                return False
            args.append(n)
        return tuple(args) in self.rels[atom.rel]

    def enforce(self, atom: Atom, env: Mapping[Var, int]) -> None:
        if isinstance(atom, Eq):
            left = self.ensure(atom.left, env)
            right = self.ensure(atom.right, env)
            self.union(left, right)
        else:
            key = tuple(self.find(self.ensure(a, env)) for a in atom.args)
            table = self.rels[atom.rel]
            if key not in table:
                table[key] = self.clock + 1
                self._touched("R", atom.rel, key)

    # -- congruence closure -------------------------------------------------

    def rebuild(self) -> None:
        """Re-canonicalize all tables and propagate congruence to a fixpoint."""
        while self.dirty:
            self.dirty = False
            new_stamp = self.clock + 1
            find = self.find
            for fn, table in self.funcs.items():
                fresh: dict[tuple, list[int]] = {}
                for args, (out, stamp) in table.items():
                    cargs = tuple(find(a) for a in args)
                    cout = find(out)
                    prev = fresh.get(cargs)
                    if prev is None:
                        if cargs != args or cout != out:
                            stamp = new_stamp
                            self._touched("F", fn, cargs)
                        fresh[cargs] = [cout, stamp]
                    else:
                        if find(prev[0]) != cout:
                            self.union(prev[0], cout)
                        prev[1] = new_stamp
                        self._touched("F", fn, cargs)
                self.funcs[fn] = fresh
            for rel, tuples in self.rels.items():
                fresh_r: dict[tuple, int] = {}
                for tup, stamp in tuples.items():
                    ctup = tuple(find(a) for a in tup)
                    if ctup != tup:
                        stamp = new_stamp
                        self._touched("R", rel, ctup)
                    fresh_r[ctup] = max(stamp, fresh_r.get(ctup, stamp))
                self.rels[rel] = fresh_r

    # -- matching -----------------------------------------------------------

    @staticmethod
    def _slots(c: tuple) -> tuple[int, ...]:
        if c[0] == "F":
            return c[2] + (c[3],)
        if c[0] == "R":
            return c[2]
        return (c[2],)

    def _all_facts(self, c: tuple) -> list[tuple[tuple[int, ...], int]]:
        """Every fact for a constraint as (slot values, stamp)."""
        kind = c[0]
        if kind == "F":
            return [(args + (out,), stamp) for args, (out, stamp) in self.funcs[c[1]].items()]
        if kind == "R":
            return list(self.rels[c[1]].items())
        return [((n,), self.node_stamp[n]) for n in range(len(self.parent)) if self.parent[n] == n and self.sort[n] == c[1]]

    def _delta_facts(self, c: tuple, threshold: int) -> list[tuple[tuple[int, ...], int]]:
        """Facts stamped >= threshold, read from the previous round's change log."""
        kind, sym = c[0], c[1]
        out = []
        for key in dict.fromkeys(self.delta_log.get((kind, sym), ())):
            if kind == "F":
                entry = self.funcs[sym].get(key)
                if entry is not None and entry[1] >= threshold:
                    out.append((key + (entry[0],), entry[1]))
            elif kind == "R":
                stamp = self.rels[sym].get(key)
                if stamp is not None and stamp >= threshold:
                    out.append((key, stamp))
            elif self.parent[key] == key and self.node_stamp[key] >= threshold:
                out.append(((key,), self.node_stamp[key]))
        return out

    def _indexed(self, c: tuple, positions: tuple[int, ...]) -> dict[tuple, list]:
        cache_key = (c[0], c[1], positions)
        index = self.index_cache.get(cache_key)
        if index is None:
            index = {}
            for values, stamp in self._all_facts(c):
                index.setdefault(tuple(values[i] for i in positions), []).append((values, stamp))
            self.index_cache[cache_key] = index
        return index

    def _refresh_indexes(self, threshold: int) -> None:
        """Carry indexes into a new round.

        Without merges since the last round every logged fact is new, so it is
        appended; a merge re-keys tables and the indexes are dropped.
        """
        if self.merges != self.index_merges:
            self.index_cache = {}
            self.index_merges = self.merges
            return
        for (kind, sym, positions), index in self.index_cache.items():
            for values, stamp in self._delta_facts((kind, sym), threshold):
                index.setdefault(tuple(values[i] for i in positions), []).append((values, stamp))

    def matches(self, rule: _Rule, threshold: int) -> Iterator[tuple[int, ...]]:
        """Matches using at least one fact stamped >= threshold, each once."""
        cons = rule.constraints
        if not cons:
            if threshold <= 0:
                yield ()
            return
        slots = [self._slots(c) for c in cons]
        seen = set()
        for d in range(len(cons)):
            delta = self._delta_facts(cons[d], threshold)
            if not delta:
                continue
            plan = [d] + [j for j in range(len(cons)) if j != d]
            # slot positions already bound when each plan step is reached
            bound: set[int] = set()
            keys = []
            for j in plan:
                keys.append(tuple(i for i, s in enumerate(slots[j]) if s in bound))
                bound.update(slots[j])
            binding: list[Optional[int]] = [None] * rule.nslots

            def go(k: int):
                if k == len(plan):
                    yield tuple(binding[s] for s in rule.var_slots)
                    return
                j = plan[k]
                if k == 0:
                    pool = delta
                else:
                    pool = self._indexed(cons[j], keys[k]).get(tuple(binding[slots[j][i]] for i in keys[k]), ())
                for values, stamp in pool:
                    if j < d and stamp >= threshold:
                        continue  # counted under an earlier delta position
                    assigned = []
                    ok = True
                    for s, v in zip(slots[j], values):
                        b = binding[s]
                        if b is None:
                            binding[s] = v
                            assigned.append(s)
                        elif b != v:
                            ok = False
                            break
                    if ok:
                        yield from go(k + 1)
                    for s in assigned:
                        binding[s] = None

            for m in go(0):
                if m not in seen:
                    seen.add(m)
                    yield m

    # -- driver -------------------------------------------------------------

    def load(self, p: Presentation) -> dict[str, int]:
        gens = {}
        env = {}
        for v in p.generators:
            n = self.new_node(v.sort, v)
            gens[v.name] = n
            env[v] = n
        for atom in p.facts:
            self.enforce(atom, env)
            self.rebuild()
        self.generator_nodes = gens
        return gens

    def run(self, budget: int) -> bool:
        """Chase to saturation (True) or until the budget is spent (False)."""
        while True:
            self.clock = self.rounds
            threshold = self.rounds
            self.delta_log, self.recent = self.recent, {}
            self._refresh_indexes(threshold)
            agenda = [(rule, m) for rule in self.rules for m in self.matches(rule, threshold)]
            if self.order == "reversed":
                agenda.reverse()
            self.rounds += 1
            progressed = False
            for rule, m in agenda:
                env = {v: self.find(n) for v, n in zip(rule.sequent.context, m)}
                if all(self.holds(a, env) for a in rule.sequent.conclusion):
                    continue
                if self.steps >= budget:
                    return False
                self.steps += 1
                progressed = True
                for atom in rule.sequent.conclusion:
                    self.enforce(atom, env)
                self.rebuild()
            if not progressed:
                return True

    # -- extraction ---------------------------------------------------------

    def extract(self) -> tuple[PartialStructure, dict[int, tuple[str, int]], dict[str, tuple[Term, ...]]]:
        """The current quotient as a structure.

        Elements of each sort are numbered by the least node id in their class.
        Returns the structure, a node -> (sort, element) map and one
        representative term per element.
        """
        least: dict[int, int] = {}
        for n in range(len(self.parent)):
            r = self.find(n)
            if r not in least:
                least[r] = n
        by_sort: dict[str, list[int]] = {s: [] for s in self.sig.sorts}
        for r, n in sorted(least.items(), key=lambda kv: kv[1]):
            by_sort[self.sort[r]].append(r)
        elem = {}
        for s, roots in by_sort.items():
            for i, r in enumerate(roots):
                elem[r] = i
        funcs = {}
        for fn, table in self.funcs.items():
            funcs[fn] = {tuple(elem[self.find(a)] for a in args): elem[self.find(out)] for args, (out, _) in table.items()}
        rels = {rel: {tuple(elem[self.find(a)] for a in tup) for tup in tuples} for rel, tuples in self.rels.items()}
        carriers = {s: tuple(range(len(roots))) for s, roots in by_sort.items()}
        M = PartialStructure(self.sig, carriers, funcs, rels)
        node_elem = {n: (self.sort[n], elem[self.find(n)]) for n in range(len(self.parent))}

        terms: dict[str, list[Term]] = {s: [None] * len(r) for s, r in by_sort.items()}  # type: ignore[misc]
        # least node ids increase along construction, so argument classes come first
        for r, n in sorted(least.items(), key=lambda kv: kv[1]):
            origin = self.origin[n]
            if isinstance(origin, Var):
                t: Term = origin
            else:
                fn, args = origin
                t = App(fn, tuple(terms[self.sort[a]][elem[self.find(a)]] for a in args))
            terms[self.sort[r]][elem[r]] = t
        return M, node_elem, {s: tuple(ts) for s, ts in terms.items()}


# ---------------------------------------------------------------------------
# Operations


def chase(p: Presentation, budget: int = DEFAULT_BUDGET, order: str = "fifo") -> ChaseOutcome:
    if budget <= 0:
        raise ValueError("budget must be positive")
    state = ChaseState(p.theory, order)
    gens = state.load(p)
    done = state.run(budget)
    model, node_elem, terms = state.extract()
    if not done:
        log.debug("chase stopped after %d steps in %d rounds", state.steps, state.rounds)
        return BudgetExceeded(state.steps, state.rounds, model.sizes(), model)
    class_of = {name: node_elem[n][1] for name, n in gens.items()}
    return Saturated(model, class_of, p.generators, state.steps, state.rounds, terms)


def representing_model(phi: Formula, T: Theory, budget: int = DEFAULT_BUDGET, order: str = "fifo") -> ChaseOutcome:
    """⟨x⃗.φ⟩_T; on saturation ``generator_tuple`` is [x⃗]_T."""
    return chase(Presentation.of_formula(phi, T), budget, order)


def is_phl_theorem(s: Sequent, T: Theory, budget: int = DEFAULT_BUDGET) -> Derivability:
    out = representing_model(s.antecedent, T, budget)
    if not out.saturated:
        return Derivability.UNKNOWN
    if satisfies(out.model, s.conclusion, out.env):
        return Derivability.PROVED
    return Derivability.REFUTED


class SideConditionFailed(ChaseError):
    def __init__(self, sequent: Sequent, verdict: Derivability):
        super().__init__(f"side condition {sequent} is {verdict}")
        self.sequent = sequent
        self.verdict = verdict


def side_condition(src: Formula, tgt: Formula, terms: Sequence[Term]) -> Sequent:
    """ψ ⊢_y⃗ φ(τ⃗/x⃗) ∧ τ⃗↓: the terms define a morphism ⟨φ⟩ -> ⟨ψ⟩."""
    if len(terms) != len(src.context):
        raise ChaseError("one term per source variable is required")
    bindings = dict(zip(src.context, terms))
    concl = Horn(tuple(defined(t) for t in terms if isinstance(t, App)) + substitute(src.body, bindings).atoms)
    return Sequent(tgt.context, tgt.body, concl.dedup())


def morphism_from_terms(
    src: Formula, tgt: Formula, terms: Sequence[Term], T: Theory, budget: int = DEFAULT_BUDGET
) -> Homomorphism | Derivability:
    """⟨τ⃗⟩_T : ⟨src⟩ -> ⟨tgt⟩, or UNKNOWN when a chase runs out of budget.

    Raises SideConditionFailed when the side condition is refuted.
    """
    cond = side_condition(src, tgt, terms)
    verdict = is_phl_theorem(cond, T, budget)
    if verdict is Derivability.REFUTED:
        raise SideConditionFailed(cond, verdict)
    if verdict is Derivability.UNKNOWN:
        return Derivability.UNKNOWN
    A = representing_model(src, T, budget)
    B = representing_model(tgt, T, budget)
    if not (A.saturated and B.saturated):
        return Derivability.UNKNOWN
    bindings = dict(zip(src.context, terms))
    maps = {}
    for s in A.model.signature.sorts:
        maps[s] = {}
        for x in A.model.carriers[s]:
            image = interpret_term(B.model, substitute(A.term_of(s, x), bindings), B.env)
            if image is None:
                raise ChaseError(f"engine inconsistency: image of element {x}:{s} undefined")
            maps[s][x] = image
    res = check_hom(A.model, B.model, maps)
    if not res:
        raise ChaseError(f"engine inconsistency: induced map is not a homomorphism ({res.witness})")
    return Homomorphism(A.model, B.model, maps)


def element_generators(rho: TheoryMorphism, A: PartialStructure) -> dict[tuple[str, Element], Var]:
    """One generator per element of A, typed along rho."""
    names = {}
    for i, s in enumerate(A.signature.sorts):
        for x in A.carriers[s]:
            names[(s, x)] = Var(f"a{i}_{x}" if x >= 0 else f"a{i}_m{-x}", rho.sorts[s])
    return names


def diagram_facts(rho: TheoryMorphism, A: PartialStructure, gens: Mapping[tuple[str, Element], Var]) -> Horn:
    """The positive diagram of A translated along rho."""
    atoms: list[Atom] = []
    for f in A.signature.functions:
        for args, v in A.functions[f.name].items():
            t = App(rho.functions[f.name], tuple(gens[(s, x)] for s, x in zip(f.args, args)))
            atoms.append(Eq(t, gens[(f.result, v)]))
    for r in A.signature.relations:
        for tup in sorted(A.relations[r.name]):
            atoms.append(Rel(rho.relations[r.name], tuple(gens[(s, x)] for s, x in zip(r.args, tup))))
    return Horn(tuple(atoms))


def free_model(rho: TheoryMorphism, A: PartialStructure, T: Theory, budget: int = DEFAULT_BUDGET) -> ChaseOutcome:
    """F^ρ(A) over ``T`` (a theory over rho's target) by chasing A's diagram.

    On saturation the result carries ``unit``: A -> U^ρ F^ρ(A).
    """
    gens = element_generators(rho, A)
    p = Presentation(T, tuple(gens.values()), diagram_facts(rho, A, gens))
    out = chase(p, budget)
    if not out.saturated:
        return out
    U = reduct(out.model, rho)
    maps = {s: {x: out.class_of[gens[(s, x)].name] for x in A.carriers[s]} for s in A.signature.sorts}
    unit = Homomorphism(A, U, maps)
    res = check_hom(A, U, maps)
    if not res:
        raise ChaseError(f"engine inconsistency: unit is not a homomorphism ({res.witness})")
    return replace(out, unit=unit)

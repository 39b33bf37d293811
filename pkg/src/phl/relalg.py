"""Relative algebras over a base theory.

An algebra is an 𝕊-model together with, for each operator ω, a total map
on the interpretation of its arity.  Internally the pair is also viewed as
a single structure over the base signature extended by the operators.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .chase import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    ChaseError,
    ChaseOutcome,
    Derivability,
    Presentation,
    Saturated,
    chase,
    diagram_facts,
    element_generators,
    is_phl_theorem,
)
from .structure import (
    Check,
    Element,
    Homomorphism,
    PartialStructure,
    check_hom,
    expand,
    forget,
    interpret_formula,
    interpret_term,
    inverse_maps,
    is_model,
    iso_check,
    check_sequent,
)
from .syntax import (
    App,
    Eq,
    Horn,
    IllFormed,
    RelativeTheory,
    Sequent,
    Term,
    Theory,
    TheoryMorphism,
    Var,
    atom_symbols,
    defined,
    expand_relative_theory,
    substitute,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RelativeAlgebra:
    theory: RelativeTheory
    underlying: PartialStructure
    ops: Mapping[str, Mapping[tuple, Element]]

    def __post_init__(self):
        ops = {op.name: dict(sorted(dict(self.ops.get(op.name, {})).items())) for op in self.theory.operators}
        extra = set(self.ops) - set(ops)
        if extra:
            raise IllFormed(f"tables for unknown operators {sorted(extra)}")
        if self.underlying.signature != self.theory.base.signature:
            raise IllFormed("underlying structure is not over the base signature")
        object.__setattr__(self, "ops", ops)

    def as_structure(self) -> PartialStructure:
        """The Σ+Ω structure; raises StructureError on ill-sorted op tables."""
        return expand(self.underlying, self.theory.signature, functions=self.ops)

    @classmethod
    def from_structure(cls, rt: RelativeTheory, M: PartialStructure) -> RelativeAlgebra:
        base = forget(M, rt.base.signature)
        return cls(rt, base, {op.name: dict(M.functions[op.name]) for op in rt.operators})

    def __eq__(self, other) -> bool:
        if not isinstance(other, RelativeAlgebra):
            return NotImplemented
        return self.theory == other.theory and self.underlying == other.underlying and self.ops == other.ops

    __hash__ = None  # type: ignore[assignment]


def is_relative_algebra(a: RelativeAlgebra) -> Check:
    """𝕊-model plus exact-domain totality of every operator table.

    Witnesses: ``("base", failure)``, ``("missing", op, tuple)``,
    ``("extraneous", op, tuple)`` or ``("sort", message)``.
    """
    res = is_model(a.underlying, a.theory.base)
    if not res:
        return Check(False, ("base", res.witness))
    try:
        a.as_structure()
    except IllFormed as exc:
        return Check(False, ("sort", str(exc)))
    for op in a.theory.operators:
        domain = interpret_formula(a.underlying, op.arity)
        table = a.ops[op.name]
        missing = sorted(domain - set(table))
        if missing:
            return Check(False, ("missing", op.name, missing[0]))
        extra = sorted(set(table) - domain)
        if extra:
            return Check(False, ("extraneous", op.name, extra[0]))
    return Check(True)


def _operator_free_premise(rt: RelativeTheory, j: Sequent) -> None:
    ops = {op.name for op in rt.operators}
    used = set()
    for atom in j.premise:
        used |= atom_symbols(atom)
    if used & ops:
        raise IllFormed(f"judgment premise mentions operators {sorted(used & ops)}")


def satisfies_judgment(a: RelativeAlgebra, j: Sequent) -> Check:
    _operator_free_premise(a.theory, j)
    return check_sequent(a.as_structure(), j)


def is_algebra_model(a: RelativeAlgebra) -> Check:
    """Algebra of (Ω, E): algebra conditions plus every judgment."""
    res = is_relative_algebra(a)
    if not res:
        return res
    for i, j in enumerate(a.theory.judgments):
        res = satisfies_judgment(a, j)
        if not res:
            return Check(False, ("judgment", i, res.witness))
    return Check(True)


# ---------------------------------------------------------------------------
# H_Ω and the free-algebra chain


@dataclass(frozen=True, eq=False)
class HOmega:
    """H_Ω(A) with the generator chosen for each (operator, arity tuple)."""

    outcome: ChaseOutcome
    generators: Mapping[tuple[str, tuple], str]

    @property
    def model(self) -> PartialStructure:
        return self.outcome.model if self.outcome.saturated else self.outcome.snapshot

    def element(self, op: str, tup: tuple) -> Element:
        return self.outcome.class_of[self.generators[(op, tup)]]


def _arity_generators(rt: RelativeTheory, A: PartialStructure, prefix: str = "w") -> dict[tuple[str, tuple], Var]:
    gens = {}
    for k, op in enumerate(rt.operators):
        for i, tup in enumerate(sorted(interpret_formula(A, op.arity))):
            gens[(op.name, tup)] = Var(f"{prefix}{k}_{i}", op.sort)
    return gens


def h_omega(rt: RelativeTheory, A: PartialStructure, budget: int = DEFAULT_BUDGET) -> HOmega:
    """The copower ∐_ω ⟦ar ω⟧^A • ⟨x:type ω.⊤⟩ computed by a chase under 𝕊."""
    gens = _arity_generators(rt, A)
    p = Presentation(rt.base, tuple(gens.values()))
    return HOmega(chase(p, budget), {k: v.name for k, v in gens.items()})


def h_omega_map(rt: RelativeTheory, h: Homomorphism, HA: HOmega, HB: HOmega) -> Homomorphism:
    """H_Ω(h): relabel each generator (ω, a⃗) as (ω, h(a⃗))."""
    if not (HA.outcome.saturated and HB.outcome.saturated):
        raise ChaseError("H_Ω is unavailable: a chase did not saturate")
    images = {}
    for (op, tup), name in HA.generators.items():
        arity = rt.operator(op).arity
        images[name] = HB.element(op, h.apply_tuple(arity.sorts, tup))
    return extend_generators(HA.outcome, HB.model, images)


def extend_generators(out: Saturated, target: PartialStructure, images: Mapping[str, Element]) -> Homomorphism:
    """The map out of a representing model fixed by generator images.

    Each element's representative term is evaluated at the images.
    """
    env = {v: images[v.name] for v in out.generators}
    maps = {}
    for s in out.model.signature.sorts:
        maps[s] = {}
        for x in out.model.carriers[s]:
            y = interpret_term(target, out.term_of(s, x), env)
            if y is None:
                raise ChaseError(f"engine inconsistency: no image for element {x} of sort {s}")
            maps[s][x] = y
    return Homomorphism(out.model, target, maps)


@dataclass(frozen=True, eq=False)
class Stabilized:
    algebra: RelativeAlgebra
    gamma: Homomorphism  # H_Ω(K) -> K
    insertion: Homomorphism  # X -> K
    stage: int
    sizes: tuple[int, ...]

    stabilized = True


@dataclass(frozen=True, eq=False)
class Unstabilized:
    stage: int
    sizes: tuple[int, ...]

    stabilized = False


class StageBudgetExceeded(ChaseError):
    def __init__(self, stage: int, outcome: BudgetExceeded):
        super().__init__(f"chase for stage {stage} exceeded its budget after {outcome.steps} steps")
        self.stage = stage
        self.outcome = outcome


@dataclass(frozen=True, eq=False)
class _Stage:
    K: PartialStructure
    out: Optional[Saturated]  # chase presenting K (None for K_0 = X)
    arity_gens: Mapping[tuple[str, tuple], Var]  # generators (ω, a⃗) with a⃗ in K_{n-1}
    x_gens: Mapping[tuple[str, Element], Var]


def _next_stage(rt: RelativeTheory, X: PartialStructure, K: PartialStructure, budget: int, n: int) -> _Stage:
    """K_{n+1} = H_Ω(K_n) + X as one presentation under 𝕊."""
    ident = TheoryMorphism.identity(rt.base.signature)
    arity_gens = _arity_generators(rt, K)
    x_gens = element_generators(ident, X)
    p = Presentation(rt.base, tuple(arity_gens.values()) + tuple(x_gens.values()), diagram_facts(ident, X, x_gens))
    out = chase(p, budget)
    if not out.saturated:
        raise StageBudgetExceeded(n + 1, out)
    return _Stage(out.model, out, arity_gens, x_gens)


def free_algebra_chain(
    rt: RelativeTheory, X: PartialStructure, max_stages: int = 8, budget: int = DEFAULT_BUDGET
) -> Stabilized | Unstabilized:
    """K_0 = X, K_{n+1} = H_Ω K_n + X, stopping at the first iso k_n.

    ``max_stages`` bounds how many K_n are computed.  On stabilization at
    k_n the reported stage is n+1 and the algebra lives on K_n.
    """
    if rt.judgments:
        raise IllFormed("the free-algebra chain needs E = ∅; use algebra_colimit for judgments")
    res = is_model(X, rt.base)
    if not res:
        raise IllFormed(f"X is not a model of the base theory: {res.witness}")
    stages = [_Stage(X, None, {}, {})]
    k_prev: Optional[Homomorphism] = None
    sizes = [X.size()]
    while len(stages) < max_stages:
        n = len(stages) - 1
        cur = stages[-1]
        nxt = _next_stage(rt, X, cur.K, budget, n)
        stages.append(nxt)
        sizes.append(nxt.K.size())
        # k_n : K_n -> K_{n+1}
        if n == 0:
            k = Homomorphism(X, nxt.K, {s: {x: nxt.out.class_of[nxt.x_gens[(s, x)].name] for x in X.carriers[s]} for s in X.signature.sorts})
        else:
            images = {}
            for (op, tup), v in cur.arity_gens.items():
                arity = rt.operator(op).arity
                images[v.name] = nxt.out.class_of[nxt.arity_gens[(op, k_prev.apply_tuple(arity.sorts, tup))].name]
            for key, v in cur.x_gens.items():
                images[v.name] = nxt.out.class_of[nxt.x_gens[key].name]
            k = extend_generators(cur.out, nxt.K, images)
        if _is_iso_map(k):
            return _stabilized(rt, X, stages, k, n, tuple(sizes))
        k_prev = k
    return Unstabilized(len(stages), tuple(sizes))


def _is_iso_map(k: Homomorphism) -> bool:
    """k is bijective and its inverse is a homomorphism."""
    if not (k.is_injective() and k.is_surjective()):
        return False
    return bool(check_hom(k.target, k.source, inverse_maps(k)))


def _stabilized(rt: RelativeTheory, X, stages, k: Homomorphism, n: int, sizes) -> Stabilized:
    K = stages[n].K
    nxt = stages[n + 1]
    inv = inverse_maps(k)
    ops = {}
    for op in rt.operators:
        ops[op.name] = {
            tup: inv[op.sort][nxt.out.class_of[nxt.arity_gens[(op.name, tup)].name]]
            for tup in sorted(interpret_formula(K, op.arity))
        }
    algebra = RelativeAlgebra(rt, K, ops)
    res = is_relative_algebra(algebra)
    if not res:
        raise ChaseError(f"engine inconsistency: stabilized algebra fails {res.witness}")
    HK = h_omega(rt, K)
    if not HK.outcome.saturated:
        raise StageBudgetExceeded(n, HK.outcome)
    gamma = extend_generators(HK.outcome, K, {name: ops[op][tup] for (op, tup), name in HK.generators.items()})
    insertion = Homomorphism(
        X, K, {s: {x: inv[s][nxt.out.class_of[nxt.x_gens[(s, x)].name]] for x in X.carriers[s]} for s in X.signature.sorts}
    )
    return Stabilized(algebra, gamma, insertion, n + 1, sizes)


# ---------------------------------------------------------------------------
# Theory morphisms between relative theories


@dataclass(frozen=True)
class RelTheoryMorphism:
    """ω ↦ ω^ρ, a term over Σ+Ω' in the variables of ar(ω)."""

    source: RelativeTheory
    target: RelativeTheory
    assignment: Mapping[str, Term] = field(default_factory=dict)

    def __post_init__(self):
        a, b = self.source.base, self.target.base
        if a.signature != b.signature or set(a.axioms) != set(b.axioms):
            raise IllFormed("relative theory morphisms need a common base")
        for op in self.source.operators:
            if op.name not in self.assignment:
                raise IllFormed(f"operator {op.name!r} has no assigned term")

    @classmethod
    def identity(cls, rt: RelativeTheory) -> RelTheoryMorphism:
        return cls(rt, rt, {op.name: App(op.name, op.arity.context) for op in rt.operators})

    def translate_term(self, t: Term) -> Term:
        if isinstance(t, Var):
            return t
        args = tuple(self.translate_term(a) for a in t.args)
        if any(op.name == t.fn for op in self.source.operators):
            op = self.source.operator(t.fn)
            return substitute(self.assignment[t.fn], dict(zip(op.arity.context, args)))
        return App(t.fn, args)

    def translate_sequent(self, s: Sequent) -> Sequent:
        def atom(a):
            if isinstance(a, Eq):
                return Eq(self.translate_term(a.left), self.translate_term(a.right))
            return type(a)(a.rel, tuple(self.translate_term(x) for x in a.args))

        return Sequent(s.context, Horn(tuple(map(atom, s.premise))), Horn(tuple(map(atom, s.conclusion))))


def side_conditions(rho: RelTheoryMorphism) -> list[Sequent]:
    """ar(ω) ⊢ ω^ρ↓ for each operator, then each translated judgment."""
    conds = [Sequent(op.arity.context, op.arity.body, Horn((defined(rho.assignment[op.name]),))) for op in rho.source.operators]
    conds.extend(rho.translate_sequent(j) for j in rho.source.judgments)
    return conds


def check_rel_morphism(rho: RelTheoryMorphism, budget: int = DEFAULT_BUDGET) -> list[tuple[Sequent, Derivability]]:
    T = expand_relative_theory(rho.target)
    return [(s, is_phl_theorem(s, T, budget)) for s in side_conditions(rho)]


def alg_rho(rho: RelTheoryMorphism, b: RelativeAlgebra, budget: int = DEFAULT_BUDGET) -> RelativeAlgebra:
    """Alg ρ: same underlying model, ⟦ω⟧ := ⟦ω^ρ⟧ evaluated in ``b``."""
    for s, verdict in check_rel_morphism(rho, budget):
        if verdict is Derivability.REFUTED:
            raise IllFormed(f"side condition refuted: {s}")
        if verdict is Derivability.UNKNOWN:
            log.warning("side condition undecided within budget, proceeding: %s", s)
    M = b.as_structure()
    ops = {}
    for op in rho.source.operators:
        table = {}
        for tup in sorted(interpret_formula(b.underlying, op.arity)):
            v = interpret_term(M, rho.assignment[op.name], dict(zip(op.arity.context, tup)))
            if v is None:
                raise ChaseError(f"engine inconsistency: {op.name}^ρ undefined at {tup}")
            table[tup] = v
        ops[op.name] = table
    return RelativeAlgebra(rho.source, b.underlying, ops)


# ---------------------------------------------------------------------------
# Colimits of algebras by presentation


def algebra_colimit(rt: RelativeTheory | Theory, p: Presentation, budget: int = DEFAULT_BUDGET) -> ChaseOutcome:
    """Chase ``p``'s generators and facts under T[Ω, E] (or a plain theory)."""
    T = expand_relative_theory(rt) if isinstance(rt, RelativeTheory) else rt
    return chase(Presentation(T, p.generators, p.facts), budget)


def algebra_coequalizer(
    rt: RelativeTheory | Theory,
    B: PartialStructure,
    pairs: Sequence[tuple[str, Element, Element]],
    budget: int = DEFAULT_BUDGET,
) -> ChaseOutcome:
    """Quotient of B (a Σ+Ω structure, or a base structure) by the equations in ``pairs``.

    For f, g: A -> B the coequalizer uses ``pairs = [(s, f(a), g(a)) ...]``.
    Only the symbols of ``rt``'s signature are taken from B's diagram.
    """
    T = expand_relative_theory(rt) if isinstance(rt, RelativeTheory) else rt
    B = forget(B, T.signature) if B.signature != T.signature else B
    ident = TheoryMorphism.identity(T.signature)
    gens = element_generators(ident, B)
    facts = diagram_facts(ident, B, gens).atoms
    facts += tuple(Eq(gens[(s, x)], gens[(s, y)]) for s, x, y in pairs)
    return chase(Presentation(T, tuple(gens.values()), Horn(facts)), budget)


def coequalizer_pairs(f: Homomorphism, g: Homomorphism) -> list[tuple[str, Element, Element]]:
    return [(s, f.maps[s][x], g.maps[s][x]) for s in f.source.signature.sorts for x in f.source.carriers[s]]


def algebra_iso(a: RelativeAlgebra, b: RelativeAlgebra) -> Optional[Homomorphism]:
    return iso_check(a.as_structure(), b.as_structure())

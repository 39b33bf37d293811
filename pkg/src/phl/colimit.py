"""Finite diagrams, filtered colimits, and colimits of representing models.

Shapes are given by objects and generating arrows.  Filtered colimits are
computed for thin shapes (at most one arrow between two objects once
composites are taken), which covers chains, directed posets and constant
diagrams; parallel generating arrows are accepted only when the diagram
sends them to equal maps.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .chase import DEFAULT_BUDGET, Derivability, SideConditionFailed, is_phl_theorem, side_condition
from .structure import (
    Check,
    Homomorphism,
    PartialStructure,
    StructureError,
    check_hom,
    enumerate_homs,
    identity,
    is_model,
    iter_homs,
)
from .syntax import Eq, Formula, Horn, IllFormed, Term, Theory, Var, rename_apart


class NotFiltered(IllFormed):
    pass


@dataclass(frozen=True)
class Arrow:
    name: str
    src: str
    tgt: str
    hom: Homomorphism


@dataclass(frozen=True, eq=False)
class Diagram:
    objects: tuple[str, ...]
    structures: Mapping[str, PartialStructure]
    arrows: tuple[Arrow, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "arrows", tuple(self.arrows))
        if len(set(self.objects)) != len(self.objects):
            raise StructureError("duplicate object names in diagram")
        for a in self.arrows:
            if a.src not in self.structures or a.tgt not in self.structures:
                raise StructureError(f"arrow {a.name} has an unknown endpoint")
            if a.hom.source != self.structures[a.src] or a.hom.target != self.structures[a.tgt]:
                raise StructureError(f"arrow {a.name} does not match its endpoints")
            res = check_hom(a.hom.source, a.hom.target, a.hom.maps)
            if not res:
                raise StructureError(f"arrow {a.name} is not a homomorphism: {res.witness}")

    @classmethod
    def chain(cls, stages: Sequence[PartialStructure], maps: Sequence[Homomorphism]) -> Diagram:
        """M_0 -> M_1 -> ... with ``maps[i]: stages[i] -> stages[i+1]``."""
        names = tuple(f"M{i}" for i in range(len(stages)))
        arrows = tuple(Arrow(f"m{i}", names[i], names[i + 1], h) for i, h in enumerate(maps))
        return cls(names, dict(zip(names, stages)), arrows)

    @classmethod
    def single(cls, M: PartialStructure) -> Diagram:
        return cls(("M0",), {"M0": M})

    def reachability(self) -> dict[str, dict[str, list[Homomorphism]]]:
        """Composite maps along all paths, deduplicated, per ordered pair of objects."""
        composites: dict[str, dict[str, list[Homomorphism]]] = {o: {o: [identity(self.structures[o])]} for o in self.objects}
        changed = True
        while changed:
            changed = False
            for a in self.arrows:
                for src, by_tgt in composites.items():
                    for h in list(by_tgt.get(a.src, [])):
                        comp = h.then(a.hom)
                        existing = by_tgt.setdefault(a.tgt, [])
                        if not any(comp.key() == g.key() for g in existing):
                            existing.append(comp)
                            changed = True
                            if len(existing) > 1:
                                return composites  # not thin; caller reports it
        return composites

    def is_filtered(self) -> Check:
        """Nonempty, thin (commuting), and every two objects have an upper bound."""
        if not self.objects:
            return Check(False, "empty shape")
        reach = self.reachability()
        for i, by_tgt in reach.items():
            for j, maps in by_tgt.items():
                if len(maps) > 1:
                    return Check(False, f"parallel paths {i} -> {j} give different maps")
        for i, j in itertools.combinations(self.objects, 2):
            if not any(k in reach[i] and k in reach[j] for k in self.objects):
                return Check(False, f"no cocone over {i}, {j}")
        return Check(True)


@dataclass(frozen=True, eq=False)
class Colimit:
    object: PartialStructure
    legs: Mapping[str, Homomorphism]
    classes: Mapping[str, list[list[tuple[str, int]]]] = field(default_factory=dict)


def filtered_colimit(d: Diagram, theory: Theory | None = None) -> Colimit:
    """Disjoint union modulo the span relation, with tables from any stage.

    When ``theory`` is given the result is checked to be a model.
    """
    ok = d.is_filtered()
    if not ok:
        raise NotFiltered(str(ok.witness))
    sig = d.structures[d.objects[0]].signature
    keys = [(o, s, x) for o in d.objects for s in sig.sorts for x in d.structures[o].carriers[s]]
    parent = {k: k for k in keys}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for a in d.arrows:
        for s, m in a.hom.maps.items():
            for x, y in m.items():
                r1, r2 = find((a.src, s, x)), find((a.tgt, s, y))
                if r1 != r2:
                    parent[r2] = r1
    # number classes by first occurrence
    elem: dict[tuple, int] = {}
    classes: dict[str, list[list[tuple[str, int]]]] = {s: [] for s in sig.sorts}
    for k in keys:
        r = find(k)
        if r not in elem:
            elem[r] = len(classes[k[1]])
            classes[k[1]].append([])
        classes[k[1]][elem[r]].append((k[0], k[2]))

    def cls(o, s, x) -> int:
        return elem[find((o, s, x))]

    funcs: dict[str, dict[tuple, int]] = {f.name: {} for f in sig.functions}
    rels: dict[str, set] = {r.name: set() for r in sig.relations}
    for o in d.objects:
        M = d.structures[o]
        for f in sig.functions:
            for args, v in M.functions[f.name].items():
                key = tuple(cls(o, s, x) for s, x in zip(f.args, args))
                val = cls(o, f.result, v)
                prev = funcs[f.name].setdefault(key, val)
                if prev != val:
                    raise StructureError(f"stages disagree on {f.name} at {key}")
        for r in sig.relations:
            for t in M.relations[r.name]:
                rels[r.name].add(tuple(cls(o, s, x) for s, x in zip(r.args, t)))
    carriers = {s: range(len(cs)) for s, cs in classes.items()}
    N = PartialStructure(sig, {s: tuple(c) for s, c in carriers.items()}, funcs, rels)
    legs = {
        o: Homomorphism(d.structures[o], N, {s: {x: cls(o, s, x) for x in d.structures[o].carriers[s]} for s in sig.sorts})
        for o in d.objects
    }
    if theory is not None:
        res = is_model(N, theory)
        if not res:
            raise StructureError(f"colimit of models is not a model: {res.witness}")
    return Colimit(N, legs, classes)


# ---------------------------------------------------------------------------
# Formula-level constructions


def coproduct_injections(phis: Sequence[Formula]) -> tuple[Formula, list[tuple[Term, ...]]]:
    """The coproduct formula and, per summand, the terms of its injection."""
    taken: set[str] = set()
    ctx: list[Var] = []
    atoms = []
    injections = []
    for phi in phis:
        renamed, mapping = rename_apart(phi, taken)
        ctx.extend(renamed.context)
        atoms.extend(renamed.body.atoms)
        injections.append(tuple(mapping[v] for v in phi.context))
    return Formula(tuple(ctx), Horn(tuple(atoms))), injections


def coproduct_formula(phis: Sequence[Formula]) -> Formula:
    return coproduct_injections(phis)[0]


def coequalizer_formula(
    src: Formula,
    tgt: Formula,
    h: Sequence[Term],
    h2: Sequence[Term],
    theory: Theory | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Formula:
    """y⃗.(ψ ∧ ⋀ τ_i = τ'_i).

    With ``theory`` the two side conditions are checked first; a Refuted or
    Unknown side condition raises SideConditionFailed.
    """
    if len(h) != len(src.context) or len(h2) != len(src.context):
        raise IllFormed("one term per source variable is required")
    if theory is not None:
        for terms in (h, h2):
            cond = side_condition(src, tgt, terms)
            verdict = is_phl_theorem(cond, theory, budget)
            if verdict is not Derivability.PROVED:
                raise SideConditionFailed(cond, verdict)
    eqs = tuple(Eq(a, b) for a, b in zip(h, h2))
    return Formula(tgt.context, Horn(tgt.body.atoms + eqs))


# ---------------------------------------------------------------------------
# Universal property check


def cocones(d: Diagram, M: PartialStructure) -> list[dict[str, Homomorphism]]:
    """All cocones over ``d`` with vertex ``M``, by backtracking per object."""
    out: list[dict[str, Homomorphism]] = []
    objs = d.objects

    def compatible(chosen: dict[str, Homomorphism]) -> bool:
        for a in d.arrows:
            if a.src in chosen and a.tgt in chosen:
                if a.hom.then(chosen[a.tgt]).key() != chosen[a.src].key():
                    return False
        return True

    def go(i: int, chosen: dict[str, Homomorphism]):
        if i == len(objs):
            out.append(dict(chosen))
            return
        for h in iter_homs(d.structures[objs[i]], M):
            chosen[objs[i]] = h
            if compatible(chosen):
                go(i + 1, chosen)
            del chosen[objs[i]]

    go(0, {})
    return out


def verify_universal_property(
    d: Diagram, candidate: PartialStructure, legs: Mapping[str, Homomorphism], test_models: Sequence[PartialStructure]
) -> Check:
    """Composition with the legs is a bijection Hom(candidate, M) -> Cocones(d, M).

    The witness on failure is ``(model index, #homs, #cocones)``.
    """
    for o in d.objects:
        if legs[o].source != d.structures[o] or legs[o].target != candidate:
            return Check(False, ("leg", o))
    for idx, M in enumerate(test_models):
        homs = enumerate_homs(candidate, M)
        cs = cocones(d, M)
        induced = {tuple(legs[o].then(h).key() for o in d.objects) for h in homs}
        expected = {tuple(c[o].key() for o in d.objects) for c in cs}
        if len(induced) != len(homs) or induced != expected:
            return Check(False, (idx, len(homs), len(cs)))
    return Check(True)


def representing_diagram(
    objects: Mapping[str, PartialStructure], arrows: Sequence[tuple[str, str, str, Homomorphism]]
) -> Diagram:
    return Diagram(tuple(objects), dict(objects), tuple(Arrow(*a) for a in arrows))


def find_arrow(d: Diagram, name: str) -> Optional[Arrow]:
    return next((a for a in d.arrows if a.name == name), None)

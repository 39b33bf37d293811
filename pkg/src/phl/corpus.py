"""Bundled theories and hand-built structures used by tests and the CLI.

The integer examples are finite windows: carriers {lo..hi} with addition
defined only when the sum stays inside the window.  Closedness is a local
condition, so the windowed inclusions show the same behaviour as the
infinite monoids they stand in for.
"""

from __future__ import annotations

import itertools
import random
from functools import lru_cache
from importlib import resources
from typing import Iterable

from .parser import parse_theory
from .structure import PartialStructure, make_structure
from .syntax import RelativeTheory, Theory

THEORY_FILES = (
    "pos",
    "cat",
    "sets2",
    "quiv",
    "quivcat",
    "mon",
    "mon_inv",
    "wmon",
    "wmon_inv",
    "possub",
    "possub_literal",
    "pos_endo",
)


def theory_source(name: str) -> str:
    return resources.files(__package__).joinpath("corpus", f"{name}.phl").read_text()


def theory_path(name: str) -> str:
    return str(resources.files(__package__).joinpath("corpus", f"{name}.phl"))


@lru_cache(maxsize=None)
def load(name: str) -> Theory | RelativeTheory:
    return parse_theory(theory_source(name))


# ---------------------------------------------------------------------------
# Posets


def poset(n: int, leq: Iterable[tuple[int, int]]) -> PartialStructure:
    """The poset on 0..n-1 generated by ``leq`` (reflexive-transitive closure)."""
    rel = {(i, i) for i in range(n)} | set(leq)
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(rel), list(rel)):
            if b == c and (a, d) not in rel:
                rel.add((a, d))
                changed = True
    return make_structure(load("pos").signature, {"*": range(n)}, relations={"leq": rel})


def chain(n: int) -> PartialStructure:
    return poset(n, [(i, i + 1) for i in range(n - 1)])


def antichain(n: int) -> PartialStructure:
    return poset(n, [])


def diamond() -> PartialStructure:
    return poset(4, [(0, 1), (0, 2), (1, 3), (2, 3)])


def preorder(n: int, leq: Iterable[tuple[int, int]]) -> PartialStructure:
    """A relation structure over Σ_pos without closure or antisymmetry."""
    return make_structure(load("pos").signature, {"*": range(n)}, relations={"leq": set(leq)})


def all_posets(max_size: int, min_size: int = 0) -> list[PartialStructure]:
    """All partial orders on {0..n-1}, n in range, as labelled structures."""
    out = []
    for n in range(min_size, max_size + 1):
        pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
        for bits in itertools.product((0, 1), repeat=len(pairs)):
            rel = {p for p, bit in zip(pairs, bits) if bit} | {(i, i) for i in range(n)}
            if any((b, a) in rel for a, b in rel if a != b):
                continue
            if any((a, d) not in rel for (a, b) in rel for (c, d) in rel if b == c):
                continue
            out.append(preorder(n, rel))
    return out


def posets_up_to_iso(max_size: int, min_size: int = 0) -> list[PartialStructure]:
    from .structure import is_iso

    reps: list[PartialStructure] = []
    for P in all_posets(max_size, min_size):
        if not any(is_iso(P, Q) for Q in reps):
            reps.append(P)
    return reps


def random_poset(rng: random.Random, max_size: int = 4, min_size: int = 1) -> PartialStructure:
    """A random poset: a random DAG on a random order of 0..n-1, closed."""
    n = rng.randint(min_size, max_size)
    perm = list(range(n))
    rng.shuffle(perm)
    edges = [(perm[i], perm[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
    return poset(n, edges)


# ---------------------------------------------------------------------------
# Quivers and categories


def quiver(vertices: int, edges: Iterable[tuple[int, int]]) -> PartialStructure:
    edges = list(edges)
    return make_structure(
        load("quiv").signature,
        {"v": range(vertices), "e": range(len(edges))},
        {"s": {(i,): a for i, (a, _) in enumerate(edges)}, "t": {(i,): b for i, (_, b) in enumerate(edges)}},
    )


def random_quiver(rng: random.Random, max_size: int = 4) -> PartialStructure:
    nv = rng.randint(1, max_size)
    ne = rng.randint(0, max_size)
    return quiver(nv, [(rng.randrange(nv), rng.randrange(nv)) for _ in range(ne)])


def three_category() -> PartialStructure:
    """The category 0 -f-> 1 -g-> 2, coded by hand.

    Morphisms: 0,1,2 identities, 3 = f, 4 = g, 5 = g.f.
    """
    dom = {0: 0, 1: 1, 2: 2, 3: 0, 4: 1, 5: 0}
    cod = {0: 0, 1: 1, 2: 2, 3: 1, 4: 2, 5: 2}
    comp = {}
    for m2, m1 in itertools.product(range(6), repeat=2):
        if dom[m2] != cod[m1]:
            continue
        if m2 < 3:
            comp[(m2, m1)] = m1
        elif m1 < 3:
            comp[(m2, m1)] = m2
        else:
            comp[(m2, m1)] = 5  # g . f
    return make_structure(
        load("cat").signature,
        {"ob": range(3), "mor": range(6)},
        {
            "id": {(i,): i for i in range(3)},
            "d": {(m,): o for m, o in dom.items()},
            "c": {(m,): o for m, o in cod.items()},
            ".": comp,
        },
    )


# ---------------------------------------------------------------------------
# Integer windows


def int_window(lo: int, hi: int, theory: str = "wmon", inverse_on: Iterable[int] | None = None) -> PartialStructure:
    """{lo..hi} with partial addition, unit 0 and optionally a partial inverse.

    Under ``wmon_inv`` the inverse x -> -x is defined on ``inverse_on``
    (default: wherever -x lies in the window).
    """
    T = load(theory)
    elems = range(lo, hi + 1)
    add = {(a, b): a + b for a in elems for b in elems if lo <= a + b <= hi}
    funcs = {"e": {(): 0}, ".": add}
    if T.signature.has_symbol("inv"):
        dom = [x for x in elems if lo <= -x <= hi] if inverse_on is None else list(inverse_on)
        funcs["inv"] = {(x,): -x for x in dom}
    return make_structure(T.signature, {"*": elems}, funcs)


def z_window(w: int = 3, theory: str = "wmon") -> PartialStructure:
    return int_window(-w, w, theory)


def n_window(w: int = 3, theory: str = "wmon") -> PartialStructure:
    """{0..w}; under ``wmon_inv`` the inverse is defined only at 0."""
    return int_window(0, w, theory, inverse_on=[0])


def subtraction_window(n: int = 4, extra: Iterable[tuple[int, int]] = ()) -> PartialStructure:
    """The chain {0..n-1} with x - y defined exactly when y <= x, as a Σ+Ω structure.

    ``extra`` adds (x, y) pairs with x < y, mapped to 0, to build broken algebras.
    """
    rt = load("possub")
    elems = range(n)
    sub = {(x, y): x - y for x in elems for y in elems if y <= x}
    sub.update({(x, y): 0 for x, y in extra})
    return make_structure(
        rt.signature, {"*": elems}, {"-": sub}, {"leq": {(a, b) for a in elems for b in elems if a <= b}}
    )


def sifted_example() -> PartialStructure:
    """The poset a<b<c plus an isolated d, with w: a->a, b->d, c->c, d->d.

    Elements: a=0, b=1, c=2, d=3.  Structure over the PosEndo signature.
    """
    rt = load("pos_endo")
    leq = {(i, i) for i in range(4)} | {(0, 1), (1, 2), (0, 2)}
    return make_structure(rt.signature, {"*": range(4)}, {"w": {(0,): 0, (1,): 3, (2,): 2, (3,): 3}}, {"leq": leq})

import pytest

from phl import corpus as C
from phl.chase import BudgetExceeded, SideConditionFailed, morphism_from_terms, representing_model
from phl.colimit import (
    Arrow,
    Diagram,
    NotFiltered,
    coequalizer_formula,
    cocones,
    coproduct_formula,
    coproduct_injections,
    filtered_colimit,
    verify_universal_property,
)
from phl.parser import format_formula, parse_formula
from phl.structure import Homomorphism, StructureError, enumerate_homs, identity, is_iso
from phl.syntax import App

POS = C.load("pos")
CAT = C.load("cat")


def initial_segment(m, n):
    return Homomorphism(C.chain(m), C.chain(n), {"*": {i: i for i in range(m)}})


def repn_hom(src, tgt, terms, T=POS):
    """The map of representing models sending generators to ``terms``."""
    return morphism_from_terms(src, tgt, terms, T)


# --- filtered colimits -----------------------------------------------------------


def test_chain_of_initial_segments():
    d = Diagram.chain([C.chain(1), C.chain(2), C.chain(3)], [initial_segment(1, 2), initial_segment(2, 3)])
    col = filtered_colimit(d, POS)
    assert is_iso(col.object, C.chain(3))
    assert col.legs["M2"].is_injective() and col.legs["M2"].is_surjective()


def test_constant_diagram():
    M = C.diamond()
    d = Diagram.chain([M, M, M], [identity(M), identity(M)])
    assert is_iso(filtered_colimit(d).object, M)


def test_single_object():
    M = C.three_category()
    assert is_iso(filtered_colimit(Diagram.single(M), CAT).object, M)


def test_chain_colimit_can_merge():
    # a surjection in the chain identifies elements in the colimit
    A, B = C.antichain(2), C.chain(1)
    d = Diagram.chain([A, B], [Homomorphism(A, B, {"*": {0: 0, 1: 0}})])
    assert filtered_colimit(d).object.size() == 1


def test_span_is_not_filtered():
    M = C.chain(1)
    d = Diagram(("a", "b", "c"), {"a": M, "b": M, "c": M}, (Arrow("u", "a", "b", identity(M)), Arrow("v", "a", "c", identity(M))))
    assert not d.is_filtered()
    with pytest.raises(NotFiltered):
        filtered_colimit(d)


def test_non_commuting_parallel_arrows_rejected():
    A, B = C.chain(1), C.chain(2)
    lo = Homomorphism(A, B, {"*": {0: 0}})
    hi = Homomorphism(A, B, {"*": {0: 1}})
    d = Diagram(("a", "b"), {"a": A, "b": B}, (Arrow("lo", "a", "b", lo), Arrow("hi", "a", "b", hi)))
    with pytest.raises(NotFiltered):
        filtered_colimit(d)


def test_diagram_arrows_must_be_homs():
    A = C.chain(2)
    flip = Homomorphism(A, A, {"*": {0: 1, 1: 0}})
    with pytest.raises(StructureError):
        Diagram(("a", "b"), {"a": A, "b": A}, (Arrow("flip", "a", "b", flip),))


def test_colimit_is_universal():
    d = Diagram.chain([C.chain(1), C.chain(2)], [initial_segment(1, 2)])
    col = filtered_colimit(d, POS)
    assert verify_universal_property(d, col.object, col.legs, C.posets_up_to_iso(3))


# --- coproducts -------------------------------------------------------------------


def test_coproduct_of_points():
    phi = coproduct_formula([parse_formula("[x:*] top", POS), parse_formula("[y:*] top", POS)])
    assert len(phi.context) == 2 and phi.body.is_top
    out = representing_model(phi, POS)
    assert len(enumerate_homs(out.model, C.chain(2))) == 4


def test_empty_coproduct():
    phi = coproduct_formula([])
    assert phi.context == () and phi.body.is_top
    assert representing_model(phi, POS).model.size() == 0


def test_coproduct_renames_apart():
    phi = coproduct_formula([parse_formula("[x:*, y:*] leq(y, x)", POS), parse_formula("[z:*] top", POS)])
    assert format_formula(phi) == "[x:*, y:*, z:*] leq(y, x)"
    clash = coproduct_formula([parse_formula("[x:*] top", POS), parse_formula("[x:*] top", POS)])
    assert len({v.name for v in clash.context}) == 2


def test_coproduct_universal_property():
    phis = [parse_formula("[x:*] top", POS), parse_formula("[y:*] top", POS)]
    phi, inj = coproduct_injections(phis)
    d = Diagram(("a", "b"), {"a": representing_model(phis[0], POS).model, "b": representing_model(phis[1], POS).model})
    legs = {"a": repn_hom(phis[0], phi, inj[0]), "b": repn_hom(phis[1], phi, inj[1])}
    cand = legs["a"].target
    assert verify_universal_property(d, cand, legs, [C.chain(2), C.antichain(2), C.diamond()])


# --- coequalizers -------------------------------------------------------------------


def coeq_setup():
    src = parse_formula("[z:*] top", POS)
    tgt = parse_formula("[x:*, y:*] leq(x, y)", POS)
    x, y = tgt.context
    return src, tgt, x, y


def test_coequalizer_collapses():
    src, tgt, x, y = coeq_setup()
    chi = coequalizer_formula(src, tgt, (x,), (y,), POS)
    assert format_formula(chi) == "[x:*, y:*] leq(x, y) & x = y"
    assert representing_model(chi, POS).model.size() == 1


def test_coequalizer_of_equal_maps():
    src, tgt, x, y = coeq_setup()
    chi = coequalizer_formula(src, tgt, (x,), (x,), POS)
    assert is_iso(representing_model(chi, POS).model, representing_model(tgt, POS).model)


def _coeq_diagram(src, tgt, x, y):
    A = representing_model(src, POS).model
    B = representing_model(tgt, POS).model
    h = repn_hom(src, tgt, (x,))
    h2 = repn_hom(src, tgt, (y,))
    return Diagram(("A", "B"), {"A": A, "B": B}, (Arrow("h", "A", "B", h), Arrow("h2", "A", "B", h2))), h


def test_coequalizer_universal_property():
    src, tgt, x, y = coeq_setup()
    chi = coequalizer_formula(src, tgt, (x,), (y,), POS)
    q = repn_hom(tgt, chi, (x, y))
    d, h = _coeq_diagram(src, tgt, x, y)
    legs = {"B": q, "A": h.then(q)}
    assert verify_universal_property(d, q.target, legs, [C.chain(2)])


def test_wrong_coequalizer_candidate():
    src, tgt, x, y = coeq_setup()
    d, h = _coeq_diagram(src, tgt, x, y)
    top = parse_formula("[x:*, y:*] leq(x, y)", POS)
    q = repn_hom(tgt, top, (x, y))
    res = verify_universal_property(d, q.target, {"B": q, "A": h.then(q)}, [C.chain(2)])
    assert not res and res.witness == (0, 3, 2)
    assert len(cocones(d, C.chain(2))) == 2


def test_two_cycle_category_is_infinite():
    src = parse_formula("[a:ob] top", CAT)
    tgt = parse_formula("[g:mor, f:mor] d(g) = c(f)", CAT)
    g, f = tgt.context
    chi = coequalizer_formula(src, tgt, (App("d", (f,)),), (App("c", (g,)),), CAT)
    assert format_formula(chi) == "[g:mor, f:mor] d(g) = c(f) & d(f) = c(g)"
    assert isinstance(representing_model(chi, CAT, budget=300), BudgetExceeded)


def test_coequalizer_side_condition_checked():
    src = parse_formula("[a:mor] top", CAT)
    tgt = parse_formula("[g:mor, f:mor] top", CAT)
    g, f = tgt.context
    with pytest.raises(SideConditionFailed):
        coequalizer_formula(src, tgt, (App(".", (g, f)),), (g,), CAT)

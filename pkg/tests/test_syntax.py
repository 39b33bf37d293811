import pytest

from phl import corpus as C
from phl.parser import (
    ParseError,
    format_formula,
    format_sequent,
    format_term,
    format_theory,
    parse_formula,
    parse_sequent,
    parse_theory,
)
from phl.syntax import (
    TOP,
    App,
    Eq,
    Formula,
    Horn,
    IllFormed,
    Rel,
    RelativeTheory,
    Sequent,
    Theory,
    TheoryMorphism,
    UnboundVariable,
    Var,
    expand_relative_theory,
    substitute,
    translate,
)

x, y, a = Var("x", "*"), Var("y", "*"), Var("a", "*")


# --- parsing the corpus ---------------------------------------------------


def test_pos_theory_shape():
    T = C.load("pos")
    assert isinstance(T, Theory)
    assert T.signature.sorts == ("*",)
    assert len(T.signature.functions) == 0
    assert len(T.signature.relations) == 1
    assert len(T.axioms) == 3


def test_empty_theory():
    T = parse_theory("theory T sorts s end")
    assert T.signature.sorts == ("s",)
    assert T.axioms == ()


def test_cat_theory_shape():
    T = C.load("cat")
    assert T.signature.sorts == ("ob", "mor")
    assert len(T.signature.functions) == 4
    assert len(T.signature.relations) == 0
    # seven written axiom lines, one of them a bisequent
    lines = [ln for ln in C.theory_source("cat").splitlines() if "|-" in ln]
    assert len(lines) == 7
    assert len(T.axioms) == 8


def test_bisequent_expands_both_ways():
    T = C.load("cat")
    composable = parse_formula("[g:mor, f:mor] d(g) = c(f)", T).body
    defined = parse_formula("[g:mor, f:mor] (g . f)!", T).body
    pairs = {(s.premise, s.conclusion) for s in T.axioms}
    assert (composable, defined) in pairs and (defined, composable) in pairs


def test_relative_theory_expansion_counts():
    rt = C.load("possub")
    assert isinstance(rt, RelativeTheory)
    T = expand_relative_theory(rt)
    assert len(T.axioms) == 3 + 2 + 2
    assert T.signature.has_symbol("-")


def test_empty_extension_is_base():
    rt = RelativeTheory("P", C.load("pos"), (), ())
    T = expand_relative_theory(rt)
    assert T.axioms == C.load("pos").axioms
    assert T.signature == C.load("pos").signature


def test_quivcat_operators():
    rt = C.load("quivcat")
    assert [op.name for op in rt.operators] == [".", "id"]
    assert len(rt.judgments) >= 4


@pytest.mark.parametrize("name", C.THEORY_FILES)
def test_corpus_round_trip(name):
    T = C.load(name)
    again = parse_theory(format_theory(T))
    assert again == T


# --- errors ---------------------------------------------------------------


def test_parse_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_theory("theory T\n  sorts s\n  axioms\n    top |- [x:s] x =\nend")
    # the missing right-hand side is noticed at the next token
    assert (exc.value.line, exc.value.col) == (5, 1)


def test_unknown_sort_rejected():
    with pytest.raises(IllFormed):
        parse_formula("[x:nope] top", C.load("pos"))


def test_sort_mismatch_rejected():
    with pytest.raises(IllFormed):
        parse_formula("[x:ob, f:mor] d(x) = f", C.load("cat"))


def test_unbound_variable_rejected():
    with pytest.raises(IllFormed):
        parse_formula("[x:*] leq(x, y)", C.load("pos"))
    with pytest.raises(UnboundVariable):
        Formula((x,), Horn((Rel("leq", (x, y)),)))


def test_duplicate_context_rejected():
    with pytest.raises(IllFormed):
        parse_formula("[x:*, x:*] top", C.load("pos"))


# --- substitution and translation ------------------------------------------


def test_diagonal_substitution():
    out = substitute(Horn((Rel("leq", (x, y)),)), {x: a, y: a})
    assert out == Horn((Rel("leq", (a, a)),))


def test_substitution_into_composite():
    g, f, f2 = Var("g", "mor"), Var("f", "mor"), Var("f'", "mor")
    atom = Eq(App("d", (g,)), App("c", (f,)))
    comp = App(".", (g, f2))
    out = substitute(Horn((atom,)), {g: comp, f: f2})
    assert out == Horn((Eq(App("d", (comp,)), App("c", (f2,))),))


def test_substitute_top():
    assert substitute(TOP, {x: a}) == TOP


def test_identity_translation():
    sig = C.load("pos").signature
    item = Horn((Rel("leq", (x, y)),))
    assert translate(item, TheoryMorphism.identity(sig)) == item


def test_inclusion_translation_monoid():
    mon, mon_inv = C.load("wmon").signature, C.load("wmon_inv").signature
    rho = TheoryMorphism.inclusion(mon, mon_inv)
    item = Horn((Eq(App(".", (x, App("e", ()))), x),))
    assert translate(item, rho) == item
    assert rho.target.has_symbol("inv")


def test_sort_renaming_translation():
    sets = C.load("sets2").signature
    cat = C.load("cat").signature
    single = parse_theory("theory S sorts * end").signature
    rho = TheoryMorphism(single, cat, {"*": "ob"}, {}, {})
    s = Sequent((x,), TOP, Horn((Eq(x, x),)))
    out = translate(s, rho)
    assert out.context == (Var("x", "ob"),)
    assert sets.sorts == ("ob", "mor")


def test_translation_rejects_sort_mismatch():
    pos = C.load("pos").signature
    cat = C.load("cat").signature
    with pytest.raises(IllFormed):
        TheoryMorphism(pos, cat, {"*": "ob"}, {}, {"leq": "missing"})


# --- printing ---------------------------------------------------------------


def test_infix_printing():
    T = C.load("cat")
    s = parse_sequent("d(g) = c(f) |- [g:mor, f:mor] (g . f)!", T)
    assert format_sequent(s) == "d(g) = c(f) |- [g:mor, f:mor] (g . f)!"
    assert format_term(App(".", (App(".", (Var("h", "mor"), Var("g", "mor"))), Var("f", "mor")))) == "((h . g) . f)"


def test_formula_printing():
    phi = parse_formula("[x:*, y:*] leq(y, x)", C.load("pos"))
    assert format_formula(phi) == "[x:*, y:*] leq(y, x)"


def test_nullary_constant_forms():
    T = C.load("wmon")
    assert parse_formula("[x:*] (x . e) = x", T) == parse_formula("[x:*] (x . e()) = x", T)


def test_constant_then_parenthesis_on_next_line():
    src = "theory M\n  sorts *\n  functions\n    e : -> *\n    . : * * * -> *\n  axioms\n    top |- [] e!\n    top |- [x:*] (x . e) = x\nend"
    T = parse_theory(src)
    assert len(T.axioms) == 2

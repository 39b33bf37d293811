import pytest

from phl import corpus as C
from phl.chase import ChaseError, Derivability, Presentation, is_phl_theorem
from phl.parser import parse_formula, parse_sequent, parse_theory
from phl.relalg import (
    RelativeAlgebra,
    RelTheoryMorphism,
    Stabilized,
    Unstabilized,
    alg_rho,
    algebra_colimit,
    algebra_coequalizer,
    check_rel_morphism,
    coequalizer_pairs,
    free_algebra_chain,
    h_omega,
    h_omega_map,
    is_algebra_model,
    is_relative_algebra,
    satisfies_judgment,
)
from phl.structure import Homomorphism, check_hom, enumerate_homs, forget, identity, is_iso, is_model, make_structure
from phl.syntax import App, IllFormed, RelativeTheory, Var, expand_relative_theory

POS = C.load("pos")
POSSUB = C.load("possub")
POS_ENDO = C.load("pos_endo")


def with_operators(name, ops, judgments=""):
    src = C.theory_source("pos").replace("theory Pos", f"theory {name}")
    block = "  operators\n" + "".join(f"    {o}\n" for o in ops)
    if judgments:
        block += "  judgments\n" + "".join(f"    {j}\n" for j in judgments)
    return parse_theory(src.replace("end", block + "end"))


POINTED = with_operators("PosPoint", ["k : [ | top] -> *"])
TWO_ENDO = with_operators("PosEndoV", ["v : [x:* | top] -> *"])


def window_algebra(n=4, extra=()):
    return RelativeAlgebra.from_structure(POSSUB, C.subtraction_window(n, extra))


# --- algebras and judgments ---------------------------------------------------------


def test_subtraction_window_is_algebra():
    a = window_algebra()
    assert is_relative_algebra(a)
    assert is_algebra_model(a)


def test_extraneous_entry_detected():
    res = is_relative_algebra(window_algebra(extra=[(0, 1)]))
    assert not res and res.witness == ("extraneous", "-", (0, 1))


def test_missing_entry_detected():
    a = window_algebra()
    ops = {"-": {k: v for k, v in a.ops["-"].items() if k != (3, 1)}}
    res = is_relative_algebra(RelativeAlgebra(POSSUB, a.underlying, ops))
    assert not res and res.witness == ("missing", "-", (3, 1))


def test_no_operators_any_model():
    rt = RelativeTheory("P", POS, (), ())
    for M in C.all_posets(2):
        assert is_relative_algebra(RelativeAlgebra(rt, M, {}))


def test_first_judgment_on_window():
    a = window_algebra()
    assert satisfies_judgment(a, POSSUB.judgments[0])
    # direct enumeration of the monotonicity law where everything is defined
    for x in range(4):
        for y in range(4):
            for z in range(4):
                if x <= y and z <= x:
                    assert x - z <= y - z


def test_wrong_table_entry_fails_judgment():
    a = window_algebra()
    ops = {"-": dict(a.ops["-"])}
    ops["-"][(3, 0)] = 0  # 3 - 0 should be 3
    b = RelativeAlgebra(POSSUB, a.underlying, ops)
    res = satisfies_judgment(b, POSSUB.judgments[0])
    assert not res and res.witness is not None


def test_judgment_with_top_conclusion():
    j = parse_sequent("leq(x, y) |- [x:*, y:*] top", expand_relative_theory(POSSUB))
    assert satisfies_judgment(window_algebra(), j)


def test_operator_premise_rejected():
    j = parse_sequent("leq((x - y), x) |- [x:*, y:*] top", expand_relative_theory(POSSUB))
    with pytest.raises(IllFormed):
        satisfies_judgment(window_algebra(), j)


def test_literal_judgments_collapse_models():
    T = expand_relative_theory(C.load("possub_literal"))
    s = parse_sequent("top |- [x:*, y:*] x = y", T)
    assert is_phl_theorem(s, T, 500) is Derivability.PROVED
    assert not is_model(C.subtraction_window(2), T)
    assert is_model(C.subtraction_window(2), expand_relative_theory(POSSUB))


# --- H_Omega ------------------------------------------------------------------------


def test_h_omega_unary_total():
    H = h_omega(POS_ENDO, C.chain(2))
    assert is_iso(H.model, C.antichain(2))


def test_h_omega_without_operators_is_initial():
    H = h_omega(RelativeTheory("P", POS, (), ()), C.diamond())
    assert H.model.size() == 0


def test_h_omega_subtraction_arity():
    H = h_omega(POSSUB, C.chain(2))
    assert is_iso(H.model, C.antichain(3))
    assert set(H.generators) == {("-", (0, 0)), ("-", (1, 1)), ("-", (1, 0))}


def test_h_omega_map_identity_and_composition():
    A, B, D = C.chain(2), C.chain(3), C.diamond()
    HA, HB, HD = (h_omega(POSSUB, M) for M in (A, B, D))
    assert h_omega_map(POSSUB, identity(A), HA, HA) == identity(HA.model)
    for f in enumerate_homs(A, B)[:4]:
        for g in enumerate_homs(B, D)[:4]:
            lhs = h_omega_map(POSSUB, f.then(g), HA, HD)
            rhs = h_omega_map(POSSUB, f, HA, HB).then(h_omega_map(POSSUB, g, HB, HD))
            assert lhs == rhs


# --- free-algebra chain --------------------------------------------------------------


def test_chain_without_operators():
    X = C.chain(2)
    out = free_algebra_chain(RelativeTheory("P", POS, (), ()), X, max_stages=4)
    assert isinstance(out, Stabilized)
    assert out.stage == 1 and out.sizes == (2, 2)
    assert is_iso(out.algebra.underlying, X)
    assert out.insertion.is_injective() and out.insertion.is_surjective()


def test_chain_unary_unstabilized():
    out = free_algebra_chain(POS_ENDO, C.chain(1), max_stages=4)
    assert isinstance(out, Unstabilized)
    assert out.sizes == (1, 2, 3, 4)


def test_chain_nullary_operator():
    out = free_algebra_chain(POINTED, C.chain(1), max_stages=6)
    assert isinstance(out, Stabilized)
    assert out.stage == 2 and out.sizes == (1, 2, 2)
    a = out.algebra
    assert is_relative_algebra(a)
    # free pointed poset on a point: the point and the constant, unrelated
    assert is_iso(a.underlying, C.antichain(2))
    assert a.ops["k"][()] not in out.insertion.image()["*"]
    assert check_hom(out.gamma.source, out.gamma.target, out.gamma.maps)


def test_chain_rejects_judgments():
    with pytest.raises(IllFormed):
        free_algebra_chain(POSSUB, C.chain(1))


def test_chain_diagonal_arity_regression():
    # arity (x,y). x<=y & y<=x on a 2-antichain; kept as a regression input
    rt = with_operators("PosDiag", ["m : [x:*, y:* | leq(x, y) & leq(y, x)] -> *"])
    out = free_algebra_chain(rt, C.antichain(2), max_stages=4)
    assert out.sizes[:3] == (2, 4, 6)


# --- theory morphisms and Alg rho ------------------------------------------------------


def endo_algebra(rt, name, table):
    X = C.sifted_example()
    return RelativeAlgebra(rt, forget(X, POS.signature), {name: {(k,): v for k, v in table.items()}})


def test_alg_rho_identity():
    a = window_algebra()
    assert alg_rho(RelTheoryMorphism.identity(POSSUB), a) == a


def test_alg_rho_twice_iterated():
    x = Var("x", "*")
    rho = RelTheoryMorphism(POS_ENDO, TWO_ENDO, {"w": App("v", (App("v", (x,)),))})
    v = {0: 1, 1: 3, 2: 0, 3: 2}
    out = alg_rho(rho, endo_algebra(TWO_ENDO, "v", v))
    assert out.ops["w"] == {(k,): v[v[k]] for k in v}


def test_alg_rho_from_richer_theory():
    richer = with_operators(
        "PosSub2",
        ["- : [x:*, y:* | leq(y, x)] -> *", "m : [x:*, y:* | leq(y, x)] -> *"],
        [str_j for str_j in C.theory_source("possub").split("judgments\n")[1].split("end")[0].strip().splitlines()],
    )
    x, y = Var("x", "*"), Var("y", "*")
    rho = RelTheoryMorphism(POSSUB, richer, {"-": App("m", (x, y))})
    W = C.subtraction_window(4)
    sub = dict(W.functions["-"])
    b = RelativeAlgebra(richer, RelativeAlgebra.from_structure(POSSUB, W).underlying, {"-": sub, "m": sub})
    assert alg_rho(rho, b).ops["-"] == sub


LEFT = with_operators(
    "PosLeft", ["m : [x:*, y:* | leq(y, x)] -> *"], ["leq(y, x) |- [x:*, y:*] m(x, y) = x"]
)


def test_alg_rho_refused_on_refuted_side_condition():
    x, y = Var("x", "*"), Var("y", "*")
    rho = RelTheoryMorphism(LEFT, LEFT, {"m": App("m", (y, x))})
    verdicts = [v for _, v in check_rel_morphism(rho)]
    assert verdicts[0] is Derivability.REFUTED
    chain = C.chain(3)
    b = RelativeAlgebra(LEFT, chain, {"m": {(hi, lo): hi for lo, hi in chain.relations["leq"]}})
    assert is_algebra_model(b)
    with pytest.raises(IllFormed):
        alg_rho(rho, b)


def test_alg_rho_unknown_side_condition_warns(caplog):
    x, y = Var("x", "*"), Var("y", "*")
    rho = RelTheoryMorphism(POSSUB, POSSUB, {"-": App("-", (y, x))})
    assert all(v is Derivability.UNKNOWN for _, v in check_rel_morphism(rho, budget=50))
    with caplog.at_level("WARNING"), pytest.raises(ChaseError):
        alg_rho(rho, window_algebra(), budget=50)
    assert "undecided" in caplog.text


def test_morphism_needs_assignment():
    with pytest.raises(IllFormed):
        RelTheoryMorphism(POSSUB, POSSUB, {})


# --- colimits of algebras ------------------------------------------------------------


def test_sifted_counterexample():
    X = C.sifted_example()
    assert is_model(X, expand_relative_theory(POS_ENDO))
    under_w = algebra_coequalizer(POS_ENDO, X, [("*", 2, 0)], budget=200)
    plain = algebra_coequalizer(POS, X, [("*", 2, 0)], budget=200)
    assert under_w.saturated and under_w.model.size() == 1
    assert plain.saturated and plain.model.size() == 2


def test_sifted_pairs_from_parallel_maps():
    # 1 + X -> X: the extra point goes to c (resp. a), X maps identically
    X = C.sifted_example()
    base = make_structure(POS.signature, {"*": range(4)}, relations={"leq": X.relations["leq"]})
    one_plus = make_structure(POS.signature, {"*": range(5)}, relations={"leq": set(X.relations["leq"]) | {(4, 4)}})
    f = Homomorphism(one_plus, base, {"*": {0: 0, 1: 1, 2: 2, 3: 3, 4: 2}})
    g = Homomorphism(one_plus, base, {"*": {0: 0, 1: 1, 2: 2, 3: 3, 4: 0}})
    pairs = coequalizer_pairs(f, g)
    assert algebra_coequalizer(POS_ENDO, X, pairs).model.size() == 1
    assert algebra_coequalizer(POS, X, pairs).model.size() == 2


def test_identify_nothing():
    X = C.sifted_example()
    out = algebra_coequalizer(POS_ENDO, X, [], budget=200)
    assert is_iso(out.model, X)


def test_algebra_colimit_of_presentation():
    T = expand_relative_theory(POSSUB)
    phi = parse_formula("[x:*, y:*] leq(y, x) & (x - y) = y", T)
    out = algebra_colimit(POSSUB, Presentation.of_formula(phi, T), budget=100)
    assert not out.saturated

"""The ten acceptance criteria, each recorded as one PASS/FAIL line."""

import random
import time

import oracles
from phl import corpus as C
from phl.birkhoff import ModelFamily, audit, check_products, orthogonality_check
from phl.chase import Derivability, Presentation, chase, is_phl_theorem, representing_model
from phl.parser import parse_atoms, parse_context, parse_sequent
from phl.relalg import Stabilized, Unstabilized, algebra_coequalizer, free_algebra_chain
from phl.structure import (
    Homomorphism,
    check_sequent,
    enumerate_homs,
    factorize_dense_closed,
    is_closed_mono,
    is_dense,
    iso_check,
)
from phl.syntax import RelativeTheory

N_RANDOM = 200


def three_presentation():
    T = C.load("cat")
    ctx = parse_context("[g:mor, f:mor]", T)
    return Presentation(T, ctx, parse_atoms("d(g) = c(f)", T, ctx))


def test_1_three_reconstruction(acceptance):
    t0 = time.perf_counter()
    out = chase(three_presentation(), budget=500)
    elapsed = time.perf_counter() - t0
    ok = (
        out.saturated
        and out.steps <= 500
        and out.model.sizes() == {"ob": 3, "mor": 6}
        and iso_check(out.model, C.three_category()) is not None
        and elapsed < 1.0
    )
    acceptance(1, ok, f"steps={getattr(out, 'steps', None)} sizes={out.model.sizes() if out.saturated else None} t={elapsed:.3f}s")
    assert ok


def test_2_derivability_pair(acceptance):
    T = C.load("cat")
    proved = is_phl_theorem(parse_sequent("d(g) = c(f) |- [g:mor, f:mor] (g . f)!", T), T, 500)
    refuted = is_phl_theorem(parse_sequent("top |- [g:mor, f:mor] (g . f)!", T), T, 500)
    ok = proved is Derivability.PROVED and refuted is Derivability.REFUTED
    acceptance(2, ok, f"{proved} / {refuted}")
    assert ok


def test_3_representation_bijection(acceptance, seed):
    rng = random.Random(seed)
    T = C.load("pos")
    mismatches = []
    unsaturated = 0
    for i in range(N_RANDOM):
        phi = oracles.random_pos_formula(rng)
        M = C.random_poset(rng, max_size=4)
        out = representing_model(phi, T, budget=500)
        if not out.saturated:
            unsaturated += 1
            continue
        n_homs = oracles.count_homs(out.model, M)
        n_ext = len(oracles.extension(M, phi))
        if n_homs != n_ext:
            mismatches.append((i, str(phi), n_homs, n_ext))
    ok = not mismatches and unsaturated == 0
    acceptance(3, ok, f"cases={N_RANDOM} mismatches={len(mismatches)} unsaturated={unsaturated}")
    assert ok, mismatches[:5]


def test_4_validity_orthogonality(acceptance, seed):
    rng = random.Random(seed + 1)
    T = C.load("pos")
    mismatches = []
    for i in range(N_RANDOM):
        s = oracles.random_pos_sequent(rng)
        M = C.random_poset(rng, max_size=4)
        valid = bool(check_sequent(M, s))
        orth = orthogonality_check(M, s, T, budget=500)
        if valid != orth or valid != oracles.valid(M, s):
            mismatches.append((i, str(s), valid, orth))
    ok = not mismatches
    acceptance(4, ok, f"cases={N_RANDOM} mismatches={len(mismatches)}")
    assert ok, mismatches[:5]


def _random_hom(rng):
    while True:
        if rng.random() < 0.5:
            A, B = C.random_poset(rng, 4), C.random_poset(rng, 4)
        else:
            A, B = C.random_quiver(rng, 4), C.random_quiver(rng, 4)
        hs = enumerate_homs(A, B)
        if hs:
            return rng.choice(hs)


def test_5_factorization_suite(acceptance, seed):
    rng = random.Random(seed + 2)
    failures = []
    for i in range(N_RANDOM):
        h = _random_hom(rng)
        e, m = factorize_dense_closed(h, method="table")
        e2, m2 = factorize_dense_closed(h, method="product")
        checks = {
            "composite": e.then(m).key() == h.key(),
            "closed": bool(is_closed_mono(m)),
            "dense": bool(is_dense(e)),
            "iso": iso_check(e.target, e2.target) is not None,
        }
        if not all(checks.values()):
            failures.append((i, checks))
    ok = not failures
    acceptance(5, ok, f"cases={N_RANDOM} failures={len(failures)}")
    assert ok, failures[:5]


def test_6_sifted_counterexample(acceptance):
    X = C.sifted_example()
    c, a = 2, 0
    with_w = algebra_coequalizer(C.load("pos_endo"), X, [("*", c, a)], budget=200)
    base = algebra_coequalizer(C.load("pos"), X, [("*", c, a)], budget=200)
    sizes = (with_w.model.size() if with_w.saturated else None, base.model.size() if base.saturated else None)
    ok = sizes == (1, 2)
    acceptance(6, ok, f"carrier sizes T[Omega]={sizes[0]} pos={sizes[1]}")
    assert ok


def _inclusion(theory):
    N, Z = C.n_window(3, theory), C.z_window(3, theory)
    return Homomorphism(N, Z, {"*": {x: x for x in N.carriers["*"]}})


def test_7_closedness_depends_on_theory(acceptance):
    plain = is_closed_mono(_inclusion("wmon"))
    with_inv = is_closed_mono(_inclusion("wmon_inv"))
    ok = plain.ok and not with_inv.ok and with_inv.witness == ("inv", (1,))
    acceptance(7, ok, f"mon closed={plain.ok} mon+inv closed={with_inv.ok} witness={with_inv.witness}")
    assert ok


def test_8_birkhoff_easy_direction(acceptance):
    t0 = time.perf_counter()
    P = C.load("pos")
    sym = parse_sequent("leq(x, y) |- [x:*, y:*] leq(y, x)", P)
    discrete = ModelFamily(P, [C.antichain(n) for n in range(4)], sequents=[sym], name="discrete posets")
    reports = audit(discrete, max_arity=2, max_chain=3, candidates=C.posets_up_to_iso(3))
    totals = ModelFamily(P, [C.chain(n) for n in range(1, 4)], name="total orders")
    prod = check_products(totals, max_arity=2)
    diamond_ok = not prod.closed and iso_check(prod.witness["object"], C.diamond()) is not None
    elapsed = time.perf_counter() - t0
    ok = all(r.closed for r in reports) and diamond_ok and elapsed < 30
    verdicts = ",".join(r.verdict for r in reports)
    acceptance(8, ok, f"discrete=[{verdicts}] totals products={prod.verdict} diamond={diamond_ok} t={elapsed:.2f}s")
    assert ok


def test_9_free_chain(acceptance):
    X = C.chain(2)
    empty = free_algebra_chain(RelativeTheory("PosNoOps", C.load("pos"), (), ()), X, max_stages=4)
    first = isinstance(empty, Stabilized) and empty.stage == 1 and iso_check(empty.algebra.underlying, X) is not None
    unary = free_algebra_chain(C.load("pos_endo"), C.chain(1), max_stages=4)
    second = isinstance(unary, Unstabilized) and unary.sizes == (1, 2, 3, 4)
    ok = first and second
    acceptance(9, ok, f"empty Omega stage={getattr(empty, 'stage', None)}; unary sizes={getattr(unary, 'sizes', None)}")
    assert ok


def test_10_chase_confluence(acceptance):
    compared = 0
    failures = []
    for name, T, phi in oracles.corpus_presentations():
        a = representing_model(phi, T, budget=300, order="fifo")
        b = representing_model(phi, T, budget=300, order="reversed")
        if a.saturated != b.saturated:
            failures.append((name, str(phi), "saturation differs"))
            continue
        if not a.saturated:
            continue
        compared += 1
        if iso_check(a.model, b.model) is None:
            failures.append((name, str(phi), "not isomorphic"))
    ok = not failures and compared > 0
    acceptance(10, ok, f"saturating presentations={compared} failures={len(failures)}")
    assert ok, failures

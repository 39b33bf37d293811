"""Command-line front end: ``phl <subcommand> ...``.

Exit codes: 0 success, 1 negative verdict, 2 Unknown / budget exceeded,
3 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from . import corpus
from .birkhoff import ModelFamily, Undecided, audit
from .chase import DEFAULT_BUDGET, Derivability, Presentation, chase, is_phl_theorem, representing_model
from .colimit import Arrow, Diagram, NotFiltered, filtered_colimit
from .parser import format_formula, format_sequent, format_term, parse_atoms, parse_context, parse_formula, parse_sequent, parse_sequents, parse_theory
from .relalg import (
    RelativeAlgebra,
    StageBudgetExceeded,
    algebra_coequalizer,
    free_algebra_chain,
    is_algebra_model,
)
from .serialize import dumps, hom_to_dict, loads_structure, structure_to_dict
from .structure import (
    Homomorphism,
    PartialStructure,
    check_hom,
    enumerate_homs,
    factorize_dense_closed,
    interpret_formula,
    is_closed_mono,
    is_dense,
    is_model,
)
from .syntax import IllFormed, RelativeTheory, Theory, expand_relative_theory

OK, NEGATIVE, UNKNOWN, INPUT_ERROR = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors are input errors
        self.print_usage(sys.stderr)
        self.exit(INPUT_ERROR, f"{self.prog}: error: {message}\n")


def _default_budget() -> int:
    raw = os.environ.get("PHL_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return int(raw)
    except ValueError:
        return DEFAULT_BUDGET


# ---------------------------------------------------------------------------
# Input helpers


def read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def load_theory(path: str) -> Theory | RelativeTheory:
    """A theory file, falling back to the bundled corpus by name."""
    p = Path(path)
    if not p.exists():
        stem = p.name[:-4] if p.name.endswith(".phl") else p.name
        if stem in corpus.THEORY_FILES:
            return corpus.load(stem)
    return parse_theory(read_text(path))


def model_theory(T: Theory | RelativeTheory) -> Theory:
    return expand_relative_theory(T) if isinstance(T, RelativeTheory) else T


def load_structure(path: str, T: Theory | RelativeTheory) -> PartialStructure:
    return loads_structure(read_text(path), model_theory(T).signature)


def parse_maps(text: str) -> dict[str, dict[int, int]]:
    """``{"sort": [[x, y], ...]}`` or ``{"sort": {"x": y}}``."""
    try:
        data = json.loads(text)
        out = {}
        for s, m in data.items():
            pairs = m.items() if isinstance(m, dict) else m
            out[s] = {int(x): int(y) for x, y in pairs}
        return out
    except (ValueError, AttributeError, TypeError) as exc:
        raise InputError(f"malformed map: {exc}") from exc


def struct_json(M: PartialStructure, T) -> dict[str, Any]:
    return structure_to_dict(M, getattr(T, "name", ""))


# ---------------------------------------------------------------------------
# Output


def emit(args, data: dict[str, Any], text: str | None = None) -> None:
    out = args.output
    if args.format == "text" and text is not None:
        rendered = text.rstrip("\n") + "\n"
    else:
        rendered = dumps(data)
    if out:
        Path(out).write_text(rendered)
    else:
        sys.stdout.write(rendered)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_check(args) -> int:
    T = load_theory(args.theory)
    M = load_structure(args.structure, T)
    res = is_model(M, model_theory(T))
    data: dict[str, Any] = {"model": res.ok}
    if not res.ok:
        i, ax, tup = res.witness
        data["axiom"] = i
        data["sequent"] = format_sequent(ax)
        data["witness"] = list(tup)
    emit(args, data, "model" if res.ok else f"not a model: axiom {data['axiom']} fails at {data['witness']}")
    return OK if res.ok else NEGATIVE


def cmd_eval(args) -> int:
    T = load_theory(args.theory)
    M = load_structure(args.structure, T)
    phi = parse_formula(args.formula, model_theory(T))
    tuples = sorted(interpret_formula(M, phi))
    emit(args, {"formula": format_formula(phi), "count": len(tuples), "tuples": [list(t) for t in tuples]},
         "\n".join(" ".join(map(str, t)) for t in tuples) or "(empty)")
    return OK


def cmd_prove(args) -> int:
    T = model_theory(load_theory(args.theory))
    s = parse_sequent(args.sequent, T)
    verdict = is_phl_theorem(s, T, args.budget)
    emit(args, {"sequent": format_sequent(s), "verdict": str(verdict), "budget": args.budget}, str(verdict))
    return {Derivability.PROVED: OK, Derivability.REFUTED: NEGATIVE}.get(verdict, UNKNOWN)


def _outcome_json(out, T) -> tuple[dict[str, Any], int]:
    if out.saturated:
        data = {"status": "Saturated", "steps": out.steps, "rounds": out.rounds}
        data.update(struct_json(out.model, T))
        data["generators"] = dict(out.class_of)
        return data, OK
    data = {"status": "BudgetExceeded", "steps": out.steps, "rounds": out.rounds, "sizes": dict(out.sizes)}
    return data, UNKNOWN


def _outcome_text(out) -> str:
    if not out.saturated:
        return f"BudgetExceeded after {out.steps} steps; sizes {dict(out.sizes)}"
    return f"Saturated after {out.steps} steps; sizes {out.model.sizes()}; generators {dict(out.class_of)}"


def cmd_chase(args) -> int:
    Traw = load_theory(args.theory)
    T = model_theory(Traw)
    gens = parse_context(args.gens, T) if args.gens else ()
    facts = parse_atoms(args.facts, T, gens) if args.facts else ()
    out = chase(Presentation(T, gens, facts), args.budget, args.order)
    data, code = _outcome_json(out, Traw)
    emit(args, data, _outcome_text(out))
    return code


def cmd_repn(args) -> int:
    Traw = load_theory(args.theory)
    T = model_theory(Traw)
    phi = parse_formula(args.formula, T)
    out = representing_model(phi, T, args.budget)
    data, code = _outcome_json(out, Traw)
    if out.saturated:
        data["terms"] = {s: [format_term(t) for t in ts] for s, ts in out.terms.items()}
    emit(args, data, _outcome_text(out))
    return code


def cmd_hom(args) -> int:
    T = load_theory(args.theory)
    A = load_structure(args.source, T)
    B = load_structure(args.target, T)
    homs = enumerate_homs(A, B)
    data: dict[str, Any] = {"count": len(homs)}
    if not args.count:
        data["homs"] = [hom_to_dict(h)["maps"] for h in homs]
    emit(args, data, str(len(homs)))
    return OK if homs else NEGATIVE


def cmd_factor(args) -> int:
    T = load_theory(args.theory)
    A = load_structure(args.source, T)
    B = load_structure(args.target, T)
    maps = parse_maps(args.map)
    res = check_hom(A, B, maps)
    if not res:
        raise InputError(f"map is not a homomorphism: {res.witness}")
    e, m = factorize_dense_closed(Homomorphism(A, B, maps))
    data = {
        "middle": struct_json(e.target, T),
        "e": hom_to_dict(e)["maps"],
        "m": hom_to_dict(m)["maps"],
        "dense": bool(is_dense(e)),
        "closed": bool(is_closed_mono(m)),
    }
    emit(args, data, f"middle object sizes {e.target.sizes()}")
    return OK


def load_diagram(path: str, T) -> Diagram:
    try:
        data = json.loads(read_text(path))
        base = Path(path).parent
        structures = {name: load_structure(str(base / ref), T) for name, ref in data["objects"].items()}
        arrows = []
        for a in data.get("arrows", []):
            maps = parse_maps(json.dumps(a["maps"]))
            h = Homomorphism(structures[a["src"]], structures[a["tgt"]], maps)
            arrows.append(Arrow(a.get("name", f"{a['src']}->{a['tgt']}"), a["src"], a["tgt"], h))
        return Diagram(tuple(structures), structures, tuple(arrows))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed diagram {path}: {exc}") from exc


def cmd_colim(args) -> int:
    T = load_theory(args.theory)
    d = load_diagram(args.diagram, T)
    col = filtered_colimit(d, model_theory(T))
    data = struct_json(col.object, T)
    data["legs"] = {o: hom_to_dict(h)["maps"] for o, h in col.legs.items()}
    emit(args, data, f"colimit sizes {col.object.sizes()}")
    return OK


def _relative(T) -> RelativeTheory:
    if not isinstance(T, RelativeTheory):
        raise InputError("this subcommand needs a relative theory (operators block)")
    return T


def cmd_alg(args) -> int:
    T = _relative(load_theory(args.theory))
    if args.alg_cmd == "check":
        M = load_structure(args.structure, T)
        res = is_algebra_model(RelativeAlgebra.from_structure(T, M))
        data: dict[str, Any] = {"algebra": res.ok}
        if not res.ok:
            data["witness"] = repr(res.witness)
        emit(args, data, "algebra" if res.ok else f"not an algebra: {res.witness!r}")
        return OK if res.ok else NEGATIVE
    if args.alg_cmd == "free":
        X = loads_structure(read_text(args.structure), T.base.signature)
        res = free_algebra_chain(T, X, args.stages, args.budget)
        if not res.stabilized:
            emit(args, {"status": "Unstabilized", "stages": res.stage, "sizes": list(res.sizes)},
                 f"Unstabilized; sizes {list(res.sizes)}")
            return UNKNOWN
        a = res.algebra
        data = {"status": "Stabilized", "stage": res.stage, "sizes": list(res.sizes)}
        data.update(structure_to_dict(a.underlying, T.name, ops=a.ops))
        data["insertion"] = hom_to_dict(res.insertion)["maps"]
        emit(args, data, f"Stabilized at stage {res.stage}; sizes {list(res.sizes)}")
        return OK
    # coeq
    M = load_structure(args.structure, T)
    pairs = []
    for item in (args.identify or "").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            sort, eq = item.rsplit(":", 1) if ":" in item else (M.signature.sorts[0], item)
            x, y = eq.split("=")
            pairs.append((sort, int(x), int(y)))
        except ValueError as exc:
            raise InputError(f"malformed identification {item!r}; expected sort:x=y") from exc
    target = T.base if args.base_only else T
    out = algebra_coequalizer(target, M, pairs, args.budget)
    data, code = _outcome_json(out, T)
    emit(args, data, _outcome_text(out))
    return code


def cmd_closure(args) -> int:
    T = load_theory(args.theory)
    try:
        data = json.loads(read_text(args.family))
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed family {args.family}: {exc}") from exc
    base = Path(args.family).parent
    MT = model_theory(T)
    members = [load_structure(str(base / p), T) for p in data.get("members", [])]
    candidates = [load_structure(str(base / p), T) for p in data.get("candidates", [])]
    sequents = None
    if "sequents" in data:
        sequents = tuple(s for text in data["sequents"] for s in parse_sequents(text, MT))
    fam = ModelFamily(T, members, sequents=sequents)
    reports = audit(
        fam,
        max_arity=args.max_arity,
        max_sub=args.max_sub,
        max_chain=args.max_chain,
        candidates=candidates,
        sections=args.sections,
    )
    data = {"reports": [r.summary() for r in reports]}
    emit(args, data, "\n".join(f"{r.condition}: {r.verdict}" for r in reports))
    return OK if all(r.closed for r in reports) else NEGATIVE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget", type=int, default=_default_budget(), help="chase step budget (default 10000, env PHL_BUDGET)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized runs; outputs are deterministic")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json", help="JSON output (default)")
    fmt.add_argument("--text", dest="format", action="store_const", const="text", help="short text output")
    common.set_defaults(format="json")
    common.add_argument("-o", "--output", help="write output to a file")

    p = _Parser(prog="phl", description="Partial Horn logic workbench.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("check", parents=[common], help="is a structure a model of a theory")
    s.add_argument("theory")
    s.add_argument("structure")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("eval", parents=[common], help="interpret a formula in a structure")
    s.add_argument("theory")
    s.add_argument("structure")
    s.add_argument("--formula", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("prove", parents=[common], help="decide a sequent via the representing model")
    s.add_argument("theory")
    s.add_argument("--sequent", required=True)
    s.set_defaults(func=cmd_prove)

    s = sub.add_parser("chase", parents=[common], help="chase a presentation")
    s.add_argument("theory")
    s.add_argument("--gens", default="")
    s.add_argument("--facts", default="")
    s.add_argument("--order", choices=["fifo", "reversed"], default="fifo")
    s.set_defaults(func=cmd_chase)

    s = sub.add_parser("repn", parents=[common], help="representing model of a formula")
    s.add_argument("theory")
    s.add_argument("--formula", required=True)
    s.set_defaults(func=cmd_repn)

    s = sub.add_parser("hom", parents=[common], help="enumerate homomorphisms")
    s.add_argument("theory")
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("--count", action="store_true", help="only print the number")
    s.set_defaults(func=cmd_hom)

    s = sub.add_parser("factor", parents=[common], help="dense/closed factorization of a homomorphism")
    s.add_argument("theory")
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("--map", required=True, help='JSON, e.g. {"*": [[0, 1], [1, 1]]}')
    s.set_defaults(func=cmd_factor)

    s = sub.add_parser("colim", parents=[common], help="filtered colimit of a diagram file")
    s.add_argument("theory")
    s.add_argument("diagram")
    s.set_defaults(func=cmd_colim)

    s = sub.add_parser("alg", help="relative algebras")
    alg = s.add_subparsers(dest="alg_cmd", required=True, parser_class=_Parser)
    a = alg.add_parser("check", parents=[common], help="is a structure an (Ω,E)-algebra")
    a.add_argument("theory")
    a.add_argument("structure")
    a = alg.add_parser("free", parents=[common], help="free-algebra chain on a base model")
    a.add_argument("theory")
    a.add_argument("structure")
    a.add_argument("--stages", type=int, default=8)
    a = alg.add_parser("coeq", parents=[common], help="quotient an algebra by identifications")
    a.add_argument("theory")
    a.add_argument("structure")
    a.add_argument("--identify", default="", help="comma-separated sort:x=y")
    a.add_argument("--base-only", action="store_true", help="quotient in the base theory, ignoring operators")
    s.set_defaults(func=cmd_alg)

    s = sub.add_parser("closure", parents=[common], help="Birkhoff closure audits on a family file")
    s.add_argument("theory")
    s.add_argument("family")
    s.add_argument("--max-arity", type=int, default=2)
    s.add_argument("--max-sub", type=int, default=None)
    s.add_argument("--max-chain", type=int, default=3)
    s.add_argument("--sections", choices=["hom", "carrier"], default="hom")
    s.set_defaults(func=cmd_closure)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "budget", 1) <= 0:
        print("phl: error: --budget must be positive", file=sys.stderr)
        return INPUT_ERROR
    try:
        return args.func(args)
    except (StageBudgetExceeded, Undecided) as exc:
        print(f"phl: {exc}", file=sys.stderr)
        return UNKNOWN
    except (InputError, IllFormed, NotFiltered, ValueError, KeyError) as exc:
        print(f"phl: error: {exc}", file=sys.stderr)
        return INPUT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

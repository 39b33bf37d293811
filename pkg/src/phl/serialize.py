"""JSON encoding of structures, homomorphisms and chase outcomes.

Keys follow the signature's declaration order and every array is sorted,
so the same value always serializes to the same bytes.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

from .structure import Homomorphism, PartialStructure, StructureError, make_structure
from .syntax import Signature


def structure_to_dict(M: PartialStructure, name: str = "", ops: Mapping[str, Mapping] | None = None) -> dict[str, Any]:
    sig = M.signature
    op_names = set(ops or ())
    out: dict[str, Any] = {
        "signature": name,
        "carriers": {s: list(M.carriers[s]) for s in sig.sorts},
        "functions": {
            f.name: sorted([*args, v] for args, v in M.functions[f.name].items())
            for f in sig.functions
            if f.name not in op_names
        },
        "relations": {r.name: sorted(list(t) for t in M.relations[r.name]) for r in sig.relations},
    }
    if ops is not None:
        out["ops"] = {name_: sorted([*args, v] for args, v in table.items()) for name_, table in ops.items()}
    return out


def structure_from_dict(data: Mapping[str, Any], signature: Signature) -> PartialStructure:
    """Inverse of ``structure_to_dict``; ``ops`` tables are merged into the functions."""
    try:
        funcs = {f: [tuple(row) for row in rows] for f, rows in data.get("functions", {}).items()}
        for f, rows in data.get("ops", {}).items():
            funcs[f] = [tuple(row) for row in rows]
        rels = {r: [tuple(row) for row in rows] for r, rows in data.get("relations", {}).items()}
        return make_structure(signature, data.get("carriers", {}), funcs, rels)
    except (TypeError, ValueError, AttributeError) as exc:
        raise StructureError(f"malformed structure JSON: {exc}") from exc


def hom_to_dict(h: Homomorphism) -> dict[str, Any]:
    return {"maps": {s: [[x, y] for x, y in m.items()] for s, m in h.maps.items()}}


def dumps(obj: Any) -> str:
    """Stable JSON text: two-space indent, one table row per line."""
    return _render(obj, 0) + "\n"


def _render(obj: Any, depth: int) -> str:
    pad = "  " * (depth + 1)
    end = "  " * depth
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_render(v, depth + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list) and obj and all(isinstance(x, list) for x in obj):
        rows = [pad + json.dumps(x, separators=(", ", ": ")) for x in obj]
        return "[\n" + ",\n".join(rows) + "\n" + end + "]"
    return json.dumps(obj, separators=(", ", ": "), ensure_ascii=False)


def loads_structure(text: str, signature: Signature) -> PartialStructure:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructureError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise StructureError("structure JSON must be an object")
    return structure_from_dict(data, signature)

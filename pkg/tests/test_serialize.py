import json

import pytest

from phl import corpus as C
from phl.relalg import RelativeAlgebra
from phl.serialize import dumps, hom_to_dict, loads_structure, structure_from_dict, structure_to_dict
from phl.structure import StructureError, identity
from phl.syntax import expand_relative_theory


@pytest.mark.parametrize("M", [C.chain(3), C.diamond(), C.three_category(), C.z_window(2, "wmon_inv"), C.quiver(2, [(0, 1), (1, 1)])])
def test_round_trip(M):
    text = dumps(structure_to_dict(M))
    assert loads_structure(text, M.signature) == M
    assert dumps(structure_to_dict(loads_structure(text, M.signature))) == text


def test_rows_are_sorted_and_one_per_line():
    text = dumps(structure_to_dict(C.chain(2)))
    assert '[0, 0],\n      [0, 1],\n      [1, 1]' in text


def test_ops_kept_apart():
    rt = C.load("possub")
    W = C.subtraction_window(3)
    a = RelativeAlgebra.from_structure(rt, W)
    data = structure_to_dict(a.underlying, rt.name, ops=a.ops)
    assert "-" not in data["functions"] and data["ops"]["-"]
    sig = expand_relative_theory(rt).signature
    assert structure_from_dict(json.loads(dumps(data)), sig) == W


def test_malformed_json():
    with pytest.raises(StructureError):
        loads_structure("{", C.load("pos").signature)
    with pytest.raises(StructureError):
        loads_structure("[1, 2]", C.load("pos").signature)
    with pytest.raises(StructureError):
        loads_structure('{"carriers": {"*": [0]}, "relations": {"leq": [[0, 5]]}}', C.load("pos").signature)


def test_hom_to_dict():
    assert hom_to_dict(identity(C.chain(2))) == {"maps": {"*": [[0, 0], [1, 1]]}}

import json

import numpy as np
import pytest

from framedil import interchange as ix
from framedil.algmaps import build_algebraic_dilation, transpose_map
from framedil.dilation import build_elementary, example_3_9
from framedil.errors import MalformedInputError
from framedil.frames import dilate_dual_pair
from framedil.generators import (make_rng, random_dual_pair, random_frame, random_ovm, random_parseval,
                                 random_positive_ovm)
from framedil.ovm import FiniteOVM, naimark_dilate_positive


def test_complex_encoding():
    a = np.array([[1 + 2j, -0.5], [0, 3j]])
    enc = ix.encode_array(a)
    assert enc == [[[1.0, 2.0], [-0.5, 0.0]], [[0.0, 0.0], [0.0, 3.0]]]
    assert np.array_equal(ix.decode_array(enc, 2), a)
    with pytest.raises(MalformedInputError):
        ix.decode_array([[1, 2, 3]], 1)
    with pytest.raises(MalformedInputError):
        ix.decode_array([[[1, 0]], [[1, 0], [2, 0]]], 2)
    with pytest.raises(MalformedInputError):
        ix.decode_array([["a", 0]], 1)


def test_roundtrips_are_exact(rng):
    f = random_frame(rng, 3, 5)
    assert np.array_equal(ix.frame_from_json(json.loads(ix.dumps(ix.frame_to_json(f)))).vectors, f.vectors)
    fr = random_dual_pair(rng, 2, 4, alternate=True)
    back = ix.framing_from_json(json.loads(ix.dumps(ix.framing_to_json(fr))))
    assert np.array_equal(back.y.vectors, fr.y.vectors)
    ovm = random_ovm(rng, 2, 3, 4)
    assert np.array_equal(ix.ovm_from_json(json.loads(ix.dumps(ix.ovm_to_json(ovm)))).atoms, ovm.atoms)


def _through_file(tmp_path, obj):
    path = tmp_path / "a.json"
    ix.write_json(path, obj)
    return ix.load_artifact(path)


def test_every_kind_loads(tmp_path, rng):
    fr = random_dual_pair(rng, 2, 4)
    ovm = random_positive_ovm(rng, 2, 3)
    phi = transpose_map(2)
    phi39, Phi = example_3_9()
    cases = {
        "frame": ix.frame_to_json(random_parseval(rng, 2, 3)),
        "framing": ix.framing_to_json(fr),
        "ovm": ix.ovm_to_json(ovm),
        "orthogonal_dilation": ix.orthogonal_dilation_to_json(dilate_dual_pair(fr.x, fr.y), fr.x, fr.y),
        "dilation_system": ix.dilation_system_to_json(Phi, phi39),
        "naimark_dilation": ix.naimark_to_json(naimark_dilate_positive(ovm), ovm),
        "algebra": ix.algebra_to_json(phi.algebra),
        "linear_map": ix.linear_map_to_json(phi),
        "algebraic_dilation": ix.algebraic_dilation_to_json(build_algebraic_dilation(phi), phi),
    }
    for kind, obj in cases.items():
        got, _, raw = _through_file(tmp_path, obj)
        assert got == kind
        # without the kind field the keys decide
        obj = dict(obj)
        del obj["kind"]
        assert ix.infer_kind(obj) == kind


def test_empty_elementary_system_roundtrip(tmp_path):
    ovm = FiniteOVM(np.zeros((2, 2, 3)))
    kind, (system, back), _ = _through_file(tmp_path, ix.dilation_system_to_json(
        build_elementary(ovm).as_generic(), ovm))
    assert system.Z_dim == 0 and system.S.shape == (2, 0) and system.T.shape == (0, 3)


def test_parse_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"vectors": [[[1, 0]]\n')
    with pytest.raises(ix.ParseError, match=r"bad.json:\d+:\d+"):
        ix.load_artifact(p)
    p.write_text('{"kind": "spaceship"}')
    with pytest.raises(MalformedInputError, match="unknown artifact kind"):
        ix.load_artifact(p)
    p.write_text('{"foo": 1}')
    with pytest.raises(MalformedInputError, match="cannot infer"):
        ix.load_artifact(p)
    p.write_text('{"dim": 3, "vectors": [[[1, 0], [0, 0]]]}')
    with pytest.raises(MalformedInputError, match="disagrees"):
        ix.load_artifact(p)
    with pytest.raises(MalformedInputError):
        ix.load_artifact(tmp_path / "missing.json")


def test_atomic_write_leaves_no_temp(tmp_path):
    ix.atomic_write(tmp_path / "sub" / "x.txt", "hello\n")
    assert (tmp_path / "sub" / "x.txt").read_text() == "hello\n"
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["x.txt"]


def test_seed_folding():
    a = make_rng(-1).normal(size=3)
    b = make_rng(2**64 - 1).normal(size=3)
    assert np.array_equal(a, b)
    assert np.array_equal(make_rng(2**70 + 5).normal(size=2), make_rng(2**70 + 5).normal(size=2))


def test_generator_postconditions(rng):
    ovm = random_positive_ovm(rng, 3, 6)
    assert np.abs(ovm.atoms.sum(axis=0) - np.eye(3)).max() < 1e-12
    assert np.linalg.eigvalsh(ovm.atoms).min() > -1e-12
    fr = random_dual_pair(rng, 3, 7, alternate=True)
    assert np.abs(fr.reconstruction_operator() - np.eye(3)).max() < 1e-12
    with pytest.raises(MalformedInputError):
        random_frame(rng, 4, 2)

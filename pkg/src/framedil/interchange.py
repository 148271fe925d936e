"""JSON interchange: complex entries as [re, im], matrices row-major, atomic writes.

Every artifact is a JSON object with a "kind" field. Files without one are
classified from their keys.
"""
import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .algmaps import AlgebraicDilation, FiniteAlgebra, LinearMapOnAlgebra
from .dilation import GenericDilationSystem
from .errors import MalformedInputError
from .frames import Frame, OrthogonalDilation
from .framings import Framing
from .ovm import FiniteOVM, PositiveNaimarkDilation


class ParseError(MalformedInputError):
    """Unreadable JSON, reported with line and column."""


def encode_array(a):
    """Nested lists with complex scalars as [re, im]."""
    a = np.asarray(a, dtype=complex)
    pairs = np.stack([a.real, a.imag], axis=-1)
    return pairs.tolist()


def decode_array(data, ndim, name="array"):
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise MalformedInputError(f"{name}: ragged or non-numeric entries") from None
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise MalformedInputError(
            f"{name}: expected a {ndim}-d array of [re, im] pairs, got nesting shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MalformedInputError(f"{name}: non-finite entries")
    return arr[..., 0] + 1j * arr[..., 1]


def _matrix_list(data, name):
    if not isinstance(data, list) or not data:
        raise MalformedInputError(f"{name}: expected a non-empty list of matrices")
    return decode_array(data, 3, name)


def _need(obj, *keys):
    missing = [k for k in keys if k not in obj]
    if missing:
        raise MalformedInputError(f"missing field(s) {missing} for kind {obj.get('kind')!r}")


def _check_int(obj, key, value):
    if key in obj and obj[key] != value:
        raise MalformedInputError(f"{key} = {obj[key]} disagrees with the data ({value})")


# -- encoders -----------------------------------------------------------------

def frame_to_json(frame):
    return {"kind": "frame", "dim": frame.dim, "vectors": encode_array(frame.vectors)}


def framing_to_json(framing):
    return {"kind": "framing", "dim": framing.dim,
            "x": encode_array(framing.x.vectors), "y": encode_array(framing.y.vectors)}


def ovm_to_json(ovm):
    return {"kind": "ovm", "atoms": encode_array(ovm.atoms),
            "domain_dim": ovm.domain_dim, "range_dim": ovm.range_dim}


def orthogonal_dilation_to_json(dil, x, y=None):
    out = {"kind": "orthogonal_dilation", "ambient_dim": dil.ambient_dim,
           "embed": encode_array(dil.embed), "basis": encode_array(dil.basis),
           "dual_basis": encode_array(dil.dual_basis), "projection": encode_array(dil.projection),
           "x": encode_array(x.vectors)}
    if y is not None:
        out["y"] = encode_array(y.vectors)
    return out


def dilation_system_to_json(system, ovm=None):
    out = {"kind": "dilation_system", "Z_dim": int(system.F_atoms.shape[1]),
           "F_atoms": encode_array(system.F_atoms), "S": encode_array(system.S),
           "T": encode_array(system.T)}
    if ovm is not None:
        out["ovm"] = ovm_to_json(ovm)
    return out


def naimark_to_json(dil, ovm):
    return {"kind": "naimark_dilation", "dilation_dim": dil.dilation_dim,
            "V": encode_array(dil.V), "F_atoms": encode_array(dil.F_atoms), "ovm": ovm_to_json(ovm)}


def algebra_to_json(alg):
    return {"kind": "algebra", "ambient": alg.ambient, "basis": encode_array(alg.basis)}


def linear_map_to_json(phi):
    out = algebra_to_json(phi.algebra)
    out.update(kind="linear_map", values=encode_array(phi.values), target_dim=phi.target_dim)
    return out


def algebraic_dilation_to_json(dil, phi):
    return {"kind": "algebraic_dilation", "W_dim": dil.W_dim,
            "W_basis": encode_array(dil.W_basis), "pi": encode_array(dil.pi),
            "T": encode_array(dil.T), "S": encode_array(dil.S),
            "pivots": [int(i) for i in dil.pivots], "map": linear_map_to_json(phi)}


# -- decoders -----------------------------------------------------------------

def frame_from_json(obj):
    _need(obj, "vectors")
    vecs = decode_array(obj["vectors"], 2, "vectors")
    _check_int(obj, "dim", vecs.shape[1])
    return Frame(vecs)


def framing_from_json(obj):
    _need(obj, "x", "y")
    x, y = decode_array(obj["x"], 2, "x"), decode_array(obj["y"], 2, "y")
    framing = Framing(Frame(x), Frame(y))
    _check_int(obj, "dim", framing.dim)
    return framing


def ovm_from_json(obj):
    _need(obj, "atoms")
    ovm = FiniteOVM(_matrix_list(obj["atoms"], "atoms"))
    _check_int(obj, "domain_dim", ovm.domain_dim)
    _check_int(obj, "range_dim", ovm.range_dim)
    return ovm


def orthogonal_dilation_from_json(obj):
    _need(obj, "ambient_dim", "embed", "basis", "dual_basis", "projection", "x")
    dil = OrthogonalDilation(int(obj["ambient_dim"]), decode_array(obj["embed"], 2, "embed"),
                             decode_array(obj["basis"], 2, "basis"),
                             decode_array(obj["dual_basis"], 2, "dual_basis"),
                             decode_array(obj["projection"], 2, "projection"))
    n = dil.ambient_dim
    if dil.basis.shape != (n, n) or dil.dual_basis.shape != (n, n) or dil.projection.shape != (n, n):
        raise MalformedInputError(f"basis, dual_basis and projection must be {n}x{n}")
    x = Frame(decode_array(obj["x"], 2, "x"))
    y = Frame(decode_array(obj["y"], 2, "y")) if "y" in obj else None
    return dil, x, y


def dilation_system_from_json(obj):
    _need(obj, "F_atoms", "S", "T")
    if obj.get("Z_dim") == 0:
        # empty arrays lose their shape in JSON; rebuild them from the OVM
        _need(obj, "ovm")
        ovm = ovm_from_json(obj["ovm"])
        m, dr, d = ovm.atoms.shape
        return GenericDilationSystem(np.zeros((m, 0, 0)), np.zeros((dr, 0)), np.zeros((0, d))), ovm
    system = GenericDilationSystem(_matrix_list(obj["F_atoms"], "F_atoms"),
                                   decode_array(obj["S"], 2, "S"), decode_array(obj["T"], 2, "T"))
    _check_int(obj, "Z_dim", system.Z_dim)
    ovm = ovm_from_json(obj["ovm"]) if "ovm" in obj else None
    return system, ovm


def naimark_from_json(obj):
    _need(obj, "V", "F_atoms", "ovm")
    F = _matrix_list(obj["F_atoms"], "F_atoms")
    dil = PositiveNaimarkDilation(F.shape[1], decode_array(obj["V"], 2, "V"), F)
    _check_int(obj, "dilation_dim", dil.dilation_dim)
    return dil, ovm_from_json(obj["ovm"])


def algebra_from_json(obj):
    _need(obj, "ambient", "basis")
    return FiniteAlgebra(int(obj["ambient"]), _matrix_list(obj["basis"], "basis"))


def linear_map_from_json(obj):
    _need(obj, "values", "target_dim")
    return LinearMapOnAlgebra(algebra_from_json(obj), int(obj["target_dim"]),
                              _matrix_list(obj["values"], "values"))


def algebraic_dilation_from_json(obj):
    _need(obj, "W_dim", "W_basis", "pi", "T", "S", "pivots", "map")
    phi = linear_map_from_json(obj["map"])
    n = int(obj["W_dim"])
    p, v = phi.algebra.dim, phi.target_dim
    if n == 0:
        empty = np.zeros((p, 0, 0), dtype=complex)
        return AlgebraicDilation(0, np.zeros((p * v, 0), complex), empty, np.zeros((0, v), complex),
                                 np.zeros((v, 0), complex), np.zeros(0, dtype=int)), phi
    dil = AlgebraicDilation(n, decode_array(obj["W_basis"], 2, "W_basis"), _matrix_list(obj["pi"], "pi"),
                            decode_array(obj["T"], 2, "T"), decode_array(obj["S"], 2, "S"),
                            np.asarray(obj["pivots"], dtype=int))
    shapes = {"W_basis": (dil.W_basis.shape, (p * v, n)), "pi": (dil.pi.shape, (p, n, n)),
              "T": (dil.T.shape, (n, v)), "S": (dil.S.shape, (v, n)), "pivots": (dil.pivots.shape, (n,))}
    for name, (got, want) in shapes.items():
        if got != want:
            raise MalformedInputError(f"{name} has shape {got}, expected {want}")
    return dil, phi


DECODERS = {
    "frame": frame_from_json,
    "framing": framing_from_json,
    "ovm": ovm_from_json,
    "orthogonal_dilation": orthogonal_dilation_from_json,
    "dilation_system": dilation_system_from_json,
    "naimark_dilation": naimark_from_json,
    "algebra": algebra_from_json,
    "linear_map": linear_map_from_json,
    "algebraic_dilation": algebraic_dilation_from_json,
}


def infer_kind(obj):
    if not isinstance(obj, dict):
        raise MalformedInputError(f"top-level JSON value must be an object, got {type(obj).__name__}")
    if "kind" in obj:
        if obj["kind"] not in DECODERS and obj["kind"] != "run_report":
            raise MalformedInputError(f"unknown artifact kind {obj['kind']!r}")
        return obj["kind"]
    keys = set(obj)
    rules = [({"W_basis", "pi"}, "algebraic_dilation"), ({"values", "basis"}, "linear_map"),
             ({"basis", "ambient"}, "algebra"), ({"V", "F_atoms"}, "naimark_dilation"),
             ({"F_atoms", "S", "T"}, "dilation_system"), ({"dual_basis", "projection"}, "orthogonal_dilation"),
             ({"x", "y"}, "framing"), ({"atoms"}, "ovm"), ({"vectors"}, "frame")]
    for need, kind in rules:
        if need <= keys:
            return kind
    raise MalformedInputError(f"cannot infer the artifact kind from keys {sorted(keys)}")


def parse_text(text, source="<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def read_bytes(path):
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise MalformedInputError(f"cannot read {path}: {exc.strerror}") from None


def load_artifact(path):
    """(kind, decoded object, raw bytes)."""
    raw = read_bytes(path)
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise ParseError(f"{path}: not UTF-8 text") from None
    obj = parse_text(text, str(path))
    kind = infer_kind(obj)
    if kind == "run_report":
        return kind, obj, raw
    return kind, DECODERS[kind](obj), raw


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write(path, dumps(obj))


def digest(*chunks):
    h = hashlib.sha256()
    for c in chunks:
        h.update(c if isinstance(c, bytes) else str(c).encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()

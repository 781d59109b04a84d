"""JSON interchange for operators, channels, POVMs, testers and reports.

Complex entries are ``[re, im]`` pairs, matrices are row-major nested
lists, and every operator carries its ``dims``.  Floats are written with
Python's shortest round-trip repr, so ``load(emit(x))`` is bit-exact.
Non-finite floats are written as the strings ``"inf"``, ``"-inf"``, ``"nan"``.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import channels as ch
from . import tester as tst
from .errors import DimensionError, InputError, ProcuncError, ValidationError

VERSION = "procunc/1"
BUNDLED_PREFIXES = ("examples/", "example:")


# -- scalars and matrices --------------------------------------------------

def encode_float(x) -> Any:
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def decode_float(x) -> float:
    if isinstance(x, bool):
        raise InputError(f"expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str) and x.strip().lower() in ("inf", "+inf", "infinity", "-inf", "-infinity", "nan"):
        return float(x.strip().lower().replace("infinity", "inf"))
    raise InputError(f"expected a number, got {x!r}")


def encode_complex(z) -> list:
    z = complex(z)
    return [encode_float(z.real), encode_float(z.imag)]


def decode_complex(v) -> complex:
    if isinstance(v, list):
        if len(v) != 2:
            raise InputError(f"complex entry must be [re, im], got {v!r}")
        return complex(decode_float(v[0]), decode_float(v[1]))
    return complex(decode_float(v), 0.0)


def encode_matrix(a) -> list:
    a = np.asarray(a)
    return [[encode_complex(z) for z in row] for row in a]


def decode_matrix(rows) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError("matrix must be a nonempty list of rows")
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise InputError("matrix rows have different lengths")
    return np.array([[decode_complex(z) for z in r] for r in rows], dtype=complex)


def encode_vector(v) -> list:
    return [encode_float(x) for x in np.asarray(v, dtype=float).reshape(-1)]


def decode_vector(v) -> np.ndarray:
    if not isinstance(v, list):
        raise InputError(f"expected a list of numbers, got {type(v).__name__}")
    return np.array([decode_float(x) for x in v], dtype=float)


def encode_operator(a, dims) -> dict:
    return {"dims": [int(d) for d in dims], "matrix": encode_matrix(a)}


def decode_operator(obj) -> tuple[np.ndarray, tuple]:
    if not isinstance(obj, dict) or "matrix" not in obj:
        raise InputError("operator must be an object with 'matrix' (and 'dims')")
    m = decode_matrix(obj["matrix"])
    dims = tuple(int(d) for d in obj.get("dims", [m.shape[0]]))
    if m.shape[0] != m.shape[1] or int(np.prod(dims)) != m.shape[0]:
        raise InputError(f"operator of shape {m.shape} does not match dims {list(dims)}")
    return m, dims


def sanitize(obj):
    """Turn numpy values and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_matrix(obj) if obj.ndim == 2 else [encode_complex(z) for z in obj]
        return sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return encode_float(obj)
    if isinstance(obj, complex):
        return encode_complex(obj)
    return obj


def dumps(obj, indent: Optional[int] = 2) -> str:
    return json.dumps(sanitize(obj), indent=indent, allow_nan=False) + "\n"


# -- objects ---------------------------------------------------------------

def channel_to_json(channel: ch.QuantumChannel) -> dict:
    out = {"d_in": channel.d_in, "d_out": channel.d_out,
           "choi": encode_operator(channel.choi, (channel.d_in, channel.d_out))}
    if channel.kraus is not None:
        out["kraus"] = [encode_matrix(k) for k in channel.kraus]
    return out


def channel_from_json(obj, name: str = "") -> ch.QuantumChannel:
    """Build a channel; only structural checks happen here (CP/TP are left to validation)."""
    if not isinstance(obj, dict) or "d_in" not in obj or "d_out" not in obj:
        raise InputError(f"channel {name!r} needs d_in and d_out")
    d_in, d_out = int(obj["d_in"]), int(obj["d_out"])
    kraus = [decode_matrix(k) for k in obj["kraus"]] if "kraus" in obj else None
    choi = None
    if "choi" in obj:
        choi, dims = decode_operator(obj["choi"])
        if int(np.prod(dims)) != d_in * d_out:
            raise InputError(f"channel {name!r}: Choi dims {list(dims)} do not match d_in*d_out")
    if kraus is None and choi is None:
        raise InputError(f"channel {name!r} needs 'kraus' or 'choi'")
    try:
        return ch.QuantumChannel(d_in, d_out, kraus=kraus, choi=choi, name=name)
    except DimensionError as exc:
        raise InputError(f"channel {name!r}: {exc}") from exc


def povm_to_json(povm: ch.Povm) -> dict:
    return {"dims": list(povm.dims), "effects": [encode_matrix(e) for e in povm.effects]}


def povm_from_json(obj, name: str = "") -> ch.Povm:
    if not isinstance(obj, dict) or "effects" not in obj:
        raise InputError(f"POVM {name!r} needs 'effects'")
    effects = [decode_matrix(e) for e in obj["effects"]]
    if not effects:
        raise InputError(f"POVM {name!r} has no effects")
    dims = tuple(obj.get("dims", [effects[0].shape[0]]))
    try:
        return ch.Povm(dims, effects, name=name)
    except DimensionError as exc:
        raise InputError(f"POVM {name!r}: {exc}") from exc


def tester_to_json(t: tst.Tester) -> dict:
    return {
        "dims": [t.d_R, t.d_A, t.d_B],
        "state": encode_operator(t.input_state, (t.d_R, t.d_A)),
        "povm": povm_to_json(t.povm),
    }


def bounds_to_json(b) -> dict:
    return b.as_dict()


def bounds_from_json(obj):
    from .majorization import BoundVectors

    try:
        sc = decode_vector(obj["s_cumulative"])
        b = BoundVectors(int(obj["m"]), int(obj["n"]), sc, decode_vector(obj["s"]),
                         decode_vector(obj["s_flat"]), [tuple(a) for a in obj.get("argmax_subsets", [])], [])
        if "t" in obj:
            b.t_cumulative = decode_vector(obj["t_cumulative"])
            b.t = decode_vector(obj["t"])
            b.t_flat = decode_vector(obj["t_flat"])
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed bounds object: missing {exc}") from exc
    if len(b.s_cumulative) != b.m + b.n:
        raise InputError("bounds: s_cumulative length must be m+n")
    if b.t is not None and len(b.t_cumulative) != b.m * b.n:
        raise InputError("bounds: t_cumulative length must be m*n")
    return b


# -- documents -------------------------------------------------------------

@dataclass
class Document:
    version: str
    states: dict = field(default_factory=dict)
    povms: dict = field(default_factory=dict)
    channels: dict = field(default_factory=dict)
    testers: dict = field(default_factory=dict)
    campaign: Optional[dict] = None
    vectors: Optional[list] = None
    source: str = ""

    def tester(self, name: str) -> tst.Tester:
        if name not in self.testers:
            raise InputError(f"unknown tester {name!r}; available: {sorted(self.testers)}")
        spec = self.testers[name]
        d_R, d_A, d_B = spec["dims"]
        return tst.build_tester(self.states[spec["state"]][0], self.povms[spec["povm"]], d_R, d_A, d_B, name=name)

    def to_json(self) -> dict:
        out = {"version": self.version}
        if self.states:
            out["states"] = {k: encode_operator(m, d) for k, (m, d) in self.states.items()}
        if self.povms:
            out["povms"] = {k: povm_to_json(p) for k, p in self.povms.items()}
        if self.channels:
            out["channels"] = {k: channel_to_json(c) for k, c in self.channels.items()}
        if self.testers:
            out["testers"] = {k: {"dims": list(v["dims"]), "state": v["state"], "povm": v["povm"]}
                              for k, v in self.testers.items()}
        if self.campaign is not None:
            out["campaign"] = self.campaign
        if self.vectors is not None:
            out["vectors"] = [encode_vector(v) for v in self.vectors]
        return out


def _section(raw: dict, key: str) -> dict:
    sec = raw.get(key, {})
    if not isinstance(sec, dict):
        raise InputError(f"section {key!r} must be an object of named entries")
    return sec


def parse_document(raw, source: str = "") -> Document:
    if not isinstance(raw, dict):
        raise InputError("document must be a JSON object")
    version = raw.get("version")
    if version != VERSION:
        raise InputError(f"unrecognized version {version!r}; expected {VERSION!r}")
    doc = Document(version, source=source)
    for k, v in _section(raw, "states").items():
        doc.states[k] = decode_operator(v)
    for k, v in _section(raw, "povms").items():
        doc.povms[k] = povm_from_json(v, k)
    for k, v in _section(raw, "channels").items():
        doc.channels[k] = channel_from_json(v, k)
    for k, v in _section(raw, "testers").items():
        doc.testers[k] = _tester_spec(doc, k, v)
    if "campaign" in raw:
        if not isinstance(raw["campaign"], dict):
            raise InputError("campaign must be an object")
        doc.campaign = raw["campaign"]
        for name in doc.campaign.get("testers", []):
            if name not in doc.testers:
                raise InputError(f"campaign references unknown tester {name!r}")
    if "vectors" in raw:
        doc.vectors = [decode_vector(v) for v in raw["vectors"]]
    return doc


def _tester_spec(doc: Document, name: str, v) -> dict:
    if not isinstance(v, dict) or not {"dims", "state", "povm"} <= set(v):
        raise InputError(f"tester {name!r} needs dims, state and povm")
    dims = [int(d) for d in v["dims"]]
    if len(dims) != 3 or min(dims) < 1:
        raise InputError(f"tester {name!r}: dims must be [d_R, d_A, d_B] with entries >= 1")
    state, povm = v["state"], v["povm"]
    if isinstance(state, dict):
        doc.states[f"{name}.state"] = decode_operator(state)
        state = f"{name}.state"
    if isinstance(povm, dict):
        doc.povms[f"{name}.povm"] = povm_from_json(povm, f"{name}.povm")
        povm = f"{name}.povm"
    if state not in doc.states:
        raise InputError(f"tester {name!r} references unknown state {state!r}")
    if povm not in doc.povms:
        raise InputError(f"tester {name!r} references unknown POVM {povm!r}")
    return {"dims": dims, "state": state, "povm": povm}


def bundled_path(name: str):
    return resources.files("procunc") / "data" / name


def bundled_names() -> list[str]:
    return sorted(p.name for p in (resources.files("procunc") / "data").iterdir() if p.name.endswith(".json"))


def read_json(source: str):
    """Read JSON from a path, ``-`` (stdin), or a bundled example name.

    A path like ``examples/identity_qubit.json`` that does not exist on disk
    falls back to the copy shipped inside the package.
    """
    try:
        if source == "-":
            text = sys.stdin.read()
        else:
            path = Path(source)
            if not path.exists():
                for prefix in BUNDLED_PREFIXES:
                    if source.startswith(prefix) and source[len(prefix):] in bundled_names():
                        path = bundled_path(source[len(prefix):])
                        break
                else:
                    raise InputError(f"cannot read {source!r}: no such file")
            text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {source!r}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {source!r}: {exc}") from exc


def load_document(source) -> Document:
    if isinstance(source, dict):
        return parse_document(source)
    return parse_document(read_json(source), source=str(source))

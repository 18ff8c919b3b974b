"""System, target and report files.

A system file is JSON::

    {"q": [2.0, 0.0],
     "blocks": [{"slope": 0, "matrix": [[[1.0, 0.0]]]}, ...],
     "offdiag": {"0,1": {"0": [[[1.0, 0.0]]]}},
     "metadata": {"name": "estar"}}

Complex numbers are ``[re, im]`` pairs (plain reals are accepted on input),
block indices are 0-based and degrees are decimal strings.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import QStokesError, SpecParseError
from .elliptic import EllipticPoint
from .galois import NilpotentBlockMatrix
from .series import TruncatedLaurentSeries
from .system import QSystem

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# complex encoding


def encode_complex(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_matrix(M) -> list:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[encode_complex(x) for x in row] for row in M]


def decode_complex(v) -> complex:
    if isinstance(v, bool):
        raise ValueError("boolean is not a number")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise ValueError(f"expected a number or [re, im], got {v!r}")


def decode_matrix(v) -> np.ndarray:
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ValueError("matrix must be a non-empty list of rows")
    rows = [[decode_complex(x) for x in r] for r in v]
    if len({len(r) for r in rows}) != 1:
        raise ValueError("matrix rows have different lengths")
    return np.array(rows, dtype=complex)


def json_default(obj):
    """``json.dumps`` hook for numpy values and complex numbers."""
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return np.stack([obj.real, obj.imag], axis=-1).tolist()
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _is_flat(v) -> bool:
    scalar = (int, float, str, bool, type(None))
    return isinstance(v, list) and all(
        isinstance(x, scalar) or (isinstance(x, list) and all(isinstance(y, scalar) for y in x)) for x in v)


def _key_order(k):
    """Integer-like keys first in numeric order, then the rest."""
    try:
        return (0, int(k), "")
    except ValueError:
        return (1, 0, str(k))


def _emit(v, level: int) -> str:
    pad, inner = "  " * level, "  " * (level + 1)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_emit(v[k], level + 1)}" for k in sorted(v, key=_key_order)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(v, list):
        if _is_flat(v):
            return json.dumps(v, separators=(", ", ": "))
        return "[\n" + ",\n".join(inner + _emit(x, level + 1) for x in v) + "\n" + pad + "]"
    return json.dumps(v)


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, innermost arrays kept on one line."""
    plain = json.loads(json.dumps(obj, default=json_default, allow_nan=True))
    return _emit(plain, 0) + "\n"


# ---------------------------------------------------------------------------
# locations


def _locate(text: str, key: str):
    """Line and column (1-based) of the first ``"key"`` in ``text``."""
    m = re.search(re.escape(json.dumps(key)), text)
    if m is None:
        return None, None
    line = text.count("\n", 0, m.start()) + 1
    col = m.start() - (text.rfind("\n", 0, m.start()) + 1) + 1
    return line, col


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None


def _fail(text, key, message):
    line, col = _locate(text, key) if key is not None else (None, None)
    raise SpecParseError(message, line, col)


# ---------------------------------------------------------------------------
# systems


def system_to_dict(A: QSystem, metadata=None) -> dict:
    st = A.structure
    out = {
        "format": FORMAT_VERSION,
        "q": encode_complex(A.q),
        "blocks": [{"slope": int(m), "matrix": encode_matrix(M)} for m, M in zip(st.slopes, A.diag)],
        "offdiag": {
            f"{i},{j}": {str(n): encode_matrix(c) for n, c in S.to_dict().items()}
            for (i, j), S in sorted(A.offdiag.items())
        },
    }
    meta = dict(metadata or {})
    if A.name:
        meta.setdefault("name", A.name)
    if meta:
        out["metadata"] = meta
    return out


def system_from_dict(d: dict, text: str = "") -> QSystem:
    if not isinstance(d, dict):
        raise SpecParseError("top level must be an object", 1, 1)
    for key in ("q", "blocks"):
        if key not in d:
            raise SpecParseError(f"missing field {key!r}", 1, 1)
    try:
        q = decode_complex(d["q"])
    except ValueError as exc:
        _fail(text, "q", f"field 'q': {exc}")
    blocks = d["blocks"]
    if not isinstance(blocks, list) or not blocks:
        _fail(text, "blocks", "field 'blocks' must be a non-empty list")
    slopes, diag = [], []
    for idx, b in enumerate(blocks):
        if not isinstance(b, dict) or "slope" not in b or "matrix" not in b:
            _fail(text, "blocks", f"block {idx} needs 'slope' and 'matrix'")
        s = b["slope"]
        if isinstance(s, bool) or not isinstance(s, (int, float)) or int(s) != s:
            _fail(text, "slope", f"block {idx}: slope must be an integer, got {s!r}")
        try:
            diag.append(decode_matrix(b["matrix"]))
        except ValueError as exc:
            _fail(text, "matrix", f"block {idx}: {exc}")
        slopes.append(int(s))
    offdiag = {}
    raw = d.get("offdiag", {}) or {}
    if not isinstance(raw, dict):
        _fail(text, "offdiag", "field 'offdiag' must be an object")
    for key, terms in raw.items():
        m = re.fullmatch(r"\s*(\d+)\s*,\s*(\d+)\s*", str(key))
        if m is None:
            _fail(text, key, f"over-diagonal key {key!r} must look like 'i,j'")
        i, j = int(m.group(1)), int(m.group(2))
        if not isinstance(terms, dict):
            _fail(text, key, f"block {key}: expected an object of degree -> matrix")
        try:
            coeffs = {int(n): decode_matrix(M) for n, M in terms.items()}
        except ValueError as exc:
            _fail(text, key, f"block {key}: {exc}")
        if i < len(diag) and j < len(diag):
            shape = (diag[i].shape[0], diag[j].shape[0])
        else:
            shape = None
        for n, M in coeffs.items():
            if shape is not None and M.shape != shape:
                _fail(text, key, f"block {key} degree {n}: shape {M.shape}, expected {shape}")
        offdiag[(i, j)] = TruncatedLaurentSeries.from_dict(coeffs, shape=shape or (1, 1))
    name = str((d.get("metadata") or {}).get("name", ""))
    try:
        return QSystem.from_blocks(q, slopes, diag, offdiag, name=name)
    except QStokesError as exc:
        raise SpecParseError(f"{type(exc).__name__}: {exc}", 1, 1) from exc


def loads_system(text: str) -> QSystem:
    return system_from_dict(_load_json(text), text)


def read_system(path) -> QSystem:
    return loads_system(Path(path).read_text())


def dumps_system(A: QSystem, metadata=None) -> str:
    return dumps(system_to_dict(A, metadata))


def write_system(A: QSystem, path, metadata=None):
    Path(path).write_text(dumps_system(A, metadata))


def read_metadata(path) -> dict:
    d = _load_json(Path(path).read_text())
    return dict(d.get("metadata") or {}) if isinstance(d, dict) else {}


# ---------------------------------------------------------------------------
# alien targets


def targets_to_dict(targets) -> dict:
    return {
        "format": FORMAT_VERSION,
        "q": encode_complex(targets.q),
        "targets": [
            {"level": int(delta), "direction": encode_complex(p.rep), "matrix": encode_matrix(D.value)}
            for (delta, _), (p, D) in sorted(targets.entries.items())
        ],
    }


def targets_from_dict(d: dict, structure, text: str = ""):
    from .reconstruction import AlienTarget

    if not isinstance(d, dict) or "targets" not in d or "q" not in d:
        raise SpecParseError("target file needs 'q' and 'targets'", 1, 1)
    try:
        q = decode_complex(d["q"])
    except ValueError as exc:
        _fail(text, "q", f"field 'q': {exc}")
    entries = {}
    counts: dict = {}
    for t in d["targets"]:
        try:
            delta = int(t["level"])
            p = EllipticPoint(decode_complex(t["direction"]), q)
            M = NilpotentBlockMatrix(structure, decode_matrix(t["matrix"]))
        except (KeyError, TypeError, ValueError, QStokesError) as exc:
            _fail(text, "targets", f"bad target entry: {exc}")
        idx = counts.get(delta, 0)
        counts[delta] = idx + 1
        entries[(delta, idx)] = (p, M)
    return AlienTarget(q, entries)


def read_targets(path, structure):
    text = Path(path).read_text()
    return targets_from_dict(_load_json(text), structure, text)


def write_targets(targets, path):
    Path(path).write_text(dumps(targets_to_dict(targets)))


def read_config(path):
    from .config import RunConfig

    text = Path(path).read_text()
    d = _load_json(text)
    try:
        return RunConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise SpecParseError(f"bad config: {exc}", 1, 1) from None

"""JSON fixtures for finite spaces, loss fields and support sets, and JSON reports.

A fixture is an object with keys ``M``, ``N``, optional ``p`` (row-major,
flat or nested; uniform when absent), optional ``x`` (the loss field) and
optional ``vertices`` (a list of densities, each row-major).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

from .space import FiniteSpace


class FixtureError(ValueError):
    def __init__(self, msg: str, field: str | None = None, line: int | None = None):
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {msg}" if where else msg)
        self.field = field
        self.line = line


@dataclass
class Fixture:
    space: FiniteSpace
    x: np.ndarray | None = None
    vertices: np.ndarray | None = None


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _matrix(obj, key, M, N, text, allow_stack=False):
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as e:
        raise FixtureError(f"not a numeric array ({e})", key, _line_of(text, key)) from None
    shape = (M, N)
    if allow_stack:
        if a.ndim == 2 and a.shape[1] == M * N:
            a = a.reshape(-1, M, N)
        if a.ndim != 3 or a.shape[1:] != shape:
            raise FixtureError(f"expected a list of {M}x{N} matrices, got shape {a.shape}",
                               key, _line_of(text, key))
    else:
        if a.size != M * N:
            raise FixtureError(f"expected {M * N} entries, got {a.size}", key, _line_of(text, key))
        a = a.reshape(shape)
    if not np.all(np.isfinite(a)):
        raise FixtureError("entries must be finite", key, _line_of(text, key))
    return a


def parse_fixture(text: str) -> Fixture:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise FixtureError(e.msg, line=e.lineno) from None
    if not isinstance(obj, dict):
        raise FixtureError("top level must be an object", line=1)
    dims = {}
    for key in ("M", "N"):
        v = obj.get(key)
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise FixtureError("must be an integer >= 1", key, _line_of(text, key))
        dims[key] = v
    M, N = dims["M"], dims["N"]
    if "p" in obj:
        p = _matrix(obj["p"], "p", M, N, text)
        try:
            space = FiniteSpace(p)
        except ValueError as e:
            raise FixtureError(str(e), "p", _line_of(text, "p")) from None
    else:
        space = FiniteSpace.uniform(M, N)
    x = _matrix(obj["x"], "x", M, N, text) if "x" in obj else None
    V = None
    if "vertices" in obj:
        V = _matrix(obj["vertices"], "vertices", M, N, text, allow_stack=True)
        for i, d in enumerate(V):
            if d.min() < 0 or abs(space.expect(d) - 1.0) > 1e-10:
                raise FixtureError(f"vertex {i} is not a density (needs d >= 0 and E[d] = 1)",
                                   "vertices", _line_of(text, "vertices"))
    return Fixture(space, x, V)


def load_fixture(path) -> Fixture:
    with open(path) as fh:
        text = fh.read()
    try:
        return parse_fixture(text)
    except FixtureError as e:
        raise FixtureError(f"{path}: {e}") from None


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def dump_report(report: dict) -> str:
    """Deterministic JSON text for a report (numpy values converted)."""
    return json.dumps(_plain(report), indent=2, sort_keys=True) + "\n"


def fixture_text(space: FiniteSpace, x=None, vertices=None) -> str:
    obj = {"M": space.M, "N": space.N, "p": space.p.tolist()}
    if x is not None:
        obj["x"] = np.asarray(x).tolist()
    if vertices is not None:
        obj["vertices"] = np.asarray(vertices).tolist()
    return json.dumps(obj, indent=1) + "\n"

"""System definition files and report serialization.

A system file is one JSON document::

    {
      "dim": 3,
      "conserved": ["x^2+y^2-1"],
      "dissipated": ["z"],
      "rates": ["-1"],
      "nu": null,
      "base_field": ["y", "-x", "0"],
      "orbit": {"builtin": "circle"}
    }

``orbit`` is ``{"builtin": "circle"}``, ``{"builtin": "euler", "params":
{...}}`` or ``{"csv": "table.csv", "period": 6.28}`` (paths relative to the
system file). A whole builtin scenario can be named instead:
``{"builtin": "euler:energyI", "rate": "-1", "params": {...}}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

from . import examples
from .expr import ParseError, parse
from .orbit import PeriodicOrbit
from .system import CodimensionError, DissipativeSystem

__all__ = ["InputError", "load_system", "system_to_dict", "dumps", "write_csv"]


class InputError(ValueError):
    """Malformed system definition; ``reason`` is a stable machine-readable code."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


def _exprs(doc: dict, key: str, n: int, required: bool = True):
    if key not in doc or doc[key] is None:
        if required:
            raise InputError("schema", f"missing field {key!r}")
        return None
    items = doc[key]
    if not isinstance(items, list) or not all(isinstance(s, str) for s in items):
        raise InputError("schema", f"field {key!r} must be a list of expression strings")
    try:
        return tuple(parse(s, n) for s in items)
    except ParseError as exc:
        raise InputError("parse", f"{key}: {exc}") from None


def _orbit(entry, base_dir: Path) -> PeriodicOrbit:
    if not isinstance(entry, dict):
        raise InputError("schema", "field 'orbit' must be an object")
    if "csv" in entry:
        path = Path(entry["csv"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise InputError("io", f"orbit table {path} not found")
        try:
            return PeriodicOrbit.from_csv(path, entry.get("period"))
        except ValueError as exc:
            raise InputError("schema", f"orbit table {path}: {exc}") from None
    name = entry.get("builtin")
    if name == "circle":
        return examples.circle_orbit()
    if name == "euler":
        try:
            return examples.euler_orbit(examples.EulerParams(**entry.get("params", {})))
        except (TypeError, ValueError) as exc:
            raise InputError("params", f"euler orbit: {exc}") from None
    raise InputError("schema", f"unknown orbit specification {entry!r}")


def _builtin(name: str, doc: dict, rate: str | None):
    rate = rate or doc.get("rate", "-1")
    try:
        params = examples.EulerParams(**doc["params"]) if doc.get("params") else None
        return examples.builtin(name, rate, params)
    except ParseError as exc:
        raise InputError("parse", f"rate: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise InputError("params", str(exc)) from None


def load_system(source: str, rate: str | None = None) -> tuple[DissipativeSystem, PeriodicOrbit]:
    """Load a builtin name (``harmonic:zD`` ...) or a JSON system file.

    ``rate`` overrides every rate expression when given.
    """
    if source in examples.BUILTINS:
        return _builtin(source, {}, rate)
    path = Path(source)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise InputError("io", f"system file {source} not found") from None
    except json.JSONDecodeError as exc:
        raise InputError("schema", f"{source}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise InputError("schema", "system file must hold a JSON object")
    if isinstance(doc.get("builtin"), str) and doc["builtin"] in examples.BUILTINS:
        return _builtin(doc["builtin"], doc, rate)

    n = doc.get("dim")
    if not isinstance(n, int) or n < 2:
        raise InputError("schema", "field 'dim' must be an integer >= 2")
    conserved = _exprs(doc, "conserved", n)
    dissipated = _exprs(doc, "dissipated", n)
    rates = _exprs(doc, "rates", n)
    if rate is not None:
        rates = tuple(parse(rate, n) for _ in dissipated)
    base = _exprs(doc, "base_field", n, required=False)
    nu = doc.get("nu")
    try:
        nu = parse(nu, n) if nu is not None else None
    except ParseError as exc:
        raise InputError("parse", f"nu: {exc}") from None
    if "orbit" not in doc:
        raise InputError("schema", "missing field 'orbit'")
    try:
        sys = DissipativeSystem(n, conserved, dissipated, rates, rescale=nu,
                                base_field=base, manifold=doc.get("manifold"))
    except CodimensionError as exc:
        raise InputError("codimension", str(exc)) from None
    orbit = _orbit(doc["orbit"], path.parent)
    if orbit.dimension != n:
        raise InputError("codimension", f"orbit has dimension {orbit.dimension}, system {n}")
    return sys, orbit


def system_to_dict(sys: DissipativeSystem, orbit: PeriodicOrbit, relative_to=None) -> dict:
    """Inverse of :func:`load_system`; CSV orbit paths are made relative to ``relative_to``."""
    doc = {
        "dim": sys.n,
        "conserved": [str(f) for f in sys.conserved],
        "dissipated": [str(f) for f in sys.dissipated],
        "rates": [str(f) for f in sys.rates],
        "nu": str(sys.rescale) if sys.rescale is not None else None,
        "base_field": [str(f) for f in sys.base_field] if sys.base_field else None,
    }
    if sys.manifold:
        doc["manifold"] = sys.manifold
    src = dict(orbit.source)
    if "csv" in src:
        path = src["csv"]
        if relative_to is not None:
            path = os.path.relpath(Path(path).resolve(), Path(relative_to).resolve())
        doc["orbit"] = {"csv": path, "period": orbit.period}
    elif src.get("builtin"):
        doc["orbit"] = src
    else:
        raise ValueError("orbit has no serializable source")
    return doc


def _fmt(x: float) -> str:
    if math.isfinite(x):
        return "%.17g" % x
    return json.dumps(str(x))


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with fixed key order and 17-significant-digit floats.

    Complex numbers become ``[re, im]`` pairs.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, complex):
        return f"[{_fmt(obj.real)}, {_fmt(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return dumps(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()

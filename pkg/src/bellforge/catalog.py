"""JSON catalog files of named inequalities.

A file holds one entry object or an array of them::

    {"name": "I2222", "m": 2, "n": 2,
     "joint": [["1", "1"], ["1", "-1"]],
     "marg_x": ["-1", "0"], "marg_y": ["-1", "0"],
     "const": "0", "form": "algebraic", "provenance": "builtin"}

Rationals are strings so entries round-trip exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .expr import BellExpression, Form


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    expr: BellExpression
    provenance: str = ""


def entry_to_dict(entry: CatalogEntry) -> dict:
    e = entry.expr
    d = {
        "name": entry.name,
        "m": e.m,
        "n": e.n,
        "joint": [[str(c) for c in row] for row in e.joint],
        "marg_x": [str(c) for c in e.marg_x],
        "marg_y": [str(c) for c in e.marg_y],
        "const": str(e.const_term),
        "form": e.form_tag.value,
    }
    if entry.provenance:
        d["provenance"] = entry.provenance
    return d


def entry_from_dict(d: dict) -> CatalogEntry:
    try:
        name = d["name"]
        m, n = int(d["m"]), int(d["n"])
        expr = BellExpression.from_coeffs(
            d["joint"], d["marg_x"], d["marg_y"], d.get("const", "0"),
            Form(d.get("form", "algebraic")))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise CatalogError(f"bad catalog entry {d.get('name', '?')!r}: {exc}") from exc
    if (expr.m, expr.n) != (m, n):
        raise CatalogError(f"entry {name!r}: declared shape {m}x{n}, coefficients give {expr.m}x{expr.n}")
    return CatalogEntry(str(name), expr, str(d.get("provenance", "")))


def loads(text: str) -> list[CatalogEntry]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog is not valid JSON: {exc}") from exc
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise CatalogError("catalog must be an entry object or an array of entries")
    entries = [entry_from_dict(d) for d in data]
    seen = set()
    for e in entries:
        if e.name in seen:
            raise CatalogError(f"duplicate entry name {e.name!r}")
        seen.add(e.name)
    return entries


def dumps(entries) -> str:
    entries = list(entries)
    payload = [entry_to_dict(e) for e in entries]
    return json.dumps(payload, indent=2) + "\n"


def load(path) -> list[CatalogEntry]:
    return loads(Path(path).read_text())


def save(path, entries) -> None:
    Path(path).write_text(dumps(entries))


def find(entries, name: str) -> CatalogEntry:
    for e in entries:
        if e.name == name:
            return e
    raise KeyError(name)

"""Reading and writing process-spec JSON documents.

The document layout is::

    {"name": "bm", "kernel": {"type": "brownian"}, "grid": [1, 2],
     "shifts": [0, "-inf"]}

Explicit kernels carry ``"matrix"``, ``ou`` carries ``"scale"``,
``scaled_identity`` carries ``"a"`` and ``sum`` carries ``"terms"`` (a list of
kernel descriptors).  ``"labels"`` is optional; indices default to ``"1"`` ..
``"N"``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .covariance import KERNEL_TYPES, ProcessSpec, SpecError, build_from_kernel
from .reports import canonical_json, digest

_KERNEL_KEYS = {
    "explicit": {"type", "matrix"},
    "brownian": {"type"},
    "ou": {"type", "scale"},
    "scaled_identity": {"type", "a"},
    "sum": {"type", "terms"},
}


def _reject_constant(name: str):
    raise SpecError(f"non-finite JSON constant {name} is not allowed")


def _finite(x: Any, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SpecError(f"{what} must be a number, got {x!r}")
    if not math.isfinite(x):
        raise SpecError(f"{what} must be finite")
    return x


def parse_shift(x: Any) -> float:
    if x == "-inf":
        return float("-inf")
    return float(_finite(x, "shift"))


def _check_kernel(k: Any) -> None:
    if not isinstance(k, dict) or k.get("type") not in KERNEL_TYPES:
        raise SpecError(f"invalid kernel descriptor {k!r}")
    extra = set(k) - _KERNEL_KEYS[k["type"]]
    missing = _KERNEL_KEYS[k["type"]] - set(k)
    if extra or missing:
        raise SpecError(f"kernel {k['type']!r}: unexpected keys {sorted(extra)}, missing {sorted(missing)}")
    if k["type"] == "explicit":
        for row in k["matrix"]:
            for v in row:
                _finite(v, "matrix entry")
    elif k["type"] == "ou":
        _finite(k["scale"], "scale")
    elif k["type"] == "scaled_identity":
        _finite(k["a"], "a")
    elif k["type"] == "sum":
        for t in k["terms"]:
            _check_kernel(t)


@dataclass(frozen=True)
class ProcessFile:
    """A parsed process-spec document; ``to_dict`` reproduces the input."""

    document: dict

    @classmethod
    def from_dict(cls, doc: dict) -> "ProcessFile":
        if not isinstance(doc, dict):
            raise SpecError("process spec must be a JSON object")
        allowed = {"name", "kernel", "grid", "shifts", "labels"}
        if set(doc) - allowed:
            raise SpecError(f"unexpected keys {sorted(set(doc) - allowed)}")
        for key in ("name", "kernel", "shifts"):
            if key not in doc:
                raise SpecError(f"missing key {key!r}")
        if not isinstance(doc["name"], str):
            raise SpecError("name must be a string")
        _check_kernel(doc["kernel"])
        for t in doc.get("grid", []) or []:
            _finite(t, "grid value")
        for m in doc["shifts"]:
            parse_shift(m)
        pf = cls(json.loads(json.dumps(doc)))
        pf.to_spec()
        return pf

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.document))

    def to_spec(self) -> ProcessSpec:
        d = self.document
        shifts = [parse_shift(m) for m in d["shifts"]]
        return build_from_kernel(d["kernel"], d.get("grid"), shifts, d.get("labels"), d["name"])

    def digest(self) -> str:
        return digest(self.document)


def loads(text: str) -> ProcessFile:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from None
    return ProcessFile.from_dict(doc)


def load(path: str | Path) -> ProcessFile:
    return loads(Path(path).read_text(encoding="utf-8"))


def dumps(pf: ProcessFile) -> str:
    return canonical_json(pf.document)


def from_spec(spec: ProcessSpec, name: str | None = None) -> ProcessFile:
    """Serialize an arbitrary spec as an explicit-kernel document."""
    doc = {
        "name": spec.name if name is None else name,
        "kernel": {"type": "explicit", "matrix": spec.sigma.tolist()},
        "grid": [],
        "shifts": ["-inf" if m == float("-inf") else float(m) for m in spec.shifts],
        "labels": list(spec.labels),
    }
    return ProcessFile.from_dict(doc)

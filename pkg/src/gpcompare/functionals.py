"""Path statistics and their Monte Carlo averages.

Every statistic is a supremum-type quantity over the indices whose shift is
finite; indices shifted by ``-inf`` never enter a supremum.  The scalar
:func:`eval_path` and the row-vectorized :func:`eval_paths` agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .sampler import SampleBatch

EXP_LIMIT = 709.0
INTEGRABILITY_LIMIT = 40.0


class FunctionalError(ValueError):
    pass


# --- convex non-decreasing g ---------------------------------------------


@dataclass(frozen=True)
class GSpec:
    """A non-decreasing convex function.

    ``kind`` is one of ``hinge`` (``(x - t)_+``), ``exponential``
    (``exp(beta x)``), ``linear_plus`` (``x_+``) or ``truncated_below``
    (``max(inner(x), c)``).
    """

    kind: str
    t: float = 0.0
    beta: float = 1.0
    c: float = 0.0
    inner: "GSpec | None" = None

    def __post_init__(self):
        if self.kind not in ("hinge", "exponential", "linear_plus", "truncated_below"):
            raise FunctionalError(f"unknown g variant {self.kind!r}")
        if self.kind == "exponential" and not self.beta > 0:
            raise FunctionalError("exponential g needs beta > 0")
        if self.kind == "truncated_below" and self.inner is None:
            raise FunctionalError("truncated_below needs an inner g")

    @classmethod
    def hinge(cls, t: float) -> "GSpec":
        return cls("hinge", t=float(t))

    @classmethod
    def exponential(cls, beta: float) -> "GSpec":
        return cls("exponential", beta=float(beta))

    @classmethod
    def linear_plus(cls) -> "GSpec":
        return cls("linear_plus")

    @classmethod
    def truncated_below(cls, inner: "GSpec", c: float) -> "GSpec":
        return cls("truncated_below", c=float(c), inner=inner)

    def has_exponential(self) -> bool:
        return self.kind == "exponential" or (self.inner is not None and self.inner.has_exponential())

    def to_dict(self) -> dict:
        if self.kind == "hinge":
            return {"type": "hinge", "t": self.t}
        if self.kind == "exponential":
            return {"type": "exponential", "beta": self.beta}
        if self.kind == "linear_plus":
            return {"type": "linear_plus"}
        return {"type": "truncated_below", "c": self.c, "inner": self.inner.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "GSpec":
        kind = d.get("type")
        if kind == "hinge":
            return cls.hinge(d.get("t", 0.0))
        if kind == "exponential":
            return cls.exponential(d["beta"])
        if kind == "linear_plus":
            return cls.linear_plus()
        if kind == "truncated_below":
            return cls.truncated_below(cls.from_dict(d["inner"]), d["c"])
        raise FunctionalError(f"unknown g variant {kind!r}")


def eval_g(g: GSpec, x):
    """Evaluate ``g`` at a scalar or array ``x``."""
    arr = np.asarray(x, dtype=float)
    if g.kind == "hinge":
        out = np.maximum(arr - g.t, 0.0)
    elif g.kind == "linear_plus":
        out = np.maximum(arr, 0.0)
    elif g.kind == "exponential":
        arg = g.beta * arr
        if np.any(arg > EXP_LIMIT):
            raise OverflowError(f"exp({float(np.max(arg)):.1f}) is not representable")
        out = np.exp(arg)
    else:
        out = np.maximum(eval_g(g.inner, arr), g.c)
    return float(out) if np.ndim(out) == 0 else out


# --- functionals -----------------------------------------------------------

FUNCTIONAL_NAMES = {
    "sup": "sup",
    "sup_shifted": "sup_shifted",
    "floored": "sup_floored_anchored",
    "range_g": "range_sup_g",
    "g_anchored": "g_anchored",
    "tail": "tail_indicator",
    "itail": "integrated_tail",
}
_WIRE_NAMES = {v: k for k, v in FUNCTIONAL_NAMES.items()}
_ANCHORED = ("sup_floored_anchored", "g_anchored")


@dataclass(frozen=True)
class FunctionalSpec:
    """Which path statistic to average.

    ``k`` may be a label or a position; :meth:`resolve` turns it into a
    position for a concrete label set.
    """

    kind: str
    k: int | str | None = None
    m: float = float("-inf")
    t: float = 0.0
    g: GSpec | None = None

    def __post_init__(self):
        if self.kind not in _WIRE_NAMES:
            raise FunctionalError(f"unknown functional {self.kind!r}")
        if self.kind in _ANCHORED and self.k is None:
            raise FunctionalError(f"{self.kind} needs an anchor index k")
        if self.kind in ("range_sup_g", "g_anchored") and self.g is None:
            raise FunctionalError(f"{self.kind} needs g")
        if math.isnan(self.m) or self.m == math.inf:
            raise FunctionalError("m must be a real number or -inf")
        if not math.isfinite(self.t):
            raise FunctionalError("t must be finite")

    @classmethod
    def sup(cls):
        return cls("sup")

    @classmethod
    def sup_shifted(cls):
        return cls("sup_shifted")

    @classmethod
    def floored(cls, k, m):
        return cls("sup_floored_anchored", k=k, m=float(m))

    @classmethod
    def range_g(cls, g: GSpec):
        return cls("range_sup_g", g=g)

    @classmethod
    def g_anchored(cls, k, g: GSpec):
        return cls("g_anchored", k=k, g=g)

    @classmethod
    def tail(cls, t):
        return cls("tail_indicator", t=float(t))

    @classmethod
    def itail(cls, t):
        return cls("integrated_tail", t=float(t))

    def resolve(self, labels: Sequence[str]) -> "FunctionalSpec":
        if self.k is None or (isinstance(self.k, int) and not isinstance(self.k, bool)):
            return self
        try:
            pos = list(labels).index(str(self.k))
        except ValueError:
            raise FunctionalError(f"anchor label {self.k!r} not in {list(labels)}") from None
        return FunctionalSpec(self.kind, pos, self.m, self.t, self.g)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"functional": _WIRE_NAMES[self.kind]}
        if self.kind in _ANCHORED:
            d["k"] = self.k
        if self.kind == "sup_floored_anchored":
            d["m"] = "-inf" if self.m == -math.inf else self.m
        if self.kind in ("tail_indicator", "integrated_tail"):
            d["t"] = self.t
        if self.g is not None:
            d["g"] = self.g.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionalSpec":
        name = d.get("functional")
        if name not in FUNCTIONAL_NAMES:
            raise FunctionalError(f"unknown functional {name!r}")
        m = d.get("m", "-inf")
        m = float("-inf") if m == "-inf" else float(m)
        g = GSpec.from_dict(d["g"]) if d.get("g") is not None else None
        k = None if d.get("k") is None else str(d["k"])
        return cls(FUNCTIONAL_NAMES[name], k, m, float(d.get("t", 0.0)), g)


def _anchor(f: FunctionalSpec, n: int) -> int:
    k = f.k
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise FunctionalError(f"anchor {k!r} is unresolved; call resolve(labels) first")
    if not 0 <= k < n:
        raise FunctionalError(f"anchor index {k} out of range for N={n}")
    return int(k)


def eval_paths(f: FunctionalSpec, x: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on every row of ``x`` (shape ``S x N``)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    shifts = np.asarray(shifts, dtype=float)
    n = x.shape[1]
    if shifts.shape != (n,):
        raise FunctionalError(f"expected {n} shifts, got {shifts.shape}")
    part = np.isfinite(shifts)
    kind = f.kind
    k = _anchor(f, n) if kind in _ANCHORED else None

    if not part.any():
        if kind == "sup_floored_anchored" and math.isfinite(f.m):
            return np.full(x.shape[0], f.m)
        raise FunctionalError("no index participates in the supremum")

    xp = x[:, part]
    if kind == "sup":
        return xp.max(axis=1)
    if kind == "sup_shifted":
        return (xp + shifts[part]).max(axis=1)
    if kind == "sup_floored_anchored":
        s = (xp + shifts[part] - x[:, k : k + 1]).max(axis=1)
        return np.maximum(s, f.m)
    if kind in ("range_sup_g", "g_anchored"):
        return np.asarray(eval_g(f.g, _g_input(f, x, xp, shifts[part], k)), dtype=float).reshape(-1)
    if kind == "tail_indicator":
        return (xp.max(axis=1) > f.t).astype(float)
    return np.maximum(xp.max(axis=1) - f.t, 0.0)


def eval_path(f: FunctionalSpec, x: Sequence[float], shifts: Sequence[float]) -> float:
    return float(eval_paths(f, np.asarray(x, dtype=float)[None, :], shifts)[0])


def _g_input(f, x, xp, part_shifts, k):
    if f.kind == "range_sup_g":
        return xp.max(axis=1) - xp.min(axis=1)
    return (xp + part_shifts).max(axis=1) - x[:, k]


def g_argument(f: FunctionalSpec, x: np.ndarray, shifts: np.ndarray) -> np.ndarray | None:
    """The values ``g`` is applied to, for g-functionals; ``None`` otherwise."""
    if f.kind not in ("range_sup_g", "g_anchored"):
        return None
    x = np.atleast_2d(np.asarray(x, dtype=float))
    shifts = np.asarray(shifts, dtype=float)
    part = np.isfinite(shifts)
    if not part.any():
        raise FunctionalError("no index participates in the supremum")
    k = _anchor(f, x.shape[1]) if f.kind == "g_anchored" else None
    return _g_input(f, x, x[:, part], shifts[part], k)


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    n_samples: int
    seed: int
    stream_id: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "stream_id": self.stream_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Estimate":
        return cls(float(d["value"]), float(d["std_error"]), int(d["n_samples"]), int(d["seed"]), int(d["stream_id"]))


def mean_and_se(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = float(np.mean(values))
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(n))


def estimate(f: FunctionalSpec, spec, batch: SampleBatch) -> Estimate:
    f = f.resolve(spec.labels)
    values = eval_paths(f, batch.draws, spec.shifts)
    mean, se = mean_and_se(values)
    return Estimate(mean, se, batch.n_samples, batch.seed, batch.stream_id)

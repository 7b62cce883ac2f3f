"""Hypothesis predicates and Monte Carlo comparison certificates.

The theorems assert ``E F(X) <= E F(Y)``.  A certificate estimates both sides
on independent streams and flags a violation only when the left side exceeds
the right by more than ``z`` combined standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from . import __version__
from .covariance import ProcessSpec, SpecError, augment_with_zero, hat_paths, hatted_system, increment_matrix
from .functionals import (
    INTEGRABILITY_LIMIT,
    Estimate,
    FunctionalSpec,
    GSpec,
    estimate,
    eval_g,
    g_argument,
    mean_and_se,
)
from .oracles import OracleError, tail_quad
from .reports import parse_float
from .sampler import SampleBatch, sample

DEFAULT_TOL = 1e-10
DEFAULT_Z = 4.0
STREAM_X = 0
STREAM_Y = 1

NO_VIOLATION = "NO_VIOLATION_DETECTED"
VIOLATION = "VIOLATION_SUSPECTED"


def _f(x: Any) -> float:
    return parse_float(x)


@dataclass(frozen=True)
class OrderingCheck:
    holds: bool
    max_violation: float
    witness: tuple[str, str] | None

    def to_dict(self) -> dict:
        return {"holds": self.holds, "max_violation": self.max_violation,
                "witness": None if self.witness is None else list(self.witness)}

    @classmethod
    def from_dict(cls, d: dict) -> "OrderingCheck":
        w = d["witness"]
        return cls(bool(d["holds"]), _f(d["max_violation"]), None if w is None else tuple(w))


@dataclass(frozen=True)
class EqualityCheck:
    holds: bool
    max_deviation: float
    witness: str | None

    def to_dict(self) -> dict:
        return {"holds": self.holds, "max_deviation": self.max_deviation, "witness": self.witness}

    @classmethod
    def from_dict(cls, d: dict) -> "EqualityCheck":
        return cls(bool(d["holds"]), _f(d["max_deviation"]), d["witness"])


@dataclass(frozen=True)
class HypothesisReport:
    increment_ordering: OrderingCheck
    variance_ordering: OrderingCheck
    variance_equality: EqualityCheck
    tol: float = DEFAULT_TOL

    def to_dict(self) -> dict:
        return {
            "increment_ordering": self.increment_ordering.to_dict(),
            "variance_ordering": self.variance_ordering.to_dict(),
            "variance_equality": self.variance_equality.to_dict(),
            "tol": self.tol,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HypothesisReport":
        return cls(
            OrderingCheck.from_dict(d["increment_ordering"]),
            OrderingCheck.from_dict(d["variance_ordering"]),
            EqualityCheck.from_dict(d["variance_equality"]),
            _f(d["tol"]),
        )


def _same_index_set(x: ProcessSpec, y: ProcessSpec) -> None:
    if x.labels != y.labels:
        raise SpecError(f"label mismatch: {x.labels} vs {y.labels}")
    if not np.array_equal(x.shifts, y.shifts):
        raise SpecError("shift vectors differ between X and Y")


def check_hypotheses(spec_x: ProcessSpec, spec_y: ProcessSpec, tol: float = DEFAULT_TOL) -> HypothesisReport:
    """Check increment ordering, variance ordering and variance equality.

    Witnesses are the first maximizer: pairs ``i < j`` in row-major order,
    indices in order.  With a single index there are no pairs and the
    increment violation is ``-inf``.
    """
    _same_index_set(spec_x, spec_y)
    labels = spec_x.labels
    n = spec_x.n
    iu, ju = np.triu_indices(n, k=1)
    if iu.size:
        diff = increment_matrix(spec_x).d[iu, ju] - increment_matrix(spec_y).d[iu, ju]
        a = int(np.argmax(diff))
        inc = OrderingCheck(bool(diff[a] <= tol), float(diff[a]), (labels[iu[a]], labels[ju[a]]))
    else:
        inc = OrderingCheck(True, float("-inf"), None)
    vdiff = np.diag(spec_x.sigma) - np.diag(spec_y.sigma)
    b = int(np.argmax(vdiff))
    var = OrderingCheck(bool(vdiff[b] <= tol), float(vdiff[b]), (labels[b], labels[b]))
    dev = np.abs(vdiff)
    c = int(np.argmax(dev))
    eq = EqualityCheck(bool(dev[c] <= tol), float(dev[c]), labels[c])
    return HypothesisReport(inc, var, eq, tol)


def combined_ordering(report: HypothesisReport, zero_label: str = "0") -> OrderingCheck:
    """Increment and variance ordering folded into one check.

    This is what the increment check on the zero-augmented pair must return:
    variance witnesses ``(i, i)`` appear as ``(zero_label, i)`` and win ties,
    because the zero index comes first.
    """
    inc, var = report.increment_ordering, report.variance_ordering
    if var.max_violation >= inc.max_violation:
        v = var.max_violation
        w = (zero_label, var.witness[0])
    else:
        v = inc.max_violation
        w = inc.witness
    return OrderingCheck(bool(v <= report.tol), v, w)


# --- certificates -------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonCertificate:
    hypothesis: HypothesisReport
    functional: FunctionalSpec
    lhs: Estimate
    rhs: Estimate
    delta: float
    combined_se: float
    z_threshold: float
    verdict: str
    strict_flag: bool
    config: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis.to_dict(),
            "functional": self.functional.to_dict(),
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "delta": self.delta,
            "combined_se": self.combined_se,
            "z_threshold": self.z_threshold,
            "verdict": self.verdict,
            "strict_flag": self.strict_flag,
            "config": dict(self.config),
            "diagnostics": dict(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonCertificate":
        return cls(
            HypothesisReport.from_dict(d["hypothesis"]),
            FunctionalSpec.from_dict(d["functional"]),
            Estimate.from_dict(d["lhs"]),
            Estimate.from_dict(d["rhs"]),
            _f(d["delta"]),
            _f(d["combined_se"]),
            _f(d["z_threshold"]),
            d["verdict"],
            bool(d["strict_flag"]),
            dict(d.get("config", {})),
            dict(d.get("diagnostics", {})),
        )


def _g_diagnostics(f: FunctionalSpec, spec: ProcessSpec, batch: SampleBatch) -> dict:
    arg = g_argument(f.resolve(spec.labels), batch.draws, spec.shifts)
    if arg is None:
        return {}
    g_plus = np.maximum(eval_g(f.g, arg), 0.0)
    out = {"g_plus_mean": float(np.mean(g_plus))}
    if f.g.has_exponential():
        q = float(np.quantile(arg, 0.999))
        beta = f.g.beta if f.g.kind == "exponential" else f.g.inner.beta
        out["integrability_suspect"] = bool(beta * q > INTEGRABILITY_LIMIT)
    return out


def certify(
    hypothesis: HypothesisReport,
    f: FunctionalSpec,
    lhs: Estimate,
    rhs: Estimate,
    z: float,
    config: dict | None = None,
    diagnostics: dict | None = None,
) -> ComparisonCertificate:
    delta = rhs.value - lhs.value
    cse = math.sqrt(lhs.std_error**2 + rhs.std_error**2)
    verdict = VIOLATION if delta < -z * cse else NO_VIOLATION
    return ComparisonCertificate(
        hypothesis, f, lhs, rhs, delta, cse, z, verdict, bool(delta > z * cse),
        dict(config or {}), dict(diagnostics or {}),
    )


def compare_batches(
    spec_x: ProcessSpec,
    spec_y: ProcessSpec,
    f: FunctionalSpec,
    batch_x: SampleBatch,
    batch_y: SampleBatch,
    z: float = DEFAULT_Z,
    tol: float = DEFAULT_TOL,
    config: dict | None = None,
) -> ComparisonCertificate:
    hyp = check_hypotheses(spec_x, spec_y, tol)
    lhs = estimate(f, spec_x, batch_x)
    rhs = estimate(f, spec_y, batch_y)
    diag = {}
    gx = _g_diagnostics(f, spec_x, batch_x)
    gy = _g_diagnostics(f, spec_y, batch_y)
    for key in gx:
        diag[key + "_x"] = gx[key]
        diag[key + "_y"] = gy[key]
    return certify(hyp, f, lhs, rhs, z, config, diag)


def draw_pair(spec_x, spec_y, samples, master_seed, workers=None) -> tuple[SampleBatch, SampleBatch]:
    return (
        sample(spec_x, samples, master_seed, STREAM_X, workers),
        sample(spec_y, samples, master_seed, STREAM_Y, workers),
    )


def compare(
    spec_x: ProcessSpec,
    spec_y: ProcessSpec,
    f: FunctionalSpec,
    samples: int,
    master_seed: int,
    z: float = DEFAULT_Z,
    tol: float = DEFAULT_TOL,
    workers: int | None = None,
) -> ComparisonCertificate:
    _same_index_set(spec_x, spec_y)
    bx, by = draw_pair(spec_x, spec_y, samples, master_seed, workers)
    config = {"samples": samples, "master_seed": master_seed, "stream_x": STREAM_X,
              "stream_y": STREAM_Y, "z": z, "tol": tol}
    return compare_batches(spec_x, spec_y, f, bx, by, z, tol, config)


def hatted_batch(batch: SampleBatch, k: int) -> SampleBatch:
    """Rows of ``batch`` mapped by ``x_i -> x_i - x_k``."""
    draws = hat_paths(batch.draws, k)
    draws.setflags(write=False)
    return SampleBatch(draws, batch.seed, batch.stream_id)


def compare_hatted(
    spec_x: ProcessSpec,
    spec_y: ProcessSpec,
    k: int | str,
    m: float,
    samples: int,
    master_seed: int,
    z: float = DEFAULT_Z,
    workers: int | None = None,
) -> tuple[ComparisonCertificate, ComparisonCertificate]:
    """Certificates for the floored anchored sup and for the shifted sup of the
    anchored system, computed from the same rows.

    The two deltas agree up to rounding: each path value of the second is the
    first minus ``m_k``.
    """
    kx = spec_x.index(k)
    bx, by = draw_pair(spec_x, spec_y, samples, master_seed, workers)
    floored = compare_batches(spec_x, spec_y, FunctionalSpec.floored(kx, m), bx, by, z)
    hx, hy = hatted_system(spec_x, kx, m), hatted_system(spec_y, kx, m)
    shifted = compare_batches(hx, hy, FunctionalSpec.sup_shifted(), hatted_batch(bx, kx), hatted_batch(by, kx), z)
    return floored, shifted


# --- tail curves -------------------------------------------------------------


@dataclass(frozen=True)
class TailPoint:
    t: float
    tail: float
    tail_se: float
    itail: float
    itail_se: float


def tail_curve(spec: ProcessSpec, t_grid: Sequence[float], batch: SampleBatch) -> list[TailPoint]:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t grid must be strictly increasing")
    sup = estimate_sup_values(spec, batch)
    s = sup.size
    out = []
    for t in t_grid:
        p = float(np.mean(sup > t))
        it, it_se = mean_and_se(np.maximum(sup - t, 0.0))
        out.append(TailPoint(float(t), p, math.sqrt(p * (1.0 - p) / s), it, it_se))
    return out


def estimate_sup_values(spec: ProcessSpec, batch: SampleBatch) -> np.ndarray:
    part = spec.participating
    if not part.any():
        raise ValueError("no index participates in the supremum")
    return batch.draws[:, part].max(axis=1)


TAIL_HEADER = ("t", "tail_x", "tail_x_se", "tail_y", "tail_y_se", "itail_x", "itail_x_se", "itail_y", "itail_y_se")


def tail_rows(curve_x: list[TailPoint], curve_y: list[TailPoint]) -> list[tuple]:
    return [(a.t, a.tail, a.tail_se, b.tail, b.tail_se, a.itail, a.itail_se, b.itail, b.itail_se)
            for a, b in zip(curve_x, curve_y)]


def bivariate_tail_oracle(spec: ProcessSpec, t: float) -> float:
    return tail_quad(spec, t).value


# --- weakened Slepian comparison ---------------------------------------------------


@dataclass(frozen=True)
class WeakSlepianReport:
    hypothesis: HypothesisReport
    augmented_increment: OrderingCheck
    reduction_consistent: bool
    floored: ComparisonCertificate
    g_certificate: ComparisonCertificate
    integrated_tail: list[ComparisonCertificate]

    def certificates(self) -> list[ComparisonCertificate]:
        return [self.floored, self.g_certificate, *self.integrated_tail]

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis.to_dict(),
            "augmented_increment": self.augmented_increment.to_dict(),
            "reduction_consistent": self.reduction_consistent,
            "floored": self.floored.to_dict(),
            "g_certificate": self.g_certificate.to_dict(),
            "integrated_tail": [c.to_dict() for c in self.integrated_tail],
        }


def weak_slepian_compare(
    spec_x: ProcessSpec,
    spec_y: ProcessSpec,
    t_grid: Sequence[float],
    samples: int,
    master_seed: int,
    z: float = DEFAULT_Z,
    m: float = 0.0,
    g: GSpec | None = None,
    tol: float = DEFAULT_TOL,
    workers: int | None = None,
) -> WeakSlepianReport:
    """Compare under increment plus variance ordering via the zero-augmented pair.

    The zero index (shift ``-inf``) serves as the anchor and never enters a
    supremum, so the floored and g-anchored functionals of the augmented pair
    are ``max(sup_i (X_i + m_i), m)`` and ``g(sup_i (X_i + m_i))``.
    """
    g = GSpec.hinge(0.0) if g is None else g
    hyp = check_hypotheses(spec_x, spec_y, tol)
    ax, ay = augment_with_zero(spec_x), augment_with_zero(spec_y)
    aug = check_hypotheses(ax, ay, tol).increment_ordering
    reduction_ok = aug == combined_ordering(hyp, ax.labels[0])
    bx, by = draw_pair(ax, ay, samples, master_seed, workers)
    config = {"samples": samples, "master_seed": master_seed, "stream_x": STREAM_X,
              "stream_y": STREAM_Y, "z": z, "tol": tol, "augmented": True}
    zero = ax.labels[0]
    floored = compare_batches(ax, ay, FunctionalSpec.floored(zero, m), bx, by, z, tol, config)
    gcert = compare_batches(ax, ay, FunctionalSpec.g_anchored(zero, g), bx, by, z, tol, config)
    itail = [compare_batches(ax, ay, FunctionalSpec.itail(t), bx, by, z, tol, config) for t in t_grid]
    return WeakSlepianReport(hyp, aug, reduction_ok, floored, gcert, itail)


# --- counterexample search -------------------------------------------------------


@dataclass(frozen=True)
class PairFamily:
    """Random pairs ``(Sigma, Sigma + P)`` with ``P`` PSD and nonzero.

    ``kind="identical"`` returns ``Y = X`` (a null family).
    """

    kind: str = "random-psd"
    dim_min: int = 2
    dim_max: int = 5
    noise_scale: float = 0.5

    def __post_init__(self):
        if self.kind not in ("random-psd", "identical"):
            raise ValueError(f"unknown family {self.kind!r}")
        if not 1 <= self.dim_min <= self.dim_max:
            raise ValueError("need 1 <= dim_min <= dim_max")

    def draw(self, rng: np.random.Generator) -> tuple[ProcessSpec, ProcessSpec]:
        n = int(rng.integers(self.dim_min, self.dim_max + 1))
        sx, sy = random_psd_pair(rng, n, self.noise_scale)
        if self.kind == "identical":
            sy = sx
        labels = tuple(str(i + 1) for i in range(n))
        shifts = np.zeros(n)
        return ProcessSpec(labels, sx, shifts), ProcessSpec(labels, sy, shifts)


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None, scale: float = 1.0) -> np.ndarray:
    r = n if rank is None else rank
    a = rng.standard_normal((n, r)) * (scale / math.sqrt(r))
    return a @ a.T


def random_psd_pair(rng: np.random.Generator, n: int, noise_scale: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """``(Sigma, Sigma + P)`` with ``P`` PSD of random rank ``>= 1``."""
    sx = random_psd(rng, n)
    p = random_psd(rng, n, int(rng.integers(1, n + 1)), noise_scale)
    return sx, sx + p


@dataclass(frozen=True)
class FlaggedInstance:
    trial: int
    sigma_x: list
    sigma_y: list
    t: float
    tail_x: float
    tail_y: float
    z_score: float
    status: str
    oracle_tail_x: float | None = None
    oracle_tail_y: float | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class SearchResult:
    trials: int
    flagged: list[FlaggedInstance]
    integrated_tail_violations: int
    config: dict

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "flagged": [f.to_dict() for f in self.flagged],
            "integrated_tail_violations": self.integrated_tail_violations,
            "config": dict(self.config),
        }


DEFAULT_SEARCH_GRID = tuple(np.round(np.linspace(-2.0, 2.0, 17), 10))


def counterexample_search(
    family: PairFamily,
    trials: int,
    seed: int,
    z: float = DEFAULT_Z,
    samples: int = 20_000,
    t_grid: Sequence[float] = DEFAULT_SEARCH_GRID,
    workers: int | None = None,
) -> SearchResult:
    """Scan random pairs for pointwise tail reversals ``P(sup X > t) > P(sup Y > t)``.

    A reversal beyond ``z`` binomial standard errors is re-checked with the
    quadrature oracle when N <= 2 (status ``verified`` or ``refuted``) and
    reported as ``unverified`` otherwise.  The integrated tail comparison at
    the positive grid points is certified on the same draws; its violation
    count is reported alongside.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0xC0FFEE])))
    t_grid = np.asarray(t_grid, dtype=float)
    flagged: list[FlaggedInstance] = []
    itail_bad = 0
    for trial in range(trials):
        sx, sy = family.draw(rng)
        trial_seed = int(rng.integers(0, 2**63))
        bx, by = draw_pair(sx, sy, samples, trial_seed, workers)
        cx, cy = tail_curve(sx, t_grid, bx), tail_curve(sy, t_grid, by)
        hyp = check_hypotheses(sx, sy)
        for a, b in zip(cx, cy):
            se = math.sqrt(a.tail_se**2 + b.tail_se**2)
            gap = a.tail - b.tail
            if gap > z * se and gap > 0:
                zs = gap / se if se > 0 else math.inf
                status, ox, oy = "unverified", None, None
                try:
                    ox, oy = tail_quad(sx, a.t), tail_quad(sy, a.t)
                    slack = ox.abs_error_bound + oy.abs_error_bound
                    status = "verified" if ox.value - oy.value > slack else "refuted"
                    ox, oy = ox.value, oy.value
                except OracleError:
                    pass
                flagged.append(FlaggedInstance(trial, sx.sigma.tolist(), sy.sigma.tolist(), a.t,
                                               a.tail, b.tail, zs, status, ox, oy))
            if a.t > 0:
                cert = certify(hyp, FunctionalSpec.itail(a.t),
                               Estimate(a.itail, a.itail_se, samples, trial_seed, STREAM_X),
                               Estimate(b.itail, b.itail_se, samples, trial_seed, STREAM_Y), z)
                itail_bad += cert.verdict == VIOLATION
    config = {"family": family.kind, "dim_min": family.dim_min, "dim_max": family.dim_max,
              "noise_scale": family.noise_scale, "trials": trials, "seed": seed, "z": z,
              "samples": samples, "t_grid": [float(t) for t in t_grid], "version": __version__}
    return SearchResult(trials, flagged, itail_bad, config)

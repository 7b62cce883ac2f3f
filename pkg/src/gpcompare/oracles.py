"""Closed forms and quadrature for small instances.

These are independent of the Monte Carlo path and serve as ground truth in
tests and for re-verifying flagged search instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import ProcessSpec

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

BOX_HALF_WIDTH = 10.0
QUAD_ORDER = 12
QUAD_TOL = 1e-10
MAX_CELLS = 2_000_000


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    value: float
    abs_error_bound: float
    method: str


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / SQRT2)


def norm_sf(x: float) -> float:
    return 0.5 * math.erfc(x / SQRT2)


def norm_pdf(x: float) -> float:
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def e_hinge_normal(mu: float, sd: float, t: float) -> OracleResult:
    """``E (N(mu, sd^2) - t)_+``."""
    if sd < 0:
        raise OracleError("sd must be non-negative")
    a = mu - t
    if sd == 0:
        return OracleResult(max(a, 0.0), 0.0, "closed_form")
    z = a / sd
    return OracleResult(a * norm_cdf(z) + sd * norm_pdf(z), 0.0, "closed_form")


def e_max_two(spec: ProcessSpec) -> OracleResult:
    """``E max(X_1 + m_1, X_2 + m_2)`` for a two-index spec with finite shifts."""
    if spec.n != 2:
        raise OracleError(f"e_max_two needs N = 2, got {spec.n}")
    m1, m2 = (float(m) for m in spec.shifts)
    if not (math.isfinite(m1) and math.isfinite(m2)):
        raise OracleError("e_max_two needs finite shifts")
    s = spec.sigma
    d = max(s[0, 0] + s[1, 1] - 2.0 * s[0, 1], 0.0)
    if d == 0:
        return OracleResult(max(m1, m2), 0.0, "closed_form")
    r = math.sqrt(d)
    theta = (m1 - m2) / r
    return OracleResult(m2 + (m1 - m2) * norm_cdf(theta) + r * norm_pdf(theta), 0.0, "closed_form")


def e_max_three_iid(sd: float) -> OracleResult:
    """``E max`` of three independent ``N(0, sd^2)`` variables."""
    if sd < 0:
        raise OracleError("sd must be non-negative")
    return OracleResult(sd * 3.0 / (2.0 * math.sqrt(math.pi)), 0.0, "closed_form")


# --- bivariate orthant quadrature -----------------------------------------------

_nodes, _weights = np.polynomial.legendre.leggauss(QUAD_ORDER)


def _cell_integrals(x0, x1, y0, y1, rho):
    """Tensor Gauss-Legendre integral of the standard bivariate density per cell."""
    hx = 0.5 * (x1 - x0)
    hy = 0.5 * (y1 - y0)
    xs = (0.5 * (x0 + x1))[:, None] + hx[:, None] * _nodes[None, :]
    ys = (0.5 * (y0 + y1))[:, None] + hy[:, None] * _nodes[None, :]
    q = 1.0 - rho * rho
    u = xs[:, :, None]
    v = ys[:, None, :]
    dens = np.exp(-(u * u - 2.0 * rho * u * v + v * v) / (2.0 * q)) / (2.0 * math.pi * math.sqrt(q))
    return hx * hy * np.einsum("i,j,cij->c", _weights, _weights, dens)


def _orthant_cdf(a1: float, a2: float, rho: float, tol: float) -> tuple[float, float]:
    """``P(U_1 <= a1, U_2 <= a2)`` for standard normals with correlation ``rho``."""
    lo = -BOX_HALF_WIDTH
    hi1 = min(a1, BOX_HALF_WIDTH)
    hi2 = min(a2, BOX_HALF_WIDTH)
    trunc = 2.0 * norm_cdf(lo) + norm_sf(BOX_HALF_WIDTH) * 2.0
    if hi1 <= lo or hi2 <= lo:
        return 0.0, trunc
    total_area = (hi1 - lo) * (hi2 - lo)
    x0 = np.array([lo]); x1 = np.array([hi1])
    y0 = np.array([lo]); y1 = np.array([hi2])
    coarse = _cell_integrals(x0, x1, y0, y1, rho)
    value = 0.0
    err = 0.0
    while x0.size:
        if x0.size > MAX_CELLS:
            raise OracleError("bivariate quadrature failed to converge")
        xm = 0.5 * (x0 + x1)
        ym = 0.5 * (y0 + y1)
        cx0 = np.concatenate([x0, xm, x0, xm]); cx1 = np.concatenate([xm, x1, xm, x1])
        cy0 = np.concatenate([y0, y0, ym, ym]); cy1 = np.concatenate([ym, ym, y1, y1])
        kids = _cell_integrals(cx0, cx1, cy0, cy1, rho)
        fine = kids.reshape(4, -1).sum(axis=0)
        diff = np.abs(fine - coarse)
        area = (x1 - x0) * (y1 - y0)
        ok = diff <= tol * area / total_area
        value += float(np.sum(fine[ok]))
        err += float(np.sum(diff[ok]))
        split = np.tile(~ok, 4)
        x0, x1, y0, y1 = cx0[split], cx1[split], cy0[split], cy1[split]
        coarse = kids[split]
    return value, err + trunc


def tail_quad(spec: ProcessSpec, t: float, tol: float = QUAD_TOL) -> OracleResult:
    """``P(max_i X_i > t)`` over the participating indices, for N <= 2."""
    idx = np.flatnonzero(spec.participating)
    if idx.size > 2:
        raise OracleError(f"tail oracle supports at most 2 indices, got {idx.size}")
    s = spec.sigma[np.ix_(idx, idx)]
    sd = np.sqrt(np.maximum(np.diag(s), 0.0))
    if idx.size == 2 and sd[0] > 0 and sd[1] > 0:
        rho = float(np.clip(s[0, 1] / (sd[0] * sd[1]), -1.0, 1.0))
        a1, a2 = t / sd[0], t / sd[1]
        if rho >= 1.0 - 1e-12:
            return OracleResult(norm_sf(min(a1, a2)), 1e-12, "closed_form")
        if rho <= -1.0 + 1e-12:
            inside = max(0.0, norm_cdf(a1) - norm_cdf(-a2))
            return OracleResult(1.0 - inside, 1e-12, "closed_form")
        cdf, err = _orthant_cdf(a1, a2, rho, tol)
        return OracleResult(1.0 - cdf, err, "quadrature")
    # at most one random coordinate; the rest are identically zero
    random_sd = [v for v in sd if v > 0]
    has_zero = len(random_sd) < idx.size
    if has_zero and t < 0:
        return OracleResult(1.0, 0.0, "closed_form")
    if not random_sd:
        return OracleResult(1.0 if 0.0 > t else 0.0, 0.0, "closed_form")
    return OracleResult(norm_sf(t / random_sd[0]), 0.0, "closed_form")

"""Finite covariance specifications of mean-zero Gaussian processes.

A :class:`ProcessSpec` is a covariance matrix over a finite index set together
with a vector of deterministic shifts ``m_i``.  A shift of ``-inf`` removes the
index from every supremum while keeping the random coordinate available (for
instance as an anchor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10
CLAMP_TOL = 1e-12
ZERO_LABEL = "0"

NEG_INF = float("-inf")


class SpecError(ValueError):
    """Raised when a process specification is malformed or invalid."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ProcessSpec:
    labels: tuple[str, ...]
    sigma: np.ndarray
    shifts: np.ndarray
    name: str = ""

    def __post_init__(self):
        labels = tuple(str(lab) for lab in self.labels)
        sigma = np.asarray(self.sigma, dtype=float)
        shifts = np.asarray(self.shifts, dtype=float).reshape(-1)
        n = len(labels)
        if sigma.ndim != 2 or sigma.shape != (n, n):
            raise SpecError(f"sigma must be {n}x{n}, got shape {sigma.shape}")
        if shifts.shape != (n,):
            raise SpecError(f"expected {n} shifts, got {shifts.shape[0]}")
        if len(set(labels)) != n:
            raise SpecError("labels must be unique")
        if n == 0:
            raise SpecError("a process needs at least one index")
        if not np.all(np.isfinite(sigma)):
            raise SpecError("sigma must be finite")
        if np.any(np.isnan(shifts)) or np.any(shifts == np.inf):
            raise SpecError("shifts must be finite or -inf")
        if not np.any(np.isfinite(shifts)):
            raise SpecError("at least one shift must be finite")
        scale = max(1.0, float(np.max(np.abs(sigma))))
        if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_RTOL * scale:
            raise SpecError("sigma is not symmetric")
        sigma = 0.5 * (sigma + sigma.T)
        check_psd(sigma)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sigma", _readonly(sigma))
        object.__setattr__(self, "shifts", _readonly(shifts))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def participating(self) -> np.ndarray:
        """Boolean mask of indices that take part in suprema."""
        return np.isfinite(self.shifts)

    def index(self, key: int | str) -> int:
        """Resolve a label (or an integer position) to a position."""
        if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
            if not 0 <= key < self.n:
                raise SpecError(f"index {key} out of range for N={self.n}")
            return int(key)
        try:
            return self.labels.index(str(key))
        except ValueError:
            raise SpecError(f"unknown label {key!r}") from None

    def with_sigma(self, sigma: np.ndarray, name: str | None = None) -> "ProcessSpec":
        return ProcessSpec(self.labels, sigma, self.shifts, self.name if name is None else name)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProcessSpec):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.sigma, other.sigma)
            and np.array_equal(self.shifts, other.shifts)
        )

    __hash__ = None  # type: ignore[assignment]


def check_psd(sigma: np.ndarray) -> None:
    eig = np.linalg.eigvalsh(sigma)
    floor = -PSD_RTOL * max(1.0, float(eig[-1]))
    if eig[0] < floor:
        raise SpecError(f"sigma is not positive semidefinite (min eigenvalue {eig[0]:.3e})")


@dataclass(frozen=True, eq=False)
class IncrementMatrix:
    """Squared L2 increment distances ``d_ij = E(X_i - X_j)^2``."""

    d: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def distances(self) -> np.ndarray:
        return np.sqrt(self.d)


def increment_matrix(spec: ProcessSpec) -> IncrementMatrix:
    s = spec.sigma
    v = np.diag(s)
    d = v[:, None] + v[None, :] - 2.0 * s
    scale = max(1.0, float(np.max(np.abs(s))))
    if np.min(d) < -CLAMP_TOL * scale:
        raise SpecError(f"negative squared increment {np.min(d):.3e}")
    d = np.maximum(d, 0.0)
    np.fill_diagonal(d, 0.0)
    return IncrementMatrix(_readonly(d), spec.labels)


def augment_with_zero(spec: ProcessSpec) -> ProcessSpec:
    """Prepend a deterministic zero coordinate with shift -inf."""
    if ZERO_LABEL in spec.labels:
        raise SpecError(f"label {ZERO_LABEL!r} is reserved for the zero index")
    n = spec.n
    sigma = np.zeros((n + 1, n + 1))
    sigma[1:, 1:] = spec.sigma
    shifts = np.concatenate([[NEG_INF], spec.shifts])
    return ProcessSpec((ZERO_LABEL,) + spec.labels, sigma, shifts, spec.name)


def hatted_system(spec: ProcessSpec, k: int | str, floor: float) -> ProcessSpec:
    """Anchor the process at index ``k``: ``X^_i = X_i - X_k``.

    Shifts become ``m_i - m_k`` off the anchor and ``max(m, m_k) - m_k`` at
    the anchor, so that the shifted supremum of the anchored process equals
    the floored anchored supremum of the original minus ``m_k``, path by path.
    """
    k = spec.index(k)
    mk = spec.shifts[k]
    if not math.isfinite(mk):
        raise SpecError("anchor index must have a finite shift")
    if math.isnan(floor) or floor == math.inf:
        raise SpecError("floor must be a real number or -inf")
    s = spec.sigma
    col = s[:, k]
    sigma = s - col[:, None] - col[None, :] + s[k, k]
    sigma[k, :] = 0.0
    sigma[:, k] = 0.0
    shifts = spec.shifts - mk
    shifts[k] = max(floor, mk) - mk
    return ProcessSpec(spec.labels, sigma, shifts, spec.name)


def hat_paths(x: np.ndarray, k: int) -> np.ndarray:
    """Apply the anchoring transform to sample paths (rows of ``x``)."""
    x = np.asarray(x, dtype=float)
    out = x - x[..., k : k + 1]
    out[..., k] = 0.0
    return out


# --- kernels -----------------------------------------------------------------

KERNEL_TYPES = ("explicit", "brownian", "ou", "scaled_identity", "sum")


def _check_grid(grid: np.ndarray) -> None:
    if grid.ndim != 1 or grid.size == 0:
        raise SpecError("grid must be a non-empty sequence")
    if not np.all(np.isfinite(grid)):
        raise SpecError("grid values must be finite")
    if np.any(np.diff(grid) <= 0):
        raise SpecError("grid must be strictly increasing")


def kernel_matrix(kernel: dict[str, Any], grid: Sequence[float] | None, n: int | None = None) -> np.ndarray:
    """Evaluate a kernel descriptor to a covariance matrix."""
    kind = kernel.get("type")
    g = None if grid is None else np.asarray(grid, dtype=float)
    if kind == "explicit":
        m = np.asarray(kernel["matrix"], dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SpecError("explicit matrix must be square")
        return m
    if kind == "scaled_identity":
        a = float(kernel["a"])
        if a < 0:
            raise SpecError("scaled_identity needs a >= 0")
        size = n if n is not None else (None if g is None else g.size)
        if size is None:
            raise SpecError("scaled_identity needs a grid or shift vector to fix N")
        return a * np.eye(size)
    if kind in ("brownian", "ou"):
        if g is None:
            raise SpecError(f"{kind} kernel needs a grid")
        _check_grid(g)
        if kind == "brownian":
            if g[0] < 0:
                raise SpecError("brownian grid must be non-negative")
            return np.minimum(g[:, None], g[None, :])
        scale = float(kernel["scale"])
        if not scale > 0:
            raise SpecError("ou scale must be positive")
        return np.exp(-np.abs(g[:, None] - g[None, :]) / scale)
    if kind == "sum":
        terms = kernel.get("terms")
        if not terms or len(terms) < 2:
            raise SpecError("sum kernel needs at least two terms")
        mats = [kernel_matrix(t, grid, n) for t in terms]
        if len({m.shape for m in mats}) != 1:
            raise SpecError("sum kernel terms have mismatched dimensions")
        return sum(mats[1:], mats[0])
    raise SpecError(f"unknown kernel type {kind!r}")


def build_from_kernel(
    kernel: dict[str, Any],
    grid: Sequence[float] | None,
    shifts: Sequence[float],
    labels: Sequence[str] | None = None,
    name: str = "",
) -> ProcessSpec:
    shifts = np.asarray(shifts, dtype=float)
    sigma = kernel_matrix(kernel, grid, n=shifts.size)
    if sigma.shape[0] != shifts.size:
        raise SpecError(f"kernel has dimension {sigma.shape[0]} but {shifts.size} shifts given")
    if labels is None:
        labels = [str(i + 1) for i in range(shifts.size)]
    return ProcessSpec(tuple(labels), sigma, shifts, name)

"""Marcus-Shepp sequences whose supremum approaches a prescribed constant.

The sequence interleaves ``sigma_j Z_j`` and ``-sigma_j Z_j`` with
``1 / sigma_j^2 = 2 log j + 2 log log j``.  Each +/- pair contributes
``sigma_j |Z_j|`` to the supremum, so the simulator works per pair index.
Pair indices start at 2 because the variance formula is undefined at 1.
Samples are scaled by ``c``; independence of the pairs gives the exact
finite-truncation CDF as a product, which is the oracle here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sampler import chunked_map, substream

MS_CHUNK_ROWS = 128
MS_STREAM = 0

_erfc = np.vectorize(math.erfc, otypes=[float])


@dataclass(frozen=True)
class MarcusSheppConfig:
    c: float
    n_start: int
    j_max: int
    samples: int
    seed: int

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError("c must be non-negative")
        if self.n_start < 1:
            raise ValueError("n_start must be at least 1")
        if self.n_start > self.j_max:
            raise ValueError("n_start must not exceed j_max")
        if self.j_max < 2:
            raise ValueError("j_max must be at least 2")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")


def ms_sigma(j):
    """``(2 log j + 2 log log j) ** -0.5`` for integer ``j >= 2``."""
    arr = np.asarray(j, dtype=float)
    if np.any(arr < 2):
        raise ValueError("sigma_j is only defined for j >= 2")
    lj = np.log(arr)
    out = (2.0 * lj + 2.0 * np.log(lj)) ** -0.5
    return float(out) if out.ndim == 0 else out


def ms_sigma_sequence(j_max: int) -> np.ndarray:
    """``sigma_1 .. sigma_{j_max}`` with ``sigma_1 := sigma_2``."""
    sig = ms_sigma(np.arange(2, j_max + 1))
    return np.concatenate([[sig[0]], sig])


def pair_start(position: int) -> int:
    """Pair index holding position ``n`` of the doubled sequence."""
    if position < 1:
        raise ValueError("positions start at 1")
    return -(-position // 2)


def doubled_sequence(z: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    """``W_1 = s_1 Z_1, W_2 = -W_1, W_3 = s_2 Z_2, ...`` along the last axis."""
    w = np.asarray(z) * sigmas
    out = np.empty(w.shape[:-1] + (2 * w.shape[-1],))
    out[..., 0::2] = w
    out[..., 1::2] = -w
    return out


def _pair_normals(chunk: int, rows: int, j_max: int, seed: int) -> np.ndarray:
    # columns are pair indices 2..j_max
    return substream(seed, MS_STREAM, chunk).standard_normal((rows, j_max - 1))


def ms_sup_table(
    c: float,
    n_values: Sequence[int],
    j_values: Sequence[int],
    samples: int,
    seed: int,
    workers: int | None = None,
) -> dict[tuple[int, int], np.ndarray]:
    """Samples of ``c * max_{n <= j <= J} sigma_j |Z_j|`` for every ``(n, J)``.

    All cells share one stream of ``Z`` drawn up to ``max(j_values)``, so the
    cells are coupled path by path.
    """
    j_top = max(j_values)
    if j_top < 2:
        raise ValueError("j_max must be at least 2")
    cells = [(n, j) for n in n_values for j in j_values if n <= j]
    sig = ms_sigma(np.arange(2, j_top + 1))

    def one(chunk, start, stop):
        w = np.abs(_pair_normals(chunk, stop - start, j_top, seed)) * sig
        out = {}
        for j in sorted(set(j for _, j in cells)):
            # suffix maxima over columns [col, j - 2]
            suffix = np.maximum.accumulate(w[:, : j - 1][:, ::-1], axis=1)[:, ::-1]
            for n, jj in cells:
                if jj == j:
                    out[(n, j)] = suffix[:, max(n, 2) - 2]
        return out

    parts = chunked_map(one, samples, MS_CHUNK_ROWS, workers)
    return {cell: c * np.concatenate([p[cell] for p in parts]) for cell in cells}


def ms_sup_samples(cfg: MarcusSheppConfig, workers: int | None = None) -> np.ndarray:
    return ms_sup_table(cfg.c, [cfg.n_start], [cfg.j_max], cfg.samples, cfg.seed, workers)[
        (cfg.n_start, cfg.j_max)
    ]


def ms_sup_samples_doubled(cfg: MarcusSheppConfig) -> np.ndarray:
    """Reference path: build the full +/- sequence and take its supremum.

    Uses the same normals as :func:`ms_sup_samples`; meant for small ``j_max``.
    """
    lo = max(cfg.n_start, 2)
    sig = ms_sigma(np.arange(lo, cfg.j_max + 1))

    def one(chunk, start, stop):
        z = _pair_normals(chunk, stop - start, cfg.j_max, cfg.seed)[:, lo - 2 :]
        return doubled_sequence(z, sig).max(axis=1)

    return cfg.c * np.concatenate(chunked_map(one, cfg.samples, MS_CHUNK_ROWS, 1))


def ms_sup_cdf_oracle(c: float, n_start: int, j_max: int, x: float) -> float:
    """Exact ``P(c * max_{n <= j <= J} sigma_j |Z_j| <= x)``."""
    if not c > 0:
        raise ValueError("c must be positive")
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    sig = ms_sigma(np.arange(max(n_start, 2), j_max + 1))
    # P(sigma |Z| <= y) = erf(y / (sigma sqrt 2)) = 1 - erfc(.)
    tails = _erfc(x / (c * sig * math.sqrt(2.0)))
    if np.any(tails >= 1.0):
        return 0.0
    return float(math.exp(np.sum(np.log1p(-tails))))


@dataclass(frozen=True)
class StudyRow:
    n: int
    J: int
    mean: float
    se: float
    p_ge_095: float
    p_ge_099: float
    oracle_cdf_at_c: float
    oracle_p_ge_095: float
    oracle_p_ge_099: float
    max_oracle_z: float

    def csv_row(self) -> tuple:
        return (self.n, self.J, self.mean, self.se, self.p_ge_095, self.p_ge_099, self.oracle_cdf_at_c)


STUDY_HEADER = ("n", "J", "mean", "se", "p_ge_0.95", "p_ge_0.99", "oracle_cdf_at_c")


def _binomial_z(p_hat: float, p: float, s: int) -> float:
    se = math.sqrt(max(p * (1.0 - p), 1e-300) / s)
    return abs(p_hat - p) / se


def ms_convergence_study(
    c: float,
    n_values: Sequence[int],
    j_values: Sequence[int],
    samples: int,
    seed: int,
    workers: int | None = None,
) -> list[StudyRow]:
    """Tabulate mean and ``P(sup >= c(1 - eps))`` over an ``(n, J)`` grid.

    Each cell is checked against the product-form oracle; ``max_oracle_z``
    is the larger binomial z-score of the two tabulated probabilities.
    Cells with ``c == 0`` are degenerate and carry NaN oracle columns.
    """
    table = ms_sup_table(c, n_values, j_values, samples, seed, workers)
    rows = []
    for (n, j), s in table.items():
        mean = float(np.mean(s))
        se = float(np.std(s, ddof=1) / math.sqrt(s.size)) if s.size > 1 else 0.0
        p95 = float(np.mean(s >= 0.95 * c))
        p99 = float(np.mean(s >= 0.99 * c))
        if c > 0:
            o_c = ms_sup_cdf_oracle(c, n, j, c)
            o95 = 1.0 - ms_sup_cdf_oracle(c, n, j, 0.95 * c)
            o99 = 1.0 - ms_sup_cdf_oracle(c, n, j, 0.99 * c)
            z = max(_binomial_z(p95, o95, s.size), _binomial_z(p99, o99, s.size))
        else:
            o_c = o95 = o99 = z = float("nan")
        rows.append(StudyRow(n, j, mean, se, p95, p99, o_c, o95, o99, z))
    return rows

"""Seeded joint Gaussian sampling.

Sample rows are produced in fixed-size chunks.  Each chunk draws its standard
normals from a Philox generator keyed by ``(seed, stream_id, chunk index)``, so
a batch depends only on ``(spec, samples, seed, stream_id)`` and never on how
many workers produced it.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .covariance import PSD_RTOL, ProcessSpec, SpecError

CHUNK_ROWS = 4096
EIG_CLAMP = 1e-12

_workers: int | None = None


def set_default_workers(n: int | None) -> None:
    """Set the worker count used when ``draw`` is not given one."""
    global _workers
    _workers = n


def default_workers() -> int:
    if _workers is not None:
        return max(1, _workers)
    return max(1, min(8, os.cpu_count() or 1))


def substream(seed: int, stream_id: int, chunk: int) -> np.random.Generator:
    """Counter-based generator for one chunk of one stream."""
    for name, v in (("seed", seed), ("stream_id", stream_id), ("chunk", chunk)):
        if not 0 <= int(v) < 2**64:
            raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")
    ss = np.random.SeedSequence([int(seed), int(stream_id), int(chunk)])
    return np.random.Generator(np.random.Philox(ss))


def chunked_map(fn, n_items: int, chunk: int, workers: int | None = None) -> list:
    """Apply ``fn(chunk_index, start, stop)`` over fixed chunks, in order."""
    bounds = [(c, c * chunk, min(n_items, (c + 1) * chunk)) for c in range(-(-n_items // chunk))]
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or len(bounds) == 1:
        return [fn(*b) for b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


@dataclass(frozen=True, eq=False)
class FactorizedSpec:
    factor: np.ndarray
    spec: ProcessSpec
    eigenvalues: np.ndarray

    @property
    def rank(self) -> int:
        return self.factor.shape[1]

    def reconstruction_error(self) -> float:
        return float(np.max(np.abs(self.factor @ self.factor.T - self.spec.sigma)))


@dataclass(frozen=True, eq=False)
class SampleBatch:
    draws: np.ndarray
    seed: int
    stream_id: int

    @property
    def n_samples(self) -> int:
        return self.draws.shape[0]


def factorize(spec: ProcessSpec) -> FactorizedSpec:
    lam, vec = np.linalg.eigh(spec.sigma)
    lam_max = float(lam[-1])
    if lam[0] < -PSD_RTOL * max(1.0, lam_max):
        raise SpecError(f"covariance is not positive semidefinite (min eigenvalue {lam[0]:.3e})")
    keep = lam > max(EIG_CLAMP * lam_max, EIG_CLAMP)
    factor = vec[:, keep] * np.sqrt(lam[keep])
    factor.setflags(write=False)
    return FactorizedSpec(factor, spec, lam)


def draw(
    fspec: FactorizedSpec,
    s: int,
    seed: int,
    stream_id: int = 0,
    workers: int | None = None,
) -> SampleBatch:
    if s < 1:
        raise ValueError("sample count must be at least 1")
    n, r = fspec.factor.shape
    factor_t = np.ascontiguousarray(fspec.factor.T)

    def one(chunk, start, stop):
        z = substream(seed, stream_id, chunk).standard_normal((stop - start, r))
        return z @ factor_t if r else np.zeros((stop - start, n))

    draws = np.concatenate(chunked_map(one, s, CHUNK_ROWS, workers), axis=0)
    draws.setflags(write=False)
    return SampleBatch(draws, seed, stream_id)


def sample(spec: ProcessSpec, s: int, seed: int, stream_id: int = 0, workers: int | None = None) -> SampleBatch:
    return draw(factorize(spec), s, seed, stream_id, workers)

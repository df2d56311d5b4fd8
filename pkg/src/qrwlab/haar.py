"""
Haar-random coins and coin-averaged limit measures.

Averaging the Gauss-map pushforward over Haar coins gives the image of the
uniform measure on the chirality simplex under the jump map.  The simplex
side is sampled directly as an independent Monte Carlo check.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .core import WalkSpec
from .evolve import operator_probabilities, iter_evolve_operator, rescaled_histogram
from .histogram import Histogram, bin_points
from .spectral import histogram, limit_measure

__all__ = [
    "RngSeed",
    "sample_haar_unitary",
    "sample_uniform_simplex",
    "simplex_pushforward_oracle",
    "averaged_limit_measure",
    "averaged_empirical_measure",
    "random_coin_spec",
]


@dataclass(frozen=True)
class RngSeed:
    """
    Reproducible seed.  ``stream(job)`` derives an independent generator per
    job index, so serial and threaded runs draw identical numbers.
    """

    seed: int
    generator: str = "PCG64"

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.generator not in ("PCG64", "PCG64DXSM", "Philox", "SFC64", "MT19937"):
            raise ValueError(f"unknown bit generator {self.generator!r}")

    def stream(self, job: int | None = None) -> np.random.Generator:
        key = () if job is None else (int(job),)
        ss = np.random.SeedSequence(int(self.seed), spawn_key=key)
        return np.random.Generator(getattr(np.random, self.generator)(ss))


def _as_seed(rng) -> RngSeed:
    if isinstance(rng, RngSeed):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngSeed(int(rng))
    raise TypeError("expected an RngSeed or an integer seed")


def sample_haar_unitary(c: int, rng: np.random.Generator, special: bool = False,
                        size: int | None = None) -> NDArray[np.complex128]:
    """
    Haar-distributed c x c unitary, or a stack of ``size`` of them.

    QR of a complex Ginibre matrix, with column i rescaled by the phase of
    R_ii so the triangular factor has a positive diagonal.  ``special=True``
    additionally divides by a c-th root of the determinant (Haar on SU(c)).
    """
    if c < 1:
        raise ValueError("c must be positive")
    shape = (c, c) if size is None else (size, c, c)
    while True:
        z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        q, r = np.linalg.qr(z)
        diag = np.diagonal(r, axis1=-2, axis2=-1)
        # rank-deficient draws have probability zero; redraw the whole batch
        if np.all(np.abs(diag) > 1e-12):
            break
    q = q * (diag / np.abs(diag))[..., None, :]
    if special:
        q = q / np.exp(1j * np.angle(np.linalg.det(q)) / c)[..., None, None]
    return q


def sample_uniform_simplex(c: int, rng: np.random.Generator, size: int | None = None) -> NDArray[np.float64]:
    """Uniform point(s) on the standard simplex via normalized exponentials."""
    if c < 1:
        raise ValueError("c must be positive")
    shape = (c,) if size is None else (size, c)
    e = rng.standard_exponential(shape)
    return e / e.sum(axis=-1, keepdims=True)


def _box(jumps) -> tuple[NDArray, NDArray]:
    j = np.asarray(jumps, dtype=float)
    return j.min(axis=0), j.max(axis=0)


def simplex_pushforward_oracle(jumps, n_samples: int, rng, bins, chunk: int = 1 << 18) -> Histogram:
    """Histogram of sum_i w_i j_i for uniform simplex samples w."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    seed = _as_seed(rng)
    gen = seed.stream()
    j = np.asarray(jumps, dtype=float)
    lo, hi = _box(j)
    total = None
    for start in range(0, n_samples, chunk):
        n = min(chunk, n_samples - start)
        rho = sample_uniform_simplex(len(j), gen, n) @ j
        h = bin_points(rho, np.full(n, 1.0 / n_samples), lo, hi, bins)
        total = h if total is None else Histogram(lo, hi, total.masses + h.masses)
    total.meta["manifest"] = f"seed={seed.seed} n_samples={n_samples}"
    return total


def random_coin_spec(d: int, c: int, jumps, gen: np.random.Generator, special: bool = False) -> WalkSpec:
    return WalkSpec(d, c, sample_haar_unitary(c, gen, special), np.asarray(jumps), require_span=False)


def _map_jobs(fn, n: int, n_jobs: int):
    if n_jobs <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, range(n)))


def averaged_limit_measure(d: int, c: int, jumps, n_coins: int, grid_n: int, rng, bins,
                           n_jobs: int = 1, special: bool = False) -> Histogram:
    """
    Equal-weight average over Haar coins of the trace-mode limit-measure
    histograms.  Coin i draws from stream i of the seed.
    """
    if n_coins < 1:
        raise ValueError("n_coins must be positive")
    seed = _as_seed(rng)
    lo, hi = _box(jumps)

    def one(i):
        spec = random_coin_spec(d, c, jumps, seed.stream(i), special)
        return histogram(limit_measure(spec, grid_n, "trace"), bins, lo, hi).masses

    masses = sum(_map_jobs(one, n_coins, n_jobs)) / n_coins
    h = Histogram(lo, hi, masses)
    h.meta["manifest"] = f"seed={seed.seed} n_coins={n_coins} grid={grid_n}"
    return h


def averaged_empirical_measure(d: int, c: int, jumps, n_coins: int, T: int, rng, bins,
                               n_jobs: int = 1, special: bool = False) -> Histogram:
    """
    Equal-weight average over Haar coins of rescaled position histograms
    after T steps, each averaged over the basis initial states.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    if n_coins < 1:
        raise ValueError("n_coins must be positive")
    seed = _as_seed(rng)

    def one(i):
        spec = random_coin_spec(d, c, jumps, seed.stream(i), special)
        _, window, A = next(iter_evolve_operator(spec, [T]))
        return rescaled_histogram(operator_probabilities(spec, window, A, T), T, bins).masses

    lo, hi = _box(jumps)
    masses = sum(_map_jobs(one, n_coins, n_jobs)) / n_coins
    h = Histogram(lo, hi, masses)
    h.meta["manifest"] = f"seed={seed.seed} n_coins={n_coins} T={T}"
    return h

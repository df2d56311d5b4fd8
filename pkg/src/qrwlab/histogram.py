"""Binned measures over the bounding box of a jump polytope."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

__all__ = ["Histogram", "GridMismatch", "bin_points", "bin_lattice", "tv_distance", "read_histogram_csv"]

# A point this close (in bin units) below an edge belongs to the upper bin;
# keeps float Gauss images consistent with exact rational binning of k/T.
EDGE_GUARD = 1e-9


class GridMismatch(ValueError):
    pass


@dataclass(eq=False)
class Histogram:
    """Masses on a regular ``bins`` grid spanning the box ``[lo, hi]``."""

    lo: NDArray[np.float64]
    hi: NDArray[np.float64]
    masses: NDArray[np.float64]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.shape != (self.masses.ndim,):
            raise ValueError("box bounds must match the histogram rank")

    @property
    def bins(self) -> tuple[int, ...]:
        return self.masses.shape

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def edges(self, axis: int) -> NDArray[np.float64]:
        return np.linspace(self.lo[axis], self.hi[axis], self.bins[axis] + 1)

    def centers(self, axis: int) -> NDArray[np.float64]:
        e = self.edges(axis)
        return 0.5 * (e[1:] + e[:-1])

    def bin_of(self, rho) -> tuple[int, ...]:
        """Index of the bin holding a single point."""
        idx = _float_indices(np.atleast_2d(np.asarray(rho, dtype=float)), self.lo, self.hi, self.bins)
        return tuple(int(i) for i in idx[0])

    def normalized(self) -> "Histogram":
        return Histogram(self.lo, self.hi, self.masses / self.masses.sum(), dict(self.meta))

    def same_grid(self, other: "Histogram") -> bool:
        return (
            self.bins == other.bins
            and np.allclose(self.lo, other.lo, rtol=0, atol=1e-12)
            and np.allclose(self.hi, other.hi, rtol=0, atol=1e-12)
        )

    def to_csv(self, path, comments=()) -> None:
        d = self.masses.ndim
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            lo = " ".join(repr(float(x)) for x in self.lo)
            hi = " ".join(repr(float(x)) for x in self.hi)
            fh.write(f"# box lo={lo} hi={hi} bins={' '.join(map(str, self.bins))}\n")
            fh.write(",".join(f"bin_{a + 1}" for a in range(d)) + ",mass\n")
            for idx in np.ndindex(*self.bins):
                fh.write(",".join(map(str, idx)) + f",{float(self.masses[idx])!r}\n")


def read_histogram_csv(path) -> Histogram:
    lo = hi = bins = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# box "):
                parts = dict(p.split("=") for p in _split_box(line[6:]))
                lo = [float(x) for x in parts["lo"].split()]
                hi = [float(x) for x in parts["hi"].split()]
                bins = tuple(int(x) for x in parts["bins"].split())
            elif line.startswith("#") or line.startswith("bin_") or not line:
                continue
            else:
                rows.append(line.split(","))
    if bins is None:
        raise ValueError(f"{path}: missing '# box' line")
    masses = np.zeros(bins)
    for r in rows:
        masses[tuple(int(x) for x in r[:-1])] = float(r[-1])
    return Histogram(np.array(lo), np.array(hi), masses)


def _split_box(text: str) -> list[str]:
    out: list[str] = []
    for tok in text.split():
        if "=" in tok:
            out.append(tok)
        else:
            out[-1] += " " + tok
    return out


def _float_indices(points, lo, hi, bins) -> NDArray[np.int64]:
    width = hi - lo
    safe = np.where(width > 0, width, 1.0)
    t = (points - lo) / safe * np.asarray(bins)
    idx = np.floor(t + EDGE_GUARD).astype(np.int64)
    idx = np.where(width > 0, idx, 0)
    return np.clip(idx, 0, np.asarray(bins) - 1)


def _accumulate(idx: NDArray[np.int64], weights, bins) -> NDArray[np.float64]:
    flat = np.ravel_multi_index(tuple(idx.T), bins)
    return np.bincount(flat, weights=weights, minlength=int(np.prod(bins))).reshape(bins)


def bin_points(points, weights, lo, hi, bins) -> Histogram:
    """Histogram of weighted points; points outside the box go to edge bins."""
    points = np.asarray(points, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    bins = _bins_tuple(bins, len(lo))
    idx = _float_indices(points.reshape(-1, len(lo)), lo, hi, bins)
    return Histogram(lo, hi, _accumulate(idx, np.asarray(weights, dtype=float).ravel(), bins))


def bin_lattice(sites, weights, T: int, lo, hi, bins) -> Histogram:
    """
    Histogram of lattice masses at rho = k / T over the integer box [lo, hi].

    Bin indices are computed in exact integer arithmetic,
    floor((k - T lo) * bins / (T (hi - lo))).
    """
    sites = np.asarray(sites, dtype=np.int64).reshape(-1, len(lo))
    lo_i = np.asarray(lo, dtype=np.int64)
    hi_i = np.asarray(hi, dtype=np.int64)
    bins = _bins_tuple(bins, len(lo))
    nb = np.asarray(bins, dtype=np.int64)
    width = T * (hi_i - lo_i)
    safe = np.where(width > 0, width, 1)
    idx = np.where(width > 0, (sites - T * lo_i) * nb // safe, 0)
    idx = np.clip(idx, 0, nb - 1)
    return Histogram(lo_i.astype(float), hi_i.astype(float),
                     _accumulate(idx, np.asarray(weights, dtype=float).ravel(), bins))


def _bins_tuple(bins, d: int) -> tuple[int, ...]:
    if np.ndim(bins) == 0:
        bins = (int(bins),) * d
    bins = tuple(int(b) for b in bins)
    if len(bins) != d or any(b < 1 for b in bins):
        raise ValueError(f"bins must be positive, got {bins}")
    return bins


def tv_distance(a: Histogram, b: Histogram) -> float:
    """Total variation distance, half the L1 distance of the bin masses."""
    if not a.same_grid(b):
        raise GridMismatch(f"histogram grids differ: {a.bins} on [{a.lo}, {a.hi}] vs {b.bins} on [{b.lo}, {b.hi}]")
    return 0.5 * float(np.abs(a.masses - b.masses).sum())

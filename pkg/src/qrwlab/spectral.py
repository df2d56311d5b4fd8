"""
Spectral surface sampling and weak-limit measures.

Over each torus point xi the eigenpairs (exp(i zeta), v) of M(xi) give one
fiber of the spectral surface.  On a rank-one branch the gradient of zeta is
the convex combination sum_l |v_l|^2 j_l of the jumps, so the limit measure
of the rescaled walk is a pushforward of the torus measure computed
pointwise from eigenvectors, with no branch tracking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .core import WalkSpec, jump_polytope, normalize_state
from .fourier import symbol, torus_grid
from .histogram import GridMismatch, Histogram, bin_points, tv_distance

__all__ = [
    "DegenerateSpectrum",
    "SpectralFiber",
    "LimitMeasure",
    "Histogram",
    "GridMismatch",
    "fiber",
    "fibers",
    "gauss_image",
    "gauss_images",
    "limit_measure",
    "histogram",
    "tv_distance",
    "phase_gradient_fd",
    "read_limit_measure_csv",
]

TWO_PI = 2 * np.pi


class DegenerateSpectrum(RuntimeError):
    """Every sampled fiber was degenerate."""


@dataclass(frozen=True, eq=False)
class SpectralFiber:
    """
    Eigen-decomposition of M(xi): ``phases[b]`` in [0, 2 pi), unit
    eigenvectors in the columns ``vectors[:, b]`` and the circular distance
    ``gaps[b]`` from each phase to its nearest neighbour.
    """

    xi: NDArray[np.float64]
    phases: NDArray[np.float64]
    vectors: NDArray[np.complex128]
    gaps: NDArray[np.float64]
    degenerate: bool

    @property
    def eigenvalues(self) -> NDArray[np.complex128]:
        return np.exp(1j * self.phases)

    def branches(self):
        for b in range(len(self.phases)):
            yield self.phases[b], self.vectors[:, b], self.gaps[b]


def _circular_gaps(phases: NDArray) -> NDArray:
    """Distance on the circle from each phase to its nearest other phase."""
    c = phases.shape[-1]
    if c == 1:
        return np.full(phases.shape, np.inf)
    diff = np.abs(phases[..., :, None] - phases[..., None, :])
    diff = np.minimum(diff, TWO_PI - diff)
    idx = np.arange(c)
    diff[..., idx, idx] = np.inf
    return diff.min(axis=-1)


def fibers(spec: WalkSpec, xi) -> tuple[NDArray, NDArray, NDArray]:
    """
    Batched eigendecomposition over points ``xi`` (..., d).

    Returns phases (..., c), unit eigenvectors (..., c, c) by column, and
    circular gaps (..., c).
    """
    m = symbol(spec, xi)
    vals, vecs = np.linalg.eig(m)
    vecs = vecs / np.linalg.norm(vecs, axis=-2, keepdims=True)
    phases = np.mod(np.angle(vals), TWO_PI)
    return phases, vecs, _circular_gaps(phases)


def fiber(spec: WalkSpec, xi, gap_tol: float = 1e-8) -> SpectralFiber:
    xi = np.asarray(xi, dtype=float).reshape(spec.d)
    try:
        phases, vecs, gaps = fibers(spec, xi)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSpectrum(f"eigensolver failed at xi={xi}: {exc}") from exc
    return SpectralFiber(xi, phases, vecs, gaps, bool(np.any(gaps < gap_tol)))


def gauss_image(v, spec: WalkSpec) -> NDArray[np.float64]:
    """Velocity sum_l |v_l|^2 j_l of a unit eigenvector v."""
    w = np.abs(np.asarray(v)) ** 2
    return w @ spec.jumps.astype(float)


def gauss_images(vectors: NDArray, spec: WalkSpec) -> NDArray[np.float64]:
    """Gauss images of all eigenvector columns: (..., c, c) -> (..., c, d)."""
    w = np.abs(vectors) ** 2
    return np.swapaxes(w, -1, -2) @ spec.jumps.astype(float)


def phase_gradient_fd(spec: WalkSpec, xi, branch: int, h: float = 1e-4) -> NDArray[np.float64] | None:
    """
    Central-difference gradient of one eigenphase at xi.

    Neighbouring phases are matched to the branch by circular proximity.
    Returns None when the match is ambiguous.
    """
    xi = np.asarray(xi, dtype=float)
    phases, _, _ = fibers(spec, xi)
    zeta = phases[branch]
    grad = np.empty(spec.d)
    for a in range(spec.d):
        e = np.zeros(spec.d)
        e[a] = h
        vals = []
        for sgn in (1, -1):
            p, _, _ = fibers(spec, xi + sgn * e)
            dist = np.abs(np.angle(np.exp(1j * (p - zeta))))
            order = np.argsort(dist)
            if len(p) > 1 and dist[order[1]] < 4 * dist[order[0]]:
                return None
            vals.append(zeta + np.angle(np.exp(1j * (p[order[0]] - zeta))))
        grad[a] = (vals[0] - vals[1]) / (2 * h)
    return grad


@dataclass(eq=False)
class LimitMeasure:
    """Weighted velocity cloud: ``points`` (n, d) in P, ``weights`` (n,) summing to one."""

    points: NDArray[np.float64]
    weights: NDArray[np.float64]
    grid_n: int
    mode: str
    skipped: int
    spec: WalkSpec | None = field(default=None, repr=False)

    @property
    def provenance(self) -> str:
        return f"grid={self.grid_n} mode={self.mode} skipped={self.skipped}"

    def to_csv(self, path, comments=()) -> None:
        d = self.points.shape[1]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {self.provenance}\n")
            for line in comments:
                fh.write(f"# {line}\n")
            fh.write(",".join(f"rho_{a + 1}" for a in range(d)) + ",weight\n")
            for p, w in zip(self.points, self.weights):
                fh.write(",".join(repr(float(x)) for x in p) + f",{float(w)!r}\n")


def read_limit_measure_csv(path) -> LimitMeasure:
    grid_n, mode, skipped = 0, "", 0
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# grid="):
                parts = dict(p.split("=") for p in line[2:].split())
                grid_n, mode, skipped = int(parts["grid"]), parts["mode"], int(parts["skipped"])
            elif line.startswith("#") or line.startswith("rho_") or not line.strip():
                continue
            else:
                rows.append([float(x) for x in line.split(",")])
    arr = np.array(rows)
    return LimitMeasure(arr[:, :-1], arr[:, -1], grid_n, mode, skipped)


def limit_measure(spec: WalkSpec, grid_n: int = 256, mode: str = "trace", u=None,
                  gap_tol: float = 1e-8, chunk: int = 1 << 16) -> LimitMeasure:
    """
    Gauss-map pushforward over a half-cell-offset grid_n^d torus grid.

    ``mode="trace"`` weights each branch by tr(P)/c = 1/c (the basis-averaged
    walk); ``mode="state"`` weights it by |<v, u>|^2 for the initial state u.
    Fibers with an eigenphase gap below ``gap_tol`` are skipped and counted.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    if mode not in ("trace", "state"):
        raise ValueError(f"mode must be 'trace' or 'state', got {mode!r}")
    if mode == "state":
        if u is None:
            raise ValueError("state mode needs an initial chirality vector u")
        u = normalize_state(u, spec.c)
    xi = torus_grid(grid_n, spec.d, offset=0.5).reshape(-1, spec.d)
    pts, wts = [], []
    skipped = 0
    for start in range(0, len(xi), chunk):
        phases, vecs, gaps = fibers(spec, xi[start:start + chunk])
        ok = np.all(gaps >= gap_tol, axis=-1)
        skipped += int(np.count_nonzero(~ok))
        vecs = vecs[ok]
        pts.append(gauss_images(vecs, spec).reshape(-1, spec.d))
        if mode == "trace":
            wts.append(np.full(vecs.shape[0] * spec.c, 1.0 / spec.c))
        else:
            wts.append((np.abs(vecs.conj().transpose(0, 2, 1) @ u) ** 2).ravel())
    points = np.concatenate(pts)
    weights = np.concatenate(wts)
    if len(points) == 0 or weights.sum() <= 0:
        raise DegenerateSpectrum(f"all {len(xi)} fibers degenerate at gap_tol={gap_tol:g}")
    weights = weights / weights.sum()
    return LimitMeasure(points, weights, grid_n, mode, skipped, spec)


def histogram(measure: LimitMeasure, bins, lo=None, hi=None) -> Histogram:
    """Bin a limit measure over the bounding box of the jump polytope."""
    if lo is None or hi is None:
        if measure.spec is None:
            raise ValueError("need the box bounds or a measure that knows its spec")
        P = jump_polytope(measure.spec)
        lo, hi = P.lo, P.hi
    h = bin_points(measure.points, measure.weights, lo, hi, bins)
    h.meta["provenance"] = measure.provenance
    return h

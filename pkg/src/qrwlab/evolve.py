"""
Exact evolution of a coined walk on a finite lattice window.

One step is coin-then-shift: U acts on the chirality vector at every site,
then chirality layer k moves by j_k.  Amplitudes started at the origin stay
inside T*P, so a window holding the bounding box of T*P (plus one cell of
slack) never loses probability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from numpy.typing import NDArray

from .core import WalkSpec, normalize_state
from .histogram import Histogram, bin_lattice

__all__ = [
    "WindowOverflow",
    "LatticeWindow",
    "StateField",
    "ProbField",
    "point_state",
    "step",
    "evolve",
    "iter_evolve",
    "evolve_operator",
    "iter_evolve_operator",
    "probabilities",
    "operator_probabilities",
    "amplitude_operator",
    "rescaled_histogram",
]


class WindowOverflow(RuntimeError):
    """Amplitude would leave the lattice window."""


@dataclass(frozen=True)
class LatticeWindow:
    """Inclusive integer box ``lo <= k <= hi`` per axis."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    @classmethod
    def for_horizon(cls, spec: WalkSpec, T: int, slack: int = 1) -> "LatticeWindow":
        # every t*P for t <= T, including the origin at t = 0
        lo = np.minimum(T * spec.jump_min, 0) - slack
        hi = np.maximum(T * spec.jump_max, 0) + slack
        return cls(tuple(int(x) for x in lo), tuple(int(x) for x in hi))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def d(self) -> int:
        return len(self.lo)

    def contains(self, site) -> bool:
        return all(l <= int(k) <= h for k, l, h in zip(site, self.lo, self.hi))

    def index(self, site) -> tuple[int, ...]:
        return tuple(int(k) - l for k, l in zip(site, self.lo))

    def sites(self) -> NDArray[np.int64]:
        """All sites as an (n, d) array in row-major window order."""
        axes = [np.arange(l, h + 1) for l, h in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True, eq=False)
class StateField:
    """Amplitudes ``amps[v, *site_index]`` of a walk state at time ``time``."""

    spec: WalkSpec
    window: LatticeWindow
    amps: NDArray[np.complex128]
    time: int = 0

    def amplitude(self, site) -> NDArray[np.complex128]:
        if not self.window.contains(site):
            return np.zeros(self.spec.c, dtype=np.complex128)
        return self.amps[(slice(None),) + self.window.index(site)]

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))


@dataclass(frozen=True, eq=False)
class ProbField:
    """
    Per-site probabilities on a window.

    ``per_chirality[v, *site]`` is kept only when requested; ``total`` sums
    it over v.
    """

    spec: WalkSpec
    window: LatticeWindow
    total: NDArray[np.float64]
    per_chirality: NDArray[np.float64] | None = None
    time: int = 0

    def at(self, site) -> float:
        if not self.window.contains(site):
            return 0.0
        return float(self.total[self.window.index(site)])

    def to_csv(self, path, threshold: float = 0.0, comments=()) -> None:
        """Write ``k1..kd,p_total[,p_chi_1..p_chi_c]``; rows with p < threshold are skipped."""
        d, c = self.window.d, self.spec.c
        header = [f"k{a + 1}" for a in range(d)] + ["p_total"]
        if self.per_chirality is not None:
            header += [f"p_chi_{v + 1}" for v in range(c)]
        sites = self.window.sites()
        flat = self.total.ravel()
        chi = None if self.per_chirality is None else self.per_chirality.reshape(c, -1)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            fh.write(",".join(header) + "\n")
            for i in np.flatnonzero(flat >= threshold):
                row = [str(int(x)) for x in sites[i]] + [repr(float(flat[i]))]
                if chi is not None:
                    row += [repr(float(x)) for x in chi[:, i]]
                fh.write(",".join(row) + "\n")


def point_state(spec: WalkSpec, u, window: LatticeWindow, site=None) -> StateField:
    """The state delta_site (x) u on ``window`` (site defaults to the origin)."""
    u = normalize_state(u, spec.c)
    site = (0,) * spec.d if site is None else tuple(site)
    if not window.contains(site):
        raise WindowOverflow(f"site {site} outside window")
    amps = np.zeros((spec.c,) + window.shape, dtype=np.complex128)
    amps[(slice(None),) + window.index(site)] = u
    return StateField(spec, window, amps, 0)


def _advance(amps, coin, jumps, box_lo, box_hi) -> None:
    """
    One coin-then-shift step in place.

    ``amps`` has shape (c, *batch, *spatial); the support lies in the inclusive
    index box [box_lo, box_hi] of the trailing spatial axes.
    """
    d = len(box_lo)
    nbatch = amps.ndim - 1 - d
    lead = (slice(None),) * nbatch
    src = tuple(slice(l, h + 1) for l, h in zip(box_lo, box_hi))
    block = amps[(slice(None),) + lead + src]
    mixed = np.tensordot(coin, block, axes=(1, 0))
    amps[(slice(None),) + lead + src] = 0
    for v, j in enumerate(jumps):
        dst = tuple(slice(l + jv, h + jv + 1) for l, h, jv in zip(box_lo, box_hi, j))
        amps[(v,) + lead + dst] = mixed[v]


def _support_box(amps, d: int):
    occupied = np.any(amps != 0, axis=tuple(range(amps.ndim - d)))
    if not occupied.any():
        return None
    nz = np.nonzero(occupied)
    return [int(a.min()) for a in nz], [int(a.max()) for a in nz]


def step(state: StateField, spec: WalkSpec | None = None) -> StateField:
    """Apply one step S = shift o coin; raises WindowOverflow if amplitude would exit."""
    spec = state.spec if spec is None else spec
    d = spec.d
    amps = np.array(state.amps, copy=True)
    box = _support_box(amps, d)
    if box is not None:
        lo, hi = box
        shape = state.window.shape
        if any(lo[a] + spec.jump_min[a] < 0 or hi[a] + spec.jump_max[a] > shape[a] - 1 for a in range(d)):
            raise WindowOverflow(f"step {state.time} -> {state.time + 1} leaves window {state.window}")
        _advance(amps, spec.coin, spec.jumps, lo, hi)
    return StateField(spec, state.window, amps, state.time + 1)


def _run(spec: WalkSpec, init: NDArray, times: Iterable[int]) -> Iterator[tuple[int, LatticeWindow, NDArray]]:
    """
    Evolve from delta_0 (x) init, init of shape (c, *batch), yielding
    (T, window, amps) at each requested T.  The window is sized for the last
    requested time; yielded arrays are live buffers, copy to keep.
    """
    times = sorted(set(int(t) for t in times))
    if not times or times[0] < 0:
        raise ValueError("times must be nonnegative integers")
    window = LatticeWindow.for_horizon(spec, times[-1])
    origin = np.array(window.index((0,) * spec.d))
    amps = np.zeros(init.shape + window.shape, dtype=np.complex128)
    amps[(slice(None),) * init.ndim + tuple(origin)] = init
    jmin, jmax = spec.jump_min, spec.jump_max
    t = 0
    for target in times:
        while t < target:
            _advance(amps, spec.coin, spec.jumps, origin + t * jmin, origin + t * jmax)
            t += 1
        yield t, window, amps


def evolve(spec: WalkSpec, u, T: int) -> StateField:
    """State S^T (delta_0 (x) u)."""
    u = normalize_state(u, spec.c)
    _, window, amps = next(_run(spec, u, [T]))
    return StateField(spec, window, amps, T)


def iter_evolve(spec: WalkSpec, u, times: Iterable[int]) -> Iterator[StateField]:
    """Snapshots at several times from one run (window sized for the largest)."""
    u = normalize_state(u, spec.c)
    for t, window, amps in _run(spec, u, times):
        yield StateField(spec, window, amps.copy(), t)


def evolve_operator(spec: WalkSpec, T: int) -> tuple[LatticeWindow, NDArray[np.complex128]]:
    """
    All amplitude operators at once: returns (window, A) with
    ``A[v, u, *site] = <site (x) e_v | S^T | 0 (x) e_u>``.
    """
    _, window, amps = next(_run(spec, np.eye(spec.c, dtype=np.complex128), [T]))
    return window, amps


def iter_evolve_operator(spec: WalkSpec, times: Iterable[int]):
    """Like :func:`evolve_operator` for several times; yields (T, window, A) with A live."""
    return _run(spec, np.eye(spec.c, dtype=np.complex128), times)


def probabilities(state: StateField, per_chirality: bool = False) -> ProbField:
    p = np.abs(state.amps) ** 2
    return ProbField(state.spec, state.window, p.sum(axis=0), p if per_chirality else None, state.time)


def operator_probabilities(spec: WalkSpec, window: LatticeWindow, A, T: int,
                           per_chirality: bool = False) -> ProbField:
    """Probabilities averaged over the basis initial states e_1..e_c."""
    p = (np.abs(A) ** 2).sum(axis=1) / spec.c
    return ProbField(spec, window, p.sum(axis=0), p if per_chirality else None, T)


def amplitude_operator(spec: WalkSpec, T: int, k) -> NDArray[np.complex128]:
    """c x c matrix whose column u is the amplitude vector at site k from delta_0 (x) e_u."""
    window, A = evolve_operator(spec, T)
    if not window.contains(k):
        return np.zeros((spec.c, spec.c), dtype=np.complex128)
    return A[(slice(None), slice(None)) + window.index(k)].copy()


def rescaled_histogram(pf: ProbField, T: int, bins) -> Histogram:
    """Bin the per-site probabilities at rho = k/T over the bounding box of the jump polytope."""
    if T < 1:
        raise ValueError("T must be at least 1")
    if np.ndim(bins) == 0 and int(bins) < 1:
        raise ValueError("bins must be at least 1")
    spec = pf.spec
    return bin_lattice(pf.window.sites(), pf.total.ravel(), T, spec.jump_min, spec.jump_max, bins)

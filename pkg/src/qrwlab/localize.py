"""
Localization: atoms of limit measures, rational speed certificates and
monomial-torus checks on the spectral surface.

An atom at speed s can only come from a component z^m x^l = 1 of the
spectral surface, whose Gauss image is the constant -l/m with m <= c.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.typing import NDArray

from .core import WalkSpec, jump_polytope, normalize_state
from .evolve import iter_evolve_operator
from .spectral import LimitMeasure, fibers

__all__ = [
    "Certificate",
    "Atom",
    "AtomReport",
    "TorusCheck",
    "ProbeRow",
    "detect_atoms",
    "rational_speed",
    "verify_monomial_torus",
    "certify",
    "certified_in_polytope",
    "strong_localization_probe",
]


@dataclass(frozen=True)
class Certificate:
    """Speed -l/m with the residual max|m s + l| of the float speed."""

    l: tuple[int, ...]
    m: int
    residual: float
    torus_fraction: float | None = None

    @property
    def exact_speed(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(-li, self.m) for li in self.l)


@dataclass(frozen=True)
class Atom:
    speed: NDArray[np.float64]
    mass: float
    dispersion: float
    certificate: Certificate | None = None


@dataclass
class AtomReport:
    atoms: list[Atom] = field(default_factory=list)
    d: int = 0

    def total_mass(self) -> float:
        return sum(a.mass for a in self.atoms)

    def to_csv(self, path, comments=()) -> None:
        d = self.d
        cols = [f"s_{a + 1}" for a in range(d)] + ["mass"] + [f"l_{a + 1}" for a in range(d)] + ["m", "residual"]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            fh.write(",".join(cols) + "\n")
            for a in self.atoms:
                row = [repr(float(x)) for x in a.speed] + [repr(float(a.mass))]
                cert = a.certificate
                if cert is None:
                    row += [""] * d + ["", ""]
                else:
                    row += [str(x) for x in cert.l] + [str(cert.m), repr(float(cert.residual))]
                fh.write(",".join(row) + "\n")

    def summary(self) -> str:
        if not self.atoms:
            return "no atoms detected"
        lines = [f"{len(self.atoms)} atom(s), total mass {self.total_mass():.6f}"]
        for a in self.atoms:
            speed = ", ".join(f"{x:.9f}" for x in a.speed)
            line = f"  speed ({speed})  mass {a.mass:.6f}"
            c = a.certificate
            if c is not None:
                exact = ", ".join(str(q) for q in c.exact_speed)
                line += f"  = ({exact})  l={c.l} m={c.m}"
                if c.torus_fraction is not None:
                    line += f"  torus z^{c.m} x^l = 1 on {c.torus_fraction:.3f} of fibers"
            else:
                line += "  uncertified"
            lines.append(line)
        return "\n".join(lines)


def _candidate_mask(points: NDArray, weights: NDArray, radius: float, threshold: float) -> NDArray[np.bool_]:
    """
    Points that can take part in a cluster of mass >= threshold.

    A heavy ball has a heavy cell (mass >= threshold / 3^d) within one cell of
    its centre; anything that can steal from it lies within 2 radii of that
    centre.  Points farther than 4 cells from every heavy cell cannot affect
    any recorded cluster, so greedy clustering may ignore them.
    """
    n, d = points.shape
    cells = np.floor(points / radius).astype(np.int64)
    keys, inverse = np.unique(cells, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    cell_mass = np.bincount(inverse, weights=weights, minlength=len(keys))
    heavy = keys[cell_mass >= threshold / 3**d]
    if len(heavy) == 0:
        return np.zeros(n, dtype=bool)
    near = {tuple(h + off) for h in heavy for off in itertools.product(range(-4, 5), repeat=d)}
    key_ok = np.array([tuple(k) in near for k in keys])
    return key_ok[inverse]


def detect_atoms(measure: LimitMeasure, radius: float = 1e-6, mass_threshold: float = 0.01) -> AtomReport:
    """
    Greedy clustering: take the heaviest remaining point (ties broken by
    lexicographic order of rho), absorb every point within ``radius``, and
    keep the cluster when its mass reaches ``mass_threshold`` and its points
    lie within ``radius`` of the weighted centroid.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not 0 < mass_threshold < 1:
        raise ValueError("mass_threshold must lie in (0, 1)")
    pts = np.asarray(measure.points, dtype=float)
    w = np.asarray(measure.weights, dtype=float)
    d = pts.shape[1]
    keep = _candidate_mask(pts, w, radius, mass_threshold)
    pts, w = pts[keep], w[keep]
    # heaviest first, then lexicographic in rho
    order = np.lexsort(tuple(pts[:, a] for a in reversed(range(d))) + (-w,))
    pts, w = pts[order], w[order]
    alive = np.ones(len(pts), dtype=bool)
    atoms = []
    for i in range(len(pts)):
        if not alive[i]:
            continue
        dist = np.linalg.norm(pts - pts[i], axis=1)
        members = alive & (dist <= radius)
        alive &= ~members
        mass = float(w[members].sum())
        if mass < mass_threshold:
            continue
        centroid = (w[members] @ pts[members]) / mass
        dispersion = float(np.max(np.linalg.norm(pts[members] - centroid, axis=1)))
        if dispersion <= radius:
            atoms.append(Atom(centroid, mass, dispersion))
    atoms.sort(key=lambda a: (-a.mass, tuple(a.speed)))
    return AtomReport(atoms, d)


def rational_speed(speed, c: int, tol: float = 1e-6) -> tuple[tuple[int, ...], int] | None:
    """Smallest m <= c with m*speed within tol of an integer vector; returns (l, m), l = -round(m*speed)."""
    s = np.asarray(speed, dtype=float)
    for m in range(1, c + 1):
        ms = m * s
        r = np.round(ms)
        if np.max(np.abs(ms - r)) <= tol:
            return tuple(int(-x) for x in r), m
    return None


@dataclass(frozen=True)
class TorusCheck:
    fraction: float
    verdict: str
    offending: NDArray[np.float64]


def verify_monomial_torus(spec: WalkSpec, l, m: int, n_samples: int = 1000, tol: float = 1e-8,
                          rng: np.random.Generator | int = 0) -> TorusCheck:
    """
    Fraction of random fibers carrying an eigenvalue z with |z^m x^l - 1| <= tol.

    A component of the spectral surface gives fraction 1.  Fractions strictly
    between 0.01 and 0.99 are "inconclusive" and the failing xi are returned.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    xi = gen.uniform(0.0, 2 * np.pi, size=(n_samples, spec.d))
    phases, _, _ = fibers(spec, xi)
    z = np.exp(1j * phases)
    mono = np.exp(1j * (xi @ np.asarray(l, dtype=float)))
    hit = np.any(np.abs(z**m * mono[:, None] - 1.0) <= tol, axis=1)
    frac = float(hit.mean())
    if frac >= 0.99:
        verdict = "verified"
    elif frac <= 0.01:
        verdict = "absent"
    else:
        verdict = "inconclusive"
    return TorusCheck(frac, verdict, xi[~hit] if verdict == "inconclusive" else np.empty((0, spec.d)))


def certify(report: AtomReport, spec: WalkSpec, tol: float = 1e-6, n_samples: int = 1000,
            torus_tol: float = 1e-8, rng=0) -> AtomReport:
    """Attach (l, m) certificates and torus checks to every rational atom."""
    out = []
    for a in report.atoms:
        rs = rational_speed(a.speed, spec.c, tol)
        if rs is None:
            out.append(a)
            continue
        l, m = rs
        residual = float(np.max(np.abs(m * a.speed + np.array(l))))
        check = verify_monomial_torus(spec, l, m, n_samples, torus_tol, rng)
        out.append(Atom(a.speed, a.mass, a.dispersion, Certificate(l, m, residual, check.fraction)))
    return AtomReport(out, report.d)


def certified_in_polytope(atom: Atom, spec: WalkSpec, tol: float = 1e-9) -> bool:
    """Quantization check: -l/m lies in P and m <= c."""
    cert = atom.certificate
    if cert is None:
        return False
    exact = np.array([float(q) for q in cert.exact_speed])
    return cert.m <= spec.c and bool(jump_polytope(spec).contains(exact, tol))


@dataclass(frozen=True)
class ProbeRow:
    speed: tuple[float, ...]
    T: int
    site: tuple[int, ...]
    max_chirality: float
    site_total: float


def strong_localization_probe(spec: WalkSpec, speeds, T_list, u=None) -> list[ProbeRow]:
    """
    Probability at the moving site T*s for each speed s and each T in
    ``T_list`` with T*s integral.  Reports the largest per-chirality
    probability and the site total; ``u=None`` averages over basis states.
    """
    speeds = [np.asarray(s, dtype=float) for s in speeds]
    admissible = {}
    for s in speeds:
        for T in T_list:
            ts = T * s
            if np.max(np.abs(ts - np.round(ts))) <= 1e-9:
                admissible.setdefault(int(T), []).append((s, tuple(int(x) for x in np.round(ts))))
    if not admissible:
        raise ValueError("no T in T_list makes T*s integral for the given speeds")
    if u is not None:
        u = normalize_state(u, spec.c)
    rows = []
    for T, window, A in iter_evolve_operator(spec, sorted(admissible)):
        for s, site in admissible[T]:
            if not window.contains(site):
                rows.append(ProbeRow(tuple(float(x) for x in s), T, site, 0.0, 0.0))
                continue
            op = A[(slice(None), slice(None)) + window.index(site)]
            if u is None:
                p = (np.abs(op) ** 2).sum(axis=1) / spec.c
            else:
                p = np.abs(op @ u) ** 2
            rows.append(ProbeRow(tuple(float(x) for x in s), T, site, float(p.max()), float(p.sum())))
    return rows

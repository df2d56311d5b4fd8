"""
Walk specifications, example fixtures and jump-polytope geometry.

A translation invariant coined walk on the lattice Z^d is fixed by a c x c
unitary coin and a jump map sending each chirality basis vector e_k to a
lattice vector j_k.  One step applies the coin at every site and then
shifts the k-th chirality layer by j_k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import polar
from scipy.spatial import ConvexHull

__all__ = [
    "SpecError",
    "WalkSpec",
    "Polytope",
    "FIXTURES",
    "JUMP_MAPS",
    "UCOIN_RAW",
    "hadamard_coin",
    "nearest_unitary",
    "unitarity_defect",
    "parse_walk_spec",
    "render_walk_spec",
    "load_walk_spec",
    "jump_polytope",
    "fixture",
    "normalize_state",
]

UNITARY_TOL = 1e-12


class SpecError(ValueError):
    """Raised for malformed or invalid walk specifications."""


JUMP_MAPS: dict[str, tuple[tuple[int, ...], ...]] = {
    "j1": ((0, 0), (0, 1), (1, 0), (1, 1)),
    "j2": ((0, 0), (2, 1), (1, 2), (1, 1)),
    "j3": ((0, 0), (2, 1), (1, 2), (2, 2)),
    "j4": ((0, 0), (2, 0), (2, 1), (1, 0)),
}

# Six-digit random coin used for the generic-coin displays; not exactly unitary.
UCOIN_RAW = np.array(
    [
        [-0.331759 + 0.069082j, 0.471768 + 0.231231j, -0.278617 - 0.583254j, -0.425926 + 0.099521j],
        [0.368644 - 0.479381j, -0.113567 + 0.513171j, -0.443628 + 0.254345j, -0.218580 + 0.220861j],
        [0.169821 - 0.199957j, 0.206809 - 0.447012j, 0.177488 + 0.271570j, -0.723490 - 0.244741j],
        [-0.654156 + 0.150721j, -0.444209 + 0.088396j, -0.315095 + 0.340811j, -0.234176 - 0.271940j],
    ],
    dtype=np.complex128,
)
UCOIN_RAW.setflags(write=False)


def unitarity_defect(a: NDArray) -> float:
    """Return max |A^dagger A - I| entrywise."""
    a = np.asarray(a)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))))


def nearest_unitary(a: NDArray) -> NDArray[np.complex128]:
    """Project a square matrix onto the unitary group, A (A^dagger A)^(-1/2)."""
    w, _ = polar(np.asarray(a, dtype=np.complex128))
    return w


def hadamard_coin(c: int) -> NDArray[np.complex128]:
    """
    Grover-type coin I - (2/c) * ones((c, c)).

    For c = 4 this is one half of the matrix with 1 on the diagonal and -1
    elsewhere; for c = 1 it is [-1].
    """
    if not isinstance(c, (int, np.integer)) or c < 1:
        raise SpecError(f"chirality dimension must be a positive integer, got {c!r}")
    return (np.eye(c) - (2.0 / c) * np.ones((c, c))).astype(np.complex128)


def _integer_rank(rows: list[list[int]]) -> int:
    """Exact rank of an integer matrix by Gaussian elimination over Q."""
    m = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def affine_rank(jumps) -> int:
    """Dimension of the affine span of a set of integer vectors."""
    base = jumps[0]
    diffs = [[int(a) - int(b) for a, b in zip(j, base)] for j in jumps[1:]]
    return _integer_rank(diffs) if diffs else 0


@dataclass(frozen=True, eq=False)
class WalkSpec:
    """
    One coined walk: lattice rank ``d``, chirality dimension ``c``, a c x c
    unitary ``coin`` and ``jumps``, a (c, d) integer array with row k = j(e_k).

    ``raw_coin`` keeps the coin as supplied when it had to be re-unitarized.
    Construction validates every invariant; pass ``require_span=False`` to
    admit jump sets that do not affinely span R^d (e.g. single-chirality
    translations).
    """

    d: int
    c: int
    coin: NDArray[np.complex128]
    jumps: NDArray[np.int64]
    raw_coin: NDArray[np.complex128] | None = None
    name: str = ""
    require_span: bool = field(default=True, repr=False)
    tol: float = field(default=UNITARY_TOL, repr=False)

    def __post_init__(self):
        d, c = self.d, self.c
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise SpecError(f"lattice rank d must be a positive integer, got {d!r}")
        if not isinstance(c, (int, np.integer)) or c < 1:
            raise SpecError(f"chirality dimension c must be a positive integer, got {c!r}")
        coin = np.array(self.coin, dtype=np.complex128)
        if coin.shape != (c, c):
            raise SpecError(f"coin must be {c}x{c}, got shape {coin.shape}")
        if not np.all(np.isfinite(coin)):
            raise SpecError("coin has non-finite entries")
        defect = unitarity_defect(coin)
        if defect > self.tol:
            raise SpecError(f"coin is not unitary: max|U^H U - I| = {defect:.3e} > {self.tol:g}")
        raw = np.asarray(self.jumps)
        if raw.ndim != 2 or raw.shape != (c, d):
            raise SpecError(f"jumps must be {c} vectors of length {d}, got shape {raw.shape}")
        if raw.dtype.kind == "f" and not np.all(raw == np.round(raw)):
            raise SpecError("jump vectors must have integer coordinates")
        if raw.dtype.kind not in "iuf":
            raise SpecError("jump vectors must have integer coordinates")
        jumps = raw.astype(np.int64)
        if self.require_span and affine_rank(jumps.tolist()) != d:
            raise SpecError(f"jumps do not affinely span R^{d}")
        coin.setflags(write=False)
        jumps.setflags(write=False)
        object.__setattr__(self, "coin", coin)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "c", int(c))
        if self.raw_coin is not None:
            rc = np.array(self.raw_coin, dtype=np.complex128)
            rc.setflags(write=False)
            object.__setattr__(self, "raw_coin", rc)

    def __eq__(self, other):
        if not isinstance(other, WalkSpec):
            return NotImplemented
        return (
            self.d == other.d
            and self.c == other.c
            and np.array_equal(self.coin, other.coin)
            and np.array_equal(self.jumps, other.jumps)
        )

    __hash__ = None

    @property
    def jump_min(self) -> NDArray[np.int64]:
        return self.jumps.min(axis=0)

    @property
    def jump_max(self) -> NDArray[np.int64]:
        return self.jumps.max(axis=0)

    def with_coin(self, coin, name: str = "") -> "WalkSpec":
        return WalkSpec(self.d, self.c, coin, self.jumps, name=name, require_span=self.require_span)


_SPEC_KEYS = {"d", "c", "coin_re", "coin_im", "jumps"}


def parse_walk_spec(document: str | dict, require_span: bool = True) -> WalkSpec:
    """
    Parse a JSON walk specification::

        {"d": 2, "c": 4, "coin_re": [[...]], "coin_im": [[...]], "jumps": [[0, 0], ...]}

    Unknown or missing keys are rejected.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpecError(f"malformed walk spec: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise SpecError("walk spec must be a JSON object")
    keys = set(doc)
    if keys - _SPEC_KEYS:
        raise SpecError(f"unknown fields: {sorted(keys - _SPEC_KEYS)}")
    if _SPEC_KEYS - keys:
        raise SpecError(f"missing fields: {sorted(_SPEC_KEYS - keys)}")
    d, c = doc["d"], doc["c"]
    for key in ("d", "c"):
        if isinstance(doc[key], bool) or not isinstance(doc[key], int):
            raise SpecError(f"{key} must be an integer")
    try:
        re = np.array(doc["coin_re"], dtype=float)
        im = np.array(doc["coin_im"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"coin entries must be numbers: {exc}") from exc
    if re.shape != (c, c) or im.shape != (c, c):
        raise SpecError(f"coin_re and coin_im must be {c}x{c}")
    jumps = doc["jumps"]
    if not isinstance(jumps, list) or len(jumps) != c:
        raise SpecError(f"expected {c} jump vectors")
    for j in jumps:
        if not isinstance(j, list) or len(j) != d:
            raise SpecError(f"each jump must have exactly {d} coordinates")
        if any(isinstance(x, bool) or not isinstance(x, int) for x in j):
            raise SpecError("jump coordinates must be integers")
    return WalkSpec(d, c, re + 1j * im, np.array(jumps, dtype=np.int64).reshape(c, d),
                    require_span=require_span)


def render_walk_spec(spec: WalkSpec) -> str:
    doc = {
        "d": spec.d,
        "c": spec.c,
        "coin_re": spec.coin.real.tolist(),
        "coin_im": spec.coin.imag.tolist(),
        "jumps": spec.jumps.tolist(),
    }
    return json.dumps(doc)


def load_walk_spec(path, require_span: bool = True) -> WalkSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_walk_spec(fh.read(), require_span=require_span)


def normalize_state(u, c: int, tol: float = 1e-12) -> NDArray[np.complex128]:
    """Validate an initial chirality vector: length c and unit norm."""
    u = np.asarray(u, dtype=np.complex128).reshape(-1)
    if u.shape != (c,):
        raise SpecError(f"chirality vector must have {c} entries, got {u.shape[0]}")
    if abs(np.linalg.norm(u) - 1.0) > tol:
        raise SpecError(f"chirality vector must have unit norm, got {np.linalg.norm(u):.15g}")
    return u


class Polytope:
    """
    Convex hull of a finite point set in R^d with a tolerant membership test.

    Degenerate (lower-dimensional) hulls are handled by working in the affine
    span: a point is a member when it lies within ``tol`` of the span and its
    projection lies in the reduced hull.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("need a non-empty (n, d) point array")
        self.points = pts
        self.d = pts.shape[1]
        self.lo = pts.min(axis=0)
        self.hi = pts.max(axis=0)
        self.origin = pts[0]
        diffs = pts - self.origin
        if len(pts) > 1:
            _, s, vt = np.linalg.svd(diffs, full_matrices=False)
            r = int(np.sum(s > 1e-9 * max(1.0, s[0])))
        else:
            vt, r = np.zeros((0, self.d)), 0
        self.rank = r
        self.basis = vt[:r]
        reduced = diffs @ self.basis.T
        if r == 0:
            self._equations = None
            self.vertices = pts[:1].copy()
        elif r == 1:
            x = reduced[:, 0]
            self._interval = (x.min(), x.max())
            self._equations = None
            self.vertices = pts[[int(np.argmin(x)), int(np.argmax(x))]]
        else:
            hull = ConvexHull(reduced)
            self._equations = hull.equations
            self.vertices = pts[np.sort(hull.vertices)]

    def contains(self, rho, tol: float = 1e-9) -> NDArray[np.bool_] | bool:
        """Membership of one point (d,) or many (n, d) within ``tol``."""
        q = np.asarray(rho, dtype=float)
        single = q.ndim == 1
        q = np.atleast_2d(q)
        diffs = q - self.origin
        red = diffs @ self.basis.T
        off = np.linalg.norm(diffs - red @ self.basis, axis=1)
        ok = off <= tol
        if self.rank == 1:
            a, b = self._interval
            ok &= (red[:, 0] >= a - tol) & (red[:, 0] <= b + tol)
        elif self.rank >= 2:
            eq = self._equations
            ok &= np.all(red @ eq[:, :-1].T + eq[:, -1] <= tol, axis=1)
        return bool(ok[0]) if single else ok


def jump_polytope(spec: WalkSpec) -> Polytope:
    return Polytope(spec.jumps)


def _ucoin() -> NDArray[np.complex128]:
    return nearest_unitary(UCOIN_RAW)


def fixture(name: str) -> WalkSpec:
    """
    Named example walks.

    ``hadamard-j1`` .. ``hadamard-j4`` use the c=4 Grover coin and
    ``ucoin-j1`` .. ``ucoin-j4`` the re-unitarized six-digit random coin,
    with the four jump maps of :data:`JUMP_MAPS`.  ``shift-d1`` and
    ``shift-d2`` are single-chirality translations (coin [1], jump e_1),
    admitted without the affine-span check.
    """
    if name in FIXTURES:
        return FIXTURES[name]()
    raise SpecError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")


def _make(coin_name: str, jump_name: str):
    def build() -> WalkSpec:
        jumps = np.array(JUMP_MAPS[jump_name])
        if coin_name == "hadamard":
            return WalkSpec(2, 4, hadamard_coin(4), jumps, name=f"hadamard-{jump_name}")
        return WalkSpec(2, 4, _ucoin(), jumps, raw_coin=UCOIN_RAW, name=f"ucoin-{jump_name}")
    return build


def _shift(d: int):
    def build() -> WalkSpec:
        jump = np.zeros((1, d), dtype=np.int64)
        jump[0, 0] = 1
        return WalkSpec(d, 1, np.ones((1, 1)), jump, name=f"shift-d{d}", require_span=False)
    return build


FIXTURES = {f"{coin}-{j}": _make(coin, j) for coin in ("hadamard", "ucoin") for j in JUMP_MAPS}
FIXTURES["shift-d1"] = _shift(1)
FIXTURES["shift-d2"] = _shift(2)

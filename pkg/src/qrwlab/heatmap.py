"""Plain-PGM (P2) heatmaps of probability fields and histograms."""

from __future__ import annotations

import textwrap

import numpy as np
from numpy.typing import NDArray

__all__ = ["MAXVAL", "gray_levels", "render_heatmap", "write_pgm", "read_pgm", "read_field_csv"]

MAXVAL = 65535
LOG_EPS = 1e-12


def gray_levels(values, gamma: float = 0.5, log_scale: bool = False) -> NDArray[np.int64]:
    """
    Map nonnegative data to 0..65535.

    Linear mode uses (v / v_max)^gamma; log mode uses
    log(1 + v/eps) / log(1 + v_max/eps) with eps = 1e-12.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot render an empty field")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("heatmap data must be finite and nonnegative")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    vmax = v.max()
    if vmax == 0:
        return np.zeros(v.shape, dtype=np.int64)
    if log_scale:
        scaled = np.log1p(v / LOG_EPS) / np.log1p(vmax / LOG_EPS)
    else:
        scaled = (v / vmax) ** gamma
    return np.rint(np.clip(scaled, 0.0, 1.0) * MAXVAL).astype(np.int64)


def _as_image(values) -> NDArray:
    """Arrange a 1-d or 2-d field [x, y] as image rows (y decreasing downwards)."""
    v = np.asarray(values)
    if v.ndim == 1:
        return v[None, :]
    if v.ndim == 2:
        return v.T[::-1]
    raise ValueError(f"can only render 1-d or 2-d fields, got {v.ndim}-d")


def render_heatmap(values, gamma: float = 0.5, log_scale: bool = False, comments=()) -> bytes:
    """Plain PGM bytes for a field indexed [x] or [x, y]; x runs left to right, y bottom to top."""
    img = _as_image(gray_levels(values, gamma, log_scale))
    h, w = img.shape
    out = ["P2"]
    for c in comments:
        out += [f"# {part}" for part in textwrap.wrap(c, 68, break_long_words=True, break_on_hyphens=False) or [""]]
    out += [f"{w} {h}", str(MAXVAL)]
    for row in img:
        line = ""
        for px in map(str, row):
            if line and len(line) + 1 + len(px) > 70:
                out.append(line)
                line = px
            else:
                line = f"{line} {px}" if line else px
        out.append(line)
    return ("\n".join(out) + "\n").encode("ascii")


def write_pgm(path, values, gamma: float = 0.5, log_scale: bool = False, comments=()) -> None:
    with open(path, "wb") as fh:
        fh.write(render_heatmap(values, gamma, log_scale, comments))


def read_pgm(data: bytes) -> NDArray[np.int64]:
    """Parse plain PGM bytes back into an image array (rows top to bottom)."""
    tokens = []
    for line in data.decode("ascii").splitlines():
        line = line.split("#", 1)[0]
        tokens += line.split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM")
    w, h = int(tokens[1]), int(tokens[2])
    return np.array([int(t) for t in tokens[4:4 + w * h]], dtype=np.int64).reshape(h, w)


def read_field_csv(path) -> NDArray[np.float64]:
    """
    Dense array from a probability-field CSV (``k1..kd,p_total,...``) over
    the bounding box of the listed sites.
    """
    rows = []
    d = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            if line.startswith("k1"):
                header = line.strip().split(",")
                d = header.index("p_total")
                continue
            rows.append(line.strip().split(","))
    if d is None:
        raise ValueError(f"{path}: no probability-field header")
    if not rows:
        raise ValueError(f"{path}: empty field")
    sites = np.array([[int(x) for x in r[:d]] for r in rows])
    p = np.array([float(r[d]) for r in rows])
    lo = sites.min(axis=0)
    shape = tuple(sites.max(axis=0) - lo + 1)
    field = np.zeros(shape)
    field[tuple((sites - lo).T)] = p
    return field

"""
Fourier-side evolution through the unitary symbol M(xi) = Delta(xi) U.

The generating matrix of the amplitude operators is M^T, so sampling M(xi)^T
on an N^d torus grid and inverting the discrete transform recovers A_T(k)
exactly whenever N exceeds the support width of A_T on every axis.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .core import WalkSpec, normalize_state
from .evolve import LatticeWindow, StateField, evolve

__all__ = [
    "AliasingError",
    "transfer_matrix",
    "symbol",
    "torus_grid",
    "matrix_power",
    "matrix_power_iterated",
    "min_grid",
    "symbol_powers",
    "amplitudes_via_dft",
    "operator_via_dft",
    "equivalence_report",
    "dump_symbol_powers",
    "read_symbol_dump",
]


class AliasingError(ValueError):
    """Torus grid too coarse to resolve the amplitude support."""


def symbol(spec: WalkSpec, xi) -> NDArray[np.complex128]:
    """
    M(xi) for one phase vector (d,) or a batch (..., d); returns (..., c, c).
    """
    xi = np.asarray(xi, dtype=float)
    phases = np.exp(1j * (xi @ spec.jumps.T.astype(float)))
    return phases[..., :, None] * spec.coin


def transfer_matrix(spec: WalkSpec, xi) -> NDArray[np.complex128]:
    """M(xi) = diag(exp(i <xi, j_l>)) U for a single torus point."""
    xi = np.asarray(xi, dtype=float).reshape(spec.d)
    return symbol(spec, xi)


def torus_grid(n: int, d: int, offset: float = 0.0) -> NDArray[np.float64]:
    """Grid points xi = 2 pi (idx + offset) / n as an (n,)*d + (d,) array."""
    axis = 2 * np.pi * (np.arange(n) + offset) / n
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack(mesh, axis=-1)


def matrix_power(m: NDArray, T: int) -> NDArray:
    """Batched M^T by repeated squaring over the trailing two axes."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    result = np.broadcast_to(np.eye(m.shape[-1], dtype=m.dtype), m.shape).copy()
    base = m.copy()
    while T:
        if T & 1:
            result = result @ base
        T >>= 1
        if T:
            base = base @ base
    return result


def matrix_power_iterated(m: NDArray, T: int) -> NDArray:
    result = np.broadcast_to(np.eye(m.shape[-1], dtype=m.dtype), m.shape).copy()
    for _ in range(T):
        result = result @ m
    return result


def min_grid(spec: WalkSpec, T: int) -> int:
    """Smallest per-axis grid size free of aliasing: T * max span of the jumps + 1."""
    span = spec.jump_max - spec.jump_min
    return int(T * span.max()) + 1


def symbol_powers(spec: WalkSpec, T: int, grid_n: int) -> NDArray[np.complex128]:
    """M(2 pi n / N)^T on the unshifted grid, shape (N,)*d + (c, c)."""
    xi = torus_grid(grid_n, spec.d)
    return matrix_power(symbol(spec, xi), T)


def _check_grid(spec: WalkSpec, T: int, grid_n: int) -> None:
    need = min_grid(spec, T)
    if grid_n < need:
        raise AliasingError(f"grid_n={grid_n} aliases the T={T} support; need at least {need}")


def _to_window(spec: WalkSpec, T: int, coeffs: NDArray, lead: int) -> tuple[LatticeWindow, NDArray]:
    """
    Place DFT coefficients (lead axes, then N^d spatial) onto the evolve window.

    Site k is read from frequency index k mod N, only inside the support box
    [T jmin, T jmax]; everything else in the window is zero.
    """
    window = LatticeWindow.for_horizon(spec, T)
    n = coeffs.shape[-1]
    out = np.zeros(coeffs.shape[:lead] + window.shape, dtype=np.complex128)
    src, dst = [], []
    for a in range(spec.d):
        ks = np.arange(T * spec.jump_min[a], T * spec.jump_max[a] + 1)
        src.append(np.mod(ks, n))
        dst.append(ks - window.lo[a])
    out[(Ellipsis,) + np.ix_(*dst)] = coeffs[(Ellipsis,) + np.ix_(*src)]
    return window, out


def operator_via_dft(spec: WalkSpec, T: int, grid_n: int | None = None) -> tuple[LatticeWindow, NDArray]:
    """All A_T(k) as ``A[v, u, *site]`` from the inverse transform of M^T."""
    grid_n = min_grid(spec, T) if grid_n is None else grid_n
    _check_grid(spec, T, grid_n)
    d = spec.d
    mt = symbol_powers(spec, T, grid_n)
    # (N..., v, u) -> (v, u, N...)
    mt = np.moveaxis(mt, (-2, -1), (0, 1))
    coeffs = np.fft.fftn(mt, axes=tuple(range(2, 2 + d))) / grid_n**d
    return _to_window(spec, T, coeffs, 2)


def amplitudes_via_dft(spec: WalkSpec, u, T: int, grid_n: int | None = None) -> StateField:
    """
    The state S^T (delta_0 (x) u) computed on the Fourier side.

    A_T(k) u = N^-d sum_n exp(-i <k, xi_n>) M(xi_n)^T u over the N^d grid.
    """
    u = normalize_state(u, spec.c)
    grid_n = min_grid(spec, T) if grid_n is None else grid_n
    _check_grid(spec, T, grid_n)
    d = spec.d
    vec = symbol_powers(spec, T, grid_n) @ u
    vec = np.moveaxis(vec, -1, 0)
    coeffs = np.fft.fftn(vec, axes=tuple(range(1, 1 + d))) / grid_n**d
    window, amps = _to_window(spec, T, coeffs, 1)
    return StateField(spec, window, amps, T)


def equivalence_report(spec: WalkSpec, u, T: int, grid_n: int | None = None) -> float:
    """max over sites and chiralities of |A_dft - A_direct|."""
    a = amplitudes_via_dft(spec, u, T, grid_n)
    b = evolve(spec, u, T)
    return float(np.max(np.abs(a.amps - b.amps)))


def dump_symbol_powers(path, spec: WalkSpec, T: int, grid_n: int) -> None:
    """
    Raw M(xi)^T grid: ASCII header ``"c d N T\\n"`` then little-endian float64
    (re, im) pairs in row-major order over (grid..., row, col).
    """
    mt = symbol_powers(spec, T, grid_n)
    pairs = np.stack([mt.real, mt.imag], axis=-1).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(f"{spec.c} {spec.d} {grid_n} {T}\n".encode("ascii"))
        fh.write(pairs.tobytes(order="C"))


def read_symbol_dump(path) -> tuple[int, int, int, int, NDArray[np.complex128]]:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        c, d, n, T = (int(x) for x in header)
        raw = np.frombuffer(fh.read(), dtype="<f8")
    expected = n**d * c * c * 2
    if raw.size != expected:
        raise ValueError(f"{path}: expected {expected} floats, found {raw.size}")
    pairs = raw.reshape((n,) * d + (c, c, 2))
    return c, d, n, T, pairs[..., 0] + 1j * pairs[..., 1]


"""Vector fields on regular grids: mollified loop currents, superpositions of
loops, divergence diagnostics and mollified point masses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, spectral
from .geometry import Curve

__all__ = [
    "WidthTooSmall",
    "BoundaryTooClose",
    "FieldGrid",
    "grid_around",
    "loop_current",
    "smirnov_superpose",
    "DivergenceReport",
    "divergence",
    "dirac_family",
    "bump_profile",
]

MIN_CELLS = 16


class WidthTooSmall(ValueError):
    pass


class BoundaryTooClose(ValueError):
    pass


@dataclass
class FieldGrid:
    """Samples ``data[i_1, ..., i_d, c]`` at nodes ``origin + i * spacing``."""

    data: np.ndarray
    spacing: float
    origin: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.spacing = float(self.spacing)
        self.origin = np.asarray(self.origin, dtype=np.float64)
        d = len(self.origin)
        if d not in (2, 3):
            raise ValueError("grids are 2- or 3-dimensional")
        if self.data.ndim != d + 1:
            raise ValueError(f"data must have shape (*grid, ncomp) with {d} grid axes")
        if min(self.data.shape[:d]) < MIN_CELLS:
            raise ValueError(f"need at least {MIN_CELLS} cells per axis")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def dim(self) -> int:
        return len(self.origin)

    @property
    def shape(self) -> tuple:
        return self.data.shape[: self.dim]

    @property
    def ncomp(self) -> int:
        return self.data.shape[-1]

    @property
    def spacing_vector(self) -> np.ndarray:
        return np.full(self.dim, self.spacing)

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axes(self) -> list:
        return [self.origin[j] + self.spacing * np.arange(n) for j, n in enumerate(self.shape)]

    def points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.data, axis=-1)

    def l1_mass(self) -> float:
        return float(self.cell_volume * np.sum(self.magnitude()))

    def with_data(self, data) -> "FieldGrid":
        return FieldGrid(np.asarray(data), self.spacing, self.origin.copy())

    def index_of(self, x) -> tuple:
        """Grid index of the node at ``x`` (must be a node up to round-off)."""
        q = (np.asarray(x, float) - self.origin) / self.spacing
        i = np.rint(q).astype(int)
        if np.max(np.abs(q - i)) > 1e-6:
            raise ValueError("point is not a grid node")
        return tuple(i)

    def __eq__(self, other):
        if not isinstance(other, FieldGrid):
            return NotImplemented
        return (
            self.spacing == other.spacing
            and np.array_equal(self.origin, other.origin)
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )


def grid_around(center, n: int, side: float, dim: int, ncomp: int = None) -> FieldGrid:
    """Zero field on an ``n^dim`` grid of the given side length whose node
    ``n // 2`` along every axis sits at ``center``."""
    h = side / n
    c = np.zeros(dim) if center is None else np.asarray(center, float)
    origin = c - (n // 2) * h
    return FieldGrid(np.zeros((n,) * dim + (ncomp or dim,)), h, origin)


def bump_profile(r):
    """1-d C^2 compactly supported bump on [-1, 1] with unit integral."""
    r = np.abs(np.asarray(r, float))
    return np.where(r < 1, 1.5 * (1 - r) ** 4 * (4 * r + 1), 0.0)


def _curve_quadrature(curve: Curve, max_piece: float):
    """Gauss-Legendre points (3 per piece) along the curve and their vector
    weights ``w * gamma'``."""
    gx, gw = np.polynomial.legendre.leggauss(3)
    starts, vecs, lens = curve.edge_starts, curve.edge_vectors, curve.edge_lengths
    keep = lens > 0
    starts, vecs, lens = starts[keep], vecs[keep], lens[keep]
    npc = np.maximum(1, np.ceil(lens / max_piece).astype(int))
    rep = np.repeat(np.arange(len(lens)), npc)
    piece = np.concatenate([np.arange(n) for n in npc])
    frac_lo = piece / npc[rep]
    frac_w = 1.0 / npc[rep]
    u = frac_lo[:, None] + frac_w[:, None] * 0.5 * (gx[None, :] + 1)  # (P, 3)
    pts = starts[rep][:, None, :] + u[..., None] * vecs[rep][:, None, :]
    wts = (frac_w[:, None] * 0.5 * gw[None, :])[..., None] * vecs[rep][:, None, :]
    return pts.reshape(-1, curve.dim), wts.reshape(-1, curve.dim)


def _check_support(grid: FieldGrid, pts: np.ndarray, width: float):
    lo = grid.origin
    hi = grid.origin + grid.spacing * (np.array(grid.shape) - 1)
    pad = width + 4 * grid.spacing
    if np.any(pts.min(axis=0) - pad < lo) or np.any(pts.max(axis=0) + pad > hi):
        raise BoundaryTooClose(
            "support plus mollifier must stay width + 4h inside the grid; enlarge the box"
        )


def loop_current(
    curve: Curve, width: float, grid: FieldGrid, project: bool = True, weight: float = 1.0, symbol: str | None = None
) -> FieldGrid:
    """Mollified curve current mu_Gamma * phi_width on ``grid``.

    The curve is split into pieces no longer than h/2 and each piece is
    deposited at three Gauss-Legendre points with the tensor-product bump of
    half-width ``width``.  With ``project`` the discrete field is projected
    onto spectrally divergence-free fields (``symbol`` as in
    :mod:`loopforge.spectral`); the relative spectral divergence before
    projection is stored in ``result.pre_projection_divergence``.
    """
    h = grid.spacing
    if width < 2 * h:
        raise WidthTooSmall(f"width {width} is below 2h = {2 * h}")
    if curve.dim != grid.dim:
        raise ValueError("curve and grid dimensions differ")
    pts, wts = _curve_quadrature(curve, h / 2)
    _check_support(grid, pts, width)
    out = np.zeros((int(np.prod(grid.shape)), grid.dim))
    _kernels.deposit_bumps(
        np.ascontiguousarray(pts),
        np.ascontiguousarray(weight * wts),
        grid.origin,
        h,
        float(width),
        np.array(grid.shape, dtype=np.int64),
        out,
    )
    data = out.reshape(grid.shape + (grid.dim,))
    _, rel = spectral.spectral_divergence(data, h, symbol)
    if project:
        data = spectral.leray_project(data, h, symbol)
    res = grid.with_data(data)
    res.pre_projection_divergence = rel
    return res


def smirnov_superpose(curves, weights, width: float, grid: FieldGrid, project: bool = True, symbol: str | None = None) -> FieldGrid:
    """sum_i w_i (mu_Gamma_i * phi_width)."""
    if len(curves) != len(weights):
        raise ValueError("one weight per curve")
    acc = np.zeros(grid.shape + (grid.dim,))
    for c, w in zip(curves, weights):
        acc += loop_current(c, width, grid, project=False, weight=float(w)).data
    if project:
        acc = spectral.leray_project(acc, grid.spacing, symbol)
    return grid.with_data(acc)


@dataclass
class DivergenceReport:
    values: np.ndarray
    max_abs: float
    relative: float  # max |div| * h / ||F||_1


def divergence(grid: FieldGrid, boundary: str = "periodic") -> DivergenceReport:
    """Central-difference divergence with periodic or zero-padded ends."""
    if boundary not in ("periodic", "zero"):
        raise ValueError("boundary must be 'periodic' or 'zero'")
    h = grid.spacing
    div = np.zeros(grid.shape)
    for j in range(grid.dim):
        f = grid.data[..., j]
        if boundary == "periodic":
            div += (np.roll(f, -1, axis=j) - np.roll(f, 1, axis=j)) / (2 * h)
        else:
            pad = [(0, 0)] * grid.dim
            pad[j] = (1, 1)
            g = np.pad(f, pad)
            sl_p = [slice(None)] * grid.dim
            sl_m = [slice(None)] * grid.dim
            sl_p[j] = slice(2, None)
            sl_m[j] = slice(None, -2)
            div += (g[tuple(sl_p)] - g[tuple(sl_m)]) / (2 * h)
    mx = float(np.max(np.abs(div)))
    mass = grid.l1_mass()
    return DivergenceReport(div, mx, mx * h / mass if mass > 0 else 0.0)


def dirac_family(widths, grid: FieldGrid, center=None) -> list:
    """Scalar bumps of unit discrete mass (h^d sum f = 1) at ``center`` for
    each width in ``widths``."""
    c = grid.origin + grid.spacing * (np.array(grid.shape) // 2) if center is None else np.asarray(center, float)
    out = []
    for w in widths:
        if w < 2 * grid.spacing:
            raise WidthTooSmall(f"width {w} is below 2h")
        _check_support(grid, c[None, :], w)
        buf = np.zeros((int(np.prod(grid.shape)), 1))
        _kernels.deposit_bumps(
            np.ascontiguousarray(c[None, :]),
            np.ones((1, 1)),
            grid.origin,
            grid.spacing,
            float(w),
            np.array(grid.shape, dtype=np.int64),
            buf,
        )
        out.append(FieldGrid(buf.reshape(grid.shape + (1,)), grid.spacing, grid.origin.copy()))
    return out


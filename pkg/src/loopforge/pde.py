"""Fourier-multiplier solvers on periodic grids: Riesz transforms, Riesz
potentials, the div-curl system and the vector Poisson equation.

Every operator uses the derivative symbol of :mod:`loopforge.spectral`, so
curl, div, grad and the Laplacian compose exactly as their continuous
counterparts do.  The zero mode and the dead Nyquist modes are set to zero
in every inverse multiplier; inputs are expected to be mean-free, which
compactly supported currents are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .fields import FieldGrid

__all__ = [
    "NotSolenoidal",
    "DimensionTooSmall",
    "SpectralGrid",
    "riesz_transform",
    "riesz_potential_spectral",
    "solve_divcurl",
    "DivCurlResiduals",
    "divcurl_residuals",
    "compare_divcurl_paths",
    "solve_poisson_vec",
    "PoissonResiduals",
    "poisson_residuals",
    "spectral_curl",
    "riesz_potential_free",
    "current_moment",
    "ExteriorTail",
    "exterior_tail",
]

DIV_TOL = 1e-6


class NotSolenoidal(ValueError):
    pass


class DimensionTooSmall(ValueError):
    pass


class SpectralGrid:
    """Frequency lattice of a FieldGrid together with its forward transform."""

    def __init__(self, grid: FieldGrid, symbol: str | None = None):
        self.grid = grid
        self.dim = grid.dim
        self.kv = spectral.wavevectors(grid.shape, grid.spacing, symbol)
        self.k2 = spectral.k_squared(self.kv)
        self.live = spectral.live_modes(grid.shape, self.kv)
        self.kabs = np.sqrt(self.k2)
        self.hat = spectral.fftn(grid.data, self.dim)

    def inverse_power(self, alpha: float) -> np.ndarray:
        """|k|^(-alpha) with the dead modes set to zero."""
        out = np.zeros_like(self.k2)
        out[self.live] = self.kabs[self.live] ** (-alpha)
        return out

    def riesz_symbol(self, i: int) -> np.ndarray:
        out = np.zeros_like(self.k2, dtype=complex)
        out[self.live] = 1j * np.broadcast_to(self.kv[i], self.k2.shape)[self.live] / self.kabs[self.live]
        return out

    def back(self, hat) -> np.ndarray:
        return spectral.ifftn(hat, self.dim).real

    def to_grid(self, hat) -> FieldGrid:
        return self.grid.with_data(self.back(hat))

    def roundtrip_error(self) -> float:
        d = self.grid.data
        return float(np.max(np.abs(self.back(self.hat) - d)) / max(np.max(np.abs(d)), 1e-300))


def _sg(grid, symbol) -> SpectralGrid:
    return grid if isinstance(grid, SpectralGrid) else SpectralGrid(grid, symbol)


def riesz_transform(grid: FieldGrid, i: int, symbol: str | None = None) -> FieldGrid:
    """R_i applied componentwise: multiplier i k_i / |k|."""
    sg = _sg(grid, symbol)
    if not 0 <= i < sg.dim:
        raise ValueError(f"axis {i} out of range")
    m = sg.riesz_symbol(i)
    return sg.to_grid(m[..., None] * sg.hat)


def riesz_potential_spectral(grid: FieldGrid, alpha: float, symbol: str | None = None) -> FieldGrid:
    """I_a applied componentwise: multiplier |k|^(-a)."""
    if not 0 < alpha < grid.dim:
        raise ValueError("alpha must lie in (0, d)")
    sg = _sg(grid, symbol)
    return sg.to_grid(sg.inverse_power(alpha)[..., None] * sg.hat)


def _cross(kv, v):
    # k x v for broadcastable k (3 arrays) and v (..., 3)
    return np.stack(
        [kv[1] * v[..., 2] - kv[2] * v[..., 1], kv[2] * v[..., 0] - kv[0] * v[..., 2], kv[0] * v[..., 1] - kv[1] * v[..., 0]],
        axis=-1,
    )


def spectral_curl(grid: FieldGrid, symbol: str | None = None) -> FieldGrid:
    sg = _sg(grid, symbol)
    if sg.dim != 3 or sg.grid.ncomp != 3:
        raise ValueError("curl needs a 3-component field in three dimensions")
    return sg.to_grid(1j * _cross(sg.kv, sg.hat))


def _require_divcurl(F: FieldGrid, tol: float, symbol):
    if F.dim != 3 or F.ncomp != 3:
        raise DimensionTooSmall("the div-curl system is solved for 3-component fields in three dimensions")
    _, rel = spectral.spectral_divergence(F.data, F.spacing, symbol)
    if rel > tol:
        raise NotSolenoidal(f"relative spectral divergence {rel:.3e} exceeds {tol:.1e}")


def solve_divcurl(F: FieldGrid, d: int = 3, path: str = "laplacian", tol: float = DIV_TOL, symbol: str | None = None) -> FieldGrid:
    """Z with curl Z = F and div Z = 0.

    ``path="laplacian"`` forms curl (-Delta)^(-1) F; ``path="riesz"``
    assembles Z_1 = R_2 (I_1 F_3) - R_3 (I_1 F_2) and its cyclic
    permutations.
    """
    if d != F.dim:
        raise ValueError("d must match the grid dimension")
    _require_divcurl(F, tol, symbol)
    sg = SpectralGrid(F, symbol)
    if path == "laplacian":
        inv = np.zeros_like(sg.k2)
        inv[sg.live] = 1.0 / sg.k2[sg.live]
        Zh = 1j * _cross(sg.kv, sg.hat * inv[..., None])
    elif path == "riesz":
        G = sg.hat * sg.inverse_power(1.0)[..., None]
        R = [sg.riesz_symbol(i) for i in range(3)]
        Zh = np.stack(
            [R[1] * G[..., 2] - R[2] * G[..., 1], R[2] * G[..., 0] - R[0] * G[..., 2], R[0] * G[..., 1] - R[1] * G[..., 0]],
            axis=-1,
        )
    else:
        raise ValueError("path must be 'laplacian' or 'riesz'")
    return sg.to_grid(Zh)


@dataclass
class DivCurlResiduals:
    curl: float  # ||curl Z - F||_2 / ||F||_2 over live modes
    div: float  # ||div Z||_2 / (||k|| ||Z^||)_2
    dead_fraction: float  # share of ||F||_2 on modes the solver cannot see


def divcurl_residuals(F: FieldGrid, Z: FieldGrid, symbol: str | None = None) -> DivCurlResiduals:
    """Spectral residuals of the div-curl system, via Parseval."""
    sF = SpectralGrid(F, symbol)
    sZ = SpectralGrid(Z, symbol)
    live = sF.live[..., None]
    cz = 1j * _cross(sZ.kv, sZ.hat)
    nF = np.sqrt(np.sum(np.abs(sF.hat) ** 2))
    r_curl = np.sqrt(np.sum(np.abs(np.where(live, cz - sF.hat, 0.0)) ** 2)) / nF
    _, r_div = spectral.spectral_divergence(Z.data, Z.spacing, symbol)
    dead = np.sqrt(np.sum(np.abs(np.where(live, 0.0, sF.hat)) ** 2)) / nF
    return DivCurlResiduals(float(r_curl), float(r_div), float(dead))


def compare_divcurl_paths(F: FieldGrid, tol: float = DIV_TOL, symbol: str | None = None) -> float:
    """Relative max-norm difference between the two assemblies of Z."""
    a = solve_divcurl(F, path="laplacian", tol=tol, symbol=symbol).data
    b = solve_divcurl(F, path="riesz", tol=tol, symbol=symbol).data
    return float(np.max(np.abs(a - b)) / np.max(np.abs(a)))


def solve_poisson_vec(F: FieldGrid, alpha: float = 2, symbol: str | None = None):
    """U = I_2 F (so -Delta U = F) and grad U = R (I_1 F).

    ``gradU`` has ``ncomp * d`` components ordered ``c * d + j`` for
    d U_c / d x_j.
    """
    if alpha != 2:
        raise ValueError("only alpha = 2 is supported")
    if F.dim < 3:
        raise DimensionTooSmall("I_2 needs d >= 3")
    sg = SpectralGrid(F, symbol)
    U = sg.to_grid(sg.hat * sg.inverse_power(2.0)[..., None])
    G = sg.hat * sg.inverse_power(1.0)[..., None]
    parts = []
    for c in range(F.ncomp):
        for j in range(F.dim):
            parts.append(sg.riesz_symbol(j) * G[..., c])
    gradU = sg.to_grid(np.stack(parts, axis=-1))
    return U, gradU


@dataclass
class PoissonResiduals:
    laplace: float  # ||-Delta U - F|| / ||F|| over live modes
    gradient: float  # max |gradU - spectral grad U| / max |gradU|


def poisson_residuals(F: FieldGrid, U: FieldGrid, gradU: FieldGrid, symbol: str | None = None) -> PoissonResiduals:
    sF = SpectralGrid(F, symbol)
    sU = SpectralGrid(U, symbol)
    live = sF.live[..., None]
    lap = sU.k2[..., None] * sU.hat
    nF = np.sqrt(np.sum(np.abs(sF.hat) ** 2))
    r_lap = float(np.sqrt(np.sum(np.abs(np.where(live, lap - sF.hat, 0.0)) ** 2)) / nF)
    parts = []
    for c in range(U.ncomp):
        for j in range(U.dim):
            parts.append(1j * sU.kv[j] * sU.hat[..., c])
    g = sU.back(np.stack(parts, axis=-1))
    r_grad = float(np.max(np.abs(g - gradU.data)) / max(np.max(np.abs(gradU.data)), 1e-300))
    return PoissonResiduals(r_lap, r_grad)


def _origin_cell_average(alpha: float, d: int, n_dirs: int = 20000) -> float:
    """Mean of |x|^(a-d) over the unit cell [-1/2, 1/2]^d, by integrating
    rho(w)^a / a over directions (rho = distance to the cell boundary)."""
    W, wq = _directions(d, n_dirs)
    rho = 0.5 / np.max(np.abs(W), axis=1)
    return float(np.sum(rho**alpha) * wq / alpha)


NEAR_CELLS = 4


def _near_cell_averages(alpha: float, d: int, m: int, sub: int = 4, order: int = 8) -> np.ndarray:
    """Mean of |x|^(a-d) over the unit cells centred at integer offsets
    within ``m`` of the origin (tensor Gauss-Legendre on ``sub`` sub-cells per
    axis; the origin cell from the radial formula)."""
    gx, gw = np.polynomial.legendre.leggauss(order)
    u = ((np.arange(sub)[:, None] + 0.5 * (gx[None, :] + 1)) / sub - 0.5).ravel()
    wu = np.tile(gw / (2 * sub), sub)
    mesh = np.meshgrid(*([u] * d), indexing="ij")
    wq = np.ones(1)
    for _ in range(d):
        wq = np.multiply.outer(wq, wu)
    wq = wq.reshape(-1)
    idx = np.arange(-m, m + 1)
    out = np.empty((2 * m + 1,) * d)
    for off in np.ndindex(*out.shape):
        if all(idx[o] == 0 for o in off):
            out[off] = _origin_cell_average(alpha, d)
            continue
        r2 = sum((mesh[j].reshape(-1) + idx[o]) ** 2 for j, o in enumerate(off))
        out[off] = float(np.sum(wq * r2 ** ((alpha - d) / 2)))
    return out


def riesz_potential_free(grid: FieldGrid, alpha: float) -> FieldGrid:
    """I_a on R^d of the piecewise-constant field, evaluated at the nodes.

    Discrete convolution with |x|^(a-d) / gamma(a) through a zero-padded
    FFT, so no periodic images and no mean removal.  Each kernel entry is the
    kernel's average over its cell: quadrature near the origin, midpoint plus
    the second-order correction further out.
    """
    d = grid.dim
    if not 0 < alpha < d:
        raise ValueError("alpha must lie in (0, d)")
    h = grid.spacing
    shape = grid.shape
    big = tuple(2 * n for n in shape)
    ax = [h * np.minimum(np.arange(m), m - np.arange(m)) for m in big]
    r2 = sum(np.meshgrid(*[a * a for a in ax], indexing="ij", sparse=True))
    pw = alpha - d
    # far cells: midpoint value plus the h^2/24 Laplacian term of the cell average
    with np.errstate(divide="ignore"):
        K = np.where(r2 > 0, r2 ** (pw / 2) * (1.0 + h * h * pw * (pw + d - 2) / (24.0 * r2)), 0.0)
    near = _near_cell_averages(alpha, d, NEAR_CELLS)
    idx = np.arange(-NEAR_CELLS, NEAR_CELLS + 1)
    for off in np.ndindex(*near.shape):
        K[tuple(int(idx[o]) % m for o, m in zip(off, big))] = h**pw * near[off]
    K *= h**d / _riesz_gamma(alpha, d)
    Kh = spectral.sfft.rfftn(K, workers=-1)
    del K
    out = np.empty(grid.data.shape)
    sl = tuple(slice(0, n) for n in shape)
    for c in range(grid.ncomp):
        fh = spectral.sfft.rfftn(grid.data[..., c], s=big, workers=-1)
        out[..., c] = spectral.sfft.irfftn(fh * Kh, s=big, workers=-1)[sl]
    return grid.with_data(out)


# --- far field outside the periodic cell -----------------------------------
#
# A closed current F has zero total mass, so far away I_a F is governed by its
# first moments A_cj = int F_c x_j: with k(r) = r^-b / gamma(a), b = d - a,
#   I_a F ~ -A grad k,   grad I_a F ~ -A Hess k,   curl (-Delta)^-1 F = curl I_2 F.
# Norms over R^d add the distribution function of these asymptotics outside
# the box to the one sampled on the grid.


def current_moment(F: FieldGrid) -> np.ndarray:
    """A_cj = int F_c (x_j - x0_j) dx about the box centre."""
    lo, hi = _box(F)
    X = (F.points() - 0.5 * (lo + hi)).reshape(-1, F.dim)
    return F.data.reshape(-1, F.ncomp).T @ X * F.cell_volume


def _box(F: FieldGrid):
    h = F.spacing
    lo = F.origin - 0.5 * h
    hi = F.origin + (np.array(F.shape) - 0.5) * h
    return lo, hi


def _directions(d: int, n: int):
    if d == 2:
        a = 2 * np.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(a), np.sin(a)], axis=1), 2 * np.pi / n
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = np.pi * (1 + 5**0.5) * i
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1), 4 * np.pi / n


def _riesz_gamma(alpha, d):
    return math.pi ** (d / 2) * 2**alpha * math.gamma(alpha / 2) / math.gamma((d - alpha) / 2)


@dataclass
class ExteriorTail:
    """Distribution function of a far field |f| = a(w) r^-decay outside a box."""

    amplitude: np.ndarray  # a at each quadrature direction
    decay: float
    rho: np.ndarray  # distance from the box centre to its boundary per direction
    weight: float
    dim: int

    @property
    def s_max(self) -> float:
        return float(np.max(self.amplitude / self.rho**self.decay))

    def distribution(self, s):
        s = np.atleast_1d(np.asarray(s, float))
        out = np.empty(len(s))
        for i0 in range(0, len(s), 256):
            R = (self.amplitude[None, :] / s[i0 : i0 + 256, None]) ** (1.0 / self.decay)
            out[i0 : i0 + 256] = np.clip(R**self.dim - self.rho**self.dim, 0.0, None).sum(axis=1)
        return out * self.weight / self.dim


def exterior_tail(F: FieldGrid, kind: str, alpha: float = 2.0, n_dirs: int | None = None) -> ExteriorTail:
    """Exterior tail for a field derived from the closed current ``F``.

    ``kind`` is ``"potential"`` (I_a F), ``"gradient"`` (grad I_a F, one
    row per component of F) or ``"curl"`` (curl (-Delta)^-1 F, d = 3).
    """
    d = F.dim
    if kind == "curl" and d != 3:
        raise ValueError("curl tails need d = 3")
    if kind == "curl":
        alpha = 2.0
    if not 0 < alpha < d:
        raise ValueError("alpha must lie in (0, d)")
    W, wq = _directions(d, n_dirs or (4000 if d == 3 else 2000))
    A = current_moment(F)
    b = d - alpha
    C = 1.0 / _riesz_gamma(alpha, d)
    if kind == "potential":
        amp = np.linalg.norm(W @ A.T, axis=1) * C * b
        decay = b + 1
    elif kind in ("gradient", "curl"):
        # Hess k = C b r^(-b-2) ((b+2) w w^T - I)
        Hs = (b + 2) * W[:, :, None] * W[:, None, :] - np.eye(d)[None]
        G = np.einsum("cl,nlj->ncj", A, Hs) * C * b
        if kind == "gradient":
            amp = np.linalg.norm(G.reshape(len(W), -1), axis=1)
        else:
            Z = np.stack([G[:, 2, 1] - G[:, 1, 2], G[:, 0, 2] - G[:, 2, 0], G[:, 1, 0] - G[:, 0, 1]], axis=1)
            amp = np.linalg.norm(Z, axis=1)
        decay = b + 2
    else:
        raise ValueError("kind must be 'potential', 'gradient' or 'curl'")
    lo, hi = _box(F)
    c = 0.5 * (lo + hi)
    with np.errstate(divide="ignore"):
        t = np.where(W > 0, (hi - c) / W, np.where(W < 0, (lo - c) / W, np.inf))
    return ExteriorTail(amp, float(decay), t.min(axis=1), wq, d)

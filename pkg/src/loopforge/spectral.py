"""FFT helpers shared by the field generators and the spectral solvers.

All spectral operators share one derivative symbol per axis, so gradient,
divergence, curl, Laplacian and Riesz transforms satisfy the vector
identities exactly on the grid.  The default ``"exact"`` symbol is
``k = 2 pi fftfreq``.  ``"central"`` is ``sin(k h) / h``, the symbol of the
centred difference: fields projected with it are divergence-free for centred
differences too, but its inverse multipliers blow up near the Nyquist
frequency, so it is a diagnostic option only.

Modes with a Nyquist index along any axis are dead: a symbol there cannot
be both real-valued and odd, and treating such a mode as constant along
that axis makes its inverse response nonlocal.  Projection removes them
and every solver leaves them at zero.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as sfft

__all__ = ["wavevectors", "k_squared", "nyquist_mask", "live_modes", "fftn", "ifftn", "leray_project", "spectral_divergence"]


SYMBOL = "exact"


def wavevectors(shape, spacing, symbol: str | None = None) -> list:
    """Broadcastable derivative symbols, one array per axis."""
    symbol = symbol or SYMBOL
    if symbol not in ("central", "exact"):
        raise ValueError("symbol must be 'central' or 'exact'")
    d = len(shape)
    h = np.broadcast_to(np.asarray(spacing, float), (d,))
    out = []
    for j, n in enumerate(shape):
        k = 2 * np.pi * np.fft.fftfreq(n, d=h[j])
        if n % 2 == 0:
            k[n // 2] = 0.0
        if symbol == "central":
            k = np.sin(k * h[j]) / h[j]
        sh = [1] * d
        sh[j] = n
        out.append(k.reshape(sh))
    return out


def k_squared(kv) -> np.ndarray:
    return sum(k * k for k in kv)


def nyquist_mask(shape) -> np.ndarray:
    """True on modes with a Nyquist index along some axis."""
    d = len(shape)
    m = np.zeros(shape, dtype=bool)
    for j, n in enumerate(shape):
        if n % 2 == 0:
            sl = [slice(None)] * d
            sl[j] = n // 2
            m[tuple(sl)] = True
    return m


def live_modes(shape, kv) -> np.ndarray:
    """Modes on which inverse multipliers act: nonzero symbol, not Nyquist."""
    return (k_squared(kv) > 0) & ~nyquist_mask(shape)


def fftn(a, d):
    return sfft.fftn(a, axes=tuple(range(d)), workers=-1)


def ifftn(a, d):
    return sfft.ifftn(a, axes=tuple(range(d)), workers=-1)


def leray_project(data: np.ndarray, spacing, symbol: str | None = None) -> np.ndarray:
    """Remove the gradient part of a periodic vector field (last axis holds
    the components): F - grad (-Delta)^(-1) (-div F), in Fourier space.
    Dead Nyquist modes are dropped as well."""
    d = data.shape[-1]
    kv = wavevectors(data.shape[:d], spacing, symbol)
    k2 = k_squared(kv)
    Fh = fftn(data, d)
    kdotF = sum(kv[j] * Fh[..., j] for j in range(d))
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(k2 > 0, kdotF / np.where(k2 > 0, k2, 1.0), 0.0)
    for j in range(d):
        Fh[..., j] -= kv[j] * coef
    Fh[nyquist_mask(data.shape[:d])] = 0.0
    return ifftn(Fh, d).real


def spectral_divergence(data: np.ndarray, spacing, symbol: str | None = None):
    """Spectral divergence and its size relative to the field:
    ||k . F^||_2 / ||(|k| |F^|)||_2 over the retained modes."""
    d = data.shape[-1]
    kv = wavevectors(data.shape[:d], spacing, symbol)
    Fh = fftn(data, d)
    kdotF = sum(kv[j] * Fh[..., j] for j in range(d))
    div = ifftn(1j * kdotF, d).real
    scale = np.sqrt(np.sum(k_squared(kv)[..., None] * np.abs(Fh) ** 2))
    rel = float(np.sqrt(np.sum(np.abs(kdotF) ** 2)) / scale) if scale > 0 else 0.0
    return div, rel

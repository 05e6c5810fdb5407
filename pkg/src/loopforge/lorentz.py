"""Decreasing rearrangements, Lorentz norms and the layer-cake functional.

Everything is evaluated exactly on the step function defined by the grid
samples: a cell of volume ``v`` holding value ``f`` contributes a level set of
volume ``v`` up to height ``|f|``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BadExponents",
    "RearrangedField",
    "rearrange",
    "lorentz_norm",
    "layercake_norm",
    "split_layercake",
    "lp_norm",
]


class BadExponents(ValueError):
    pass


@dataclass(frozen=True)
class RearrangedField:
    values: np.ndarray  # nonincreasing magnitudes
    cell_volume: float
    dropped: int = 0  # samples excluded as non-finite

    def __post_init__(self):
        if self.cell_volume <= 0:
            raise ValueError("cell volume must be positive")

    @property
    def n(self) -> int:
        return len(self.values)

    def distribution(self, s):
        """lambda(s) = |{|f| > s}|."""
        s = np.asarray(s, float)
        # values are descending; count of entries > s
        asc = self.values[::-1]
        cnt = self.n - np.searchsorted(asc, s, side="right")
        return self.cell_volume * cnt

    def dilated(self, lam: float, dim: int) -> "RearrangedField":
        """Rearrangement of f(. / lam)."""
        return RearrangedField(self.values, self.cell_volume * lam**dim, self.dropped)


def rearrange(field, cell_volume: float | None = None, ignore_nonfinite: bool = False) -> RearrangedField:
    """Sort sample magnitudes in decreasing order.

    ``field`` is a FieldGrid (magnitude taken over components) or an array
    of samples; for a plain array ``cell_volume`` is required and a trailing
    component axis is not assumed (pass magnitudes or scalars).
    """
    if hasattr(field, "data") and hasattr(field, "spacing"):
        mag = np.linalg.norm(field.data, axis=-1).ravel()
        vol = float(np.prod(field.spacing_vector))
    else:
        if cell_volume is None:
            raise ValueError("cell_volume is required for raw arrays")
        mag = np.abs(np.asarray(field, float)).ravel()
        vol = float(cell_volume)
    finite = np.isfinite(mag)
    dropped = int(np.sum(~finite))
    if dropped and not ignore_nonfinite:
        raise ValueError(f"{dropped} non-finite samples")
    vals = np.sort(mag[finite])[::-1]
    return RearrangedField(vals, vol, dropped)


def _check(p, q):
    if not (1.0 < p < np.inf):
        raise BadExponents(f"p must lie in (1, inf), got {p}")
    if not (q >= 1.0):
        raise BadExponents(f"q must lie in [1, inf], got {q}")


def _tail_excess(r: RearrangedField, power: float, tail, s_lo: float = 0.0, s_hi: float = np.inf, n: int = 4000, decades: float = 15.0) -> float:
    """int [(lam_g + lam_e)^power - lam_g^power] ds over [s_lo, s_hi] for an
    exterior distribution ``tail`` (``tail.distribution(s)``, zero above
    ``tail.s_max``); the part below 1e-15 s_max is dropped."""
    top = min(tail.s_max, s_hi)
    bottom = max(tail.s_max * 10.0**-decades, s_lo)
    if top <= bottom:
        return 0.0
    # midpoint rule in log s: no node sits on a jump of either distribution at the ends
    u = np.linspace(np.log(bottom), np.log(top), n + 1)
    s = np.exp(0.5 * (u[1:] + u[:-1]))
    asc = r.values[::-1]
    lg = r.cell_volume * (r.n - np.searchsorted(asc, s, side="right"))
    le = np.asarray(tail.distribution(s), float)
    f = (lg + le) ** power - lg**power
    return float(np.sum(f * s) * (u[1] - u[0]))


def lorentz_norm(r: RearrangedField, p: float, q: float, tail=None) -> float:
    """(int_0^inf (t^(1/p) f*(t))^q dt / t)^(1/q), or sup_t t^(1/p) f*(t) for q = inf.

    ``tail`` adds the distribution function of the field outside the sampled
    region (see :func:`loopforge.pde.exterior_tail`); only q = 1 supports it,
    via ||f||_(p,1) = p int_0^inf lambda(s)^(1/p) ds.
    """
    _check(p, q)
    if tail is not None:
        if q != 1:
            raise ValueError("exterior tails are supported for q = 1 only")
        return lorentz_norm(r, p, 1) + p * _tail_excess(r, 1.0 / p, tail)
    if r.n == 0:
        return 0.0
    v = r.values
    edges = r.cell_volume * np.arange(r.n + 1)
    if np.isinf(q):
        # t^(1/p) increases on each step, so the sup sits at the right ends
        return float(np.max(v * edges[1:] ** (1.0 / p)))
    e = q / p
    w = (p / q) * np.diff(edges**e)
    return float(np.sum(v**q * w) ** (1.0 / q))


def lp_norm(r: RearrangedField, p: float) -> float:
    return float((r.cell_volume * np.sum(r.values**p)) ** (1.0 / p))


def _level_volumes(r: RearrangedField):
    # on [v_(i+1), v_i) the level set {|f| > s} has i+1 cells
    v = r.values
    lower = np.append(v[1:], 0.0)
    vol = r.cell_volume * np.arange(1, r.n + 1)
    return lower, v, vol


def layercake_norm(r: RearrangedField, exponent: float, tail=None) -> float:
    """int_0^inf |{|f| > s}|^exponent ds, exactly on the step distribution
    (plus the exterior ``tail`` if given, as in :func:`lorentz_norm`)."""
    if not (0.0 < exponent < 1.0):
        raise BadExponents("layer-cake exponent must lie in (0, 1)")
    extra = 0.0 if tail is None else _tail_excess(r, exponent, tail)
    if r.n == 0 and tail is None:
        return 0.0
    lo, hi, vol = _level_volumes(r)
    return float(np.sum((hi - lo) * vol**exponent)) + extra


def split_layercake(r: RearrangedField, exponent: float, s_cut: float, tail=None):
    """The layer-cake integral split at height ``s_cut`` into (int_0^s_cut,
    int_s_cut^inf); the two parts add up to :func:`layercake_norm`."""
    if not (0.0 < exponent < 1.0):
        raise BadExponents("layer-cake exponent must lie in (0, 1)")
    if s_cut < 0:
        raise ValueError("s_cut must be nonnegative")
    t_lo = t_hi = 0.0
    if tail is not None:
        t_lo = _tail_excess(r, exponent, tail, 0.0, s_cut)
        t_hi = _tail_excess(r, exponent, tail, s_cut, np.inf)
    if r.n == 0:
        return t_lo, t_hi
    lo, hi, vol = _level_volumes(r)
    weight = vol**exponent
    below = np.clip(np.minimum(hi, s_cut) - lo, 0.0, None)
    above = np.clip(hi - np.maximum(lo, s_cut), 0.0, None)
    return float(np.sum(below * weight)) + t_lo, float(np.sum(above * weight)) + t_hi

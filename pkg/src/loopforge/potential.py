"""Heat kernel, Riesz potentials of curve measures, maximal functions and the
two pointwise interpolation bounds for Riesz potentials of loops.

Riesz potentials are computed two independent ways: from the heat semigroup,
``I_a f = (1/Gamma(a/2)) int_0^inf t^(a/2 - 1) p_t * f dt`` (log-time
trapezoid on exact segment heat convolutions), and from the kernel
``|x|^(a-d) / gamma(a)`` integrated in closed form along each segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import _kernels
from .geometry import CurrentMeasure, Curve, SurfaceMeasure, cone_surface, measure_of

__all__ = [
    "NonpositiveTime",
    "AlphaOutOfRange",
    "PointOnSupport",
    "GridTooCoarse",
    "heat_kernel",
    "heat_convolve_measure",
    "riesz_constant",
    "riesz_direct",
    "QuadratureSpec",
    "GaussianSource",
    "riesz_semigroup",
    "distance_to_support",
    "default_t_ladder",
    "maximal_M1",
    "grad_heat_surface",
    "maximal_M2",
    "measure_cd",
    "pointwise_global_constant",
    "LemmaReport",
    "check_lemma_pointwise_global",
    "MaximalProfile",
    "maximal_profile",
    "sample_points",
    "BMOEstimate",
    "bmo_estimate",
    "check_lemma_interpolation1",
    "GridPotential",
    "riesz_direct_grid",
    "tube_layercake_bound",
]


class NonpositiveTime(ValueError):
    pass


class AlphaOutOfRange(ValueError):
    pass


class PointOnSupport(ValueError):
    pass


class GridTooCoarse(ValueError):
    pass


def _check_alpha(alpha, d, upper=None):
    upper = d if upper is None else upper
    if not (0.0 < alpha < upper):
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, {upper})")


def _as_points(x, d=None):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if d is not None and pts.shape[1] != d:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {d}")
    return np.ascontiguousarray(pts), single


# ---------------------------------------------------------------------------
# heat kernel


def heat_kernel(x, t):
    """p_t(x) = (4 pi t)^(-d/2) exp(-|x|^2 / 4t); ``x`` has shape (..., d)."""
    if np.any(np.asarray(t) <= 0):
        raise NonpositiveTime("heat time must be positive")
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    return (4 * np.pi * t) ** (-d / 2) * np.exp(-r2 / (4 * t))


def _mu_arrays(mu: CurrentMeasure):
    return (
        np.ascontiguousarray(mu.starts, dtype=float),
        np.ascontiguousarray(mu.ends - mu.starts, dtype=float),
        np.ascontiguousarray(mu.weights, dtype=float),
    )


def heat_convolve_measure(mu: CurrentMeasure, x, t, method: str = "exact", tol: float = 1e-10):
    """(p_t * mu)(x) as a vector.

    ``method="exact"`` integrates the Gaussian along each segment in closed
    form (error functions).  ``method="gl"`` uses Gauss-Legendre line
    quadrature with per-segment panel doubling until the change is below
    ``tol * mass`` times the kernel scale.  ``x`` may be one point or (n, d);
    ``t`` may be a scalar or a 1-d array (the time axis follows the point
    axis in the output).
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts <= 0):
        raise NonpositiveTime("heat time must be positive")
    pts, single = _as_points(x, mu.dim)
    scalar_t = np.ndim(t) == 0
    if mu.n_segments == 0:
        out = np.zeros((len(pts), len(ts), mu.dim))
    elif method == "exact":
        out = _kernels.heat_segments(pts, ts, *_mu_arrays(mu))
    elif method == "gl":
        out = np.stack([[_heat_gl(mu, p, tt, tol) for tt in ts] for p in pts])
    else:
        raise ValueError(f"unknown method {method!r}")
    if scalar_t:
        out = out[:, 0]
    return out[0] if single else out


def _heat_gl(mu, x, t, tol, order=8):
    gx, gw = np.polynomial.legendre.leggauss(order)
    vec = mu.ends - mu.starts
    scale = mu.total_mass * (4 * np.pi * t) ** (-mu.dim / 2)

    def per_segment(npan):
        # (m,) integral of p_t along each segment with npan panels
        h = 1.0 / npan
        u = (np.arange(npan)[:, None] + 0.5 * (gx[None, :] + 1)) * h
        u = u.ravel()
        w = np.tile(gw * h / 2, npan)
        pts = mu.starts[:, None, :] + u[None, :, None] * vec[:, None, :]
        vals = heat_kernel(x - pts, t)
        return vals @ w * mu.lengths

    npan = np.ones(mu.n_segments, dtype=int)
    cur = per_segment(1)
    active = np.ones(mu.n_segments, dtype=bool)
    for _ in range(20):
        if not np.any(active):
            break
        nxt = cur.copy()
        for n in np.unique(npan[active]):
            sel = active & (npan == n)
            sub = CurrentMeasure(mu.starts[sel], mu.ends[sel], mu.weights[sel])
            nxt[sel] = _heat_gl_panels(sub, x, t, 2 * n, gx, gw)
        change = np.abs(nxt - cur) * np.abs(mu.weights)
        npan[active] *= 2
        cur = nxt
        active &= change > tol * scale / mu.n_segments
    return (cur * mu.weights) @ mu.orientations


def _heat_gl_panels(mu, x, t, npan, gx, gw):
    vec = mu.ends - mu.starts
    h = 1.0 / npan
    u = ((np.arange(npan)[:, None] + 0.5 * (gx[None, :] + 1)) * h).ravel()
    w = np.tile(gw * h / 2, npan)
    pts = mu.starts[:, None, :] + u[None, :, None] * vec[:, None, :]
    return heat_kernel(x - pts, t) @ w * mu.lengths


# ---------------------------------------------------------------------------
# direct kernel


def riesz_constant(alpha: float, d: int) -> float:
    """gamma(alpha) with I_a = |x|^(a-d) / gamma(a) * (convolution)."""
    _check_alpha(alpha, d)
    return math.pi ** (d / 2) * 2.0**alpha * math.gamma(alpha / 2) / math.gamma((d - alpha) / 2)


def _near(s, rho, beta):
    # int_0^s (rho^2 + u^2)^(-beta) du for 0 <= s <= rho
    if beta == 0.5:
        return np.arcsinh(s / rho)
    return s * rho ** (-2 * beta) * special.hyp2f1(0.5, beta, 1.5, -((s / rho) ** 2))


def _far(s, rho, beta):
    # antiderivative for s >= rho (exact up to an additive constant)
    if beta == 0.5:
        return np.log(s + np.sqrt(s * s + rho * rho))
    return s ** (1 - 2 * beta) / (1 - 2 * beta) * special.hyp2f1(beta, beta - 0.5, beta + 0.5, -((rho / s) ** 2))


def _half_line(lo, hi, rho, beta):
    """int_lo^hi (rho^2 + u^2)^(-beta) du for 0 <= lo <= hi, elementwise."""
    lo, hi, rho = np.broadcast_arrays(lo, hi, rho)
    out = np.zeros(lo.shape)
    both_near = hi <= rho
    both_far = lo >= rho
    mixed = ~(both_near | both_far)
    with np.errstate(divide="ignore", invalid="ignore"):
        if np.any(both_near):
            r = rho[both_near]
            out[both_near] = _near(hi[both_near], r, beta) - _near(lo[both_near], r, beta)
        if np.any(both_far):
            r = rho[both_far]
            out[both_far] = _far(hi[both_far], r, beta) - _far(lo[both_far], r, beta)
        if np.any(mixed):
            r = rho[mixed]
            out[mixed] = (
                _near(r, r, beta) - _near(lo[mixed], r, beta) + _far(hi[mixed], r, beta) - _far(r, r, beta)
            )
    return out


def line_integral(rho, a, b, beta):
    """int_a^b (rho^2 + u^2)^(-beta) du for a <= b (arrays broadcast)."""
    rho, a, b = np.broadcast_arrays(np.asarray(rho, float), np.asarray(a, float), np.asarray(b, float))
    out = np.empty(rho.shape)
    pos = a >= 0
    neg = b <= 0
    mid = ~(pos | neg)
    out[pos] = _half_line(a[pos], b[pos], rho[pos], beta)
    out[neg] = _half_line(-b[neg], -a[neg], rho[neg], beta)
    if np.any(mid):
        z = np.zeros(int(mid.sum()))
        out[mid] = _half_line(z, -a[mid], rho[mid], beta) + _half_line(z, b[mid], rho[mid], beta)
    return out


def _segment_frame(mu, pts):
    vec = mu.ends - mu.starts
    ell = np.linalg.norm(vec, axis=1)
    e = vec / np.where(ell > 0, ell, 1.0)[:, None]
    dx = pts[:, None, :] - mu.starts[None, :, :]
    u0 = np.einsum("nmd,md->nm", dx, e)
    rho2 = np.maximum(np.einsum("nmd,nmd->nm", dx, dx) - u0 * u0, 0.0)
    return ell, e, u0, np.sqrt(rho2)


def riesz_direct(mu: CurrentMeasure, alpha: float, x, chunk: int = 256):
    """I_a mu(x) from the kernel |x - y|^(a-d) / gamma(a), integrated
    exactly along each segment (hypergeometric antiderivatives)."""
    d = mu.dim
    _check_alpha(alpha, d)
    pts, single = _as_points(x, d)
    beta = (d - alpha) / 2
    out = np.zeros((len(pts), d))
    if mu.n_segments:
        for i0 in range(0, len(pts), chunk):
            p = pts[i0 : i0 + chunk]
            ell, e, u0, rho = _segment_frame(mu, p)
            a = -u0
            b = ell[None, :] - u0
            on = (rho <= 1e-14 * np.maximum(ell, 1e-300)) & (a <= 0) & (b >= 0)
            if np.any(on):
                raise PointOnSupport("evaluation point lies on the measure support")
            vals = line_integral(rho, a, b, beta) * mu.weights[None, :]
            out[i0 : i0 + chunk] = vals @ e
    out /= riesz_constant(alpha, d)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# semigroup route


@dataclass(frozen=True)
class QuadratureSpec:
    """Log-uniform trapezoid in t; unset bounds are chosen per point."""

    t_min: float | None = None
    t_max: float | None = None
    nodes_per_decade: int = 30

    def __post_init__(self):
        if self.t_min is not None and self.t_max is not None and not self.t_min < self.t_max:
            raise ValueError("t_min must be below t_max")
        if self.nodes_per_decade < 2:
            raise ValueError("need at least 2 nodes per decade")


@dataclass(frozen=True)
class GaussianSource:
    """f = mass * p_s(. - center); heat flow stays Gaussian: p_t * f = mass * p_(s+t)."""

    center: np.ndarray
    s: float = 1.0
    mass: float = 1.0

    @property
    def dim(self) -> int:
        return len(np.asarray(self.center))

    def heat(self, pts, ts):
        pts = np.asarray(pts, float)
        c = np.asarray(self.center, float)
        return self.mass * heat_kernel((pts - c)[:, None, :], (self.s + ts)[None, :])

    def length_scales(self, pts):
        c = np.asarray(self.center, float)
        r = np.linalg.norm(np.asarray(pts) - c, axis=-1)
        # the integrand is a pure power of t well below t = s, so the small-t
        # window edge sits far below it
        return np.full(len(pts), 1e-4 * math.sqrt(self.s)), math.sqrt(self.s) + r


class _MeasureSource:
    def __init__(self, mu: CurrentMeasure):
        self.mu = mu
        self.dim = mu.dim

    def heat(self, pts, ts):
        return _kernels.heat_segments(np.ascontiguousarray(pts), np.ascontiguousarray(ts), *_mu_arrays(self.mu))

    def length_scales(self, pts):
        lo, hi = self.mu.bounding_box()
        diam = float(np.linalg.norm(hi - lo))
        dist = distance_to_support(self.mu, pts)
        far = diam + np.linalg.norm(pts - 0.5 * (lo + hi), axis=1)
        return dist, far


def riesz_semigroup(source, alpha: float, x, quad: QuadratureSpec | None = None, return_tails: bool = False):
    """I_a f(x) from the heat semigroup.

    ``source`` is a :class:`CurrentMeasure`, a :class:`GaussianSource`, or any
    object with ``dim``, ``heat(points, times)`` and ``length_scales(points)``.
    The t-integral is a trapezoid rule in log t; the two tails beyond the
    quadrature window are added assuming power-law behaviour with the local
    log-slope at each end.  With ``return_tails`` the magnitudes of the two
    tail corrections are returned as well.
    """
    src = _MeasureSource(source) if isinstance(source, CurrentMeasure) else source
    d = src.dim
    _check_alpha(alpha, d)
    quad = quad or QuadratureSpec()
    pts, single = _as_points(x, d)
    near, far = src.length_scales(pts)
    vals, tails = [], []
    for i, p in enumerate(pts):
        t_lo = quad.t_min if quad.t_min is not None else 1e-3 * max(near[i], 1e-6 * far[i]) ** 2
        t_hi = quad.t_max if quad.t_max is not None else 1e8 * far[i] ** 2
        n = int(math.ceil(math.log10(t_hi / t_lo) * quad.nodes_per_decade)) + 1
        tau = np.linspace(math.log(t_lo), math.log(t_hi), n)
        h = tau[1] - tau[0]
        ts = np.exp(tau)
        F = src.heat(p[None, :], ts)[0]  # (n, ...) values
        g = (ts ** (alpha / 2)).reshape((-1,) + (1,) * (F.ndim - 1)) * F
        body = h * (g.sum(axis=0) - 0.5 * (g[0] + g[-1]))
        lo_tail, s_lo = _power_tail(g[0], g[1], h)
        hi_tail, s_hi = _power_tail(g[-1], g[-2], h)
        # Euler-Maclaurin end corrections, with g' = +-slope * g at the ends
        body = body + h * h / 12 * (s_lo * g[0] + s_hi * g[-1])
        vals.append((body + lo_tail + hi_tail) / math.gamma(alpha / 2))
        tails.append((float(np.max(np.abs(lo_tail))), float(np.max(np.abs(hi_tail)))))
    out = np.array(vals)
    res = out[0] if single else out
    if return_tails:
        return res, (tails[0] if single else tails)
    return res


def _power_tail(g_end, g_next, h):
    """Integral beyond the end node of a trapezoid in log t, assuming the
    integrand behaves like exp(-slope * |tau - tau_end|) outward.  Returns
    the tail and the slope (zero when the integrand does not decay)."""
    a = float(np.linalg.norm(np.atleast_1d(g_end)))
    b = float(np.linalg.norm(np.atleast_1d(g_next)))
    if a == 0.0 or b == 0.0:
        return np.zeros_like(g_end), 0.0
    slope = math.log(b / a) / h
    if slope <= 0.0:
        return np.zeros_like(g_end), 0.0
    return g_end / slope, slope


# ---------------------------------------------------------------------------
# maximal functions


def distance_to_support(mu: CurrentMeasure, points, chunk: int = 512) -> np.ndarray:
    pts, _ = _as_points(points, mu.dim)
    if mu.n_segments == 0:
        return np.full(len(pts), np.inf)
    out = np.empty(len(pts))
    vec = mu.ends - mu.starts
    l2 = np.maximum(np.sum(vec * vec, axis=1), 1e-300)
    for i0 in range(0, len(pts), chunk):
        p = pts[i0 : i0 + chunk]
        dx = p[:, None, :] - mu.starts[None, :, :]
        s = np.clip(np.einsum("nmd,md->nm", dx, vec) / l2, 0.0, 1.0)
        q = dx - s[..., None] * vec[None, :, :]
        out[i0 : i0 + chunk] = np.sqrt(np.min(np.sum(q * q, axis=-1), axis=1))
    return out


def default_t_ladder(mu: CurrentMeasure, points=None, n: int = 400) -> np.ndarray:
    """400 log-uniform times over [1e-6, 1e3] * diam^2, extended downwards
    at the same density when a point is closer to the support than that
    range resolves."""
    lo, hi = mu.bounding_box()
    diam2 = float(np.sum((hi - lo) ** 2))
    a, b = math.log10(1e-6 * diam2), math.log10(1e3 * diam2)
    if points is not None:
        dmin = float(distance_to_support(mu, points).min())
        if dmin > 0:
            a = min(a, math.log10(1e-2 * dmin**2))
    per_decade = (n - 1) / 9.0
    m = max(n, int(round((b - a) * per_decade)) + 1)
    return np.logspace(a, b, m)


def maximal_M1(mu: CurrentMeasure, x, t_ladder=None, return_argmax: bool = False):
    """sup_t |p_t * mu|(x) over a time ladder.

    With ``return_argmax`` also returns the maximising time and whether the
    maximum is interior to the ladder (an end-point maximum means the ladder
    did not capture the peak).
    """
    pts, single = _as_points(x, mu.dim)
    if mu.n_segments == 0 or mu.total_mass == 0:
        z = np.zeros(len(pts))
        if return_argmax:
            return (z[0], np.nan, True) if single else (z, np.full(len(pts), np.nan), np.ones(len(pts), bool))
        return z[0] if single else z
    ts = default_t_ladder(mu, pts) if t_ladder is None else np.asarray(t_ladder, float)
    F = np.linalg.norm(_kernels.heat_segments(pts, ts, *_mu_arrays(mu)), axis=-1)
    k = np.argmax(F, axis=1)
    vals = F[np.arange(len(pts)), k]
    if return_argmax:
        interior = (k > 0) & (k < len(ts) - 1)
        if single:
            return vals[0], ts[k[0]], bool(interior[0])
        return vals, ts[k], interior
    return vals[0] if single else vals


def _surface_nodes(S: SurfaceMeasure, x, panel: float = 1.5, order: int = 8):
    """Polar quadrature nodes for int_S f(|x - y|) dA(y) with f radial.

    Each triangle is handled in its own plane around the foot point P of x.
    Each edge contributes a signed angular integral; the angle is
    parametrised by sigma with position along the edge line
    ``s = q sinh(sigma)`` (q the distance from P to that line), which keeps
    the integrand smooth when P is close to an edge.
    Returns per node the in-plane radius R, height h and angular weight,
    and per triangle the total angle it subtends around P and the height.
    """
    tri = np.asarray(S.triangles, float)
    if tri.shape[2] == 2:
        tri = np.concatenate([tri, np.zeros(tri.shape[:2] + (1,))], axis=2)
    xx = np.zeros(3)
    xx[: len(x)] = x
    A, B, C = tri[:, 0], tri[:, 1], tri[:, 2]
    nrm = np.cross(B - A, C - A)
    nn = np.linalg.norm(nrm, axis=1)
    keep = nn > 0
    A, B, C, nrm, nn = A[keep], B[keep], C[keep], nrm[keep], nn[keep]
    nh = nrm / nn[:, None]
    hs = np.einsum("md,md->m", xx - A, nh)
    P = xx - hs[:, None] * nh
    u1 = (B - A) / np.linalg.norm(B - A, axis=1)[:, None]
    u2 = np.cross(nh, u1)

    def to2(V):
        r = V - P
        return np.stack([np.einsum("md,md->m", r, u1), np.einsum("md,md->m", r, u2)], axis=1)

    verts = [to2(A), to2(B), to2(C)]
    gx, gw = np.polynomial.legendre.leggauss(order)
    Rs, Hs, Ws = [], [], []
    theta_tri = np.zeros(len(hs))
    scale = float(np.max(nn)) ** 0.5
    for k in range(3):
        a = verts[k]
        b = verts[(k + 1) % 3]
        dv = b - a
        L = np.linalg.norm(dv, axis=1)
        dr = dv / L[:, None]
        qs = a[:, 0] * dr[:, 1] - a[:, 1] * dr[:, 0]
        q = np.abs(qs)
        ok = q > 1e-13 * scale
        if not np.any(ok):
            continue
        sa = np.einsum("md,md->m", a, dr)[ok]
        sb = sa + L[ok]
        qq = q[ok]
        sig_a = np.arcsinh(sa / qq)
        sig_b = np.arcsinh(sb / qq)
        npan = np.maximum(1, np.ceil((sig_b - sig_a) / panel).astype(int))
        rep = np.repeat(np.arange(len(qq)), npan)
        pan = np.concatenate([np.arange(n) for n in npan])
        width = ((sig_b - sig_a) / npan)[rep]
        lo = sig_a[rep] + pan * width
        sig = lo[:, None] + 0.5 * width[:, None] * (gx[None, :] + 1)
        w = 0.5 * width[:, None] * gw[None, :] / np.cosh(sig)
        # rescale so each edge's weights sum to its exact angle
        dtheta = np.arctan(sb / qq) - np.arctan(sa / qq)
        tot = np.bincount(rep, weights=w.sum(axis=1), minlength=len(qq))
        w = w * (dtheta / tot)[rep][:, None]
        sign = np.sign(qs[ok])
        Rs.append((qq[rep][:, None] * np.cosh(sig)).ravel())
        Hs.append(np.repeat(np.abs(hs[ok][rep]), order))
        Ws.append((sign[rep][:, None] * w).ravel())
        theta_tri += np.bincount(np.nonzero(ok)[0], weights=sign * dtheta, minlength=len(hs))
    if not Rs:
        z = np.zeros(0)
        return z, z, z, z, z
    # the angle seen from P is 2 pi inside a triangle and 0 outside; snap
    # round-off so the outside contributions cancel exactly
    snapped = np.round(theta_tri / np.pi) * np.pi
    theta_tri = np.where(np.abs(theta_tri - snapped) < 1e-9, snapped, theta_tri)
    return tuple(np.concatenate(v) for v in (Rs, Hs, Ws)) + (theta_tri, np.abs(hs))


def grad_heat_surface(S: SurfaceMeasure, x, ts) -> np.ndarray:
    """(|grad p_t| * ||S||)(x) for every t in ``ts``; the radial part of the
    integral is closed form, the angular part Gauss-Legendre."""
    ts = np.atleast_1d(np.asarray(ts, float))
    if np.any(ts <= 0):
        raise NonpositiveTime("heat time must be positive")
    if len(S.areas) == 0 or S.total_area == 0:
        return np.zeros(len(ts))
    nodes = _surface_nodes(S, np.asarray(x, float))
    return _kernels.grad_heat_surface(ts, *nodes, S.dim)


def maximal_M2(S: SurfaceMeasure, x, t_ladder=None, mu: CurrentMeasure | None = None):
    """sup_t t^(1/2) (|grad p_t| * ||S||)(x) over a time ladder."""
    pts, single = _as_points(x)
    if len(S.areas) == 0 or S.total_area == 0:
        z = np.zeros(len(pts))
        return z[0] if single else z
    if t_ladder is None:
        tri = np.asarray(S.triangles).reshape(-1, S.dim)
        diam2 = float(np.sum((tri.max(0) - tri.min(0)) ** 2))
        t_ladder = np.logspace(math.log10(1e-6 * diam2), math.log10(1e3 * diam2), 400)
    ts = np.asarray(t_ladder, float)
    vals = np.array([np.max(np.sqrt(ts) * grad_heat_surface(S, p, ts)) for p in pts])
    return vals[0] if single else vals


def _surface_profile(mu, S, pts, ts, F, stride):
    """M2 at each point and the largest relevant ratio F / G.

    G is evaluated on every ``stride``-th ladder time, then M2 is refined
    on a finer log grid around the coarse maximiser.  Ratios only count
    where |p_t * mu| is within 1e-6 of its peak over t: far below that both
    sides are exponentially small and the angular quadrature is not meant
    to resolve them.
    """
    sel = np.arange(0, len(ts), stride)
    if sel[-1] != len(ts) - 1:
        sel = np.append(sel, len(ts) - 1)
    tc = ts[sel]
    M2 = np.empty(len(pts))
    c_obs = 0.0
    for i, p in enumerate(pts):
        G = grad_heat_surface(S, p, tc)
        prof = np.sqrt(tc) * G
        k = int(np.argmax(prof))
        lo = tc[max(k - 1, 0)]
        hi = tc[min(k + 1, len(tc) - 1)]
        tf = np.geomspace(lo, hi, 2 * stride + 1)
        M2[i] = max(float(prof[k]), float(np.max(np.sqrt(tf) * grad_heat_surface(S, p, tf))))
        Fi = F[i, sel]
        ok = (G > 0) & (Fi >= 1e-6 * F[i].max())
        if np.any(ok):
            c_obs = max(c_obs, float(np.max(Fi[ok] / G[ok])))
    return M2, c_obs


def measure_cd(mu: CurrentMeasure, S: SurfaceMeasure, points, ts, stride: int = 1) -> float:
    """Largest observed ratio |p_t * mu|(x) / (|grad p_t| * ||S||)(x) over
    times where the heat value is within 1e-6 of its peak."""
    pts, _ = _as_points(points, mu.dim)
    ts = np.asarray(ts, float)
    F = np.linalg.norm(_kernels.heat_segments(pts, ts, *_mu_arrays(mu)), axis=-1)
    return _surface_profile(mu, S, pts, ts, F, stride)[1]


def pointwise_global_constant(alpha: float, c: float) -> float:
    """Constant in |I_a mu| <= C M1^(1-a) M2^a, from splitting the t-integral
    at the time balancing the two bounds."""
    A = 1.0 / math.gamma(alpha / 2 + 1)
    B = c / (math.gamma(alpha / 2) * (0.5 - alpha / 2))
    return 2.0 * A ** (1 - alpha) * B**alpha


@dataclass
class LemmaReport:
    lhs: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray
    constant: float
    best_constant: float
    extra: dict = field(default_factory=dict)

    @property
    def worst_margin(self) -> float:
        return float(np.min(self.margins))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margins >= 0))


def sample_points(curve: Curve, n: int = 200, seed: int = 0, expand: float = 0.5, min_dist: float | None = None) -> np.ndarray:
    """``n`` random points in the curve's bounding box enlarged by
    ``expand * diameter`` on each side, at distance >= ``min_dist`` (default
    1e-3 diameter) from the curve."""
    rng = np.random.default_rng(seed)
    mu = measure_of(curve)
    lo, hi = mu.bounding_box()
    diam = curve.diameter
    lo = lo - expand * diam
    hi = hi + expand * diam
    md = 1e-3 * diam if min_dist is None else min_dist
    out = np.zeros((0, curve.dim))
    while len(out) < n:
        cand = rng.uniform(lo, hi, size=(2 * n, curve.dim))
        cand = cand[distance_to_support(mu, cand) >= md]
        out = np.concatenate([out, cand])
    return out[:n]


@dataclass
class MaximalProfile:
    M1: np.ndarray
    M2: np.ndarray
    c_measured: float


def maximal_profile(curve: Curve, points, S: SurfaceMeasure | None = None, t_ladder=None, stride: int = 4) -> MaximalProfile:
    """M1, M2 and the measured surface constant at ``points`` (cone surface
    over the centroid by default)."""
    mu = measure_of(curve)
    S = cone_surface(curve) if S is None else S
    pts, _ = _as_points(points, curve.dim)
    ts = default_t_ladder(mu, pts) if t_ladder is None else np.asarray(t_ladder, float)
    F = np.linalg.norm(_kernels.heat_segments(pts, ts, *_mu_arrays(mu)), axis=-1)
    M2, c_obs = _surface_profile(mu, S, pts, ts, F, stride)
    return MaximalProfile(F.max(axis=1), M2, c_obs)


def check_lemma_pointwise_global(
    curve: Curve,
    S: SurfaceMeasure | None,
    alpha: float,
    points,
    c: float | None = None,
    t_ladder=None,
    stride: int = 4,
    profile: "MaximalProfile | None" = None,
) -> LemmaReport:
    """Compare |I_a mu| with C1 M1^(1-a) M2^a at each point, for a spanning
    surface S of the curve (cone over the centroid by default).

    The constant c in |p_t * dS| <= c |grad p_t| * ||S|| is measured on the
    same points unless supplied.  M1 uses the full time ladder; the surface
    side uses every ``stride``-th time plus a local refinement of its peak.
    A ``profile`` from :func:`maximal_profile` on the same points skips the
    alpha-independent part.
    """
    _check_alpha(alpha, 2, upper=1.0)
    mu = measure_of(curve)
    pts, _ = _as_points(points, curve.dim)
    if profile is None:
        profile = maximal_profile(curve, pts, S, t_ladder, stride)
    M1, M2, c_obs = profile.M1, profile.M2, profile.c_measured
    c_used = c_obs if c is None else float(c)
    C1 = pointwise_global_constant(alpha, c_used)
    lhs = np.linalg.norm(riesz_direct(mu, alpha, pts), axis=-1)
    base = M1 ** (1 - alpha) * M2**alpha
    ratio = lhs / base
    return LemmaReport(
        lhs=lhs,
        rhs=C1 * base,
        margins=1.0 - ratio / C1,
        constant=C1,
        best_constant=float(np.max(ratio)),
        extra={"c_measured": c_obs, "c_used": c_used, "M1": M1, "M2": M2},
    )


# ---------------------------------------------------------------------------
# BMO


@dataclass
class BMOEstimate:
    value: float
    table: dict  # cube edge (cells) -> largest mean oscillation

    def __float__(self):
        return self.value


def bmo_estimate(values, dim: int | None = None, cube_sizes=None, stride=None) -> BMOEstimate:
    """Largest mean oscillation (1/|Q|) int_Q |f - f_Q| over grid cubes.

    ``values`` has shape ``(*grid)`` or ``(*grid, ncomp)``; ``dim`` is the
    number of grid axes (default: all axes).  Cubes of every size in
    ``cube_sizes`` (default powers of two from 4 cells up to the grid) are
    placed at offsets that are multiples of half their size.  This is a lower
    bound for the BMO seminorm.
    """
    f = np.asarray(values, float)
    dim = f.ndim if dim is None else dim
    if f.ndim == dim:
        f = f[..., None]
    shape = f.shape[:dim]
    nmin = min(shape)
    if cube_sizes is None:
        cube_sizes = []
        k = 4
        while k <= nmin:
            cube_sizes.append(k)
            k *= 2
        if len(cube_sizes) < 5:
            raise GridTooCoarse(f"grid of {nmin} cells cannot host five cube scales from 4 cells")
    cube_sizes = sorted(int(k) for k in cube_sizes)
    if cube_sizes[0] < 4:
        raise GridTooCoarse("finest cube must span at least 4 cells")
    if cube_sizes[-1] > nmin:
        raise GridTooCoarse("cube larger than the grid")
    if np.any(~np.isfinite(f)):
        raise ValueError("field contains non-finite samples")
    table = {}
    for k in cube_sizes:
        step = stride or max(1, k // 2)
        win = np.lib.stride_tricks.sliding_window_view(f, (k,) * dim, axis=tuple(range(dim)))
        win = win[tuple(slice(None, None, step) for _ in range(dim))]
        # win: (*cubes, ncomp, k, ..., k)
        axes = tuple(range(dim + 1, dim + 1 + dim))
        mean = win.mean(axis=axes, keepdims=True)
        dev = np.sqrt(np.sum((win - mean) ** 2, axis=dim))
        osc = dev.mean(axis=tuple(range(dim, 2 * dim)))
        table[k] = float(osc.max())
    return BMOEstimate(max(table.values()), table)


def _grid_axes(lo, hi, n):
    h = (hi - lo) / n
    return [lo[j] + (np.arange(n) + 0.5) * h[j] for j in range(len(lo))], h


def riesz_codim1_grid(mu: CurrentMeasure, n: int, enlarge: float = 4.0):
    """I_(d-1) mu on an ``n^d`` cell-centred grid over a cube ``enlarge``
    times the bounding box (exact segment integrals)."""
    d = mu.dim
    lo, hi = mu.bounding_box()
    c = 0.5 * (lo + hi)
    side = enlarge * float(np.max(hi - lo))
    lo_g = c - side / 2
    axes, h = _grid_axes(lo_g, lo_g + side, n)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    vals = _kernels.riesz_half_grid(np.ascontiguousarray(mesh), *_mu_arrays(mu))
    if np.any(~np.isfinite(vals)):
        bad = ~np.all(np.isfinite(vals), axis=1)
        mesh[bad] += 1e-9 * side
        vals[bad] = _kernels.riesz_half_grid(np.ascontiguousarray(mesh[bad]), *_mu_arrays(mu))
    vals /= riesz_constant(d - 1, d)
    return vals.reshape((n,) * d + (d,)), h


def check_lemma_interpolation1(
    curve: Curve,
    alpha: float,
    points,
    grid_n: int | None = None,
    constant: float | None = None,
    t_ladder=None,
    bmo: float | None = None,
) -> LemmaReport:
    """Compare |I_a mu| with C2 M1^(1-a/(d-1)) ||I_(d-1) mu||_BMO^(a/(d-1)).

    The BMO factor is estimated on a grid four times the curve's bounding
    box.  The constant is not explicit; the empirical best constant is
    reported and margins are taken against ``constant`` (default: the best
    constant itself).
    """
    d = curve.dim
    _check_alpha(alpha, d, upper=d - 1)
    mu = measure_of(curve)
    pts, _ = _as_points(points, d)
    theta = alpha / (d - 1)
    if bmo is None:
        grid_n = grid_n or (64 if d == 3 else 256)
        field_vals, _ = riesz_codim1_grid(mu, grid_n)
        est = bmo_estimate(field_vals, dim=d)
        bmo_val, table = est.value, est.table
    else:
        bmo_val, table = float(bmo), {}
    M1 = maximal_M1(mu, pts, t_ladder)
    lhs = np.linalg.norm(riesz_direct(mu, alpha, pts), axis=-1)
    base = M1 ** (1 - theta) * bmo_val**theta
    # margins from the ratio itself so the maximiser sits at exactly zero
    ratio = lhs / base
    best = float(np.max(ratio))
    C = best if constant is None else float(constant)
    return LemmaReport(
        lhs=lhs,
        rhs=C * base,
        margins=1.0 - ratio / C,
        constant=C,
        best_constant=best,
        extra={"bmo": bmo_val, "bmo_table": table, "M1": M1, "unstable_exponent": theta > 0.95},
    )


# ---------------------------------------------------------------------------
# potentials on grids


@dataclass
class GridPotential:
    """I_a mu sampled at grid nodes; nodes within ``tube_radius`` of the
    support are excluded (nan) and majorised by ``A * dist^(a+1-d)``."""

    values: np.ndarray
    tube_mask: np.ndarray
    tube_radius: float
    shell_constant: float
    alpha: float
    length: float

    def tube_bound(self) -> float:
        d = self.values.shape[-1]
        if self.alpha >= d - 1:
            return float("nan")
        return tube_layercake_bound(self.shell_constant, self.length, self.tube_radius, d, self.alpha)


def riesz_direct_grid(mu: CurrentMeasure, alpha: float, shape, spacing, origin, tube_cells: float = 2.0, order: int = 8) -> GridPotential:
    """I_a mu at the nodes ``origin + i * spacing`` of a grid."""
    d = mu.dim
    _check_alpha(alpha, d)
    shape = tuple(int(s) for s in shape)
    h = np.broadcast_to(np.asarray(spacing, float), (d,))
    o = np.asarray(origin, float)
    axes = [o[j] + np.arange(shape[j]) * h[j] for j in range(d)]
    mesh = np.ascontiguousarray(np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d))
    r_t = tube_cells * float(h.max())
    gx, gw = np.polynomial.legendre.leggauss(order)
    vals = _kernels.riesz_gl_grid(mesh, *_mu_arrays(mu), alpha - d, gx, gw, r_t)
    vals /= riesz_constant(alpha, d)
    mask = ~np.all(np.isfinite(vals), axis=1)
    A = 0.0
    if np.any(~mask):
        dist = distance_to_support(mu, mesh[~mask])
        shell = dist < r_t + float(h.max())
        if np.any(shell):
            mag = np.linalg.norm(vals[~mask][shell], axis=1)
            A = float(np.max(mag * dist[shell] ** (d - 1 - alpha)))
    return GridPotential(
        values=vals.reshape(shape + (d,)),
        tube_mask=mask.reshape(shape),
        tube_radius=r_t,
        shell_constant=A,
        alpha=alpha,
        length=mu.total_mass,
    )


def tube_layercake_bound(A: float, length: float, r_t: float, d: int, alpha: float) -> float:
    """Layer-cake functional int_0^inf |{g > s}|^((d-a)/d) ds of the majorant
    g = A dist^(a+1-d) on a tube of radius r_t around a curve of the given
    length (tube volume taken as length times the cross-section)."""
    if not (0 < alpha < d - 1):
        raise AlphaOutOfRange("tube bound needs 0 < alpha < d - 1")
    theta = (d - alpha) / d
    omega = math.pi ** ((d - 1) / 2) / math.gamma((d - 1) / 2 + 1)
    V = length * omega * r_t ** (d - 1)
    s0 = A * r_t ** (alpha + 1 - d)
    q = theta * (d - 1) / (d - 1 - alpha)
    return V**theta * s0 + (length * omega) ** theta * A**q * s0 ** (1 - q) / (q - 1)

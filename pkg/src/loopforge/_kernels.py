"""Compiled inner loops (numba)."""

from __future__ import annotations

import math

import numba
import numpy as np


@numba.njit(cache=True)
def ball_mass_table(centers, starts, vecs, weights, radii):
    """Mass of |mu| inside closed balls B(c, r) for every center and radius.

    ``radii`` must be sorted ascending.  Returns ``(mass, count)``, both of
    shape ``(n_centers, n_radii)``; ``count`` sums |weight| over the segments
    that meet each ball.
    """
    nc = centers.shape[0]
    ns = starts.shape[0]
    nr = radii.shape[0]
    d = centers.shape[1]
    out = np.zeros((nc, nr))
    cnt = np.zeros((nc, nr))
    full = np.zeros(nr + 1)
    hit = np.zeros(nr + 1)
    for c in range(nc):
        for r in range(nr + 1):
            full[r] = 0.0
            hit[r] = 0.0
        for k in range(ns):
            w = abs(weights[k])
            if w == 0.0:
                continue
            ell2 = 0.0
            for j in range(d):
                ell2 += vecs[k, j] * vecs[k, j]
            ell = math.sqrt(ell2)
            if ell == 0.0:
                continue
            # x - p0 projected onto the unit direction
            u0 = 0.0
            c0 = 0.0
            for j in range(d):
                dx = centers[c, j] - starts[k, j]
                u0 += dx * vecs[k, j]
                c0 += dx * dx
            u0 /= ell
            rho2 = c0 - u0 * u0
            if rho2 < 0.0:
                rho2 = 0.0
            if u0 < 0.0:
                dmin2 = rho2 + u0 * u0
            elif u0 > ell:
                dmin2 = rho2 + (u0 - ell) * (u0 - ell)
            else:
                dmin2 = rho2
            a = u0 * u0
            b = (u0 - ell) * (u0 - ell)
            dmax2 = rho2 + (a if a > b else b)
            # first radius reaching the segment
            lo_i = np.searchsorted(radii * radii, dmin2)
            hit[lo_i] += w
            for r in range(lo_i, nr):
                r2 = radii[r] * radii[r]
                if r2 >= dmax2:
                    full[r] += w * ell
                    break
                half = math.sqrt(r2 - rho2) if r2 > rho2 else 0.0
                lo = u0 - half
                hi = u0 + half
                if lo < 0.0:
                    lo = 0.0
                if hi > ell:
                    hi = ell
                if hi > lo:
                    out[c, r] += w * (hi - lo)
        acc = 0.0
        acc_h = 0.0
        for r in range(nr):
            acc += full[r]
            acc_h += hit[r]
            out[c, r] += acc
            cnt[c, r] = acc_h
    return out, cnt


@numba.njit(cache=True)
def _erf_diff(a, b):
    """erf(b) - erf(a) for a <= b without cancellation in the tails."""
    if a >= 0.0:
        return math.erfc(a) - math.erfc(b)
    if b <= 0.0:
        return math.erfc(-b) - math.erfc(-a)
    return math.erf(b) - math.erf(a)


@numba.njit(cache=True)
def heat_segments(points, ts, starts, vecs, weights):
    """Exact heat convolution of a polyline current.

    Returns ``(n_points, n_times, d)``: for each point x and time t the
    vector sum over segments of ``w * e * int_0^l p_t(x - p0 - u e) du``.
    """
    n = points.shape[0]
    nt = ts.shape[0]
    m = starts.shape[0]
    d = points.shape[1]
    out = np.zeros((n, nt, d))
    e = np.zeros(d)
    for i in range(n):
        for k in range(m):
            w = weights[k]
            if w == 0.0:
                continue
            ell2 = 0.0
            for j in range(d):
                ell2 += vecs[k, j] * vecs[k, j]
            ell = math.sqrt(ell2)
            if ell == 0.0:
                continue
            u0 = 0.0
            c0 = 0.0
            for j in range(d):
                e[j] = vecs[k, j] / ell
                dx = points[i, j] - starts[k, j]
                u0 += dx * e[j]
                c0 += dx * dx
            rho2 = c0 - u0 * u0
            if rho2 < 0.0:
                rho2 = 0.0
            for q in range(nt):
                t = ts[q]
                g = rho2 / (4.0 * t)
                if g > 740.0:
                    continue
                s = 2.0 * math.sqrt(t)
                diff = _erf_diff(-u0 / s, (ell - u0) / s)
                val = w * (4.0 * math.pi * t) ** (-0.5 * d) * math.exp(-g) * math.sqrt(math.pi * t) * diff
                for j in range(d):
                    out[i, q, j] += val * e[j]
    return out


@numba.njit(cache=True)
def riesz_half_grid(points, starts, vecs, weights):
    """Vector line integral of |x - y|^{-1} along each segment (exact).

    Returns ``(n_points, d)``; points on a segment give ``nan``.
    """
    n = points.shape[0]
    m = starts.shape[0]
    d = points.shape[1]
    out = np.zeros((n, d))
    e = np.zeros(d)
    for i in range(n):
        for k in range(m):
            ell2 = 0.0
            for j in range(d):
                ell2 += vecs[k, j] * vecs[k, j]
            ell = math.sqrt(ell2)
            if ell == 0.0:
                continue
            u0 = 0.0
            c0 = 0.0
            for j in range(d):
                e[j] = vecs[k, j] / ell
                dx = points[i, j] - starts[k, j]
                u0 += dx * e[j]
                c0 += dx * dx
            rho2 = c0 - u0 * u0
            if rho2 < 0.0:
                rho2 = 0.0
            a = -u0
            b = ell - u0
            # int_a^b (rho^2 + s^2)^(-1/2) ds
            if a >= 0.0:
                val = math.log((b + math.sqrt(b * b + rho2)) / (a + math.sqrt(a * a + rho2)))
            elif b <= 0.0:
                val = math.log((-a + math.sqrt(a * a + rho2)) / (-b + math.sqrt(b * b + rho2)))
            else:
                if rho2 == 0.0:
                    val = math.nan
                else:
                    rho = math.sqrt(rho2)
                    val = math.asinh(b / rho) + math.asinh(-a / rho)
            for j in range(d):
                out[i, j] += weights[k] * val * e[j]
    return out


@numba.njit(cache=True)
def riesz_gl_grid(points, starts, vecs, weights, power, gl_x, gl_w, skip_radius):
    """Vector line integral of |x - y|^power by composite Gauss-Legendre.

    Panels are refined so each is no longer than half its distance to the
    point.  Points closer than ``skip_radius`` to the support give ``nan``.
    """
    n = points.shape[0]
    m = starts.shape[0]
    d = points.shape[1]
    ng = gl_x.shape[0]
    out = np.zeros((n, d))
    e = np.zeros(d)
    for i in range(n):
        bad = False
        for k in range(m):
            ell2 = 0.0
            for j in range(d):
                ell2 += vecs[k, j] * vecs[k, j]
            ell = math.sqrt(ell2)
            if ell == 0.0:
                continue
            u0 = 0.0
            c0 = 0.0
            for j in range(d):
                e[j] = vecs[k, j] / ell
                dx = points[i, j] - starts[k, j]
                u0 += dx * e[j]
                c0 += dx * dx
            rho2 = c0 - u0 * u0
            if rho2 < 0.0:
                rho2 = 0.0
            if u0 < 0.0:
                dmin = math.sqrt(rho2 + u0 * u0)
            elif u0 > ell:
                dmin = math.sqrt(rho2 + (u0 - ell) * (u0 - ell))
            else:
                dmin = math.sqrt(rho2)
            if dmin < skip_radius or dmin == 0.0:
                bad = True
                break
            # uniform panels no longer than half the distance to the point
            acc = 0.0
            npan = int(math.ceil(2.0 * ell / dmin))
            if npan > 256:
                npan = 256
            h = ell / npan
            for p in range(npan):
                lo = p * h
                for g in range(ng):
                    u = lo + 0.5 * h * (gl_x[g] + 1.0)
                    r2 = rho2 + (u - u0) * (u - u0)
                    acc += 0.5 * h * gl_w[g] * r2 ** (0.5 * power)
            for j in range(d):
                out[i, j] += weights[k] * acc * e[j]
        if bad:
            for j in range(d):
                out[i, j] = math.nan
    return out


@numba.njit(cache=True)
def _radial_moment(w, a):
    """int_0^w s^2 exp(-a s^2) ds."""
    z = a * w * w
    if z < 0.5:
        term = 1.0
        acc = 1.0 / 3.0
        n = 0
        while True:
            n += 1
            term *= -z / n
            add = term / (2 * n + 3)
            acc += add
            if abs(add) < 1e-17 * abs(acc) or n > 60:
                break
        return w * w * w * acc
    sa = math.sqrt(a)
    return -w * math.exp(-z) / (2.0 * a) + math.sqrt(math.pi) / (4.0 * a * sa) * math.erf(sa * w)


@numba.njit(cache=True)
def _radial_tail(w, a):
    """int_w^inf s^2 exp(-a s^2) ds."""
    sa = math.sqrt(a)
    return w * math.exp(-a * w * w) / (2.0 * a) + math.sqrt(math.pi) / (4.0 * a * sa) * math.erfc(sa * w)


@numba.njit(cache=True)
def grad_heat_surface(ts, radii, heights, node_w, tri_theta, tri_h, dim):
    """(|grad p_t| * ||S||)(x) for each t from precomputed polar nodes.

    Every node carries an in-plane radius R, the height h of x above its
    triangle's plane and a signed angular weight; the radial integral is
    closed form.  Two equivalent forms are evaluated, integrating radially
    outward from h or inward from infinity (using the exact signed angle
    seen in each triangle), and the one with less cancellation is kept.
    """
    nt = ts.shape[0]
    m = radii.shape[0]
    ne = tri_theta.shape[0]
    out = np.zeros(nt)
    for q in range(nt):
        t = ts[q]
        a = 1.0 / (4.0 * t)
        pref = (4.0 * math.pi * t) ** (-0.5 * dim) / (2.0 * t)
        inner = 0.0
        inner_mag = 0.0
        outer = 0.0
        outer_mag = 0.0
        for j in range(m):
            h = heights[j]
            W = math.sqrt(h * h + radii[j] * radii[j])
            dv = _radial_moment(W, a) - _radial_moment(h, a)
            inner += node_w[j] * dv
            inner_mag += abs(node_w[j]) * abs(dv)
            tv = _radial_tail(W, a)
            outer -= node_w[j] * tv
            outer_mag += abs(node_w[j]) * tv
        for e in range(ne):
            if tri_theta[e] == 0.0:
                continue
            tv = _radial_tail(tri_h[e], a)
            outer += tri_theta[e] * tv
            outer_mag += abs(tri_theta[e]) * tv
        out[q] = pref * (inner if inner_mag <= outer_mag else outer)
    return out


@numba.njit(cache=True)
def _bump(r):
    r = abs(r)
    if r >= 1.0:
        return 0.0
    u = 1.0 - r
    return 1.5 * u * u * u * u * (4.0 * r + 1.0)


@numba.njit(cache=True)
def deposit_bumps(pts, vals, origin, h, width, shape, out):
    """Add ``vals[k] * phi(x - pts[k])`` to ``out`` (flattened cells x comps)
    for the tensor-product bump phi of half-width ``width``.  The 1-d weights
    are normalised on the grid, so each deposit carries exactly ``vals[k]``
    of mass (sum over cells times h^d)."""
    n = pts.shape[0]
    d = pts.shape[1]
    nc = vals.shape[1]
    span = int(math.ceil(width / h)) + 2
    idx = np.zeros((3, 2 * span + 1), dtype=np.int64)
    wts = np.zeros((3, 2 * span + 1))
    cnt = np.zeros(3, dtype=np.int64)
    strides = np.ones(3, dtype=np.int64)
    for j in range(d - 2, -1, -1):
        strides[j] = strides[j + 1] * shape[j + 1]
    for k in range(n):
        for j in range(3):
            if j >= d:
                idx[j, 0] = 0
                wts[j, 0] = 1.0
                cnt[j] = 1
                continue
            c = (pts[k, j] - origin[j]) / h
            lo = int(math.ceil(c - width / h))
            hi = int(math.floor(c + width / h))
            tot = 0.0
            m = 0
            for i in range(lo, hi + 1):
                w = _bump((i - c) * h / width)
                if w > 0.0:
                    idx[j, m] = i
                    wts[j, m] = w
                    tot += w
                    m += 1
            for q in range(m):
                wts[j, q] /= tot * h
            cnt[j] = m
        for a in range(cnt[0]):
            for b in range(cnt[1]):
                for c2 in range(cnt[2]):
                    w = wts[0, a] * wts[1, b] * wts[2, c2]
                    cell = idx[0, a] * strides[0]
                    if d > 1:
                        cell += idx[1, b] * strides[1]
                    if d > 2:
                        cell += idx[2, c2] * strides[2]
                    for q in range(nc):
                        out[cell, q] += w * vals[k, q]
    return out

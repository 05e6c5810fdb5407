"""Polyline curves, circle distance, curve measures, the cut operation and
cone spanning surfaces.

A curve is stored as an ``(n, d)`` node array.  Closed curves do not repeat
the first node at the end; the closing edge ``n-1 -> 0`` is implicit.
Corners are node indices where the tangent is allowed to jump.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DegenerateCurve",
    "OutOfRange",
    "InvalidInterval",
    "Curve",
    "CurrentMeasure",
    "SurfaceMeasure",
    "build_curve",
    "circle_distance",
    "cut",
    "measure_of",
    "cone_surface",
    "gauss_legendre_pairing",
]


class DegenerateCurve(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class InvalidInterval(ValueError):
    pass


# Parameters closer than this (relative to L) to a node snap onto it.
_SNAP = 1e-12


@dataclass(frozen=True, eq=False)
class Curve:
    nodes: np.ndarray
    closed: bool
    corners: frozenset = frozenset()
    samples_per_unit: float | None = None
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] not in (2, 3):
            raise DegenerateCurve("nodes must be an (n, 2) or (n, 3) array")
        if not np.all(np.isfinite(nodes)):
            raise DegenerateCurve("non-finite node coordinates")
        if self.closed and len(nodes) > 2 and np.array_equal(nodes[0], nodes[-1]):
            nodes = nodes[:-1]
        if len(nodes) < 2:
            raise DegenerateCurve("need at least two nodes")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        corners = frozenset(int(i) for i in self.corners)
        if any(i < 0 or i >= len(nodes) for i in corners):
            raise DegenerateCurve("corner index out of range")
        object.__setattr__(self, "corners", corners)
        lengths = np.linalg.norm(self.edge_vectors, axis=1)
        if np.any(lengths == 0.0):
            raise DegenerateCurve("repeated consecutive nodes")
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def edge_starts(self) -> np.ndarray:
        return self.nodes if self.closed else self.nodes[:-1]

    @property
    def edge_ends(self) -> np.ndarray:
        return np.roll(self.nodes, -1, axis=0) if self.closed else self.nodes[1:]

    @property
    def edge_vectors(self) -> np.ndarray:
        return self.edge_ends - self.edge_starts

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.diff(self._cum)

    @property
    def arclength(self) -> np.ndarray:
        """Arclength at every node, plus the total length as the last entry."""
        return self._cum

    @property
    def length(self) -> float:
        return float(self._cum[-1])

    @property
    def tangents(self) -> np.ndarray:
        return self.edge_vectors / self.edge_lengths[:, None]

    @property
    def corner_params(self) -> np.ndarray:
        return np.sort(self._cum[sorted(self.corners)]) if self.corners else np.empty(0)

    @property
    def diameter(self) -> float:
        c = self.nodes
        if len(c) > 4000:
            c = c[:: len(c) // 4000 + 1]
        diff = c[:, None, :] - c[None, :, :]
        return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff))))

    def _check_params(self, s):
        s = np.asarray(s, dtype=float)
        tol = _SNAP * max(self.length, 1.0)
        if np.any(s < -tol) or np.any(s > self.length + tol):
            raise OutOfRange(f"arclength parameter outside [0, {self.length}]")
        return np.clip(s, 0.0, self.length)

    def edge_index(self, s) -> np.ndarray:
        s = self._check_params(s)
        idx = np.searchsorted(self._cum, s, side="right") - 1
        return np.clip(idx, 0, len(self.edge_lengths) - 1)

    def point_at(self, s) -> np.ndarray:
        s = self._check_params(s)
        idx = self.edge_index(s)
        frac = (s - self._cum[idx]) / self.edge_lengths[idx]
        start = self.edge_starts[idx]
        return start + frac[..., None] * self.edge_vectors[idx]

    def tangent_at(self, s) -> np.ndarray:
        return self.tangents[self.edge_index(s)]

    def subpath(self, a: float, b: float):
        """Nodes of the path from parameter ``a`` to ``b`` (``a <= b``).

        Returns ``(points, corner_flags)``.  End points are interpolated when
        they fall inside an edge; flags mark original corners among the
        returned points.
        """
        L = self.length
        tol = _SNAP * max(L, 1.0)
        a = float(self._check_params(a))
        b = float(self._check_params(b))
        if b < a:
            raise InvalidInterval("subpath needs a <= b")
        cum = self._cum
        n = self.n_nodes
        # interior nodes strictly between a and b
        inner = np.nonzero((cum > a + tol) & (cum < b - tol))[0]
        pts = []
        flags = []

        def node_or_point(s):
            k = np.nonzero(np.abs(cum - s) <= tol)[0]
            if len(k):
                i = int(k[0]) % n if self.closed else int(k[0])
                return self.nodes[i].copy(), i in self.corners
            return self.point_at(s), False

        p, f = node_or_point(a)
        pts.append(p)
        flags.append(f)
        for i in inner:
            j = int(i) % n if self.closed else int(i)
            pts.append(self.nodes[j].copy())
            flags.append(j in self.corners)
        if b - a > tol:
            p, f = node_or_point(b)
            pts.append(p)
            flags.append(f)
        return np.array(pts), flags

    def rotated(self, s0: float) -> "Curve":
        """Same closed curve with its parameter origin moved to ``s0``."""
        if not self.closed:
            raise ValueError("only closed curves can be re-based")
        L = self.length
        s0 = float(self._check_params(s0))
        if s0 <= _SNAP * L or s0 >= L - _SNAP * L:
            return self
        p1, f1 = self.subpath(s0, L)
        p2, f2 = self.subpath(0.0, s0)
        pts = np.concatenate([p1[:-1], p2[:-1]])
        flags = f1[:-1] + f2[:-1]
        corners = {i for i, f in enumerate(flags) if f}
        return Curve(pts, True, frozenset(corners), self.samples_per_unit)

    def scaled(self, lam: float, center=None) -> "Curve":
        c = np.zeros(self.dim) if center is None else np.asarray(center, float)
        return Curve(c + lam * (self.nodes - c), self.closed, self.corners, self.samples_per_unit)

    def embedded(self, dim: int = 3) -> "Curve":
        if dim == self.dim:
            return self
        pad = np.zeros((self.n_nodes, dim - self.dim))
        return Curve(np.hstack([self.nodes, pad]), self.closed, self.corners, self.samples_per_unit)

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "closed": bool(self.closed),
            "nodes": self.nodes.tolist(),
            "corners": sorted(self.corners),
        }


def build_curve(nodes, closed: bool = True, corner_indices=(), samples_per_unit=None) -> Curve:
    """Validate nodes and build a :class:`Curve`.

    Raises:
        DegenerateCurve: zero length, repeated consecutive nodes, or too few
            nodes for a closed curve.
    """
    arr = np.asarray(nodes, dtype=float)
    if arr.ndim != 2:
        raise DegenerateCurve("nodes must be a 2-d array")
    if closed and len(arr) > 2 and np.array_equal(arr[0], arr[-1]):
        arr = arr[:-1]
    if closed and len(arr) < 3:
        raise DegenerateCurve("closed curve needs at least 3 distinct nodes")
    return Curve(arr, closed, frozenset(corner_indices), samples_per_unit)


def circle_distance(curve_or_length, s: float, t: float) -> float:
    """min over integers k of |s - t + kL|."""
    L = curve_or_length.length if isinstance(curve_or_length, Curve) else float(curve_or_length)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    tol = _SNAP * max(L, 1.0)
    if np.any((s < -tol) | (s > L + tol) | (t < -tol) | (t > L + tol)):
        raise OutOfRange("parameters must lie in [0, L]")
    diff = np.abs(s - t)
    out = np.minimum(diff, L - diff)
    return float(out) if out.ndim == 0 else out


def cut(curve: Curve, t: float, t_prime: float):
    """Split a closed curve at ``t < t'`` and close both halves with bridges.

    Returns ``(gamma_prime, g)``: ``gamma_prime`` follows the curve up to
    ``x = curve(t)``, takes the bridge to ``y = curve(t')`` and continues to
    the end; ``g`` is the arc from ``x`` to ``y`` closed by the reverse bridge.
    Bridge end points are registered as corners.  When ``x == y`` no bridge is
    emitted.
    """
    if not curve.closed:
        raise ValueError("cut requires a closed curve")
    L = curve.length
    tol = _SNAP * max(L, 1.0)
    t = float(curve._check_params(t))
    t_prime = float(curve._check_params(t_prime))
    if t_prime <= t + tol:
        raise InvalidInterval("cut needs t < t'")

    head, fh = curve.subpath(0.0, t) if t > tol else (curve.point_at(0.0)[None], [0 in curve.corners])
    mid, fm = curve.subpath(t, t_prime)
    tail, ft = curve.subpath(t_prime, L) if t_prime < L - tol else (mid[-1:].copy(), [fm[-1]])

    x = mid[0]
    y = mid[-1]
    degenerate = np.array_equal(x, y)

    # gamma': head (ends at x), tail (starts at y, ends at curve(L) == curve(0))
    if degenerate:
        pts_p = np.concatenate([head, tail[1:-1]])
        flags_p = list(fh) + list(ft[1:-1])
        flags_p[len(head) - 1] = True
    else:
        pts_p = np.concatenate([head, tail[:-1]])
        flags_p = list(fh) + list(ft[:-1])
        flags_p[len(head) - 1] = True
        flags_p[len(head) % len(flags_p)] = True
    # g: arc x .. y then bridge back to x
    if degenerate:
        pts_g = mid[:-1]
        flags_g = list(fm[:-1])
        flags_g[0] = True
    else:
        pts_g = mid
        flags_g = list(fm)
        flags_g[0] = True
        flags_g[-1] = True

    def make(pts, flags):
        pts, keep = _drop_repeats(pts)
        flags = [f for f, k in zip(flags, keep) if k]
        return Curve(pts, True, frozenset(i for i, f in enumerate(flags) if f), curve.samples_per_unit)

    return make(pts_p, flags_p), make(pts_g, flags_g)


def _drop_repeats(pts):
    keep = np.ones(len(pts), dtype=bool)
    for i in range(1, len(pts)):
        if np.array_equal(pts[i], pts[i - 1]):
            keep[i] = False
    if len(pts) > 1 and np.array_equal(pts[-1], pts[0]):
        keep[-1] = False
    return pts[keep], keep


@dataclass(frozen=True, eq=False)
class CurrentMeasure:
    """Vector measure given by weighted oriented segments."""

    starts: np.ndarray
    ends: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("starts", "ends", "weights"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def dim(self) -> int:
        return self.starts.shape[1]

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.ends - self.starts, axis=1)

    @property
    def orientations(self) -> np.ndarray:
        lens = self.lengths
        out = np.zeros_like(self.starts)
        nz = lens > 0
        out[nz] = (self.ends - self.starts)[nz] / lens[nz, None]
        return out

    @property
    def total_mass(self) -> float:
        return float(np.sum(np.abs(self.weights) * self.lengths))

    @property
    def n_segments(self) -> int:
        return len(self.weights)

    def pair(self, field, order: int = 8) -> float:
        """Integral of ``field . dmu``; ``field`` maps ``(m, d)`` points to ``(m, d)``."""
        return gauss_legendre_pairing(self, field, order)

    def scaled(self, lam: float) -> "CurrentMeasure":
        return CurrentMeasure(lam * self.starts, lam * self.ends, self.weights)

    @staticmethod
    def concat(measures) -> "CurrentMeasure":
        measures = list(measures)
        return CurrentMeasure(
            np.concatenate([m.starts for m in measures]),
            np.concatenate([m.ends for m in measures]),
            np.concatenate([m.weights for m in measures]),
        )

    @staticmethod
    def zero(dim: int) -> "CurrentMeasure":
        return CurrentMeasure(np.zeros((0, dim)), np.zeros((0, dim)), np.zeros(0))

    def bounding_box(self):
        pts = np.concatenate([self.starts, self.ends])
        return pts.min(axis=0), pts.max(axis=0)


def gauss_legendre_pairing(mu: CurrentMeasure, field, order: int = 8) -> float:
    if mu.n_segments == 0:
        return 0.0
    xg, wg = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (xg + 1.0)
    w = 0.5 * wg
    vec = mu.ends - mu.starts
    pts = mu.starts[:, None, :] + u[None, :, None] * vec[:, None, :]
    vals = np.asarray(field(pts.reshape(-1, mu.dim))).reshape(pts.shape)
    # dmu = weight * unit tangent * ds = weight * vec * du
    integrand = np.einsum("qkd,qd->qk", vals, vec)
    return float(np.sum(mu.weights[:, None] * integrand * w[None, :]))


def measure_of(curve: Curve) -> CurrentMeasure:
    return CurrentMeasure(curve.edge_starts.copy(), curve.edge_ends.copy(), np.ones(len(curve.edge_lengths)))


@dataclass(frozen=True, eq=False)
class SurfaceMeasure:
    """Triangle soup; ``triangles`` has shape ``(m, 3, d)`` with consistent orientation."""

    triangles: np.ndarray
    areas: np.ndarray

    @property
    def total_area(self) -> float:
        return float(np.sum(self.areas))

    @property
    def dim(self) -> int:
        return self.triangles.shape[2]

    def boundary_chain(self) -> dict:
        """Oriented edge multiset after cancelling opposite interior edges."""
        chain: dict = {}
        for tri in self.triangles:
            for a, b in ((0, 1), (1, 2), (2, 0)):
                key = (tuple(tri[a]), tuple(tri[b]))
                rev = (key[1], key[0])
                if chain.get(rev, 0) > 0:
                    chain[rev] -= 1
                    if chain[rev] == 0:
                        del chain[rev]
                else:
                    chain[key] = chain.get(key, 0) + 1
        return chain

    @staticmethod
    def zero(dim: int) -> "SurfaceMeasure":
        return SurfaceMeasure(np.zeros((0, 3, dim)), np.zeros(0))


def triangle_areas(tris: np.ndarray) -> np.ndarray:
    u = tris[:, 1] - tris[:, 0]
    v = tris[:, 2] - tris[:, 0]
    uu = np.einsum("ij,ij->i", u, u)
    vv = np.einsum("ij,ij->i", v, v)
    uv = np.einsum("ij,ij->i", u, v)
    return 0.5 * np.sqrt(np.maximum(uu * vv - uv * uv, 0.0))


def cone_surface(curve: Curve, apex=None) -> SurfaceMeasure:
    """Cone over ``apex`` (default: node centroid), one triangle per edge."""
    if not curve.closed:
        raise ValueError("cone surface needs a closed curve")
    apex = curve.nodes.mean(axis=0) if apex is None else np.asarray(apex, dtype=float)
    m = len(curve.edge_lengths)
    tris = np.empty((m, 3, curve.dim))
    tris[:, 0] = apex
    tris[:, 1] = curve.edge_starts
    tris[:, 2] = curve.edge_ends
    return SurfaceMeasure(tris, triangle_areas(tris))


def curve_chain(curve: Curve) -> dict:
    chain: dict = {}
    for a, b in zip(curve.edge_starts, curve.edge_ends):
        key = (tuple(a), tuple(b))
        chain[key] = chain.get(key, 0) + 1
    return chain


def isoperimetric_ratio(curve: Curve, surface: SurfaceMeasure | None = None) -> float:
    """sqrt(area) / length for the cone (or the given) spanning surface."""
    surface = cone_surface(curve) if surface is None else surface
    return float(np.sqrt(surface.total_area) / curve.length)

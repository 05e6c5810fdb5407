"""Standard test curves.

Smooth closed curves are sampled uniformly in arclength from a fine
parametric evaluation, at ``samples_per_unit`` nodes per unit length.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Curve, build_curve

__all__ = [
    "resample_closed",
    "regular_polygon",
    "circle",
    "unit_square",
    "stadium",
    "spiral_loop",
    "folded_loop",
    "trefoil",
    "corner_packed",
    "FIXTURES",
    "fixture",
]


def resample_closed(param_fn, samples_per_unit: float, fine: int = 200_000) -> np.ndarray:
    """Arclength-uniform nodes of a closed curve given by ``param_fn(theta)``
    on ``theta in [0, 2 pi)``."""
    th = np.linspace(0.0, 2 * np.pi, fine + 1)
    pts = param_fn(th)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    L = cum[-1]
    n = max(8, int(math.ceil(L * samples_per_unit)))
    s = np.linspace(0.0, L, n, endpoint=False)
    th_s = np.interp(s, cum, th)
    return param_fn(th_s)


def regular_polygon(n: int, radius: float = 1.0, dim: int = 2) -> Curve:
    th = 2 * np.pi * np.arange(n) / n
    pts = np.zeros((n, dim))
    pts[:, 0] = radius * np.cos(th)
    pts[:, 1] = radius * np.sin(th)
    return build_curve(pts, closed=True)


def circle(radius: float = 1.0, samples_per_unit: float = 40.0, dim: int = 2, center=None) -> Curve:
    n = max(16, int(math.ceil(2 * np.pi * radius * samples_per_unit)))
    c = regular_polygon(n, radius, dim)
    if center is not None:
        c = build_curve(c.nodes + np.asarray(center, float), closed=True)
    return Curve(c.nodes, True, frozenset(), samples_per_unit)


def unit_square() -> Curve:
    return build_curve([[0, 0], [1, 0], [1, 1], [0, 1]], closed=True, corner_indices={0, 1, 2, 3})


def stadium(straight: float = 2.0, r_end: float = 0.5, samples_per_unit: float = 40.0) -> Curve:
    """Two half-discs of radius ``r_end`` joined by straight sides (C^1)."""
    L = 2 * straight + 2 * np.pi * r_end
    n = max(16, int(math.ceil(L * samples_per_unit)))
    s = np.linspace(0.0, L, n, endpoint=False)
    pts = np.empty((n, 2))
    a = straight / 2
    arc = np.pi * r_end
    for k, sk in enumerate(s):
        if sk < straight:
            pts[k] = (-a + sk, -r_end)
        elif sk < straight + arc:
            phi = (sk - straight) / r_end - np.pi / 2
            pts[k] = (a + r_end * np.cos(phi), r_end * np.sin(phi))
        elif sk < 2 * straight + arc:
            pts[k] = (a - (sk - straight - arc), r_end)
        else:
            phi = (sk - 2 * straight - arc) / r_end + np.pi / 2
            pts[k] = (-a + r_end * np.cos(phi), r_end * np.sin(phi))
    return Curve(pts, True, frozenset(), samples_per_unit)


def _smootherstep(u):
    return u**3 * (10 - 15 * u + 6 * u**2)


def spiral_loop(turns: int = 10, pitch: float = 0.01, r0: float = 1.0, samples_per_unit: float = 30.0) -> Curve:
    """Planar spiral of ``turns`` turns with radial pitch ``pitch``, closed by
    one more turn that returns smoothly to the starting radius."""
    total = turns + 1

    def fn(th):
        th = np.asarray(th)
        T = th * total  # angle in [0, 2 pi total]
        turn = T / (2 * np.pi)
        r = np.where(
            turn <= turns,
            r0 + pitch * turn,
            r0 + pitch * turns + pitch * (turn - turns) - pitch * (turns + 1) * _smootherstep(np.clip(turn - turns, 0, 1)),
        )
        return np.stack([r * np.cos(T), r * np.sin(T)], axis=-1)

    pts = resample_closed(fn, samples_per_unit, fine=400_000)
    return Curve(pts, True, frozenset(), samples_per_unit)


def folded_loop(waist: float = 0.01, samples_per_unit: float = 60.0) -> Curve:
    """Smooth dumbbell whose two lobes nearly touch: waist width ``waist``."""
    c = waist / 2

    def fn(th):
        x = np.cos(th)
        y = np.sin(th) * (c + (1 - c) * np.cos(th) ** 2)
        return np.stack([x, y], axis=-1)

    pts = resample_closed(fn, samples_per_unit)
    return Curve(pts, True, frozenset(), samples_per_unit)


def trefoil(scale: float = 0.5, samples_per_unit: float = 30.0) -> Curve:
    def fn(th):
        x = np.sin(th) + 2 * np.sin(2 * th)
        y = np.cos(th) - 2 * np.cos(2 * th)
        z = -np.sin(3 * th)
        return scale * np.stack([x, y, z], axis=-1)

    pts = resample_closed(fn, samples_per_unit)
    return Curve(pts, True, frozenset(), samples_per_unit)


def corner_packed(n_corners: int = 51, delta: float = 0.2, radius: float = 1.0, samples_per_unit: float = 40.0) -> Curve:
    """Circle with a zigzag of ``n_corners`` registered corners packed into
    arclength ``delta / 2`` whose end points are ``delta / 4`` apart."""
    chord = delta / 4
    path_len = delta / 2
    # the zigzag replaces an arc of chord ``chord`` centred at angle 0
    half = math.asin(chord / (2 * radius))
    n_arc = max(16, int(math.ceil(2 * np.pi * radius * samples_per_unit)))
    th = np.linspace(half, 2 * np.pi - half, n_arc)
    arc = np.stack([radius * np.cos(th), radius * np.sin(th)], axis=-1)
    p_end = arc[-1]
    p_start = arc[0]
    # zigzag from p_end to p_start; together with the two junctions it
    # carries exactly ``n_corners`` corners
    m = n_corners - 1  # number of zigzag edges
    base = p_start - p_end
    blen = np.linalg.norm(base)
    e = base / blen
    nrm = np.array([e[1], -e[0]])
    step = blen / m
    edge = path_len / m
    amp = math.sqrt(max(edge**2 - step**2, 0.0))
    zz = [p_end + k * step * e + (amp if k % 2 else 0.0) * nrm for k in range(1, m)]
    nodes = np.concatenate([arc, np.array(zz)])
    n_arc_nodes = len(arc)
    corners = {0, n_arc_nodes - 1} | {n_arc_nodes + i for i in range(len(zz))}
    return Curve(nodes, True, frozenset(corners), samples_per_unit)


def random_star_loop(rng, modes: int = 3, amplitude: float = 0.25, samples_per_unit: float = 40.0) -> Curve:
    """Star-shaped planar loop r(theta) = 1 + sum_k a_k cos(k theta + phi_k)
    with random coefficients; simple whenever sum |a_k| < 1."""
    k = np.arange(2, 2 + modes)
    a = rng.uniform(-1, 1, modes) * amplitude / np.arange(1, modes + 1)
    ph = rng.uniform(0, 2 * np.pi, modes)

    def f(th):
        r = 1 + np.sum(a[:, None] * np.cos(k[:, None] * th[None, :] + ph[:, None]), axis=0)
        return r[:, None] * np.stack([np.cos(th), np.sin(th)], axis=1)

    return build_curve(resample_closed(f, samples_per_unit))


FIXTURES = {
    "circle": lambda: circle(),
    "stadium": lambda: stadium(),
    "spiral": lambda: spiral_loop(),
    "folded": lambda: folded_loop(),
    "trefoil": lambda: trefoil(),
    "corner_packed": lambda: corner_packed(),
}


def fixture(name: str) -> Curve:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}") from None

"""Ball-growth estimation and the loop surgery algorithm.

The surgery splits a closed curve into closed pieces whose curve measures sum
to the original one, each satisfying a ball growth bound of order
``ceil(1/eps)``, at the cost of a small increase in total length.  Two kinds of
cut are used: Type I removes a minimal arc on which the curve fails to be
quantitatively injective, Type II removes a window densely packed with corners
(the bridge end points created by earlier cuts).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from . import _kernels
from .geometry import CurrentMeasure, Curve, cut, measure_of

__all__ = [
    "EmptyMeasure",
    "NoValidDelta",
    "IterationLimitExceeded",
    "InvalidEpsilon",
    "BallGrowthSampling",
    "BallGrowth",
    "SurgeryConfig",
    "CutRecord",
    "SurgeryReport",
    "ball_growth_constant",
    "find_delta",
    "violating_pair",
    "corner_spacing_violation",
    "surgery_decompose",
    "verify_decomposition",
    "injectivity_constant",
    "max_tangent_oscillation",
]


class EmptyMeasure(ValueError):
    pass


class NoValidDelta(ValueError):
    pass


class IterationLimitExceeded(RuntimeError):
    pass


class InvalidEpsilon(ValueError):
    pass


def _check_epsilon(eps: float) -> float:
    eps = float(eps)
    if not (0.0 < eps < 0.1):
        raise InvalidEpsilon(f"epsilon must lie in (0, 1/10), got {eps}")
    return eps


# ---------------------------------------------------------------------------
# ball growth


@dataclass(frozen=True)
class BallGrowthSampling:
    center_strategy: str = "nodes"  # "nodes" or "grid"
    ratio: float = 1.1
    r_min: float | None = None
    r_max: float | None = None
    refinement_rounds: int = 2
    grid_per_axis: int = 8

    def __post_init__(self):
        if self.center_strategy not in ("nodes", "grid"):
            raise ValueError("center_strategy must be 'nodes' or 'grid'")
        if self.ratio <= 1.0:
            raise ValueError("radius ladder ratio must exceed 1")
        if self.r_min is not None and self.r_min <= 0:
            raise ValueError("r_min must be positive")


@dataclass(frozen=True)
class BallGrowth:
    """Bracket on sup ||mu||(B_r(x)) / r.

    ``lower`` is attained by an explicit ball; ``upper`` is a certified
    bound for polyline measures (see :func:`ball_growth_constant`).
    """

    lower: float
    upper: float
    center: tuple
    radius: float

    def __float__(self):
        return self.lower


def _radius_ladder(r_min, r_max, ratio):
    n = int(math.ceil(math.log(r_max / r_min) / math.log(ratio))) + 1
    return r_min * ratio ** np.arange(n)


def _on_curve_centers(mu: CurrentMeasure):
    mids = 0.5 * (mu.starts + mu.ends)
    return np.concatenate([mu.starts, mu.ends, mids])


def ball_growth_constant(measure: CurrentMeasure, sampling: BallGrowthSampling | None = None) -> BallGrowth:
    """Estimate the ball growth constant of ``measure``.

    The lower bound maximises mass/r over centers at segment end points and
    midpoints (plus a bounding-box grid when requested) and a geometric
    radius ladder, then refines twice around the maximiser.

    The upper bound uses that a ball B_r(x) meeting the support sits inside
    B_2r(y) for a support point y, and y lies within ``eta`` (a quarter of
    the longest segment) of a sampled center.  On each ladder interval the
    mass is bounded either by the mass of the enlarged ball at the next rung
    or by 2r times the number of segments meeting it (a segment crosses a
    ball of radius r in length at most 2r).  Radii above the ladder are
    bounded by the total mass.
    """
    sampling = sampling or BallGrowthSampling()
    lens = measure.lengths
    keep = (lens > 0) & (measure.weights != 0)
    if not np.any(keep):
        raise EmptyMeasure("ball growth of an empty measure")
    mu = CurrentMeasure(measure.starts[keep], measure.ends[keep], measure.weights[keep])
    lens = lens[keep]
    starts = np.ascontiguousarray(mu.starts)
    vecs = np.ascontiguousarray(mu.ends - mu.starts)
    w = np.ascontiguousarray(mu.weights)
    total = mu.total_mass

    lo_box, hi_box = mu.bounding_box()
    diam = float(np.linalg.norm(hi_box - lo_box))
    r_min = sampling.r_min or float(lens.min()) / 4
    r_max = sampling.r_max or max(2.0 * diam, 4 * r_min)
    radii = _radius_ladder(r_min, r_max, sampling.ratio)

    on_curve = np.ascontiguousarray(_on_curve_centers(mu))
    centers = on_curve
    if sampling.center_strategy == "grid":
        axes = [np.linspace(lo_box[j], hi_box[j], sampling.grid_per_axis) for j in range(mu.dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, mu.dim)
        centers = np.ascontiguousarray(np.concatenate([on_curve, grid]))

    table = _kernels.ball_mass_table(centers, starts, vecs, w, radii)[0]
    ratios = table / radii[None, :]
    ci, ri = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
    best = float(ratios[ci, ri])
    best_c = centers[ci].copy()
    best_r = float(radii[ri])

    # local refinement around the maximiser
    span_c = float(lens.max())
    span_r = sampling.ratio
    for _ in range(sampling.refinement_rounds):
        # points on segments near the current best center
        dist = np.linalg.norm(0.5 * (mu.starts + mu.ends) - best_c, axis=1)
        segs = np.nonzero(dist <= 2 * span_c + 0.5 * lens)[0]
        fr = np.linspace(0.0, 1.0, 9)
        cand = (starts[segs, None, :] + fr[None, :, None] * vecs[segs, None, :]).reshape(-1, mu.dim)
        if sampling.center_strategy == "grid":
            offs = np.linspace(-span_c, span_c, 5)
            mesh = np.stack(np.meshgrid(*([offs] * mu.dim), indexing="ij"), axis=-1).reshape(-1, mu.dim)
            cand = np.concatenate([cand, best_c + mesh])
        cand = np.ascontiguousarray(cand)
        rr = best_r * span_r ** np.linspace(-1.0, 1.0, 21)
        t2 = _kernels.ball_mass_table(cand, starts, vecs, w, rr)[0] / rr[None, :]
        i2, j2 = np.unravel_index(int(np.argmax(t2)), t2.shape)
        if t2[i2, j2] > best:
            best = float(t2[i2, j2])
            best_c = cand[i2].copy()
            best_r = float(rr[j2])
        span_c /= 4
        span_r = span_r ** 0.25

    # certified upper bound from on-curve centers
    eta = float(lens.max()) / 4
    shifted, count = _kernels.ball_mass_table(on_curve, starts, vecs, w, radii + eta)
    per_rung = np.minimum(2.0 * shifted[:, 1:] / radii[None, :-1], 2.0 * count[:, 1:])
    upper_ladder = float(per_rung.max()) if per_rung.size else 0.0
    upper_small = 2.0 * float(count[:, 0].max())
    upper_large = 2.0 * total / radii[-1]
    upper = max(upper_ladder, upper_small, upper_large, best)
    return BallGrowth(best, upper, tuple(float(v) for v in best_c), best_r)


# ---------------------------------------------------------------------------
# scale of tangent continuity


def max_tangent_oscillation(curve: Curve, delta: float, exclude_corners: bool = True) -> float:
    """max |T_i - T_j| over edge pairs that contain parameters within circle
    distance ``< delta`` (not separated by a registered corner if
    ``exclude_corners``)."""
    gaps, diffs, blocked = _edge_pair_tables(curve)
    mask = gaps < delta
    if exclude_corners:
        mask &= ~blocked
    np.fill_diagonal(mask, False)
    return float(diffs[mask].max()) if np.any(mask) else 0.0


def _edge_pair_tables(curve: Curve):
    T = curve.tangents
    cum = curve.arclength
    L = curve.length
    m = len(T)
    i = np.arange(m)
    start = cum[:-1]
    end = cum[1:]
    if curve.closed:
        fwd = np.mod(start[None, :] - end[:, None], L)  # from end of i to start of j
        bwd = np.mod(start[:, None] - end[None, :], L)
        gaps = np.minimum(fwd, bwd)
        gaps[np.isclose(fwd, L) | np.isclose(bwd, L)] = 0.0
    else:
        gaps = np.maximum(start[None, :] - end[:, None], start[:, None] - end[None, :])
        gaps = np.maximum(gaps, 0.0)
        fwd = gaps
        bwd = gaps
    diffs = np.linalg.norm(T[:, None, :] - T[None, :, :], axis=-1)
    # corner blocking: corners are nodes; node k sits between edge k-1 and k
    is_corner = np.zeros(curve.n_nodes, dtype=np.int64)
    for c in curve.corners:
        is_corner[c] = 1
    cc = np.concatenate([[0], np.cumsum(is_corner)])  # cc[k] = corners among nodes < k
    n_nodes = curve.n_nodes
    ii, jj = np.meshgrid(i, i, indexing="ij")
    lo = np.minimum(ii, jj)
    hi = np.maximum(ii, jj)
    # nodes lo+1 .. hi lie on the direct path between the edges
    direct = cc[hi + 1] - cc[lo + 1]
    if curve.closed:
        around = cc[n_nodes] - direct  # the complementary path
        short_direct = np.where(
            np.isclose(np.mod(start[hi] - end[lo], L), gaps) | (hi == lo),
            True,
            False,
        )
        blocked = np.where(short_direct, direct > 0, around > 0)
    else:
        blocked = direct > 0
    return gaps, diffs, blocked


def find_delta(curve: Curve, oscillation_bound: float = 1.0 / 3.0, exclude_corners: bool = False) -> float:
    """Largest delta with |T(s) - T(s')| <= bound whenever d(s, s') < delta.

    Computed exactly over the edge tangents: delta is the smallest gap
    between two edges whose tangents differ by more than the bound.

    Raises:
        NoValidDelta: adjacent edges already violate the bound (coarse
            sampling, or a registered corner when ``exclude_corners`` is off).
    """
    if oscillation_bound <= 0:
        raise ValueError("oscillation bound must be positive")
    gaps, diffs, blocked = _edge_pair_tables(curve)
    bad = diffs > oscillation_bound
    if exclude_corners:
        bad &= ~blocked
    np.fill_diagonal(bad, False)
    if not np.any(bad):
        return curve.length / 2 if curve.closed else curve.length
    delta = float(gaps[bad].min())
    if delta <= 0.0:
        raise NoValidDelta("tangent oscillation exceeds the bound between adjacent edges")
    return delta


# ---------------------------------------------------------------------------
# violations


@numba.njit(cache=True)
def _min_violating_pair(pts, s, L, closed, eps, delta):
    n = pts.shape[0]
    d = pts.shape[1]
    best_d = np.inf
    bi = -1
    bj = -1
    for i in range(n):
        for j in range(i + 1, n):
            diff = s[j] - s[i]
            dg = diff
            if closed and L - diff < dg:
                dg = L - diff
            if dg < delta or dg > best_d:
                continue
            c2 = 0.0
            for k in range(d):
                q = pts[i, k] - pts[j, k]
                c2 += q * q
            lim = eps * dg
            if c2 <= lim * lim:
                if dg < best_d:
                    best_d = dg
                    bi = i
                    bj = j
    return bi, bj, best_d


def _oriented(curve: Curve, s1: float, s2: float):
    """Order a parameter pair so the forward arc t -> t' is the shorter one."""
    L = curve.length
    a, b = min(s1, s2), max(s1, s2)
    if not curve.closed or b - a <= L - (b - a):
        return a, b
    return b, a + L


def violating_pair(curve: Curve, epsilon: float, delta: float, refine: bool = True):
    """Sampled pair minimising the circle distance among pairs with
    ``d >= delta`` and ``|gamma(s) - gamma(s')| <= epsilon * d``.

    Returns ``(t, t')`` with ``t < t'``; the forward arc from ``t`` to ``t'``
    (taken modulo L, so ``t'`` may exceed L) is the short arc.  ``None`` when
    no sampled pair violates the condition.
    """
    L = curve.length
    s = np.ascontiguousarray(curve.arclength[: curve.n_nodes])
    pts = np.ascontiguousarray(curve.nodes)
    i, j, best = _min_violating_pair(pts, s, L, curve.closed, float(epsilon), float(delta))
    if i < 0:
        return None
    si, sj = float(s[i]), float(s[j])
    if refine:
        si, sj = _refine_pair(curve, si, sj, epsilon, delta)
    return _oriented(curve, si, sj)


def _refine_pair(curve, si, sj, eps, delta):
    L = curve.length
    h = float(curve.edge_lengths.max())
    best = (circ(L, si, sj, curve.closed), si, sj)
    while h > 1e-3 * delta:
        offs = np.linspace(-h, h, 11)
        a = np.mod(si + offs, L) if curve.closed else np.clip(si + offs, 0, L)
        b = np.mod(sj + offs, L) if curve.closed else np.clip(sj + offs, 0, L)
        pa = curve.point_at(a)
        pb = curve.point_at(b)
        A, B = np.meshgrid(a, b, indexing="ij")
        dg = circ(L, A, B, curve.closed)
        chord = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=-1)
        ok = (dg >= delta) & (chord <= eps * dg)
        if np.any(ok):
            dd = np.where(ok, dg, np.inf)
            k = np.unravel_index(int(np.argmin(dd)), dd.shape)
            if dd[k] < best[0]:
                best = (float(dd[k]), float(A[k]), float(B[k]))
                si, sj = best[1], best[2]
        h /= 5
    return best[1], best[2]


def circ(L, a, b, closed=True):
    diff = np.abs(np.asarray(a) - np.asarray(b))
    return np.minimum(diff, L - diff) if closed else diff


def corner_spacing_violation(curve: Curve, epsilon: float, delta: float):
    """Earliest window of more than ``ceil(1/eps)`` corners with
    ``t' - t < delta / eps`` and ``|gamma(t) - gamma(t')| < delta``.

    The window is closed: ``t <= c_i`` and ``t' >= c_{i+K}`` for K+1
    consecutive corners.  Returns ``(t, t')`` (``t'`` may exceed L for a
    window that wraps through the parameter origin) or ``None``.
    """
    K = math.ceil(1.0 / epsilon)
    cp = curve.corner_params
    k = len(cp)
    if k < K + 1:
        return None
    L = curve.length
    span_max = delta / epsilon
    s_nodes = curve.arclength[: curve.n_nodes]
    ext = np.concatenate([cp, cp + L])
    s_ext = np.concatenate([s_nodes, s_nodes + L])
    for i in range(k):
        ci = ext[i]
        cj = ext[i + K]
        if cj - ci >= min(span_max, L):
            continue
        if _chord(curve, ci, cj) < delta:
            return float(ci), float(cj)
        tt = s_ext[(s_ext > cj - span_max) & (s_ext <= ci)]
        tp = s_ext[(s_ext >= cj) & (s_ext < ci + span_max)]
        if len(tt) == 0 or len(tp) == 0:
            continue
        A, B = np.meshgrid(tt, tp, indexing="ij")
        ok = (B - A < span_max) & (B - A < L)
        if not np.any(ok):
            continue
        pa = curve.point_at(np.mod(tt, L))
        pb = curve.point_at(np.mod(tp, L))
        chord = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=-1)
        ok &= chord < delta
        if np.any(ok):
            width = np.where(ok, B - A, np.inf)
            a, b = np.unravel_index(int(np.argmin(width)), width.shape)
            return float(A[a, b]), float(B[a, b])
    return None


def _chord(curve, a, b):
    L = curve.length
    pa, pb = curve.point_at(np.mod([a, b], L) if b < 2 * L else [a, b])
    return float(np.linalg.norm(pa - pb))


# ---------------------------------------------------------------------------
# surgery


@dataclass(frozen=True)
class SurgeryConfig:
    epsilon: float
    delta: float | None = None
    max_iterations: int | None = None
    oscillation_bound: float = 1.0 / 3.0
    sampling: BallGrowthSampling = field(default_factory=BallGrowthSampling)
    certify: bool = True

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        if not (0 < self.oscillation_bound <= 1.0 / 3.0):
            raise ValueError("oscillation bound must lie in (0, 1/3]")
        if self.delta is not None and self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class CutRecord:
    kind: str  # "TypeI", "TypeII" or "Terminal"
    t: float
    t_prime: float
    bridge_length: float
    corners_removed: int
    corners_added: int
    piece_index: int


@dataclass
class SurgeryReport:
    pieces: list
    records: list
    total_length_in: float
    total_length_out: float
    delta: float
    epsilon: float
    T1: int
    T2: int
    ball_growth_lower: list = field(default_factory=list)
    ball_growth_certified: list = field(default_factory=list)
    out_of_theorem: bool = False

    @property
    def piece_kinds(self):
        kinds = ["Terminal"] * len(self.pieces)
        for r in self.records:
            kinds[r.piece_index] = r.kind
        return kinds

    @property
    def T1_bound(self) -> float:
        return 2 * self.total_length_in / ((1 - self.epsilon) * self.delta)

    @property
    def T2_bound(self) -> float:
        return 8 * self.total_length_in * self.epsilon / ((1 - self.epsilon) * self.delta)

    def to_json_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "total_length_in": self.total_length_in,
            "total_length_out": self.total_length_out,
            "T1": self.T1,
            "T2": self.T2,
            "T1_bound": self.T1_bound,
            "T2_bound": self.T2_bound,
            "out_of_theorem": self.out_of_theorem,
            "records": [asdict(r) for r in self.records],
            "pieces": [
                dict(p.to_json_dict(), kind=k) for p, k in zip(self.pieces, self.piece_kinds)
            ],
            "ball_growth_lower": self.ball_growth_lower,
            "ball_growth_certified": self.ball_growth_certified,
        }


def _count_open(params, a, b, L):
    """Number of params strictly inside the forward arc (a, b), b <= a + L."""
    if len(params) == 0:
        return 0
    rel = np.mod(params - a, L)
    return int(np.sum((rel > 1e-12 * L) & (rel < (b - a) - 1e-12 * L)))


def surgery_decompose(curve: Curve, config: SurgeryConfig) -> SurgeryReport:
    """Decompose a closed curve into closed pieces with controlled ball growth.

    Each round first looks for a corner window violating the spacing
    condition (Type II cut), then for a minimal non-injective pair (Type I
    cut).  When neither exists the remaining curve is the terminal piece.
    """
    if not curve.closed:
        raise ValueError("surgery needs a closed curve")
    eps = config.epsilon
    out_of_theorem = bool(curve.corners)
    delta = config.delta
    if delta is None:
        delta = find_delta(curve, config.oscillation_bound, exclude_corners=out_of_theorem)
    L_in = curve.length
    t1_bound = 2 * L_in / ((1 - eps) * delta)
    t2_bound = 8 * L_in * eps / ((1 - eps) * delta)
    max_it = config.max_iterations or int(4 * (t1_bound + t2_bound)) + 8

    pieces: list = []
    records: list = []
    work = curve
    T1 = T2 = 0
    for _ in range(max_it):
        window = corner_spacing_violation(work, eps, delta)
        kind = "TypeII"
        if window is None:
            window = violating_pair(work, eps, delta)
            kind = "TypeI"
        if window is None:
            pieces.append(work)
            break
        t, tp = window
        L = work.length
        removed = _count_open(work.corner_params, t, tp, L)
        kept = len(work.corners) - removed
        if tp > L * (1 + 1e-12) or t > 0 and tp >= L:
            work = work.rotated(t)
            tp, t = tp - t, 0.0
        tp = min(tp, work.length)
        x = work.point_at(t)
        y = work.point_at(tp)
        new, g = cut(work, t, tp)
        records.append(
            CutRecord(
                kind=kind,
                t=float(t),
                t_prime=float(tp),
                bridge_length=float(np.linalg.norm(x - y)),
                corners_removed=removed,
                corners_added=max(0, len(new.corners) - kept),
                piece_index=len(pieces),
            )
        )
        pieces.append(g)
        work = new
        if kind == "TypeI":
            T1 += 1
        else:
            T2 += 1
    else:
        raise IterationLimitExceeded(
            f"surgery did not terminate within {max_it} cuts (T1={T1}, T2={T2})"
        )

    report = SurgeryReport(
        pieces=pieces,
        records=records,
        total_length_in=L_in,
        total_length_out=float(sum(p.length for p in pieces)),
        delta=float(delta),
        epsilon=eps,
        T1=T1,
        T2=T2,
        out_of_theorem=out_of_theorem,
    )
    if config.certify:
        for p in pieces:
            bg = ball_growth_constant(measure_of(p), config.sampling)
            report.ball_growth_lower.append(bg.lower)
            report.ball_growth_certified.append(bg.upper)
    return report


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    value: float
    bound: float
    detail: str = ""

    @property
    def margin(self) -> float:
        return self.bound - self.value


@dataclass
class VerificationSummary:
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def to_json_dict(self) -> dict:
        return {k: dict(asdict(v), margin=v.margin) for k, v in self.checks.items()}


def random_polynomial_fields(dim: int, n: int, seed: int = 0, degree: int = 3, center=None, scale: float = 1.0):
    """``n`` random vector fields with polynomial components of total degree
    ``<= degree`` in ``(x - center) / scale``."""
    rng = np.random.default_rng(seed)
    exps = [e for e in np.ndindex(*([degree + 1] * dim)) if sum(e) <= degree]
    exps = np.array(exps)
    c0 = np.zeros(dim) if center is None else np.asarray(center, float)
    fields = []
    for _ in range(n):
        coef = rng.normal(size=(len(exps), dim))

        def phi(x, coef=coef):
            y = (np.asarray(x) - c0) / scale
            mon = np.prod(y[:, None, :] ** exps[None, :, :], axis=-1)
            return mon @ coef

        fields.append(phi)
    return fields


def verify_decomposition(
    original: Curve,
    report: SurgeryReport,
    epsilon: float,
    n_fields: int = 50,
    seed: int = 0,
    sampling: BallGrowthSampling | None = None,
) -> VerificationSummary:
    """Check additivity, per-piece ball growth, length budget and cut counts."""
    eps = _check_epsilon(epsilon)
    K = math.ceil(1.0 / eps)
    mu = measure_of(original)
    parts = CurrentMeasure.concat([measure_of(p) for p in report.pieces]) if report.pieces else CurrentMeasure.zero(original.dim)
    center = original.nodes.mean(axis=0)
    scale = max(original.diameter, 1e-300)
    worst = 0.0
    for phi in random_polynomial_fields(original.dim, n_fields, seed, center=center, scale=scale):
        a = mu.pair(phi)
        b = parts.pair(phi)
        ref = mu.total_mass * float(np.max(np.abs(phi(original.nodes))))
        worst = max(worst, abs(a - b) / ref)
    checks = {"additivity": CheckResult(worst <= 1e-8, worst, 1e-8, f"{n_fields} polynomial fields")}

    if report.ball_growth_certified and len(report.ball_growth_certified) == len(report.pieces):
        bgs = report.ball_growth_certified
    else:
        bgs = [ball_growth_constant(measure_of(p), sampling).upper for p in report.pieces]
    bg_max = max(bgs) if bgs else 0.0
    checks["ball_growth"] = CheckResult(bg_max <= 100 * K, bg_max, 100 * K, "certified upper bound")

    limit = (1 + 20 * eps) * original.length
    checks["length"] = CheckResult(report.total_length_out <= limit, report.total_length_out, limit)
    checks["T1"] = CheckResult(report.T1 <= report.T1_bound, report.T1, report.T1_bound)
    checks["T2"] = CheckResult(report.T2 <= report.T2_bound, report.T2, report.T2_bound)
    return VerificationSummary(checks)


def injectivity_constant(curve: Curve, min_distance: float = 0.0) -> float:
    """min |gamma(s) - gamma(t)| / d(s, t) over node pairs with d >= min_distance."""
    s = curve.arclength[: curve.n_nodes]
    L = curve.length
    pts = curve.nodes
    best = np.inf
    for i in range(len(s) - 1):
        dg = circ(L, s[i], s[i + 1 :], curve.closed)
        ch = np.linalg.norm(pts[i + 1 :] - pts[i], axis=1)
        m = dg >= max(min_distance, 1e-300)
        if np.any(m):
            best = min(best, float(np.min(ch[m] / dg[m])))
    return best

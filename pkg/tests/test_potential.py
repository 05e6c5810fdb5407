import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from loopforge.fixtures import circle, folded_loop, stadium, trefoil
from loopforge.geometry import CurrentMeasure, SurfaceMeasure, cone_surface, measure_of
from loopforge.potential import (
    AlphaOutOfRange,
    GaussianSource,
    GridTooCoarse,
    NonpositiveTime,
    PointOnSupport,
    bmo_estimate,
    check_lemma_interpolation1,
    check_lemma_pointwise_global,
    grad_heat_surface,
    heat_convolve_measure,
    heat_kernel,
    line_integral,
    maximal_M1,
    measure_cd,
    riesz_constant,
    riesz_direct,
    riesz_semigroup,
    sample_points,
)


def gaussian_potential_centre(alpha, d, s=1.0):
    return (4 * math.pi) ** (-d / 2) * math.gamma((d - alpha) / 2) / math.gamma(d / 2) * s ** ((alpha - d) / 2)


@pytest.mark.parametrize("d,alpha", [(2, 0.25), (2, 0.5), (2, 0.75), (3, 0.25), (3, 0.5), (3, 0.75), (3, 1.5)])
def test_semigroup_matches_gaussian_closed_form(d, alpha):
    src = GaussianSource(np.zeros(d), s=1.0)
    got = riesz_semigroup(src, alpha, np.zeros(d))
    assert got == pytest.approx(gaussian_potential_centre(alpha, d), rel=1e-8)


@pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
def test_semigroup_off_centre_against_mpmath(r):
    # independent route: the t-integral evaluated by mpmath
    d, alpha, s = 3, 0.5, 0.7
    src = GaussianSource(np.zeros(d), s=s)
    x = np.array([r, 0.0, 0.0])
    mp.mp.dps = 30
    f = lambda t: t ** (alpha / 2 - 1) * (4 * mp.pi * (s + t)) ** (-d / 2) * mp.e ** (-(r**2) / (4 * (s + t)))
    ref = float(mp.quad(f, [0, s, 10 * s, mp.inf]) / mp.gamma(alpha / 2))
    assert riesz_semigroup(src, alpha, x) == pytest.approx(ref, rel=1e-8)


def test_riesz_constant_normalises_kernel():
    # I_a I_b = I_(a+b) on the symbols; check gamma(a) gamma(b) / gamma(a+b) against the
    # Fourier convolution identity |x|^(a-d) * |x|^(b-d) = c |x|^(a+b-d) with c from mpmath
    d, a, b = 3, 0.5, 1.0
    c = riesz_constant(a, d) * riesz_constant(b, d) / riesz_constant(a + b, d)
    ref = mp.pi ** (d / 2) * mp.gamma(a / 2) * mp.gamma(b / 2) * mp.gamma((d - a - b) / 2) / (
        mp.gamma((d - a) / 2) * mp.gamma((d - b) / 2) * mp.gamma((a + b) / 2)
    )
    assert c == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize("beta", [0.5, 0.625, 1.25, 0.875])
@pytest.mark.parametrize("rho,a,b", [(0.1, -1.0, 2.0), (1.0, 0.5, 3.0), (0.01, -0.3, -0.02), (2.0, -5.0, 5.0)])
def test_line_integral_against_mpmath(beta, rho, a, b):
    mp.mp.dps = 30
    pts = [a, b] if not (a < 0 < b) else [a, 0, b]
    ref = float(mp.quad(lambda u: (rho**2 + u**2) ** (-beta), pts))
    assert float(line_integral(rho, a, b, beta)) == pytest.approx(ref, rel=1e-10)


def test_heat_exact_and_quadrature_agree():
    mu = measure_of(stadium())
    pts = sample_points(stadium(), 10, seed=1)
    for t in (1e-3, 0.1, 10.0):
        a = heat_convolve_measure(mu, pts, t)
        b = heat_convolve_measure(mu, pts, t, method="gl", tol=1e-12)
        assert np.allclose(a, b, rtol=1e-8, atol=1e-10 * np.abs(a).max())


def test_heat_rejects_nonpositive_time():
    with pytest.raises(NonpositiveTime):
        heat_kernel(np.zeros(2), 0.0)
    with pytest.raises(NonpositiveTime):
        heat_convolve_measure(measure_of(circle()), np.zeros(2), -1.0)


@pytest.mark.parametrize("name,alphas", [("circle", (0.25, 0.5, 0.75)), ("folded", (0.25, 0.5, 0.75)), ("trefoil", (0.25, 0.5, 0.75, 1.5))])
def test_direct_matches_semigroup(name, alphas):
    curve = {"circle": circle(samples_per_unit=15), "folded": folded_loop(samples_per_unit=15), "trefoil": trefoil(samples_per_unit=15)}[name]
    mu = measure_of(curve)
    pts = sample_points(curve, 6, seed=3, min_dist=0.05 * curve.diameter)
    for a in alphas:
        d = riesz_direct(mu, a, pts)
        s = riesz_semigroup(mu, a, pts)
        scale = np.abs(d).max()
        assert np.abs(d - s).max() <= 1e-5 * scale


@given(st.floats(0.1, 0.9), st.floats(0.25, 8.0), st.integers(0, 1000))
def test_dilation_identity(alpha, lam, seed):
    curve = circle(samples_per_unit=8)
    mu = measure_of(curve)
    x = sample_points(curve, 3, seed=seed)
    a = riesz_direct(mu, alpha, x)
    b = riesz_direct(measure_of(curve.scaled(lam)), alpha, lam * x)
    assert np.allclose(b, lam ** (1 + alpha - 2) * a, rtol=1e-8, atol=0)


def test_direct_rejects_support_and_alpha():
    mu = measure_of(circle())
    with pytest.raises(PointOnSupport):
        riesz_direct(mu, 0.5, mu.starts[3])
    with pytest.raises(AlphaOutOfRange):
        riesz_direct(mu, 2.0, np.zeros(2))


def test_closed_curve_potential_decays_faster_than_kernel():
    # a closed current has no monopole: I_a mu ~ r^(a-d-1) far away
    mu = measure_of(circle(samples_per_unit=20))
    r = np.array([20.0, 40.0, 80.0])
    v = np.linalg.norm(riesz_direct(mu, 0.5, np.stack([r, 0.3 * r], axis=1)), axis=1)
    slope = np.diff(np.log(v)) / np.diff(np.log(r))
    assert np.allclose(slope, 0.5 - 3, atol=0.02)


def _triangle_surface(tri):
    tri = np.asarray(tri, float)[None]
    e1, e2 = tri[0, 1] - tri[0, 0], tri[0, 2] - tri[0, 0]
    return SurfaceMeasure(tri, np.array([0.5 * np.linalg.norm(np.cross(e1, e2))]))


@pytest.mark.parametrize("x", [(0.2, 0.2, 0.3), (1.5, -0.5, 0.1), (0.3, 0.3, 0.0)])
def test_surface_gradient_heat_against_mpmath(x):
    tri = [(0, 0, 0), (1, 0, 0), (0, 1, 0)]
    S = _triangle_surface(tri)
    t = 0.05
    x = np.array(x)
    mp.mp.dps = 20

    def integrand(u, v):
        y = np.array([u, v, 0.0]) - x
        r2 = float(y @ y)
        return mp.sqrt(r2) / (2 * t) * (4 * mp.pi * t) ** (-1.5) * mp.e ** (-r2 / (4 * t))

    ref = float(mp.quad(lambda u: mp.quad(lambda v: integrand(u, v), [0, 1 - u]), [0, x[0] if 0 < x[0] < 1 else 0.5, 1]))
    got = float(grad_heat_surface(S, x, [t])[0])
    assert got == pytest.approx(ref, rel=1e-6)


def test_cd_constant_of_order_one():
    c = circle(samples_per_unit=20)
    pts = sample_points(c, 20, seed=0)
    ts = np.logspace(-5, 2, 120)
    cd = measure_cd(measure_of(c), cone_surface(c), pts, ts, stride=4)
    assert 0.3 < cd < 3.0


def test_maximal_M1_of_segment_bounded_by_length_scale():
    mu = CurrentMeasure(np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]), np.ones(1))
    x = np.array([[0.5, 0.1], [0.5, 1.0], [3.0, 0.0]])
    m, t, interior = maximal_M1(mu, x, return_argmax=True)
    assert np.all(interior)
    assert m[0] > m[1] > 0


def test_pointwise_global_margins_on_small_set():
    c = circle(samples_per_unit=15)
    pts = sample_points(c, 12, seed=2)
    rep = check_lemma_pointwise_global(c, None, 0.5, pts)
    assert rep.passed
    assert rep.best_constant <= rep.constant


def test_interpolation_margins_on_small_set():
    c = circle(samples_per_unit=15)
    pts = sample_points(c, 12, seed=2)
    rep = check_lemma_interpolation1(c, 0.5, pts, grid_n=128)
    assert rep.passed
    assert rep.extra["bmo"] > 0


def test_bmo_of_constant_and_step():
    f = np.ones((64, 64))
    assert bmo_estimate(f).value == 0.0
    g = np.zeros((64, 64))
    g[:, 32:] = 1.0
    # a half-half split cube has mean oscillation 1/2
    assert bmo_estimate(g).value == pytest.approx(0.5)


def test_bmo_rejects_coarse_grid():
    with pytest.raises(GridTooCoarse):
        bmo_estimate(np.zeros((32, 32)))

import math

import numpy as np
import pytest

from loopforge import spectral
from loopforge.fields import (
    BoundaryTooClose,
    FieldGrid,
    WidthTooSmall,
    bump_profile,
    dirac_family,
    divergence,
    grid_around,
    loop_current,
    smirnov_superpose,
)
from loopforge.fixtures import circle, folded_loop
from loopforge.geometry import build_curve
from loopforge.surgery import SurgeryConfig, surgery_decompose


def _reversed(c):
    return build_curve(c.nodes[::-1].copy(), c.closed)


def test_bump_profile_unit_integral():
    from scipy.integrate import quad

    assert quad(bump_profile, -1, 1)[0] == pytest.approx(1.0, abs=1e-12)
    assert bump_profile(1.0) == 0.0 and bump_profile(-1.5) == 0.0


def test_circle_mass_within_two_percent():
    c = circle(samples_per_unit=200)
    g = grid_around(np.zeros(2), 128, 4.0, 2)
    F = loop_current(c, 4 * g.spacing, g, project=False)
    assert F.l1_mass() == pytest.approx(2 * math.pi, rel=0.02)


def test_mass_error_shrinks_with_refinement():
    c = circle(samples_per_unit=200)
    errs = []
    for n in (64, 128, 256):
        g = grid_around(np.zeros(2), n, 4.0, 2)
        errs.append(abs(loop_current(c, 4 * g.spacing, g, project=False).l1_mass() - 2 * math.pi))
    assert errs[1] <= 0.5 * errs[0] and errs[2] <= 0.5 * errs[1]


def test_projection_is_spectrally_divergence_free():
    c = circle(samples_per_unit=100).embedded(3)
    g = grid_around(np.zeros(3), 48, 4.0, 3)
    F = loop_current(c, 4 * g.spacing, g)
    _, rel = spectral.spectral_divergence(F.data, g.spacing)
    assert rel < 1e-12


def test_central_difference_divergence_is_truncation_error():
    # peak-normalised max |div_h F| h / max |F| depends only on width / h and
    # falls at least fourfold per doubling; it is below 1e-3 from 16h on
    c = circle(samples_per_unit=200)
    g = grid_around(np.zeros(2), 256, 4.0, 2)
    vals = []
    for k in (4, 8, 16):
        F = loop_current(c, k * g.spacing, g)
        vals.append(divergence(F).max_abs * g.spacing / F.magnitude().max())
    assert vals[1] < vals[0] / 4 and vals[2] < vals[1] / 4
    assert vals[2] < 1e-3


def test_divergence_controls():
    g = grid_around(np.zeros(2), 64, 4.0, 2)
    const = g.with_data(np.ones(g.data.shape))
    assert divergence(const).max_abs == 0.0
    x = g.points()
    r = np.linalg.norm(x, axis=-1)
    # gradient of a radial bump is curl free, so its divergence is its Laplacian
    b = bump_profile(r)
    grad = np.stack(np.gradient(b, g.spacing), axis=-1)
    D = divergence(g.with_data(grad))
    assert D.max_abs > 1.0
    assert divergence(g.with_data(grad), boundary="zero").max_abs == pytest.approx(D.max_abs, rel=1e-12)


def test_opposite_loops_cancel():
    c = circle(samples_per_unit=60)
    g = grid_around(np.zeros(2), 64, 4.0, 2)
    F = smirnov_superpose([c, _reversed(c)], [1.0, 1.0], 4 * g.spacing, g)
    assert F.l1_mass() < 1e-12


def test_disjoint_loops_add():
    a = circle(0.5, samples_per_unit=100, center=(-1.0, 0.0))
    b = circle(0.3, samples_per_unit=100, center=(1.0, 0.5))
    g = grid_around(np.zeros(2), 128, 4.0, 2)
    F = smirnov_superpose([a, b], [2.0, 0.5], 4 * g.spacing, g, project=False)
    assert F.l1_mass() == pytest.approx(2.0 * a.length + 0.5 * b.length, rel=0.02)


def test_surgery_pieces_superpose_to_whole():
    c = folded_loop(samples_per_unit=40)
    rep = surgery_decompose(c, SurgeryConfig(epsilon=0.05, certify=False))
    assert len(rep.pieces) > 1
    g = grid_around(np.zeros(2), 128, 2.0 * c.diameter, 2)
    w = 4 * g.spacing
    whole = loop_current(c, w, g, project=False)
    parts = smirnov_superpose(rep.pieces, [1.0] * len(rep.pieces), w, g, project=False)
    # cuts split edges at interior parameters, so the deposit quadrature nodes
    # move; the bump is only piecewise polynomial, hence a small quadrature gap
    assert np.abs(parts.data - whole.data).max() <= 1e-5 * np.abs(whole.data).max()


def test_mollification_commutes_with_dilation():
    c = circle(samples_per_unit=60).embedded(3)
    g = grid_around(np.zeros(3), 32, 6.0, 3)
    for lam in (0.5, 3.0):
        gl = FieldGrid(np.zeros(g.data.shape), lam * g.spacing, lam * g.origin)
        A = loop_current(c, 4 * g.spacing, g, project=False)
        B = loop_current(c.scaled(lam), 4 * lam * g.spacing, gl, project=False)
        assert np.allclose(B.data, lam ** (1 - 3) * A.data, rtol=1e-10, atol=1e-12 * np.abs(A.data).max())


def test_dirac_masses_are_one():
    g = grid_around(np.zeros(3), 48, 6.0, 3, ncomp=1)
    fam = dirac_family([8 * g.spacing, 4 * g.spacing, 2 * g.spacing], g)
    for f in fam:
        assert f.l1_mass() == pytest.approx(1.0, abs=1e-6)


def test_width_and_boundary_errors():
    g = grid_around(np.zeros(2), 64, 4.0, 2)
    with pytest.raises(WidthTooSmall):
        loop_current(circle(), 1.5 * g.spacing, g)
    with pytest.raises(BoundaryTooClose):
        loop_current(circle(1.8), 4 * g.spacing, g)
    with pytest.raises(WidthTooSmall):
        dirac_family([g.spacing], grid_around(np.zeros(2), 64, 4.0, 2, ncomp=1))

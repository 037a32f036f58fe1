import numpy as np
import pytest
from numpy.testing import assert_allclose

from palatini_routh import SpectrumError
from palatini_routh import numkit as nk
from palatini_routh.connections import levi_civita, vacuum_einstein_residual
from palatini_routh.etalinalg import SignatureMatrix
from palatini_routh.fixtures import get_fixture, grid_points, random_analytic_metric
from palatini_routh.framebundle import metric_from_vielbein, metric_jet
from palatini_routh.reconstruction import frame_field, reconstruct, reconstruct_point, round_trip_reduce_reconstruct


def _worst(points, eta):
    worst = {}
    for rp in points:
        for r in rp.residuals(eta):
            worst[r.name] = max(worst.get(r.name, 0.0), r.max_abs)
    return worst


def test_minkowski_identity():
    fx = get_fixture("minkowski")
    rec = reconstruct(fx, grid_points(fx))
    for rp in rec.points:
        assert_allclose(rp.vielbein.e, np.eye(4))
        assert not rp.connection.gamma.any()
    assert all(v == 0 for v in _worst(rec.points, rec.eta).values())


def test_schwarzschild_diagonal_tetrad():
    fx = get_fixture("schwarzschild", {"M": 1.0})
    for p in grid_points(fx, "r=3..10:8,theta=0.3..2.8:3"):
        rp = reconstruct_point(fx.field, p, fx.eta)
        _, r, th, _ = p
        f = 1 - 2 / r
        assert_allclose(rp.vielbein.e, np.diag([1 / np.sqrt(f), np.sqrt(f), 1 / r, 1 / (r * np.sin(th))]), atol=1e-13)
        assert all(x.max_abs < 1e-8 for x in rp.residuals(fx.eta))


def test_post_conditions(rng):
    eta = SignatureMatrix.lorentzian()
    field = random_analytic_metric(rng, eta.eta)
    p = 0.2 * rng.normal(size=4)
    rp = reconstruct_point(field, p, eta)
    ref = metric_jet(field, p)
    assert_allclose(metric_from_vielbein(rp.vielbein, eta).g, ref.g, atol=1e-12)
    assert_allclose(rp.connection.gamma, levi_civita(ref).gamma, atol=1e-12)
    assert np.abs(rp.round_trip_defect(eta)).max() < 1e-10
    names = {r.name: r for r in rp.residuals(eta, tolerance=1e-9)}
    assert names["torsion"].passed and names["metricity"].passed


def test_diagonal_metric_hand_factors():
    a = lambda x: 1.5 + 0.2 * nk.sin(x[0])
    b = lambda x: 0.8 + 0.1 * x[1] * x[1]
    field = lambda x: nk.diag([-1.0 * a(x) * a(x), b(x) * b(x)])
    eta = SignatureMatrix.lorentzian(2)
    p = np.array([0.4, 0.3])
    rp = reconstruct_point(field, p, eta)
    assert_allclose(rp.vielbein.e, np.diag([1 / a(p), 1 / b(p)]), atol=1e-14)
    assert np.abs(rp.round_trip_defect(eta)).max() < 1e-10


@pytest.mark.parametrize("name,grid", [("schwarzschild", "r=3..10:100"), ("desitter_static", None), ("minkowski", None)])
def test_round_trip(name, grid):
    fx = get_fixture(name)
    assert round_trip_reduce_reconstruct(fx, grid_points(fx, grid)).max_abs < 1e-9


def test_spectrum_error_carries_point():
    fx = get_fixture("schwarzschild")
    with pytest.raises(SpectrumError) as info:
        reconstruct(fx, [fx.point(r=1.5)])
    assert_allclose(info.value.point, fx.point(r=1.5))


def test_margin_clips_near_horizon():
    fx = get_fixture("schwarzschild")
    pts = grid_points(fx, "r=1.5..6:10")
    rec = reconstruct(fx, pts, margin=0.0)
    assert len(rec.points) + len(rec.excluded) == len(pts)
    assert all(x[1] >= 3.0 for x in (rp.at for rp in rec.points))
    assert all(x[1] < 3.0 for x in rec.excluded)


def test_bare_field_needs_eta():
    with pytest.raises(ValueError):
        reconstruct(lambda x: np.eye(2), [[0.0, 0.0]])


def test_gauge_coherence():
    fx = get_fixture("schwarzschild")
    ff = frame_field(fx.field, fx.eta)
    h = 1e-4
    for p in grid_points(fx, "r=3.5..9:5,theta=0.5..2.5:3"):
        rp = reconstruct_point(fx.field, p, fx.eta)
        for s in (1, 2):
            dp = np.zeros(4)
            dp[s] = h
            fd = (ff(p + dp) - ff(p - dp)) / (2 * h)
            assert_allclose(rp.section.frame.grad[..., s], fd, atol=1e-7)


@pytest.mark.parametrize("name", ["schwarzschild", "perturbed_schwarzschild", "flat_polar", "sphere2"])
def test_verification_equivalence(name):
    fx = get_fixture(name)
    tol = 1e-8
    for p in grid_points(fx)[::37]:
        g_ok = vacuum_einstein_residual(metric_jet(fx.field, p), tol).passed
        rp = reconstruct_point(fx.field, p, fx.eta)
        assert all(r.passed for r in rp.residuals(fx.eta, tol)) == g_ok

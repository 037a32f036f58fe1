import numpy as np
import pytest
from numpy.testing import assert_allclose

from palatini_routh import InconsistentFrame
from palatini_routh import numkit as nk
from palatini_routh.connections import levi_civita, metricity_residual, torsion_residual, vacuum_einstein_residual
from palatini_routh.etalinalg import SignatureMatrix, random_k, random_k_algebra, vielbein_from_metric
from palatini_routh.fixtures import get_fixture, grid_points, random_analytic_metric
from palatini_routh.framebundle import MetricJet2, VielbeinJet1, adjoint_coords, k_action, metric_from_vielbein, metric_jet
from palatini_routh.reconstruction import frame_field, reconstruct_point
from palatini_routh.reduction import (
    BackgroundConnection,
    Tangent,
    base_lift_conditions,
    fiber_lift_conditions,
    gamma_from_quotient,
    holonomic_lift,
    horizontal_lift_base,
    horizontal_lift_fiber,
    metricity_forms,
    metricity_horizontality_check,
    quotient_contact_forms,
    reduce_F_omega,
    torsionless_A,
)

from oracles import brute_force_lift


def _frame(rng, m, scale=0.3):
    return np.eye(m) + scale * rng.normal(size=(m, m))


def _sym(rng, shape):
    a = rng.normal(size=shape)
    return a + np.swapaxes(a, 0, 1)


class TestReduceMap:
    def test_identity(self):
        g = reduce_F_omega(VielbeinJet1(np.eye(4), np.zeros((4, 4, 4))), SignatureMatrix.lorentzian())
        assert_allclose(g.g, np.diag([-1.0, 1, 1, 1]))
        assert not g.dg.any()

    def test_same_as_metric_from_vielbein(self, rng, eta):
        m = eta.m
        v = VielbeinJet1(_frame(rng, m), rng.normal(size=(m, m, m)))
        a, b = reduce_F_omega(v, eta), metric_from_vielbein(v, eta)
        assert np.array_equal(a.g, b.g) and np.array_equal(a.dg, b.dg)

    def test_k_orbit_invariance(self, rng, eta):
        m = eta.m
        v = VielbeinJet1(_frame(rng, m), rng.normal(size=(m, m, m)))
        for _ in range(10):
            w = k_action(v, random_k(rng, eta), eta)
            assert_allclose(reduce_F_omega(w, eta).g, reduce_F_omega(v, eta).g, atol=1e-12)
            assert_allclose(reduce_F_omega(w, eta).dg, reduce_F_omega(v, eta).dg, atol=1e-12)

    def test_holonomic_frame_field_reproduces_metric_jet(self, rng):
        eta = SignatureMatrix.lorentzian()
        field = random_analytic_metric(rng, eta.eta)
        p = 0.2 * rng.normal(size=4)
        j = nk.eval_jet(frame_field(field, eta), p, order=1)
        red = reduce_F_omega(VielbeinJet1(j.val, j.grad), eta)
        ref = metric_jet(field, p)
        assert_allclose(red.g, ref.g, atol=1e-10)
        assert_allclose(red.dg, ref.dg, atol=1e-10)


class TestBaseLift:
    def test_zero_background(self, rng):
        e = _frame(rng, 4)
        assert not horizontal_lift_base(1, e, e.T @ np.diag([-1.0, 1, 1, 1]) @ e, BackgroundConnection.zero(4)).any()

    def test_defining_conditions(self, rng, eta):
        m = eta.m
        for _ in range(10):
            e = _frame(rng, m)
            bc = BackgroundConnection(rng.normal(size=(m, m, m)))
            for mu in range(m):
                proj, kpart = base_lift_conditions(mu, e, bc, eta)
                assert np.abs(proj).max() < 1e-12
                assert np.abs(kpart).max() < 1e-12

    def test_matches_linear_solve(self, rng, eta):
        m = eta.m
        e = _frame(rng, m)
        bc = BackgroundConnection(rng.normal(size=(m, m, m)))
        g = e.T @ eta.eta @ e
        f = bc.frame_functions(e)
        for mu in range(m):
            sol, rank = brute_force_lift(e, eta.eta, np.zeros((m, m)), f[:, :, mu])
            assert rank == m * m
            assert_allclose(horizontal_lift_base(mu, e, g, bc), sol, atol=1e-11)

    def test_euclidean_orthogonal_frame(self, rng):
        eta = SignatureMatrix.euclidean(3)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        gb = rng.normal(size=(3, 3, 3))
        gb = gb - np.transpose(gb, (1, 0, 2))  # antisymmetric in (sigma, rho) after raising with g = I
        bc = BackgroundConnection(gb)
        n = horizontal_lift_base(2, q, np.eye(3), bc)
        # N_k^s = 1/2 e_k^b (Gbar^b_{s mu} - Gbar^s_{b mu}) collapses to e_k^b Gbar^b_{s mu}
        assert_allclose(n, q @ gb[:, :, 2], atol=1e-13)
        sol, _ = brute_force_lift(q, eta.eta, np.zeros((3, 3)), bc.frame_functions(q)[:, :, 2])
        assert_allclose(n, sol, atol=1e-12)

    def test_inconsistent_pair(self, rng):
        eta = SignatureMatrix.lorentzian()
        with pytest.raises(InconsistentFrame):
            horizontal_lift_base(0, _frame(rng, 4), np.eye(4), BackgroundConnection.zero(4), eta)


class TestFiberLift:
    def test_identity_frame_value(self):
        q = horizontal_lift_fiber(0, 0, np.eye(3), np.eye(3))
        assert q[0, 0] == pytest.approx(0.5)
        assert np.count_nonzero(q) == 1

    def test_symmetric_in_pair(self, rng):
        e = _frame(rng, 4)
        g = e.T @ np.diag([-1.0, 1, 1, 1]) @ e
        assert_allclose(horizontal_lift_fiber(1, 3, e, g), horizontal_lift_fiber(3, 1, e, g))

    def test_defining_conditions_and_linear_solve(self, rng, eta):
        m = eta.m
        for _ in range(5):
            e = _frame(rng, m)
            g = e.T @ eta.eta @ e
            for mu in range(m):
                for nu in range(mu, m):
                    proj, kpart = fiber_lift_conditions(mu, nu, e, eta)
                    assert np.abs(proj).max() < 1e-12 and np.abs(kpart).max() < 1e-12
                    target = np.zeros((m, m))
                    target[mu, nu] += 0.5
                    target[nu, mu] += 0.5
                    sol, _ = brute_force_lift(e, eta.eta, target)
                    assert_allclose(horizontal_lift_fiber(mu, nu, e, g), sol, atol=1e-11)


class TestHolonomicLift:
    def _pair(self, rng, eta):
        m = eta.m
        e = vielbein_from_metric(np.linalg.inv(eta.eta + 0.1 * _sym(rng, (m, m))), eta)
        g = MetricJet2(e.T @ eta.eta @ e, _sym(rng, (m, m, m)))
        return e, g

    def test_trivial(self):
        eta = SignatureMatrix.lorentzian()
        v = holonomic_lift(MetricJet2(eta.eta, np.zeros((4, 4, 4))), np.eye(4), BackgroundConnection.zero(4), eta)
        assert not v.de.any()

    def test_round_trip(self, rng, eta):
        for _ in range(10):
            e, g = self._pair(rng, eta)
            bc = BackgroundConnection(rng.normal(size=(eta.m,) * 3))
            red = reduce_F_omega(holonomic_lift(g, e, bc, eta), eta)
            assert_allclose(red.g, g.g, atol=1e-11)
            assert_allclose(red.dg, g.dg, atol=1e-11)

    def test_levi_civita_background_is_torsion_free(self, rng, eta):
        e, g = self._pair(rng, eta)
        v = holonomic_lift(g, e, BackgroundConnection(levi_civita(g).gamma), eta)
        assert torsion_residual(v).max_abs < 1e-12


class TestQuotientConnection:
    def test_all_zero(self):
        g = MetricJet2(np.eye(3), np.zeros((3, 3, 3)))
        assert not gamma_from_quotient(g, BackgroundConnection.zero(3), np.zeros((3, 3, 3))).gamma.any()

    def test_metric_for_any_k_valued_A(self, rng, eta):
        m = eta.m
        e = _frame(rng, m)
        g = MetricJet2(e.T @ eta.eta @ e, _sym(rng, (m, m, m)))
        bc = BackgroundConnection(rng.normal(size=(m, m, m)))
        A = np.stack([adjoint_coords(e, random_k_algebra(rng, eta)) for _ in range(m)], axis=-1)
        c = gamma_from_quotient(g, bc, A)
        assert metricity_residual(g, c).max_abs < 1e-11

    def test_rejects_non_vertical_A(self, rng):
        g = MetricJet2(np.eye(3), np.zeros((3, 3, 3)))
        with pytest.raises(ValueError):
            gamma_from_quotient(g, BackgroundConnection.zero(3), np.ones((3, 3, 3)))

    def test_torsionless_A_gives_levi_civita(self, rng, eta):
        m = eta.m
        field = random_analytic_metric(rng, eta.eta)
        g = metric_jet(field, 0.2 * rng.normal(size=m))
        ref = levi_civita(g).gamma
        for _ in range(5):
            bc = BackgroundConnection(rng.normal(size=(m, m, m)))
            A = torsionless_A(g, bc)
            c = gamma_from_quotient(g, bc, A)
            assert c.torsion_defect() < 1e-11
            assert_allclose(c.gamma, ref, atol=1e-10)
            assert_allclose(torsionless_A(g, bc).A, A.A)

    def test_levi_civita_background_needs_no_correction(self, rng):
        eta = SignatureMatrix.lorentzian()
        g = metric_jet(random_analytic_metric(rng, eta.eta), np.zeros(4))
        A = torsionless_A(g, BackgroundConnection(levi_civita(g).gamma))
        assert np.abs(A.A).max() < 1e-12

    def test_constant_metric_zero_background(self):
        g = MetricJet2(np.diag([-1.0, 1, 1]), np.zeros((3, 3, 3)))
        assert not np.abs(torsionless_A(g, BackgroundConnection.zero(3)).A).max() > 0


class TestMetricityHorizontality:
    def test_along_section_both_vanish(self, rng, eta):
        m = eta.m
        v = VielbeinJet1(_frame(rng, m), rng.normal(size=(m, m, m)))
        dx = rng.normal(size=m)
        t = Tangent(dx, np.einsum("kms,s->km", v.de, dx))
        assert np.abs(metricity_forms(v, t, eta)).max() < 1e-13
        assert np.abs(quotient_contact_forms(v, t, eta)).max() < 1e-13

    def test_random_tangents(self, rng, eta):
        m = eta.m
        for _ in range(20):
            v = VielbeinJet1(_frame(rng, m), rng.normal(size=(m, m, m)))
            t = Tangent(rng.normal(size=m), rng.normal(size=(m, m)))
            assert metricity_horizontality_check(v, t, eta).max_abs < 1e-12

    def test_vertical_tangent(self, rng):
        eta = SignatureMatrix.lorentzian()
        v = VielbeinJet1(_frame(rng, 4), rng.normal(size=(4, 4, 4)))
        t = Tangent(np.zeros(4), rng.normal(size=(4, 4)))
        assert metricity_horizontality_check(v, t, eta).passed

    def test_identity_euclidean(self, rng):
        eta = SignatureMatrix.euclidean(3)
        v = VielbeinJet1(np.eye(3), np.zeros((3, 3, 3)))
        de = rng.normal(size=(3, 3))
        t = Tangent(np.zeros(3), de)
        # w = -de^T, metricity = -(de + de^T) = -dg
        assert_allclose(metricity_forms(v, t, eta), -(de + de.T), atol=1e-15)
        assert_allclose(quotient_contact_forms(v, t, eta), de + de.T, atol=1e-15)


def test_vacuum_frame_field_reduces_to_vacuum_metric():
    fx = get_fixture("schwarzschild")
    ff = frame_field(fx.field, fx.eta)
    for p in grid_points(fx, "r=3..10:6,theta=0.3..2.8:3"):
        rp = reconstruct_point(fx.field, p, fx.eta)
        assert all(r.passed for r in rp.residuals(fx.eta))
        g_field = lambda x: nk.inv(nk.einsum("km,kl,ln->mn", ff(x), fx.eta.eta, ff(x)))
        assert vacuum_einstein_residual(metric_jet(g_field, p)).max_abs < 1e-8

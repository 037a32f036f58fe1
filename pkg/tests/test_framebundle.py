import numpy as np
import pytest
from numpy.testing import assert_allclose

from palatini_routh import NotInK
from palatini_routh import numkit as nk
from palatini_routh.etalinalg import SignatureMatrix, random_k, random_k_algebra
from palatini_routh.framebundle import (
    AdjointCoeffs,
    MetricJet2,
    VielbeinJet1,
    adjoint_coords,
    k_action,
    metric_from_vielbein,
    metric_jet,
)

ETA = SignatureMatrix.lorentzian(4)


def _random_frame(rng, m=4):
    return VielbeinJet1(np.eye(m) + 0.2 * rng.normal(size=(m, m)), rng.normal(size=(m, m, m)))


def test_identity_frame_gives_eta():
    g = metric_from_vielbein(VielbeinJet1(np.eye(4), np.zeros((4, 4, 4))), ETA)
    assert_allclose(g.g, ETA.eta)
    assert not g.dg.any()
    assert g.ddg is None


def test_scaled_time_leg():
    f, fp = 1.7, -0.4
    de = np.zeros((4, 4, 4))
    de[0, 0, 0] = fp
    g = metric_from_vielbein(VielbeinJet1(np.diag([f, 1, 1, 1]), de), ETA)
    assert g.g[0, 0] == pytest.approx(-(f**2))
    assert g.dg[0, 0, 0] == pytest.approx(-2 * f * fp)


def test_metric_matches_jet_of_frame_field(rng):
    a = rng.normal(size=(4, 4, 4)) * 0.2

    def frame(x):
        return nk.stack([[(1.0 if i == k else 0.0) + nk.sin(sum(a[i, k, s] * x[s] for s in range(4))) * 0.3
                          for k in range(4)] for i in range(4)])

    p = np.array([0.1, -0.2, 0.3, 0.05])
    j = nk.eval_jet(frame, p, order=1)
    g = metric_from_vielbein(VielbeinJet1(j.val, j.grad), ETA)
    jg = nk.eval_jet(lambda x: nk.einsum("km,kl,ln->mn", frame(x), ETA.eta, frame(x)), p, order=1)
    assert_allclose(g.g, jg.val, atol=1e-14)
    assert_allclose(g.dg, jg.grad, atol=1e-14)


def test_k_identity_is_noop(rng):
    v = _random_frame(rng)
    w = k_action(v, np.eye(4), ETA)
    assert_allclose(w.e, v.e)
    assert_allclose(w.de, v.de)


def test_rotation_in_plane():
    th = 0.7
    k = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    eta = SignatureMatrix.euclidean(2)
    v = VielbeinJet1(np.array([[2.0, 0.3], [0.1, 1.0]]), np.zeros((2, 2, 2)))
    w = k_action(v, k, eta)
    assert_allclose(w.e, k.T @ v.e)
    assert_allclose(metric_from_vielbein(w, eta).g, metric_from_vielbein(v, eta).g, atol=1e-14)


def test_random_boosts_preserve_metric_jet(rng):
    for _ in range(20):
        v = _random_frame(rng)
        k = random_k(rng, ETA, scale=0.8)
        g0, g1 = metric_from_vielbein(v, ETA), metric_from_vielbein(k_action(v, k, ETA), ETA)
        assert_allclose(g1.g, g0.g, atol=1e-12)
        assert_allclose(g1.dg, g0.dg, atol=1e-12)


def test_k_action_rejects_non_k(rng):
    with pytest.raises(NotInK):
        k_action(_random_frame(rng), np.diag([2.0, 1, 1, 1]), ETA)


def test_adjoint_zero_and_identity():
    assert not adjoint_coords(np.eye(4), np.zeros((4, 4))).any()
    b = np.array([[0.0, 0.4], [-0.4, 0.0]])
    assert_allclose(adjoint_coords(np.eye(2), b), -b)


def test_adjoint_verticality(rng):
    for _ in range(20):
        v = _random_frame(rng)
        B = random_k_algebra(rng, ETA)
        A = adjoint_coords(v.e, B)
        g = metric_from_vielbein(v, ETA).g
        assert np.abs(A @ g + (A @ g).T).max() < 1e-12
        assert AdjointCoeffs(A[:, :, None]).verticality_defect(g) < 1e-12


class TestValidation:
    def test_singular_frame(self):
        with pytest.raises(ValueError):
            VielbeinJet1(np.zeros((3, 3)), np.zeros((3, 3, 3)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            VielbeinJet1(np.eye(3), np.zeros((3, 3)))

    def test_asymmetric_metric(self):
        with pytest.raises(ValueError):
            MetricJet2(np.array([[1.0, 0.2], [0.0, 1.0]]), np.zeros((2, 2, 2)))

    def test_bad_second_jet(self, rng):
        ddg = rng.normal(size=(2, 2, 2, 2))
        with pytest.raises(ValueError):
            MetricJet2(np.eye(2), np.zeros((2, 2, 2)), ddg)

    def test_condition_number_reported(self):
        v = VielbeinJet1(np.diag([1.0, 10.0]), np.zeros((2, 2, 2)))
        assert v.condition_number == pytest.approx(10.0)
        assert_allclose(v.coframe, np.diag([1.0, 0.1]))


def test_metric_jet_is_contravariant_and_symmetric():
    def cov(x):
        return nk.diag([-(1.0 + x[0] * x[0]), 2.0 + x[1]])

    g = metric_jet(cov, [0.5, 0.25])
    assert_allclose(g.g, np.diag([-1 / 1.25, 1 / 2.25]))
    assert_allclose(g.dg[0, 0, 0], 2 * 0.5 / 1.25**2)
    assert_allclose(g.ddg, np.transpose(g.ddg, (0, 1, 3, 2)))
    assert_allclose(g.g_cov, np.diag([-1.25, 2.25]))

"""Reduction of frame jets to metric jets and the lifts that invert it.

``BackgroundConnection.gammabar[s, r, mu]`` holds the Christoffel symbols of
an auxiliary principal connection on the frame bundle; every quantity that
is physically meaningful here must come out independent of it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connections import ConnectionCoeffs, ResidualReport
from .errors import InconsistentFrame
from .etalinalg import _as_eta, cartan_split, unique_solution_solver
from .framebundle import AdjointCoeffs, MetricJet2, VielbeinJet1, metric_from_vielbein

__all__ = [
    "BackgroundConnection",
    "Tangent",
    "base_lift_conditions",
    "fiber_lift_conditions",
    "gamma_from_quotient",
    "holonomic_lift",
    "horizontal_lift_base",
    "horizontal_lift_fiber",
    "metricity_forms",
    "metricity_horizontality_check",
    "quotient_contact_forms",
    "reduce_F_omega",
    "torsionless_A",
]


@dataclass(frozen=True)
class BackgroundConnection:
    gammabar: np.ndarray

    def __post_init__(self):
        gb = np.asarray(self.gammabar, dtype=float)
        if not np.all(np.isfinite(gb)):
            raise ValueError("non-finite background connection")
        object.__setattr__(self, "gammabar", gb)

    @classmethod
    def zero(cls, m: int) -> "BackgroundConnection":
        return cls(np.zeros((m, m, m)))

    @classmethod
    def from_frame_functions(cls, e, f) -> "BackgroundConnection":
        """From ``f[k, s, mu] = f^s_{k mu}``: ``gammabar = -e^k_r f^s_{k mu}``."""
        return cls(-np.einsum("rk,ksm->srm", np.linalg.inv(e), f))

    def frame_functions(self, e) -> np.ndarray:
        """Inverse of :meth:`from_frame_functions` for the frame ``e``."""
        return -np.einsum("kr,srm->ksm", np.asarray(e, dtype=float), self.gammabar)


def reduce_F_omega(v: VielbeinJet1, eta) -> MetricJet2:
    """Metric 1-jet ``(eta e e, eta (de e + e de))`` of a frame 1-jet."""
    return metric_from_vielbein(v, eta)


def _check_pair(e, g, eta, tol=1e-9):
    e = np.asarray(e, dtype=float)
    g = np.asarray(g.g if isinstance(g, MetricJet2) else g, dtype=float)
    expect = e.T @ _as_eta(eta) @ e
    if np.abs(expect - g).max() > tol * max(1.0, np.abs(g).max()):
        raise InconsistentFrame("frame does not reproduce the given metric")
    return e, g


def _bracket(g, gammabar):
    # X^{s b}_mu = g^{a s} Gbar^b_{a mu} - g^{a b} Gbar^s_{a mu}
    t = np.einsum("as,bam->sbm", g, gammabar)
    return t - np.transpose(t, (1, 0, 2))


def _lowered_frame(e, g, eta):
    # low[k, b] = g_{b r} e_k^r.  For a consistent pair this is eta e^{-T},
    # which avoids the squared conditioning of inverting g.
    if eta is None:
        return e @ np.linalg.inv(g)
    _check_pair(e, g, eta)
    return _as_eta(eta) @ np.linalg.inv(e).T


def horizontal_lift_base(mu: int, e, g, bc: BackgroundConnection, eta=None) -> np.ndarray:
    """Frame-coordinate part ``N[k, s]`` of the lift of ``d/dx^mu``.

    ``N_k^s = 1/2 g_{b r} e_k^r (g^{a s} Gbar^b_{a mu} - g^{a b} Gbar^s_{a mu})``.
    """
    e = np.asarray(e, dtype=float)
    g = np.asarray(g.g if isinstance(g, MetricJet2) else g, dtype=float)
    low = _lowered_frame(e, g, eta)
    gb = bc.gammabar[:, :, mu]  # gb[b, a] = Gbar^b_{a mu}
    if eta is None:
        return 0.5 * np.einsum("kb,sb->ks", low, _bracket(g, bc.gammabar)[:, :, mu])
    # same expression with g^{as} = e_i^a eta^{ij} e_j^s substituted
    eta = _as_eta(eta)
    return 0.5 * (low @ gb @ e.T @ eta @ e - e @ gb.T)


def horizontal_lift_fiber(mu: int, nu: int, e, g, eta=None) -> np.ndarray:
    """Frame-coordinate part ``Q[k, a]`` of the lift of ``d/dg^{mu nu}``."""
    e = np.asarray(e, dtype=float)
    g = np.asarray(g.g if isinstance(g, MetricJet2) else g, dtype=float)
    low = _lowered_frame(e, g, eta)
    m = e.shape[0]
    q = np.zeros((m, m))
    q[:, mu] += 0.25 * low[:, nu]
    q[:, nu] += 0.25 * low[:, mu]
    return q


def _projection(delta_e, e, eta):
    # image of a frame increment under the quotient map: d(e^T eta e)
    t = delta_e.T @ eta @ e
    return t + t.T


def _connection_k_part(delta_e, e, eta, f_dir=None):
    # omega_0 evaluated on the increment, then its k-component
    d = delta_e if f_dir is None else delta_e - f_dir
    w = -d @ np.linalg.inv(e)
    return cartan_split(w, eta)[0]


def base_lift_conditions(mu: int, e, bc: BackgroundConnection, eta, n=None):
    """Residuals ``(projection, omega_K)`` of the lift of ``d/dx^mu``."""
    eta = _as_eta(eta)
    e = np.asarray(e, dtype=float)
    g = e.T @ eta @ e
    if n is None:
        n = horizontal_lift_base(mu, e, g, bc, eta)
    f = bc.frame_functions(e)[:, :, mu]
    return _projection(n, e, eta), _connection_k_part(n, e, eta, f)


def fiber_lift_conditions(mu: int, nu: int, e, eta, q=None):
    """Residuals ``(projection - target, omega_K)`` of the lift of ``d/dg^{mu nu}``."""
    eta = _as_eta(eta)
    e = np.asarray(e, dtype=float)
    g = e.T @ eta @ e
    if q is None:
        q = horizontal_lift_fiber(mu, nu, e, g, eta)
    target = np.zeros_like(g)
    target[mu, nu] += 0.5
    target[nu, mu] += 0.5
    return _projection(q, e, eta) - target, _connection_k_part(q, e, eta)


def holonomic_lift(g: MetricJet2, e, bc: BackgroundConnection, eta=None) -> VielbeinJet1:
    """Frame 1-jet over ``(g, dg)`` horizontal for the K-part of ``bc``.

    ``de[k, mu, s] = 1/2 g_{b r} e_k^r [g^{mu b}_s + X^{mu b}_s]``.
    """
    e = np.asarray(e, dtype=float)
    if eta is not None:
        _check_pair(e, g, eta)
    low = e @ np.linalg.inv(g.g)
    de = 0.5 * np.einsum("kb,mbs->kms", low, g.dg + _bracket(g.g, bc.gammabar))
    return VielbeinJet1(e, de, at=g.at)


def _quotient_part(g: MetricJet2, bc: BackgroundConnection):
    gc = np.linalg.inv(g.g)
    return -0.5 * np.einsum("br,mbs->mrs", gc, g.dg + _bracket(g.g, bc.gammabar))


def gamma_from_quotient(g: MetricJet2, bc: BackgroundConnection, A: AdjointCoeffs | np.ndarray) -> ConnectionCoeffs:
    """Christoffel symbols from metric jet, background and adjoint data."""
    a = A.A if isinstance(A, AdjointCoeffs) else np.asarray(A, dtype=float)
    defect = AdjointCoeffs(a).verticality_defect(g.g)
    if defect > 1e-8 * max(1.0, np.abs(a).max() * np.abs(g.g).max()):
        raise ValueError(f"adjoint coefficients are not vertical for this metric (defect {defect:.3e})")
    return ConnectionCoeffs(_quotient_part(g, bc) + a)


def torsionless_A(g: MetricJet2, bc: BackgroundConnection) -> AdjointCoeffs:
    """The unique vertical ``A`` making :func:`gamma_from_quotient` torsion free.

    Lowering the upper index, the unknowns ``c = g A`` are antisymmetric in
    their first pair, and their antisymmetric part in the last pair must
    cancel that of the background-dependent term.
    """
    gc = np.linalg.inv(g.g)
    low = np.einsum("ml,lrs->mrs", gc, _quotient_part(g, bc))
    a = -(low - np.transpose(low, (0, 2, 1)))
    c = unique_solution_solver(a, np.zeros_like(a), sign=-1)
    return AdjointCoeffs(np.einsum("lm,mrs->lrs", g.g, c))


@dataclass(frozen=True)
class Tangent:
    """Coordinate increments on ``(x, e, de)`` at a frame 1-jet."""

    dx: np.ndarray
    de: np.ndarray
    dde: np.ndarray | None = None


def metricity_forms(v: VielbeinJet1, t: Tangent, eta) -> np.ndarray:
    """``eta^{ik} w^j_k + eta^{jk} w^i_k`` with ``w^l_k = -e^l_mu (de_k^mu - e^mu_{k s} dx^s)``."""
    eta = _as_eta(eta)
    d = np.asarray(t.de, dtype=float) - np.einsum("kms,s->km", v.de, np.asarray(t.dx, dtype=float))
    w = -np.einsum("ml,km->lk", v.coframe, d)  # w[l, k] = w^l_k
    s = eta @ w.T
    return s + s.T


def quotient_contact_forms(v: VielbeinJet1, t: Tangent, eta) -> np.ndarray:
    """``e^i_mu e^j_nu (dg^{mu nu} - g^{mu nu}_s dx^s)`` with ``g_s`` from the reduction map."""
    eta = _as_eta(eta)
    de = np.asarray(t.de, dtype=float)
    dg = _projection(de, v.e, eta)
    gj = metric_from_vielbein(v, eta)
    contact = dg - np.einsum("mns,s->mn", gj.dg, np.asarray(t.dx, dtype=float))
    cf = v.coframe
    return cf.T @ contact @ cf


def metricity_horizontality_check(v: VielbeinJet1, tangent: Tangent, eta, tolerance: float = 1e-12) -> ResidualReport:
    """Compare the metricity forms with the pulled-back contact forms.

    With the orientation of the connection form used here the identity
    reads ``metricity = -contact``; the report holds their sum.
    """
    lhs = metricity_forms(v, tangent, eta)
    rhs = quotient_contact_forms(v, tangent, eta)
    scale = max(1.0, np.abs(rhs).max())
    return ResidualReport.of("metricity_horizontality", (lhs + rhs) / scale, tolerance)

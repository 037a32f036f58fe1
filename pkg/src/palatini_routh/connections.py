"""Christoffel data, torsion and metricity residuals, Levi-Civita and Ricci.

Index convention: ``gamma[mu, rho, s] = Gamma^mu_{rho s}`` with the last
lower index the differentiation direction, so that a frame with jet
coordinates ``de`` is parallel: ``de_k^mu_s + Gamma^mu_{rho s} e_k^rho = 0``.
``dgamma[mu, rho, s, b]`` is the derivative of ``gamma`` along ``x^b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numkit as nk
from .etalinalg import _as_eta
from .framebundle import MetricJet2, VielbeinJet1

__all__ = [
    "ConnectionCoeffs",
    "ResidualReport",
    "SectionJet",
    "christoffel_from_jet",
    "levi_civita",
    "metricity_residual",
    "palatini_residual",
    "ricci",
    "section_jet",
    "torsion_residual",
    "vacuum_einstein_residual",
]


@dataclass(frozen=True)
class ConnectionCoeffs:
    gamma: np.ndarray
    dgamma: np.ndarray | None = None

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite connection coefficients")
        object.__setattr__(self, "gamma", g)
        if self.dgamma is not None:
            object.__setattr__(self, "dgamma", np.asarray(self.dgamma, dtype=float))

    @property
    def m(self) -> int:
        return self.gamma.shape[0]

    def torsion_defect(self) -> float:
        return float(np.abs(self.gamma - np.transpose(self.gamma, (0, 2, 1))).max())


@dataclass(frozen=True)
class ResidualReport:
    name: str
    tensor: np.ndarray
    max_abs: float
    frobenius: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.max_abs <= self.tolerance))

    @classmethod
    def of(cls, name: str, tensor, tolerance: float) -> "ResidualReport":
        t = np.asarray(tensor, dtype=float)
        return cls(name, t, float(np.abs(t).max(initial=0.0)), float(np.linalg.norm(t)), tolerance)

    @property
    def pass_(self) -> bool:
        return self.passed

    def as_dict(self) -> dict:
        return {"name": self.name, "max_abs": self.max_abs, "frobenius": self.frobenius, "pass": self.passed}


def _gamma_from_frame(e, de):
    # Gamma^mu_{rho s} = -e^k_rho e^mu_{k s}; works on arrays and jets
    return -nk.einsum("rk,kms->mrs", nk.inv(e), de)


def christoffel_from_jet(v: VielbeinJet1) -> ConnectionCoeffs:
    """Connection coefficients induced by a frame 1-jet."""
    return ConnectionCoeffs(_gamma_from_frame(v.e, v.de))


def torsion_residual(v: VielbeinJet1, tolerance: float = 1e-9) -> ResidualReport:
    """``T[s, mu, nu] = e^k_mu e^s_{k nu} - e^k_nu e^s_{k mu}``."""
    t = np.einsum("mk,ksn->smn", v.coframe, v.de)
    return ResidualReport.of("torsion", t - np.transpose(t, (0, 2, 1)), tolerance)


def metricity_residual(g: MetricJet2, c: ConnectionCoeffs, tolerance: float = 1e-9) -> ResidualReport:
    """``M[mu, nu, c] = g^{mu nu}_c + g^{mu s} Gamma^nu_{s c} + g^{nu s} Gamma^mu_{s c}``."""
    t = np.einsum("ms,nsc->mnc", g.g, c.gamma)
    return ResidualReport.of("metricity", g.dg + t + np.transpose(t, (1, 0, 2)), tolerance)


def _levi_civita_expr(G, DG):
    gc = nk.inv(G)
    # g_{mu nu, s} = -g_{mu a} g_{nu b} g^{ab}_s
    dcov = -nk.einsum("ma,nb,abs->mns", gc, gc, DG)
    t = dcov + nk.einsum("rnm->rmn", dcov) - nk.einsum("mnr->rmn", dcov)
    return 0.5 * nk.einsum("sr,rmn->smn", G, t)


def levi_civita(g: MetricJet2) -> ConnectionCoeffs:
    """Torsion-free metric connection of ``g``; ``dgamma`` when ``g.ddg`` is set."""
    if g.ddg is None:
        return ConnectionCoeffs(_levi_civita_expr(g.g, g.dg))
    j = _levi_civita_expr(*g.jet1())
    return ConnectionCoeffs(j.val, j.grad)


def ricci(c: ConnectionCoeffs) -> np.ndarray:
    """``R_{mn} = d_b G^b_{mn} - d_n G^b_{mb} + G^b_{sb} G^s_{mn} - G^b_{sn} G^s_{mb}``."""
    if c.dgamma is None:
        raise ValueError("Ricci tensor needs connection derivatives")
    G, dG = c.gamma, c.dgamma
    return (
        np.einsum("bmnb->mn", dG)
        - np.einsum("bmbn->mn", dG)
        + np.einsum("bsb,smn->mn", G, G)
        - np.einsum("bsn,smb->mn", G, G)
    )


def vacuum_einstein_residual(g: MetricJet2, tolerance: float = 1e-8) -> ResidualReport:
    return ResidualReport.of("einstein", ricci(levi_civita(g)), tolerance)


@dataclass(frozen=True)
class SectionJet:
    """A (possibly non-holonomic) section of the frame jet bundle to first order.

    ``frame`` is the jet of ``x -> e(x)`` and ``conn`` the jet of the
    independent jet coordinates ``x -> de(x)``.  For a holonomic section
    ``conn.val`` equals ``frame.grad``.
    """

    frame: nk.Jet
    conn: nk.Jet
    at: np.ndarray | None = None

    @property
    def point(self) -> VielbeinJet1:
        return VielbeinJet1(self.frame.val, self.conn.val, at=self.at)

    def connection(self) -> ConnectionCoeffs:
        j = _gamma_from_frame(self.frame.truncate(1), self.conn.truncate(1))
        return ConnectionCoeffs(j.val, j.grad)

    def metric(self, eta) -> MetricJet2:
        """Metric of the frame field with its actual first derivatives."""
        e = _as_eta(eta)
        j = nk.einsum("km,kl,ln->mn", self.frame.truncate(1), e, self.frame.truncate(1))
        return MetricJet2(j.val, j.grad, at=self.at)

    def gauge(self, k) -> "SectionJet":
        k = np.asarray(k, dtype=float)
        return SectionJet(
            nk.einsum("lk,lm->km", k, self.frame), nk.einsum("lk,lms->kms", k, self.conn), self.at
        )


def section_jet(frame_field, p, contract: nk.DerivativeContract | None = None, conn_field=None) -> SectionJet:
    """Evaluate a frame field (and optional jet-coordinate field) at ``p``.

    Without ``conn_field`` the section is holonomic: ``de`` is the actual
    derivative of the frame.
    """
    p = np.asarray(p.coords if isinstance(p, nk.ChartPoint) else p, dtype=float)
    if conn_field is None:
        j = nk.eval_jet(frame_field, p, contract, order=2)
        return SectionJet(nk.Jet(j.val, j.grad), nk.Jet(j.grad, j.hess), p)
    return SectionJet(
        nk.eval_jet(frame_field, p, contract, order=1), nk.eval_jet(conn_field, p, contract, order=1), p
    )


def palatini_residual(
    s: SectionJet, eta, c_independent: ConnectionCoeffs | None = None, tolerance: float = 1e-8
) -> list[ResidualReport]:
    """Residuals of the vacuum Palatini field equations at one point.

    Returns reports named ``ricci``, ``compatibility``, ``torsion`` and
    ``metricity``.  ``compatibility`` compares an independently supplied
    connection against the one induced by the section and is zero when
    none is given.
    """
    c = s.connection()
    v = s.point
    compat = np.zeros_like(c.gamma) if c_independent is None else c_independent.gamma - c.gamma
    return [
        ResidualReport.of("ricci", ricci(c), tolerance),
        ResidualReport.of("compatibility", compat, tolerance),
        torsion_residual(v, tolerance),
        metricity_residual(s.metric(eta), c, tolerance),
    ]

"""Frame and metric jets at a chart point, the K-action on frames and
coordinates on the adjoint bundle.

Storage: ``e[k, mu] = e_k^mu`` (frame index first), ``de[k, mu, s]`` its
derivative jet coordinate along ``x^s``; contravariant metric
``g[mu, nu] = g^{mu nu}``, ``dg[mu, nu, s]``, ``ddg[mu, nu, s, r]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkit as nk
from .errors import NotInK
from .etalinalg import KAlgebraElement, SignatureMatrix, _as_eta, in_k

__all__ = [
    "AdjointCoeffs",
    "MetricJet2",
    "VielbeinJet1",
    "adjoint_coords",
    "k_action",
    "metric_from_vielbein",
    "metric_jet",
]


def _sym_ok(a, axes, tol=1e-9):
    return np.allclose(a, np.transpose(a, axes), rtol=tol, atol=tol * max(1.0, np.abs(a).max()))


@dataclass(frozen=True)
class VielbeinJet1:
    e: np.ndarray
    de: np.ndarray
    at: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        de = np.asarray(self.de, dtype=float)
        m = e.shape[0]
        if e.shape != (m, m) or de.shape != (m, m, m):
            raise ValueError(f"inconsistent frame jet shapes {e.shape}, {de.shape}")
        if np.linalg.cond(e) > 1e12:
            raise ValueError("frame is singular or badly conditioned")
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "de", de)

    @property
    def m(self) -> int:
        return self.e.shape[0]

    @property
    def coframe(self) -> np.ndarray:
        """``coframe[mu, k] = e^k_mu``, the inverse matrix."""
        return np.linalg.inv(self.e)

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.e))


@dataclass(frozen=True)
class MetricJet2:
    """Contravariant metric with first and (optionally) second derivatives."""

    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray | None = None
    at: np.ndarray | None = None

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        dg = np.asarray(self.dg, dtype=float)
        m = g.shape[0]
        if g.shape != (m, m) or dg.shape != (m, m, m):
            raise ValueError(f"inconsistent metric jet shapes {g.shape}, {dg.shape}")
        if not _sym_ok(g, (1, 0)) or not _sym_ok(dg, (1, 0, 2)):
            raise ValueError("metric jet is not symmetric in its upper indices")
        if abs(np.linalg.det(g)) < 1e-300:
            raise ValueError("metric is degenerate")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "dg", dg)
        if self.ddg is not None:
            ddg = np.asarray(self.ddg, dtype=float)
            if ddg.shape != (m,) * 4:
                raise ValueError(f"bad second-derivative shape {ddg.shape}")
            if not _sym_ok(ddg, (1, 0, 2, 3)) or not _sym_ok(ddg, (0, 1, 3, 2), tol=1e-6):
                raise ValueError("second metric jet lacks its index symmetries")
            object.__setattr__(self, "ddg", ddg)

    @property
    def m(self) -> int:
        return self.g.shape[0]

    @property
    def g_cov(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    def jet1(self) -> tuple[nk.Jet, nk.Jet]:
        """``(g, dg)`` as first-order jets (their derivatives are dg, ddg)."""
        if self.ddg is None:
            raise ValueError("second derivatives of the metric are required")
        return nk.Jet(self.g, self.dg), nk.Jet(self.dg, self.ddg)


def metric_jet(field, p, contract: nk.DerivativeContract | None = None, covariant: bool = True) -> MetricJet2:
    """Second-order jet of a metric field, stored contravariantly.

    ``field`` maps chart coordinates to the covariant components
    ``g_{mu nu}`` when ``covariant`` is true, else to ``g^{mu nu}``.
    """
    f = (lambda x: nk.inv(field(x))) if covariant else field
    j = nk.eval_jet2(f, p, contract)
    sym = lambda a, ax: 0.5 * (a + np.transpose(a, ax))
    return MetricJet2(
        sym(j.val, (1, 0)),
        sym(j.grad, (1, 0, 2)),
        sym(sym(j.hess, (1, 0, 2, 3)), (0, 1, 3, 2)),
        at=np.asarray(p.coords if isinstance(p, nk.ChartPoint) else p, dtype=float),
    )


def metric_from_vielbein(v: VielbeinJet1, eta) -> MetricJet2:
    """``g = eta^{kl} e_k e_l`` and its first jet."""
    e = _as_eta(eta)
    g = v.e.T @ e @ v.e
    t = np.einsum("kms,kl,ln->mns", v.de, e, v.e)
    return MetricJet2(0.5 * (g + g.T), t + np.transpose(t, (1, 0, 2)), at=v.at)


def k_action(v: VielbeinJet1, k, eta=None) -> VielbeinJet1:
    """Right action ``e'_k = e_l k^l_k`` by a chart-constant ``k``."""
    k = np.asarray(k, dtype=float)
    if eta is not None and not in_k(k, eta):
        raise NotInK("matrix does not preserve eta")
    return VielbeinJet1(k.T @ v.e, np.einsum("lk,lms->kms", k, v.de), at=v.at)


@dataclass(frozen=True)
class AdjointCoeffs:
    """``A[mu, rho, s] = A^mu_{rho s}``: k-valued 1-form coordinates."""

    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))

    def verticality_defect(self, g) -> float:
        g = np.asarray(g, dtype=float)
        t = np.einsum("na,mas->mns", g, self.A)
        return float(np.abs(t + np.transpose(t, (1, 0, 2))).max())


def adjoint_coords(e, B) -> np.ndarray:
    """``A[s, r] = A^s_r = -e^i_r B_i^j e_j^s`` with ``B[j, i] = B_i^j``."""
    if isinstance(B, KAlgebraElement):
        B = B.xi
    e = np.asarray(e, dtype=float)
    return -(e.T @ np.asarray(B, dtype=float) @ np.linalg.inv(e).T)

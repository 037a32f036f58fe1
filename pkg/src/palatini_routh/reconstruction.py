"""Lift a metric field to a frame section carrying its Levi-Civita connection.

The frame is chosen in the polar gauge ``e(x) = sqrt(eta g(x))`` at every
point, which is smooth wherever the principal square root exists.  The
independent jet coordinates are ``e_k^mu_s = -e_k^r G^mu_{r s}`` with ``G``
the Levi-Civita connection, so the section is horizontal and torsion free.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import numkit as nk
from .connections import ConnectionCoeffs, ResidualReport, SectionJet, _levi_civita_expr, palatini_residual
from .errors import SpectrumError
from .etalinalg import _as_eta, vielbein_from_metric
from .fixtures import NamedMetric
from .framebundle import MetricJet2, VielbeinJet1, metric_jet
from .reduction import reduce_F_omega

__all__ = [
    "ReconstructedPoint",
    "Reconstruction",
    "frame_field",
    "reconstruct",
    "reconstruct_point",
    "round_trip_reduce_reconstruct",
]


def frame_field(metric_field: Callable, eta) -> Callable:
    """Polar-gauge frame field ``x -> sqrt(eta g^{..}(x))`` of a covariant metric field."""
    e = _as_eta(eta)
    return lambda x: vielbein_from_metric(nk.inv(metric_field(x)), e)


@dataclass(frozen=True)
class ReconstructedPoint:
    at: np.ndarray
    section: SectionJet
    metric: MetricJet2

    @property
    def vielbein(self) -> VielbeinJet1:
        return self.section.point

    @property
    def connection(self) -> ConnectionCoeffs:
        return self.section.connection()

    def round_trip_defect(self, eta) -> np.ndarray:
        """``F_omega`` of the frame jet minus the metric 1-jet, flattened."""
        red = reduce_F_omega(self.vielbein, eta)
        return np.concatenate([(red.g - self.metric.g).ravel(), (red.dg - self.metric.dg).ravel()])

    def residuals(self, eta, tolerance: float = 1e-8) -> list[ResidualReport]:
        return palatini_residual(self.section, eta, tolerance=tolerance)


@dataclass(frozen=True)
class Reconstruction:
    eta: np.ndarray
    points: list[ReconstructedPoint]
    excluded: list[np.ndarray] = field(default_factory=list)


def reconstruct_point(metric_field: Callable, p, eta, contract: nk.DerivativeContract | None = None) -> ReconstructedPoint:
    x = np.asarray(p.coords if isinstance(p, nk.ChartPoint) else p, dtype=float)
    g = metric_jet(metric_field, x, contract)
    G1, DG1 = g.jet1()
    try:
        E = vielbein_from_metric(G1, eta)
    except SpectrumError as exc:
        raise SpectrumError(f"polar gauge undefined at x={x.tolist()}: {exc}", point=x) from None
    C = -1.0 * nk.einsum("kr,mrs->kms", E, _levi_civita_expr(G1, DG1))
    return ReconstructedPoint(x, SectionJet(E, C, x), g)


def _resolve(metric, eta):
    if isinstance(metric, NamedMetric):
        return metric.field, _as_eta(metric.eta if eta is None else eta), metric
    if eta is None:
        raise ValueError("a bare metric field needs an explicit signature matrix")
    return metric, _as_eta(eta), None


def reconstruct(
    metric: NamedMetric | Callable,
    points: Sequence,
    contract: nk.DerivativeContract | None = None,
    eta=None,
    margin: float | None = None,
) -> Reconstruction:
    """Frame section over every grid point.

    With ``margin`` set and a fixture as input, points closer than
    ``margin`` to the edge of the fixture's domain are skipped and listed in
    ``excluded``.  Any remaining point outside the polar domain raises
    :class:`SpectrumError` carrying that point.
    """
    fld, e, named = _resolve(metric, eta)
    kept, skipped = [], []
    for p in points:
        x = np.asarray(p, dtype=float)
        if margin is not None and named is not None and not named.in_domain(x, margin):
            skipped.append(x)
            continue
        kept.append(reconstruct_point(fld, x, e, contract))
    return Reconstruction(e, kept, skipped)


def round_trip_reduce_reconstruct(
    metric: NamedMetric | Callable,
    points: Sequence,
    contract: nk.DerivativeContract | None = None,
    eta=None,
    tolerance: float = 1e-9,
) -> ResidualReport:
    """Max over the grid of ``|F_omega(reconstruct(g)) - j^1 g|``."""
    rec = reconstruct(metric, points, contract, eta)
    if not rec.points:
        return ResidualReport.of("round_trip", np.zeros(1), tolerance)
    tensor = np.stack([rp.round_trip_defect(rec.eta) for rp in rec.points])
    return ResidualReport.of("round_trip", tensor, tolerance)

"""Analytic metric fields with closed-form Christoffel symbols.

Every field maps chart coordinates (floats or jets) to the covariant
components ``g_{mu nu}``.  Oracle Christoffels return ``G[mu, r, s]`` with
the same index layout as :class:`~palatini_routh.connections.ConnectionCoeffs`.

Closed forms used by the oracles
--------------------------------
Schwarzschild, ``f = 1 - 2M/r``, coordinates ``(t, r, theta, phi)``::

    G^t_tr = M / (r^2 f)          G^r_tt = M f / r^2
    G^r_rr = -M / (r^2 f)         G^r_thth = -r f
    G^r_phph = -r f sin^2 th      G^th_rth = G^ph_rph = 1/r
    G^th_phph = -sin th cos th    G^ph_thph = cot th

Unit 2-sphere ``(theta, phi)``: ``G^th_phph = -sin cos``, ``G^ph_thph = cot``.

Flat plane in polar coordinates ``(r, theta)``: ``G^r_thth = -r``,
``G^th_rth = 1/r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from . import numkit as nk
from .etalinalg import SignatureMatrix

__all__ = [
    "FIXTURE_NAMES",
    "GridAxis",
    "NamedMetric",
    "get_fixture",
    "grid_points",
    "parse_grid",
    "random_analytic_metric",
]


@dataclass(frozen=True)
class NamedMetric:
    name: str
    dim: int
    params: Mapping[str, float]
    field: Callable
    eta: SignatureMatrix
    coords: tuple[str, ...]
    defaults: tuple[float, ...]
    domain: Mapping[str, tuple[float, float]]
    default_grid: str
    vacuum: bool
    oracle_christoffels: Callable | None = None

    def point(self, **values) -> np.ndarray:
        """Chart point from named coordinates, defaults elsewhere."""
        unknown = set(values) - set(self.coords)
        if unknown:
            raise ValueError(f"{self.name} has no coordinate(s) {sorted(unknown)}")
        return np.array([values.get(c, d) for c, d in zip(self.coords, self.defaults)], dtype=float)

    def in_domain(self, x, margin: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        for name, (lo, hi) in self.domain.items():
            v = x[self.coords.index(name)]
            if not (lo + margin <= v <= hi - margin):
                return False
        return True


def _frozen(d):
    return MappingProxyType(dict(d))


# -- catalog --------------------------------------------------------------------

def _minkowski(params):
    m = int(params.get("dim", 4))
    eta = SignatureMatrix.lorentzian(m)
    base = eta.eta

    def field(x):
        return base.copy()

    def christoffels(x):
        return np.zeros((m, m, m))

    names = ("t", "x", "y", "z")[:m] if m <= 4 else tuple(f"x{i}" for i in range(m))
    return NamedMetric(
        "minkowski", m, _frozen(params), field, eta, names, (0.0,) * m,
        _frozen({}), f"{names[1]}=-1..1:5", True, christoffels,
    )


def _schwarzschild_f(mass_fn):
    def field(x):
        t, r, th, ph = x[0], x[1], x[2], x[3]
        f = 1.0 - 2.0 * mass_fn(r) / r
        s = nk.sin(th)
        return nk.diag([-1.0 * f, 1.0 / f, r * r, r * r * s * s])

    return field


def _schwarzschild(params):
    M = float(params.get("M", 1.0))
    if M <= 0:
        raise ValueError("mass must be positive")

    def christoffels(x):
        _, r, th, _ = np.asarray(x, dtype=float)
        f = 1.0 - 2.0 * M / r
        s, c = math.sin(th), math.cos(th)
        G = np.zeros((4, 4, 4))
        G[0, 0, 1] = G[0, 1, 0] = M / (r * r * f)
        G[1, 0, 0] = M * f / (r * r)
        G[1, 1, 1] = -M / (r * r * f)
        G[1, 2, 2] = -r * f
        G[1, 3, 3] = -r * f * s * s
        G[2, 1, 2] = G[2, 2, 1] = 1.0 / r
        G[3, 1, 3] = G[3, 3, 1] = 1.0 / r
        G[2, 3, 3] = -s * c
        G[3, 2, 3] = G[3, 3, 2] = c / s
        return G

    return NamedMetric(
        "schwarzschild", 4, _frozen({"M": M}), _schwarzschild_f(lambda r: M),
        SignatureMatrix.lorentzian(4), ("t", "r", "theta", "phi"), (0.0, 5.0 * M, math.pi / 2, 0.0),
        _frozen({"r": (3.0 * M, 10.0 * M), "theta": (0.1, math.pi - 0.1)}),
        f"r={3 * M:g}..{10 * M:g}:50,theta=0.1..3.0:20", True, christoffels,
    )


def _perturbed_schwarzschild(params):
    M = float(params.get("M", 1.0))
    eps = float(params.get("eps", 0.1))
    field = _schwarzschild_f(lambda r: M * (1.0 + eps * r))
    return NamedMetric(
        "perturbed_schwarzschild", 4, _frozen({"M": M, "eps": eps}), field,
        SignatureMatrix.lorentzian(4), ("t", "r", "theta", "phi"), (0.0, 5.0 * M, math.pi / 2, 0.0),
        _frozen({"r": (3.0 * M, 10.0 * M), "theta": (0.1, math.pi - 0.1)}),
        f"r={3 * M:g}..{10 * M:g}:50,theta=0.1..3.0:20", eps == 0.0,
    )


def _desitter_static(params):
    H = float(params.get("H", 1.0))
    if H <= 0:
        raise ValueError("Hubble rate must be positive")

    def field(x):
        r, th = x[1], x[2]
        f = 1.0 - H * H * r * r
        s = nk.sin(th)
        return nk.diag([-1.0 * f, 1.0 / f, r * r, r * r * s * s])

    # Solves R_{mn} = 3 H^2 g_{mn}, not the vacuum equations without
    # cosmological constant, so it is flagged non-vacuum.
    return NamedMetric(
        "desitter_static", 4, _frozen({"H": H}), field, SignatureMatrix.lorentzian(4),
        ("t", "r", "theta", "phi"), (0.0, 0.5 / H, math.pi / 2, 0.0),
        _frozen({"r": (0.1 / H, 0.9 / H), "theta": (0.1, math.pi - 0.1)}),
        f"r={0.1 / H:g}..{0.9 / H:g}:100", False,
    )


def _sphere2(params):
    a = float(params.get("a", 1.0))

    def field(x):
        s = nk.sin(x[0])
        return nk.diag([a * a, a * a * s * s])

    def christoffels(x):
        th = float(x[0])
        G = np.zeros((2, 2, 2))
        G[0, 1, 1] = -math.sin(th) * math.cos(th)
        G[1, 0, 1] = G[1, 1, 0] = math.cos(th) / math.sin(th)
        return G

    return NamedMetric(
        "sphere2", 2, _frozen({"a": a}), field, SignatureMatrix.euclidean(2), ("theta", "phi"),
        (math.pi / 2, 0.0), _frozen({"theta": (0.1, math.pi - 0.1)}), "theta=0.2..2.9:20", False, christoffels,
    )


def _flat_polar(params):
    def field(x):
        r = x[0]
        return nk.diag([1.0, r * r])

    def christoffels(x):
        r = float(x[0])
        G = np.zeros((2, 2, 2))
        G[0, 1, 1] = -r
        G[1, 0, 1] = G[1, 1, 0] = 1.0 / r
        return G

    return NamedMetric(
        "flat_polar", 2, _frozen({}), field, SignatureMatrix.euclidean(2), ("r", "theta"), (1.0, 0.0),
        _frozen({"r": (0.1, 10.0)}), "r=0.5..5:20,theta=0..6:7", True, christoffels,
    )


_CATALOG = {
    "minkowski": _minkowski,
    "schwarzschild": _schwarzschild,
    "desitter_static": _desitter_static,
    "sphere2": _sphere2,
    "flat_polar": _flat_polar,
    "perturbed_schwarzschild": _perturbed_schwarzschild,
}
FIXTURE_NAMES = tuple(_CATALOG)


def get_fixture(name: str, params: Mapping[str, float] | None = None) -> NamedMetric:
    """Look up a fixture by name, e.g. ``get_fixture("schwarzschild", {"M": 2})``."""
    try:
        build = _CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}; choose from {', '.join(FIXTURE_NAMES)}") from None
    return build(dict(params or {}))


# -- grids ----------------------------------------------------------------------

@dataclass(frozen=True)
class GridAxis:
    name: str
    values: np.ndarray


def parse_grid(spec: str) -> list[GridAxis]:
    """Parse ``name=lo..hi:count`` / ``name=v`` items separated by commas."""
    axes = []
    seen = set()
    for item in filter(None, (s.strip() for s in (spec or "").split(","))):
        name, sep, rhs = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise ValueError(f"bad grid item {item!r}; expected name=lo..hi:count or name=value")
        if name in seen:
            raise ValueError(f"coordinate {name!r} given twice in grid")
        seen.add(name)
        try:
            if ".." in rhs:
                span, _, count = rhs.partition(":")
                lo, hi = (float(v) for v in span.split(".."))
                n = int(count) if count else 2
                if n < 1:
                    raise ValueError
                values = np.linspace(lo, hi, n)
            else:
                values = np.array([float(rhs)])
        except ValueError:
            raise ValueError(f"bad grid item {item!r}; expected name=lo..hi:count or name=value") from None
        axes.append(GridAxis(name, values))
    return axes


def grid_points(metric: NamedMetric, spec: str | None = None) -> list[np.ndarray]:
    """Cartesian product of the grid axes, first axis slowest."""
    axes = parse_grid(metric.default_grid if spec is None else spec)
    for a in axes:
        if a.name not in metric.coords:
            raise ValueError(f"{metric.name} has no coordinate {a.name!r} (coordinates: {', '.join(metric.coords)})")
    mesh = np.meshgrid(*[a.values for a in axes], indexing="ij") if axes else []
    flat = [m.reshape(-1) for m in mesh]
    n = flat[0].size if flat else 1
    return [metric.point(**{a.name: float(f[i]) for a, f in zip(axes, flat)}) for i in range(n)]


# -- random fields ----------------------------------------------------------------

def random_analytic_metric(rng: np.random.Generator, eta, scale: float = 0.1, freq: float = 1.0):
    """Smooth metric field ``g_{mu nu}(x) = eta + scale * sum of sinusoids``.

    Each component gets an amplitude, wave vector and phase of order one,
    so close to ``x = 0`` the field is a small deformation of ``eta``.
    """
    eta = np.asarray(getattr(eta, "eta", eta), dtype=float)
    m = eta.shape[0]
    amp = rng.uniform(-1, 1, size=(m, m))
    wav = freq * rng.normal(size=(m, m, m))
    pha = rng.uniform(0, 2 * np.pi, size=(m, m))
    quad = rng.normal(size=(m, m, m)) * 0.5

    def field(x):
        rows = []
        for i in range(m):
            row = []
            for j in range(m):
                a, b = min(i, j), max(i, j)
                arg = sum(wav[a, b, k] * x[k] for k in range(m)) + pha[a, b]
                lin = sum(quad[a, b, k] * x[k] for k in range(m))
                row.append(eta[a, b] + scale * (amp[a, b] * nk.sin(arg) + 0.2 * lin * lin))
            rows.append(row)
        return nk.stack(rows)

    return field

"""Palatini and first-order Einstein-Hilbert Lagrangian densities."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .connections import ConnectionCoeffs, levi_civita, ricci
from .framebundle import MetricJet2

__all__ = [
    "KAPPA",
    "LagrangianValue",
    "eh_first_order_density",
    "epsilon_contraction_oracle",
    "palatini_density",
    "permutation_sign",
]

# Coefficient of sqrt|g| g^{mn} R_{mn} in the epsilon-contracted Lagrangian
# form, i.e. (m-2)!; checked against the brute-force contraction in tests.
KAPPA = {2: 1.0, 3: 1.0, 4: 2.0}


def kappa(m: int) -> float:
    return KAPPA.get(m, float(math.factorial(m - 2)))


@dataclass(frozen=True)
class LagrangianValue:
    density: float
    normalization: float


def _volume(g: MetricJet2) -> float:
    # det g_cov = 1 / det g^{mn}
    return float(np.sqrt(abs(1.0 / np.linalg.det(g.g))))


def palatini_density(g: MetricJet2, c: ConnectionCoeffs) -> LagrangianValue:
    """``kappa_m sqrt|g| g^{mn} R_{mn}(c)`` for independent metric and connection."""
    if c.dgamma is None:
        raise ValueError("density needs connection derivatives")
    if abs(np.linalg.det(g.g)) < 1e-300:
        raise ValueError("degenerate metric")
    k = kappa(g.m)
    return LagrangianValue(k * _volume(g) * float(np.einsum("mn,mn->", g.g, ricci(c))), k)


def eh_first_order_density(g: MetricJet2) -> LagrangianValue:
    """Palatini density evaluated on the Levi-Civita connection of the jet."""
    return palatini_density(g, levi_civita(g))


def permutation_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def epsilon_contraction_oracle(g: MetricJet2, c: ConnectionCoeffs, orientation: int = 1) -> float:
    """Volume-form coefficient of the epsilon-contracted Lagrangian form.

    Literal permutation sum of
    ``eps_{m1..m(n-2) c k} sqrt|g| g^{k f} dx^m1 ^ .. ^ (dG^c_{r f} ^ dx^r
    + G^s_{d f} G^c_{b s} dx^b ^ dx^d)`` pulled back along the section.
    ``orientation=-1`` evaluates it with the opposite volume form.
    """
    m = g.m
    if m > 4:
        raise ValueError("brute-force contraction is limited to m <= 4")
    if c.dgamma is None:
        raise ValueError("oracle needs connection derivatives")
    G, dG = c.gamma, c.dgamma
    # two-form coefficient on dx^b ^ dx^r (not antisymmetrized)
    F = np.einsum("crfb->cfbr", dG) + np.einsum("srf,cbs->cfbr", G, G)
    vol = _volume(g)
    total = 0.0
    for perm in itertools.permutations(range(m)):
        s1 = permutation_sign(perm)
        *mus, gam, kap = perm
        rest = [i for i in range(m) if i not in mus]
        for b, r in itertools.permutations(rest, 2):
            s2 = permutation_sign(list(mus) + [b, r])
            total += s1 * s2 * vol * float(g.g[kap, :] @ F[gam, :, b, r])
    return orientation * total

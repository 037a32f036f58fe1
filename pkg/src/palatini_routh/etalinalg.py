"""Signature matrix, Cartan split of gl(m), polar factors and the
three-index solver used to fix torsion-free connections.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import numkit as nk
from .errors import ConsistencyError, SpectrumError

__all__ = [
    "KAlgebraElement",
    "SignatureMatrix",
    "cartan_split",
    "frame_polar_factors",
    "generalized_polar_decompose",
    "in_k",
    "random_k",
    "random_k_algebra",
    "unique_solution_solver",
    "vielbein_from_metric",
]


@dataclass(frozen=True)
class SignatureMatrix:
    """Diagonal ``eta`` with entries +-1; ``eta_inv`` equals ``eta``."""

    eta: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.eta, dtype=float)
        if e.ndim == 1:
            e = np.diag(e)
        d = np.diag(e)
        if e.shape[0] != e.shape[1] or not np.array_equal(e, np.diag(d)) or not np.all(np.abs(d) == 1):
            raise ValueError("signature matrix must be diagonal with entries +-1")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "eta", e)

    @classmethod
    def lorentzian(cls, m: int = 4) -> "SignatureMatrix":
        return cls(np.diag([-1.0] + [1.0] * (m - 1)))

    @classmethod
    def euclidean(cls, m: int) -> "SignatureMatrix":
        return cls(np.eye(m))

    @property
    def eta_inv(self) -> np.ndarray:
        return self.eta

    @property
    def m(self) -> int:
        return self.eta.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.eta)


def _as_eta(eta) -> np.ndarray:
    if isinstance(eta, SignatureMatrix):
        return eta.eta
    return SignatureMatrix(eta).eta


@dataclass(frozen=True)
class KAlgebraElement:
    """Element ``xi`` of the Lie algebra of the group preserving ``eta``."""

    xi: np.ndarray
    eta: SignatureMatrix

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        e = self.eta.eta
        defect = np.abs(xi.T @ e + e @ xi).max()
        if defect > 1e-10 * max(1.0, np.abs(xi).max()):
            raise ValueError(f"matrix is not in the eta-Lorentz algebra (defect {defect:.3e})")
        object.__setattr__(self, "xi", xi)


def cartan_split(a, eta):
    """Return ``(A_k, A_p)`` with ``A_k = (A - eta A^T eta)/2``."""
    e = _as_eta(eta)
    a = np.asarray(a, dtype=float)
    mirrored = e @ a.T @ e
    return 0.5 * (a - mirrored), 0.5 * (a + mirrored)


def in_k(k, eta, tol: float = 1e-10) -> bool:
    e = _as_eta(eta)
    k = np.asarray(k, dtype=float)
    return bool(np.abs(k.T @ e @ k - e).max() <= tol * max(1.0, np.abs(k).max() ** 2))


def random_k_algebra(rng, eta, scale: float = 1.0) -> KAlgebraElement:
    sig = eta if isinstance(eta, SignatureMatrix) else SignatureMatrix(eta)
    m = sig.m
    a = rng.normal(scale=scale, size=(m, m))
    return KAlgebraElement(cartan_split(a, sig)[0], sig)


def random_k(rng, eta, scale: float = 0.5) -> np.ndarray:
    """A group element ``exp(xi)`` with ``xi`` drawn from the K-algebra."""
    return scipy.linalg.expm(random_k_algebra(rng, eta, scale).xi)


def _check_polar_domain(a, e, symmetric):
    star = e @ a.T @ e @ a
    ev = np.linalg.eigvals(star)
    scale = max(1.0, np.abs(ev).max())
    on_axis = (np.abs(ev.imag) <= 1e-12 * scale) & (ev.real <= 1e-14 * scale)
    if np.any(on_axis):
        raise SpectrumError(f"eta A^T eta A has eigenvalues on the nonpositive real axis: {ev}")
    if symmetric:
        ev2 = np.linalg.eigvals(e @ np.linalg.inv(a))
        s2 = max(1.0, np.abs(ev2).max())
        if np.any((np.abs(ev2.imag) <= 1e-12 * s2) & (ev2.real <= 1e-14 * s2)):
            raise SpectrumError(f"eta g^-1 has eigenvalues on the nonpositive real axis: {ev2}")


def generalized_polar_decompose(g, eta, seed_scale: float = 1.0, max_iter: int = 100, tol: float = 1e-14):
    """Factor ``g = Q s`` with ``Q^T eta Q = eta`` and ``eta s`` symmetric.

    The eta-orthogonal factor is the limit of the Newton iteration
    ``X <- (X + eta X^-T eta) / 2`` started from ``seed_scale * g``; the
    self-adjoint factor has its spectrum in the open right half plane, which
    makes the pair unique.

    Raises
    ------
    SpectrumError
        If ``eta g^T eta g`` (or, for symmetric ``g``, ``eta g^-1``) has an
        eigenvalue on the closed nonpositive real axis, or if the iteration
        fails to converge.
    """
    e = _as_eta(eta)
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise SpectrumError("non-finite matrix")
    if abs(np.linalg.det(g)) == 0.0:
        raise SpectrumError("matrix is singular")
    _check_polar_domain(g, e, np.allclose(g, g.T, rtol=0, atol=1e-13 * max(1.0, np.abs(g).max())))
    x = seed_scale * g
    for _ in range(max_iter):
        x_new = 0.5 * (x + e @ np.linalg.inv(x).T @ e)
        if np.abs(x_new - x).max() <= tol * max(1.0, np.abs(x_new).max()):
            x = x_new
            break
        x = x_new
    else:
        raise SpectrumError(f"polar iteration did not converge in {max_iter} steps")
    q = x
    s = np.linalg.solve(q, g)
    # symmetrize eta*s against roundoff, then map back
    es = e @ s
    s = e @ (0.5 * (es + es.T))
    if np.any(np.linalg.eigvals(s).real <= 0):
        raise SpectrumError("self-adjoint factor is not in the right half plane")
    return q, s


def frame_polar_factors(e_frame, eta):
    """Split a frame ``e[k, mu]`` as ``e = k s`` with ``k`` in K.

    ``s`` depends only on the metric of the frame; ``k`` is the residual
    K-gauge coordinate.
    """
    return generalized_polar_decompose(e_frame, eta)


def vielbein_from_metric(g_contra, eta):
    """Polar representative ``e = sqrt(eta g)`` of a contravariant metric.

    Works on plain arrays and on jets (derivatives through the Sylvester
    equation).  The result satisfies ``e^T eta e = g`` and ``eta e``
    symmetric, i.e. it is the K-gauge with trivial group coordinate.
    """
    e = _as_eta(eta)
    return nk.sqrtm(nk.einsum("ij,jk->ik", e, g_contra))


def _consistency(arr, other, label, tol):
    defect = np.abs(arr - other).max()
    if defect > tol * max(1.0, np.abs(arr).max()):
        raise ConsistencyError(f"{label} violates its symmetry hypothesis (defect {defect:.3e})")


def unique_solution_solver(a, b, sign: int = 1, tol: float = 1e-10):
    """Solve ``c_ijk - sign c_jik = b_ijk``, ``c_ijk + sign c_ikj = a_ijk``.

    The solution is ``(a_ijk + a_jki - a_kij + b_ijk + b_kij - b_jki) / 2``.
    Solvability needs ``b`` to be (anti)symmetric in its first index pair
    and ``a`` in its last pair, consistently with the equations above:
    ``b_ijk + sign b_jik = 0`` and ``a_ijk - sign a_ikj = 0``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _consistency(b, -sign * np.transpose(b, (1, 0, 2)), "b", tol)
    _consistency(a, sign * np.transpose(a, (0, 2, 1)), "a", tol)
    a_jki = np.einsum("jki->ijk", a)
    a_kij = np.einsum("kij->ijk", a)
    b_kij = np.einsum("kij->ijk", b)
    b_jki = np.einsum("jki->ijk", b)
    return 0.5 * (a + a_jki - a_kij + b + b_kij - b_jki)

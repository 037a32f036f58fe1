"""Truncated Taylor (jet) arithmetic on a coordinate chart.

A :class:`Jet` carries an array value together with its first and,
optionally, second partial derivatives with respect to the ``m`` chart
coordinates.  Derivative axes are always appended *after* the value axes:
``grad[..., s]`` is the derivative along ``x^s`` and ``hess[..., s, r]``
the mixed second derivative.

Field definitions are plain Python callables written with the helpers of
this module (:func:`sin`, :func:`exp`, :func:`stack`, ...).  The same
callable then works on floats (finite differences) and on jets
(forward-mode differentiation).
"""
from __future__ import annotations

import enum
import itertools
import string
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EvaluationError, SpectrumError

__all__ = [
    "ChartPoint",
    "DerivativeContract",
    "Jet",
    "Mode",
    "constant",
    "cos",
    "diag",
    "eval_jet",
    "eval_jet2",
    "einsum",
    "exp",
    "inv",
    "log",
    "seed",
    "sin",
    "sqrt",
    "sqrtm",
    "stack",
    "tan",
    "value_of",
]


class Mode(enum.Enum):
    AUTOMATIC_FORWARD = "ad"
    CENTRAL_DIFFERENCE = "fd"


@dataclass(frozen=True)
class DerivativeContract:
    """How derivatives of a field are obtained."""

    mode: Mode = Mode.AUTOMATIC_FORWARD
    fd_step: float = 1e-5
    fd_richardson: bool = False

    def __post_init__(self):
        # Mode("fd") accepts the short names; anything else raises
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.fd_step > 0:
            raise ValueError(f"fd_step must be positive, got {self.fd_step}")

    @classmethod
    def ad(cls) -> "DerivativeContract":
        return cls(Mode.AUTOMATIC_FORWARD)

    @classmethod
    def fd(cls, step: float = 1e-5, richardson: bool = False) -> "DerivativeContract":
        return cls(Mode.CENTRAL_DIFFERENCE, step, richardson)


@dataclass(frozen=True)
class ChartPoint:
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(-1)
        if c.size < 2:
            raise ValueError("a chart point needs at least two coordinates")
        if not np.all(np.isfinite(c)):
            raise ValueError(f"non-finite chart coordinates {c}")
        object.__setattr__(self, "coords", c)

    @property
    def m(self) -> int:
        return self.coords.size


class Jet:
    """Array value with first (and optionally second) coordinate derivatives."""

    __slots__ = ("val", "grad", "hess")
    # make numpy defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, val, grad, hess=None):
        self.val = np.asarray(val, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = None if hess is None else np.asarray(hess, dtype=float)

    # -- introspection -------------------------------------------------
    @property
    def m(self) -> int:
        return self.grad.shape[-1]

    @property
    def order(self) -> int:
        return 1 if self.hess is None else 2

    @property
    def shape(self):
        return self.val.shape

    @property
    def value(self):
        return self.val

    def __len__(self):
        return self.val.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            raise IndexError("Ellipsis indexing is not supported on jets")
        return Jet(self.val[idx], self.grad[idx], None if self.hess is None else self.hess[idx])

    def __repr__(self):
        return f"Jet(shape={self.shape}, m={self.m}, order={self.order})"

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.val, self.grad)

    # -- arithmetic ------------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return constant(other, self.m, self.order)

    def __add__(self, other):
        o = self._coerce(other)
        shape = np.broadcast_shapes(self.shape, o.shape)
        hess = None
        if self.hess is not None and o.hess is not None:
            hess = _bcast(self.hess, shape, 2) + _bcast(o.hess, shape, 2)
        return Jet(self.val + o.val, _bcast(self.grad, shape, 1) + _bcast(o.grad, shape, 1), hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        a, b = self, o
        val = a.val * b.val
        grad = a.grad * b.val[..., None] + a.val[..., None] * b.grad
        hess = None
        if a.hess is not None and b.hess is not None:
            hess = (
                a.hess * b.val[..., None, None]
                + a.val[..., None, None] * b.hess
                + a.grad[..., :, None] * b.grad[..., None, :]
                + b.grad[..., :, None] * a.grad[..., None, :]
            )
        return Jet(val, grad, hess)

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.val
        return _chain(self, 1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(log(self) * p)
        p = float(p)
        if p == 2.0:
            return self * self
        v = self.val
        return _chain(self, v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))


def _bcast(d, shape, nd):
    return np.broadcast_to(d, tuple(shape) + d.shape[d.ndim - nd:])


def _chain(a: Jet, f0, f1, f2) -> Jet:
    grad = f1[..., None] * a.grad
    hess = None
    if a.hess is not None:
        hess = f1[..., None, None] * a.hess + f2[..., None, None] * (
            a.grad[..., :, None] * a.grad[..., None, :]
        )
    return Jet(f0, grad, hess)


def constant(c, m: int, order: int = 2) -> Jet:
    c = np.asarray(c, dtype=float)
    hess = np.zeros(c.shape + (m, m)) if order == 2 else None
    return Jet(c, np.zeros(c.shape + (m,)), hess)


def seed(p, order: int = 2) -> Jet:
    """Independent coordinate variables at ``p``."""
    p = np.asarray(p, dtype=float).reshape(-1)
    m = p.size
    hess = np.zeros((m, m, m)) if order == 2 else None
    return Jet(p, np.eye(m), hess)


def value_of(x):
    return x.val if isinstance(x, Jet) else np.asarray(x, dtype=float)


# -- elementary functions ----------------------------------------------------

def exp(x):
    if isinstance(x, Jet):
        e = np.exp(x.val)
        return _chain(x, e, e, e)
    return np.exp(x)


def log(x):
    if isinstance(x, Jet):
        v = x.val
        return _chain(x, np.log(v), 1.0 / v, -1.0 / v**2)
    return np.log(x)


def sin(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.val), np.cos(x.val)
        return _chain(x, s, c, -s)
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.val), np.cos(x.val)
        return _chain(x, c, -s, -c)
    return np.cos(x)


def tan(x):
    if isinstance(x, Jet):
        t = np.tan(x.val)
        d = 1.0 + t * t
        return _chain(x, t, d, 2.0 * t * d)
    return np.tan(x)


def sqrt(x):
    if isinstance(x, Jet):
        r = np.sqrt(x.val)
        return _chain(x, r, 0.5 / r, -0.25 / r**3)
    return np.sqrt(x)


# -- array construction --------------------------------------------------------

def _find_jet(obj):
    if isinstance(obj, Jet):
        return obj
    if isinstance(obj, (list, tuple)):
        for o in obj:
            j = _find_jet(o)
            if j is not None:
                return j
    return None


def stack(nested):
    """Build an array (or a :class:`Jet` array) from nested lists.

    Entries may mix jets and plain numbers; plain numbers become constants.
    """
    ref = _find_jet(nested)
    if ref is None:
        return np.asarray(nested, dtype=float)
    m, order = ref.m, ref.order
    for o in _flatten(nested):
        if isinstance(o, Jet):
            order = min(order, o.order)

    def build(obj):
        if isinstance(obj, (list, tuple)):
            parts = [build(o) for o in obj]
            return Jet(
                np.stack([p.val for p in parts]),
                np.stack([p.grad for p in parts]),
                None if order == 1 else np.stack([p.hess for p in parts]),
            )
        if isinstance(obj, Jet):
            return obj.truncate(order)
        return constant(obj, m, order)

    return build(nested)


def _flatten(obj):
    if isinstance(obj, (list, tuple)):
        for o in obj:
            yield from _flatten(o)
    else:
        yield obj


def diag(entries):
    n = len(entries)
    rows = [[entries[i] if i == j else 0.0 for j in range(n)] for i in range(n)]
    return stack(rows)


# -- tensor algebra ---------------------------------------------------------------

def _parse(subscripts, n):
    lhs, out = subscripts.replace(" ", "").split("->")
    ins = lhs.split(",")
    if len(ins) != n:
        raise ValueError(f"{subscripts!r} expects {len(ins)} operands, got {n}")
    return ins, out


def _free_letters(subscripts, k):
    used = set(subscripts)
    free = [c for c in string.ascii_letters if c not in used]
    return free[:k]


def _einsum2(sa, sb, out, a, b):
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if not (ja or jb):
        return np.einsum(f"{sa},{sb}->{out}", a, b)
    x, y = _free_letters(sa + sb + out, 2)
    if ja and jb:
        val = np.einsum(f"{sa},{sb}->{out}", a.val, b.val)
        grad = np.einsum(f"{sa}{x},{sb}->{out}{x}", a.grad, b.val) + np.einsum(
            f"{sa},{sb}{x}->{out}{x}", a.val, b.grad
        )
        hess = None
        if a.hess is not None and b.hess is not None:
            cross = np.einsum(f"{sa}{x},{sb}{y}->{out}{x}{y}", a.grad, b.grad)
            hess = (
                np.einsum(f"{sa}{x}{y},{sb}->{out}{x}{y}", a.hess, b.val)
                + np.einsum(f"{sa},{sb}{x}{y}->{out}{x}{y}", a.val, b.hess)
                + cross
                + np.swapaxes(cross, -1, -2)
            )
        return Jet(val, grad, hess)
    if ja:
        j, c, sj, sc = a, b, sa, sb
    else:
        j, c, sj, sc = b, a, sb, sa
    val = np.einsum(f"{sj},{sc}->{out}", j.val, c)
    grad = np.einsum(f"{sj}{x},{sc}->{out}{x}", j.grad, c)
    hess = None
    if j.hess is not None:
        hess = np.einsum(f"{sj}{x}{y},{sc}->{out}{x}{y}", j.hess, c)
    return Jet(val, grad, hess)


def einsum(subscripts: str, *operands):
    """``numpy.einsum`` with explicit output, extended to jets.

    Multi-operand contractions are folded left to right.
    """
    ins, out = _parse(subscripts, len(operands))
    if len(operands) == 1:
        (a,) = operands
        (sa,) = ins
        if not isinstance(a, Jet):
            return np.einsum(f"{sa}->{out}", a)
        x, y = _free_letters(sa + out, 2)
        hess = None if a.hess is None else np.einsum(f"{sa}{x}{y}->{out}{x}{y}", a.hess)
        return Jet(np.einsum(f"{sa}->{out}", a.val), np.einsum(f"{sa}{x}->{out}{x}", a.grad), hess)
    acc, sacc = operands[0], ins[0]
    for k in range(1, len(operands)):
        rest = "".join(ins[k + 1:]) + out
        keep = "".join(dict.fromkeys(c for c in sacc + ins[k] if c in rest))
        acc = _einsum2(sacc, ins[k], keep, acc, operands[k])
        sacc = keep
    if sacc != out:
        acc = einsum(f"{sacc}->{out}", acc)
    return acc


def inv(a):
    """Matrix inverse; jets differentiate through ``d(A^-1) = -A^-1 dA A^-1``."""
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    ai = np.linalg.inv(a.val)
    d = np.einsum("ij,jkx,kl->ilx", ai, a.grad, ai)
    hess = None
    if a.hess is not None:
        t = np.einsum("ijx,jky->ikxy", d, a.grad)
        t = np.einsum("ikxy,kl->ilxy", t, ai)
        hess = t + np.swapaxes(t, -1, -2) - np.einsum("ij,jkxy,kl->ilxy", ai, a.hess, ai)
    return Jet(ai, -d, hess)


def _principal_sqrt(a):
    ev = np.linalg.eigvals(a)
    bad = np.abs(ev.imag) <= 1e-12 * max(1.0, np.abs(ev).max())
    if np.any(bad & (ev.real <= 0)):
        raise SpectrumError(f"matrix has eigenvalues on the closed negative real axis: {ev}")
    s = scipy.linalg.sqrtm(a)
    return np.real_if_close(s, tol=1e6).real


def sqrtm(a):
    """Principal square root; jets solve ``S dS + dS S = dA`` (Sylvester)."""
    if not isinstance(a, Jet):
        return _principal_sqrt(a)
    s = _principal_sqrt(a.val)
    m = a.m
    d = np.empty(a.grad.shape)
    for i in range(m):
        d[..., i] = scipy.linalg.solve_sylvester(s, s, a.grad[..., i])
    hess = None
    if a.hess is not None:
        hess = np.empty(a.hess.shape)
        for i, j in itertools.product(range(m), repeat=2):
            if j < i:
                hess[..., i, j] = hess[..., j, i]
                continue
            rhs = a.hess[..., i, j] - d[..., i] @ d[..., j] - d[..., j] @ d[..., i]
            hess[..., i, j] = scipy.linalg.solve_sylvester(s, s, rhs)
    return Jet(s, d, hess)


# -- evaluation of fields -----------------------------------------------------------

def _check_finite(j: Jet):
    for name, arr in (("value", j.val), ("grad", j.grad), ("hess", j.hess)):
        if arr is None:
            continue
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            raise EvaluationError(f"non-finite {name} at index {tuple(bad[0])}", tuple(bad[0]))


def _fd_derivatives(f, p, h, order):
    m = p.size
    f0 = np.asarray(f(p.copy()), dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), (m,))
    e = np.diag(h)
    plus = [np.asarray(f(p + e[i]), dtype=float) for i in range(m)]
    minus = [np.asarray(f(p - e[i]), dtype=float) for i in range(m)]
    grad = np.stack([(plus[i] - minus[i]) / (2 * h[i]) for i in range(m)], axis=-1)
    if order == 1:
        return f0, grad, None
    hess = np.empty(f0.shape + (m, m))
    for i in range(m):
        hess[..., i, i] = (plus[i] - 2 * f0 + minus[i]) / h[i] ** 2
        for j in range(i + 1, m):
            pp = np.asarray(f(p + e[i] + e[j]), dtype=float)
            pm = np.asarray(f(p + e[i] - e[j]), dtype=float)
            mp = np.asarray(f(p - e[i] + e[j]), dtype=float)
            mm = np.asarray(f(p - e[i] - e[j]), dtype=float)
            hess[..., i, j] = hess[..., j, i] = (pp - pm - mp + mm) / (4 * h[i] * h[j])
    return f0, grad, hess


def eval_jet(field, p, contract: DerivativeContract | None = None, order: int = 2) -> Jet:
    """Value and derivatives of an array-valued ``field`` at chart point ``p``."""
    contract = contract or DerivativeContract()
    if isinstance(p, ChartPoint):
        p = p.coords
    p = np.asarray(p, dtype=float).reshape(-1)
    with np.errstate(all="ignore"):
        out = _evaluate(field, p, contract, order)
    _check_finite(out)
    return out


def _evaluate(field, p, contract, order):
    m = p.size
    if contract.mode is Mode.AUTOMATIC_FORWARD:
        out = field(seed(p, order))
        if isinstance(out, (list, tuple)):
            out = stack(out)
        if not isinstance(out, Jet):
            out = constant(out, m, order)
        out = out.truncate(order)
    else:
        # step relative to the coordinate magnitude, absolute below 1
        h = contract.fd_step * np.maximum(1.0, np.abs(p))
        f0, grad, hess = _fd_derivatives(field, p, h, order)
        if contract.fd_richardson:
            _, g2, h2 = _fd_derivatives(field, p, h / 2, order)
            grad = (4 * g2 - grad) / 3
            if order == 2:
                hess = (4 * h2 - hess) / 3
        return Jet(f0, grad, hess)
    return out


def eval_jet2(field, p, contract: DerivativeContract | None = None) -> Jet:
    """Second-order jet of a scalar (or array) field at ``p``."""
    return eval_jet(field, p, contract, order=2)

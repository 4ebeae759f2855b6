"""Weighted power-series spaces E_s realised on truncated coefficient vectors.

An element u(x) = sum_k c_k x^k belongs to E_s when sum_k |c_k| s^k is finite.
For 0 < s < s' < 1 the inclusion E_{s'} -> E_s is compact and the norms are
ordered, ``norm(u, s) <= norm(u, s')``.  Differentiation loses one level of
the scale with constant one::

    delta * norm(u', s) <= norm(u, s + delta)

which follows from k s^(k-1) delta <= (s + delta)^k.

The module-level helpers prefixed with ``batch_`` operate on 2-D arrays whose
last axis holds coefficients; the operator and solver layers use them to
evaluate many elements at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import DomainError

DEFAULT_N = 64

__all__ = [
    "DEFAULT_N",
    "AnalyticElement",
    "ScaleIndex",
    "norm",
    "derivative",
    "cauchy_product",
    "truncate",
    "scale_weights",
    "batch_norms",
    "batch_derivative",
    "batch_product",
]


@dataclass(frozen=True)
class ScaleIndex:
    """A level s of the scale, strictly inside (0, 1)."""

    s: float

    def __post_init__(self):
        s = float(self.s)
        if not (0.0 < s < 1.0):
            raise DomainError(f"scale index must lie in (0, 1), got {self.s!r}")
        object.__setattr__(self, "s", s)

    def __float__(self):
        return self.s


ScaleLike = Union[float, ScaleIndex]


def _level(s: ScaleLike) -> float:
    if isinstance(s, ScaleIndex):
        return s.s
    return ScaleIndex(s).s


def scale_weights(s: ScaleLike, N: int) -> np.ndarray:
    """Return (1, s, s^2, ..., s^N).

    Powers are built by repeated multiplication, so each entry is a
    nondecreasing function of s in floating point as well.
    """
    s = _level(s)
    w = np.empty(N + 1)
    w[0] = 1.0
    if N > 0:
        w[1:] = s
        np.cumprod(w[1:], out=w[1:])
    return w


class AnalyticElement:
    """Truncated power series c_0 + c_1 x + ... + c_N x^N.

    Instances are immutable.  ``N`` is the truncation degree: coefficients
    are stored padded to length ``N + 1``.  ``truncated`` records whether a
    product that produced this element dropped nonzero terms above degree N.
    """

    __slots__ = ("_c", "_N", "_truncated")

    def __init__(self, coeffs: Iterable[float], N: int | None = None,
                 truncated: bool = False):
        c = np.array(coeffs, dtype=float).ravel()
        if N is None:
            N = max(DEFAULT_N, len(c) - 1)
        if N < 0:
            raise DomainError("truncation degree must be nonnegative")
        if len(c) > N + 1:
            if np.any(c[N + 1:] != 0.0):
                raise DomainError(
                    f"{len(c)} coefficients do not fit truncation degree {N}")
            c = c[:N + 1]
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        full = np.zeros(N + 1)
        full[:len(c)] = c
        full.flags.writeable = False
        self._c = full
        self._N = int(N)
        self._truncated = bool(truncated)

    @classmethod
    def _wrap(cls, c: np.ndarray, N: int, truncated: bool = False):
        obj = cls.__new__(cls)
        c = np.array(c, dtype=float)
        c.flags.writeable = False
        obj._c = c
        obj._N = N
        obj._truncated = truncated
        return obj

    @classmethod
    def zero(cls, N: int = DEFAULT_N) -> "AnalyticElement":
        return cls((), N)

    @classmethod
    def constant(cls, value: float, N: int = DEFAULT_N) -> "AnalyticElement":
        return cls((value,), N)

    @classmethod
    def monomial(cls, k: int, N: int = DEFAULT_N,
                 coef: float = 1.0) -> "AnalyticElement":
        if not 0 <= k <= N:
            raise DomainError(f"monomial degree {k} outside 0..{N}")
        c = np.zeros(N + 1)
        c[k] = coef
        return cls._wrap(c, N)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def N(self) -> int:
        return self._N

    @property
    def truncated(self) -> bool:
        return self._truncated

    @property
    def degree(self) -> int:
        """Index of the highest nonzero coefficient, -1 for the zero series."""
        nz = np.flatnonzero(self._c)
        return int(nz[-1]) if len(nz) else -1

    def norm(self, s: ScaleLike) -> float:
        return norm(self, s)

    def with_degree(self, N: int) -> "AnalyticElement":
        """Re-pad (or truncate) to truncation degree N."""
        if N >= self._N:
            c = np.zeros(N + 1)
            c[:self._N + 1] = self._c
            return AnalyticElement._wrap(c, N, self._truncated)
        return truncate(self, N)

    def __call__(self, x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, self._c))

    def _align(self, other: "AnalyticElement"):
        N = min(self._N, other._N)
        return self._c[:N + 1], other._c[:N + 1], N

    def __add__(self, other):
        if not isinstance(other, AnalyticElement):
            return NotImplemented
        a, b, N = self._align(other)
        return AnalyticElement._wrap(a + b, N, self._truncated or other._truncated)

    def __sub__(self, other):
        if not isinstance(other, AnalyticElement):
            return NotImplemented
        a, b, N = self._align(other)
        return AnalyticElement._wrap(a - b, N, self._truncated or other._truncated)

    def __neg__(self):
        return AnalyticElement._wrap(-self._c, self._N, self._truncated)

    def __mul__(self, other):
        if isinstance(other, AnalyticElement):
            return cauchy_product(self, other)
        if np.isscalar(other):
            return AnalyticElement._wrap(float(other) * self._c, self._N,
                                         self._truncated)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return self.__mul__(other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, AnalyticElement):
            return NotImplemented
        return self._N == other._N and np.array_equal(self._c, other._c)

    __hash__ = None

    def __repr__(self):
        d = self.degree
        shown = ", ".join(repr(float(c)) for c in self._c[:max(d, 0) + 1])
        return f"AnalyticElement(({shown}), N={self._N})"


def norm(u: AnalyticElement, s: ScaleLike) -> float:
    """Weighted l1 norm sum_k |c_k| s^k, summed with math.fsum."""
    w = scale_weights(s, u.N)
    return math.fsum(np.abs(u.coeffs) * w)


def derivative(u: AnalyticElement) -> AnalyticElement:
    """Term-wise x-derivative; the truncation degree is kept."""
    return AnalyticElement._wrap(batch_derivative(u.coeffs), u.N, u.truncated)


def cauchy_product(u: AnalyticElement, v: AnalyticElement) -> AnalyticElement:
    """Coefficient convolution truncated at min(u.N, v.N)."""
    N = min(u.N, v.N)
    full = np.convolve(u.coeffs[:N + 1], v.coeffs[:N + 1])
    dropped = bool(np.any(full[N + 1:] != 0.0))
    return AnalyticElement._wrap(full[:N + 1], N,
                                 dropped or u.truncated or v.truncated)


def truncate(u: AnalyticElement, N: int) -> AnalyticElement:
    if N < 0:
        raise DomainError("truncation degree must be nonnegative")
    if N >= u.N:
        return u
    return AnalyticElement._wrap(u.coeffs[:N + 1], N, u.truncated)


def batch_norms(C: np.ndarray, s: ScaleLike) -> np.ndarray:
    """Norms of every row of ``C`` (last axis = coefficients)."""
    w = scale_weights(s, C.shape[-1] - 1)
    return np.sum(np.abs(C) * w, axis=-1)


def batch_derivative(C: np.ndarray) -> np.ndarray:
    out = np.zeros_like(C, dtype=float)
    n = C.shape[-1]
    if n > 1:
        out[..., :-1] = C[..., 1:] * np.arange(1, n)
    return out


def batch_product(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Row-wise truncated Cauchy product of two (..., N+1) arrays."""
    U, V = np.broadcast_arrays(np.asarray(U, float), np.asarray(V, float))
    n = U.shape[-1]
    out = np.zeros(U.shape)
    for k in range(n):
        uk = U[..., k:k + 1]
        if not np.any(uk):
            continue
        out[..., k:] += uk * V[..., :n - k]
    return out

"""Expression trees for the right-hand side maps A(t, u, v) and h(t, u).

The node set is deliberately small::

    Const(c0, c1, ...)     a fixed series
    ArgU, ArgV             the second and third arguments of A
    Dx(e)                  x-derivative
    Mul(a, b), Add(a, b)   Cauchy product and sum
    TimeScale(p, e)        p(t) * e for a polynomial p in t

which covers quasilinear right-hand sides such as u * v_x.  Trees evaluate on
batches: ``U`` and ``V`` are arrays of shape (B, N+1) and ``t`` is a scalar or
an array of shape (B,).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Tuple, Union

import numpy as np

from .errors import DomainError, StructuralError
from .scale import (DEFAULT_N, AnalyticElement, batch_derivative,
                    batch_product)

__all__ = [
    "OperatorExpr", "Const", "ArgU", "ArgV", "Dx", "Mul", "Add", "TimeScale",
    "ARG_U", "ARG_V", "ProblemSpec", "evaluate", "evaluate_A", "evaluate_h",
    "format_expr",
]


def _clean(values) -> Tuple[float, ...]:
    vals = [float(x) for x in np.ravel(np.asarray(values, dtype=float))]
    if not all(np.isfinite(vals)):
        raise DomainError("coefficients must be finite")
    while len(vals) > 1 and vals[-1] == 0.0:
        vals.pop()
    return tuple(vals) if vals else (0.0,)


class OperatorExpr:
    """Base class of expression nodes."""

    def children(self) -> Tuple["OperatorExpr", ...]:
        return ()

    def walk(self) -> Iterator["OperatorExpr"]:
        yield self
        for c in self.children():
            yield from c.walk()

    @property
    def v_degree(self) -> int:
        """Polynomial degree of the tree in its third argument."""
        raise NotImplementedError

    @property
    def contains_v(self) -> bool:
        return any(isinstance(n, ArgVNode) for n in self.walk())

    @property
    def contains_u(self) -> bool:
        return any(isinstance(n, ArgUNode) for n in self.walk())

    @property
    def contains_t(self) -> bool:
        return any(isinstance(n, TimeScale) for n in self.walk())

    @property
    def linear_in_v(self) -> bool:
        """ArgV occurs at most once along every multiplicative path.

        Such a tree is affine in v, so convex combinations in the third
        argument pass through evaluation unchanged.
        """
        return self.v_degree <= 1

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True, eq=True)
class Const(OperatorExpr):
    coeffs: Tuple[float, ...]

    def __init__(self, coeffs):
        if isinstance(coeffs, AnalyticElement):
            coeffs = coeffs.coeffs
        elif np.isscalar(coeffs):
            coeffs = (coeffs,)
        object.__setattr__(self, "coeffs", _clean(coeffs))

    def element(self, N: int = DEFAULT_N) -> AnalyticElement:
        c = self.coeffs[:N + 1]
        return AnalyticElement(c, N)

    @property
    def v_degree(self):
        return 0


@dataclass(frozen=True)
class ArgUNode(OperatorExpr):
    @property
    def v_degree(self):
        return 0


@dataclass(frozen=True)
class ArgVNode(OperatorExpr):
    @property
    def v_degree(self):
        return 1


ARG_U = ArgUNode()
ARG_V = ArgVNode()
ArgU = ARG_U
ArgV = ARG_V


@dataclass(frozen=True)
class Dx(OperatorExpr):
    child: OperatorExpr

    def children(self):
        return (self.child,)

    @property
    def v_degree(self):
        return self.child.v_degree


@dataclass(frozen=True)
class Mul(OperatorExpr):
    left: OperatorExpr
    right: OperatorExpr

    def children(self):
        return (self.left, self.right)

    @property
    def v_degree(self):
        return self.left.v_degree + self.right.v_degree


@dataclass(frozen=True)
class Add(OperatorExpr):
    left: OperatorExpr
    right: OperatorExpr

    def children(self):
        return (self.left, self.right)

    @property
    def v_degree(self):
        return max(self.left.v_degree, self.right.v_degree)


@dataclass(frozen=True)
class TimeScale(OperatorExpr):
    """Multiply ``child`` by the polynomial sum_i poly[i] t^i."""

    poly: Tuple[float, ...]
    child: OperatorExpr

    def __init__(self, poly, child):
        if np.isscalar(poly):
            poly = (poly,)
        object.__setattr__(self, "poly", _clean(poly))
        object.__setattr__(self, "child", child)

    def children(self):
        return (self.child,)

    @property
    def v_degree(self):
        return self.child.v_degree


@dataclass(frozen=True)
class ProblemSpec:
    """The problem u_t = A(t, u, u) + h(t, u), u(0) = 0, on the ball of radius R."""

    A: OperatorExpr
    h: OperatorExpr
    R: float
    N: int = DEFAULT_N
    label: str = ""

    def __post_init__(self):
        for name in ("A", "h"):
            if not isinstance(getattr(self, name), OperatorExpr):
                raise StructuralError(f"{name} must be an operator expression")
        if self.h.contains_v:
            raise StructuralError("h may not depend on the third argument (arg_v)")
        R = float(self.R)
        if not (np.isfinite(R) and R > 0):
            raise DomainError(f"ball radius R must be positive, got {self.R!r}")
        object.__setattr__(self, "R", R)
        if int(self.N) != self.N or self.N < 0:
            raise DomainError(f"truncation degree N must be a nonnegative integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))


def _poly_at(poly, t):
    return np.polynomial.polynomial.polyval(t, np.asarray(poly))


def evaluate(expr: OperatorExpr, t, U, V, N: int) -> np.ndarray:
    """Evaluate ``expr`` on a batch.

    ``U`` and ``V`` have shape (B, N+1), ``t`` is a scalar or shape (B,).
    The result has shape (B, N+1); constants broadcast.
    """
    if isinstance(expr, Const):
        out = np.zeros(N + 1)
        c = expr.coeffs[:N + 1]
        out[:len(c)] = c
        return out[None, :]
    if isinstance(expr, ArgUNode):
        if U is None:
            raise StructuralError("arg_u used without a second argument")
        return U
    if isinstance(expr, ArgVNode):
        if V is None:
            raise StructuralError("arg_v is not available in this expression")
        return V
    if isinstance(expr, Dx):
        return batch_derivative(evaluate(expr.child, t, U, V, N))
    if isinstance(expr, Mul):
        return batch_product(evaluate(expr.left, t, U, V, N),
                             evaluate(expr.right, t, U, V, N))
    if isinstance(expr, Add):
        return (evaluate(expr.left, t, U, V, N)
                + evaluate(expr.right, t, U, V, N))
    if isinstance(expr, TimeScale):
        p = np.asarray(_poly_at(expr.poly, t), dtype=float)
        inner = evaluate(expr.child, t, U, V, N)
        return np.reshape(p, (-1, 1)) * inner
    raise StructuralError(f"unknown expression node {expr!r}")


def _as_row(u: AnalyticElement, N: int) -> np.ndarray:
    row = np.zeros(N + 1)
    c = u.coeffs[:N + 1]
    row[:len(c)] = c
    return row[None, :]


def evaluate_A(spec: ProblemSpec, t: float, u: AnalyticElement,
               v: AnalyticElement) -> AnalyticElement:
    if t < 0:
        raise DomainError("time must be nonnegative")
    N = spec.N
    out = evaluate(spec.A, t, _as_row(u, N), _as_row(v, N), N)
    return AnalyticElement(np.broadcast_to(out, (1, N + 1))[0], N)


def evaluate_h(spec: ProblemSpec, t: float, u: AnalyticElement) -> AnalyticElement:
    if t < 0:
        raise DomainError("time must be nonnegative")
    if spec.h.contains_v:
        raise StructuralError("h may not depend on the third argument (arg_v)")
    N = spec.N
    out = evaluate(spec.h, t, _as_row(u, N), None, N)
    return AnalyticElement(np.broadcast_to(out, (1, N + 1))[0], N)


def _num(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_expr(expr: OperatorExpr) -> str:
    """Render ``expr`` in problem-file s-expression syntax."""
    if isinstance(expr, Const):
        return "(series " + " ".join(_num(c) for c in expr.coeffs) + ")"
    if isinstance(expr, ArgUNode):
        return "arg_u"
    if isinstance(expr, ArgVNode):
        return "arg_v"
    if isinstance(expr, Dx):
        return f"(dx {format_expr(expr.child)})"
    if isinstance(expr, Mul):
        return f"(mul {format_expr(expr.left)} {format_expr(expr.right)})"
    if isinstance(expr, Add):
        return f"(add {format_expr(expr.left)} {format_expr(expr.right)})"
    if isinstance(expr, TimeScale):
        poly = " ".join(_num(c) for c in expr.poly)
        return f"(tscale ({poly}) {format_expr(expr.child)})"
    raise StructuralError(f"unknown expression node {expr!r}")

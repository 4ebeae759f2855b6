"""Problem files: line-oriented ``key = value`` with s-expression operators.

Example::

    # Burgers-type problem u_t = u u_x + x
    label = burgers
    A = (mul arg_u (dx arg_v))
    h = (series 0 1)
    R = 2
    N = 64

Operator syntax: ``arg_u``, ``arg_v``, a bare number (constant series),
``(series c0 c1 ...)``, ``(dx e)``, ``(mul e1 e2 ...)``, ``(add e1 e2 ...)``
and ``(tscale (p0 p1 ...) e)`` for p(t) * e.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from typing import List, Optional, Tuple

from .errors import DomainError, StructuralError
from .operators import (ARG_U, ARG_V, Add, Const, Dx, Mul, OperatorExpr,
                        ProblemSpec, TimeScale, _num, format_expr)
from .scale import DEFAULT_N

__all__ = ["ProblemFileError", "RunSettings", "ProblemFile", "parse_expr",
           "parse_problem", "serialize_problem", "load_problem"]


class ProblemFileError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


@dataclass
class RunSettings:
    s: float = 0.5
    tau_frac: float = 0.5
    step: Optional[float] = None
    max_iter: int = 50
    tol: float = 1e-12
    theta: float = 0.1
    seed: int = 0


@dataclass
class ProblemFile:
    spec: ProblemSpec
    settings: RunSettings = field(default_factory=RunSettings)
    M: Optional[float] = None
    K: Optional[float] = None
    a: Optional[float] = None


_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


def _tokenize(text: str, line: int, col0: int) -> List[Tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        tok = m.group(1) or m.group(2) or m.group(3)
        if tok is None:
            break
        tokens.append((tok, col0 + m.start(m.lastindex)))
        pos = m.end()
    return tokens


def _number(tok: str, line: int, col: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise ProblemFileError(f"expected a number, got {tok!r}", line, col) from None
    if not math.isfinite(x):
        raise ProblemFileError(f"number must be finite, got {tok!r}", line, col)
    return x


class _Parser:
    def __init__(self, text: str, line: int, col0: int):
        self.tokens = _tokenize(text, line, col0)
        self.i = 0
        self.line = line
        self.end_col = col0 + len(text)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, self.end_col)

    def take(self):
        tok = self.peek()
        if tok[0] is None:
            raise ProblemFileError("unexpected end of expression", self.line, tok[1])
        self.i += 1
        return tok

    def expect(self, want: str):
        tok, col = self.take()
        if tok != want:
            raise ProblemFileError(f"expected {want!r}, got {tok!r}", self.line, col)

    def numbers(self) -> List[float]:
        out = []
        while self.peek()[0] not in (")", None):
            tok, col = self.take()
            out.append(_number(tok, self.line, col))
        return out

    def expr(self) -> OperatorExpr:
        tok, col = self.take()
        if tok == ")":
            raise ProblemFileError("unexpected ')'", self.line, col)
        if tok != "(":
            if tok == "arg_u":
                return ARG_U
            if tok == "arg_v":
                return ARG_V
            return Const(_number(tok, self.line, col))
        head, hcol = self.take()
        if head == "series":
            vals = self.numbers()
            if not vals:
                raise ProblemFileError("series needs at least one coefficient", self.line, hcol)
            node = Const(vals)
        elif head == "dx":
            node = Dx(self.expr())
        elif head in ("mul", "add"):
            args = [self.expr(), self.expr()]
            while self.peek()[0] not in (")", None):
                args.append(self.expr())
            cls = Mul if head == "mul" else Add
            node = args[0]
            for a in args[1:]:
                node = cls(node, a)
        elif head == "tscale":
            self.expect("(")
            poly = self.numbers()
            self.expect(")")
            if not poly:
                raise ProblemFileError("tscale needs a polynomial", self.line, hcol)
            node = TimeScale(poly, self.expr())
        else:
            raise ProblemFileError(f"unknown operator {head!r}", self.line, hcol)
        self.expect(")")
        return node


def parse_expr(text: str, line: int = 1, column: int = 1) -> OperatorExpr:
    p = _Parser(text, line, column)
    node = p.expr()
    tok, col = p.peek()
    if tok is not None:
        raise ProblemFileError(f"trailing input {tok!r}", line, col)
    return node


_FLOAT_KEYS = {"R", "M", "K", "a", "s", "tau_frac", "step", "tol", "theta"}
_INT_KEYS = {"N", "max_iter", "seed"}
_EXPR_KEYS = {"A", "h"}
_KEYS = _FLOAT_KEYS | _INT_KEYS | _EXPR_KEYS | {"label"}


def parse_problem(text: str) -> ProblemFile:
    """Parse problem-file text; every error carries a line and column."""
    values = {}
    where = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ProblemFileError("expected 'key = value'", lineno, col)
        key_part, value_part = line.split("=", 1)
        key = key_part.strip()
        kcol = len(key_part) - len(key_part.lstrip()) + 1
        vcol = len(key_part) + 2 + len(value_part) - len(value_part.lstrip())
        if key not in _KEYS:
            raise ProblemFileError(f"unknown key {key!r}", lineno, kcol)
        if key in values:
            raise ProblemFileError(f"duplicate key {key!r}", lineno, kcol)
        value = value_part.strip()
        if not value and key != "label":
            raise ProblemFileError(f"missing value for {key!r}", lineno, vcol)
        where[key] = (lineno, vcol)
        if key in _EXPR_KEYS:
            values[key] = parse_expr(value, lineno, vcol)
        elif key in _FLOAT_KEYS:
            values[key] = _number(value, lineno, vcol)
        elif key in _INT_KEYS:
            x = _number(value, lineno, vcol)
            if x != int(x):
                raise ProblemFileError(f"{key} must be an integer", lineno, vcol)
            values[key] = int(x)
        else:
            values[key] = value

    for key in ("A", "h", "R"):
        if key not in values:
            raise ProblemFileError(f"missing required key {key!r}")
    if values["h"].contains_v:
        raise ProblemFileError("h may not contain arg_v", *where["h"])
    if values["R"] <= 0:
        raise ProblemFileError(f"R must be positive, got {values['R']}", *where["R"])
    if values.get("N", DEFAULT_N) < 0:
        raise ProblemFileError(f"N must be nonnegative, got {values['N']}", *where["N"])
    for key in ("M", "K"):
        if key in values and values[key] < 0:
            raise ProblemFileError(f"{key} must be nonnegative", *where[key])
    if "a" in values and values["a"] <= 0:
        raise ProblemFileError("a must be positive", *where["a"])
    try:
        spec = ProblemSpec(values["A"], values["h"], values["R"],
                           values.get("N", DEFAULT_N), values.get("label", ""))
    except (DomainError, StructuralError) as exc:
        raise ProblemFileError(str(exc)) from exc
    settings = RunSettings(**{f.name: values[f.name]
                              for f in fields(RunSettings) if f.name in values})
    return ProblemFile(spec, settings, values.get("M"), values.get("K"), values.get("a"))


def serialize_problem(pf: ProblemFile) -> str:
    """Canonical text form; ``parse_problem`` reads it back unchanged."""
    spec = pf.spec
    lines = []
    if spec.label:
        lines.append(f"label = {spec.label}")
    lines += [f"A = {format_expr(spec.A)}", f"h = {format_expr(spec.h)}",
              f"R = {_num(spec.R)}", f"N = {spec.N}"]
    for key in ("M", "K", "a"):
        val = getattr(pf, key)
        if val is not None:
            lines.append(f"{key} = {_num(val)}")
    for f in fields(RunSettings):
        val = getattr(pf.settings, f.name)
        if val is None:
            continue
        lines.append(f"{f.name} = {val if isinstance(val, int) else _num(val)}")
    return "\n".join(lines) + "\n"


def load_problem(path) -> ProblemFile:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())

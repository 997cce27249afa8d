"""Exact scalar arithmetic over Q and real quadratic fields Q(sqrt(D)).

Three-level tower: Rational < QuadIrr (a + b*sqrt(D), D squarefree > 1) < Float.
Rational and QuadIrr support exact sign, comparison and floor, which is what
makes definiteness tests and continued-fraction steps decidable.  Float is a
tolerance-carrying adapter: any arithmetic touching a Float yields a Float,
and sign tests treat |x| <= tol as zero.

Values are immutable; all operations are pure.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Union

DEFAULT_TOLERANCE = 1e-9

ScalarLike = Union["Scalar", int, Fraction]


class FieldMismatchError(ValueError):
    """Arithmetic between Q(sqrt(D1)) and Q(sqrt(D2)) with D1 != D2."""


class InexactOperationError(ValueError):
    """An exact-only operation (floor, exact sign) was asked of a Float."""


def _square_free_decompose(n: int) -> tuple[int, int]:
    """Return (m, s) with n = m**2 * s and s squarefree, for n >= 1."""
    m, s = 1, 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            m *= p ** (e // 2)
            if e % 2:
                s *= p
        p += 1 if p == 2 else 2
    return m, s * n


class Scalar:
    """Base for the three scalar variants; use the module constructors."""

    __slots__ = ()

    is_exact = True

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        return _arith("add", self, _coerce(other))

    def __radd__(self, other):
        return _arith("add", _coerce(other), self)

    def __sub__(self, other):
        return _arith("sub", self, _coerce(other))

    def __rsub__(self, other):
        return _arith("sub", _coerce(other), self)

    def __mul__(self, other):
        return _arith("mul", self, _coerce(other))

    def __rmul__(self, other):
        return _arith("mul", _coerce(other), self)

    def __truediv__(self, other):
        return _arith("div", self, _coerce(other))

    def __rtruediv__(self, other):
        return _arith("div", _coerce(other), self)

    def __neg__(self):
        return _arith("sub", ZERO, self)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- comparisons (exact via sign of the difference) ------------------

    def __lt__(self, other):
        return (self - _coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - _coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - _coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - _coerce(other)).sign() >= 0

    def __eq__(self, other):
        try:
            other = _coerce(other)
        except TypeError:
            return NotImplemented
        return (self - other).sign() == 0

    def __ne__(self, other):
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    def __bool__(self):
        return self.sign() != 0

    def sign(self) -> int:
        raise NotImplementedError

    def to_float(self) -> float:
        raise NotImplementedError

    def floor(self) -> int:
        raise NotImplementedError


class Rational(Scalar):
    """Exact rational; wraps Fraction (lowest terms, positive denominator)."""

    __slots__ = ("value",)

    def __init__(self, numerator, denominator=1):
        object.__setattr__(self, "value", Fraction(numerator, denominator))

    def __setattr__(self, *a):
        raise AttributeError("Scalar values are immutable")

    @property
    def numerator(self) -> int:
        return self.value.numerator

    @property
    def denominator(self) -> int:
        return self.value.denominator

    def sign(self) -> int:
        v = self.value
        return (v > 0) - (v < 0)

    def floor(self) -> int:
        return math.floor(self.value)

    def to_float(self) -> float:
        return float(self.value)

    def __hash__(self):
        return hash(("Rational", self.value))

    def __repr__(self):
        return f"Rational({self.value})"

    def __str__(self):
        return str(self.value)


class QuadIrr(Scalar):
    """a + b*sqrt(D) with rational a, b (b != 0) and squarefree D > 1."""

    __slots__ = ("a", "b", "D")

    def __init__(self, a, b, D):
        a, b = Fraction(a), Fraction(b)
        D = int(D)
        if D <= 1:
            raise ValueError(f"require D > 1, got {D}")
        m, s = _square_free_decompose(D)
        if m != 1:  # absorb square part into b
            b, D = b * m, s
        if D == 1 or b == 0:
            raise ValueError("use rational(); this value is rational")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "D", D)

    def __setattr__(self, *a):
        raise AttributeError("Scalar values are immutable")

    def conjugate(self) -> "QuadIrr":
        return QuadIrr(self.a, -self.b, self.D)

    def field_norm(self) -> Fraction:
        """a**2 - b**2*D; nonzero whenever b != 0 and D is squarefree."""
        return self.a * self.a - self.b * self.b * self.D

    def sign(self) -> int:
        a, b = self.a, self.b
        sa = (a > 0) - (a < 0)
        sb = (b > 0) - (b < 0)
        if sa == 0:
            return sb
        if sa == sb:
            return sa
        # opposite signs: |a| vs |b|*sqrt(D) decided on squares
        return sa if a * a > b * b * self.D else sb

    def floor(self) -> int:
        n = math.floor(self.to_float())
        # float estimate can be off by one near integers; fix exactly
        while (self - n).sign() < 0:
            n -= 1
        while (self - (n + 1)).sign() >= 0:
            n += 1
        return n

    def to_float(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(self.D)

    def __hash__(self):
        return hash(("QuadIrr", self.a, self.b, self.D))

    def __repr__(self):
        return f"QuadIrr({self.a} + {self.b}*sqrt({self.D}))"

    def __str__(self):
        return f"{self.a}+{self.b}*sqrt({self.D})"


class FloatVal(Scalar):
    """Floating value with an absolute tolerance used by sign tests."""

    __slots__ = ("value", "tol")

    is_exact = False

    def __init__(self, value, tol=DEFAULT_TOLERANCE):
        if not tol > 0:
            raise ValueError("tolerance must be positive")
        object.__setattr__(self, "value", float(value))
        object.__setattr__(self, "tol", float(tol))

    def __setattr__(self, *a):
        raise AttributeError("Scalar values are immutable")

    def sign(self) -> int:
        if abs(self.value) <= self.tol:
            return 0
        return 1 if self.value > 0 else -1

    def floor(self) -> int:
        raise InexactOperationError(
            "floor of a Float is tolerance-unsafe; use an exact scalar"
        )

    def to_float(self) -> float:
        return self.value

    def __hash__(self):
        return hash(("FloatVal", self.value))

    def __repr__(self):
        return f"FloatVal({self.value!r}, tol={self.tol!r})"

    def __str__(self):
        return repr(self.value)


ZERO = Rational(0)
ONE = Rational(1)


def rational(p, q=1) -> Rational:
    return Rational(p, q)


def quadirr(a, b, D) -> Scalar:
    """a + b*sqrt(D), normalized: b == 0 or square D collapse to Rational."""
    a, b = Fraction(a), Fraction(b)
    if b == 0:
        return Rational(a)
    m, s = _square_free_decompose(int(D))
    if s == 1:
        return Rational(a + b * m)
    return QuadIrr(a, b * m, s)


def flt(x, tol=DEFAULT_TOLERANCE) -> FloatVal:
    return FloatVal(x, tol)


def _coerce(x) -> Scalar:
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)):
        return Rational(x)
    if isinstance(x, float):
        return FloatVal(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to Scalar")


def _as_quad(x: Scalar, D: int) -> tuple[Fraction, Fraction]:
    if isinstance(x, Rational):
        return x.value, Fraction(0)
    return x.a, x.b


def _arith(op: str, x: Scalar, y: Scalar) -> Scalar:
    if isinstance(x, FloatVal) or isinstance(y, FloatVal):
        xv, yv = x.to_float(), y.to_float()
        tol = max(getattr(x, "tol", 0.0), getattr(y, "tol", 0.0)) or DEFAULT_TOLERANCE
        if op == "add":
            return FloatVal(xv + yv, tol)
        if op == "sub":
            return FloatVal(xv - yv, tol)
        if op == "mul":
            return FloatVal(xv * yv, tol)
        if yv == 0.0:
            raise ZeroDivisionError("scalar division by zero")
        return FloatVal(xv / yv, tol)

    if isinstance(x, QuadIrr) or isinstance(y, QuadIrr):
        Dx = x.D if isinstance(x, QuadIrr) else None
        Dy = y.D if isinstance(y, QuadIrr) else None
        if Dx is not None and Dy is not None and Dx != Dy:
            raise FieldMismatchError(
                f"cannot mix Q(sqrt({Dx})) and Q(sqrt({Dy})) exactly"
            )
        D = Dx if Dx is not None else Dy
        xa, xb = _as_quad(x, D)
        ya, yb = _as_quad(y, D)
        if op == "add":
            return quadirr(xa + ya, xb + yb, D)
        if op == "sub":
            return quadirr(xa - ya, xb - yb, D)
        if op == "mul":
            return quadirr(xa * ya + xb * yb * D, xa * yb + xb * ya, D)
        # div: multiply by the conjugate of y
        n = ya * ya - yb * yb * D
        if n == 0:
            raise ZeroDivisionError("scalar division by zero")
        return quadirr((xa * ya - xb * yb * D) / n, (xb * ya - xa * yb) / n, D)

    xv, yv = x.value, y.value
    if op == "add":
        return Rational(xv + yv)
    if op == "sub":
        return Rational(xv - yv)
    if op == "mul":
        return Rational(xv * yv)
    if yv == 0:
        raise ZeroDivisionError("scalar division by zero")
    return Rational(xv / yv)


# -- spec-level operation names ------------------------------------------

def scalar_arith(op: str, x: ScalarLike, y: ScalarLike) -> Scalar:
    """Exact add/sub/mul/div in the scalar tower; Float contaminates."""
    if op not in ("add", "sub", "mul", "div"):
        raise ValueError(f"unknown op {op!r}")
    return _arith(op, _coerce(x), _coerce(y))


def scalar_sign(x: ScalarLike) -> int:
    return _coerce(x).sign()


def scalar_floor(x: ScalarLike) -> int:
    return _coerce(x).floor()


def exact_sqrt(x: ScalarLike) -> Scalar | None:
    """Square root of x >= 0 inside the tower, or None if it does not fit.

    Every nonnegative rational has a root of the form (m/q)*sqrt(s); a
    QuadIrr a + b*sqrt(D) has a root x + y*sqrt(D) exactly when
    a**2 - b**2*D is a rational square and the induced x**2 is one too.
    """
    x = _coerce(x)
    s = x.sign()
    if s < 0:
        return None
    if s == 0:
        return ZERO
    if isinstance(x, FloatVal):
        return FloatVal(math.sqrt(x.value), x.tol)
    if isinstance(x, Rational):
        p, q = x.value.numerator, x.value.denominator
        m, sf = _square_free_decompose(p * q)
        return quadirr(0, Fraction(m, q), sf) if sf > 1 else Rational(m, q)
    disc = x.field_norm()
    root_disc = _rational_sqrt(disc)
    if root_disc is None:
        return None
    for t in ((x.a + root_disc) / 2, (x.a - root_disc) / 2):
        xr = _rational_sqrt(t)
        if xr is not None and xr != 0:
            cand = quadirr(xr, x.b / (2 * xr), x.D)
            if cand * cand == x and cand.sign() >= 0:
                return cand
    return None


def _rational_sqrt(r: Fraction) -> Fraction | None:
    if r < 0:
        return None
    pn = math.isqrt(r.numerator)
    pd = math.isqrt(r.denominator)
    if pn * pn == r.numerator and pd * pd == r.denominator:
        return Fraction(pn, pd)
    return None


# -- text encoding shared by all file formats ------------------------------

def encode_scalar(x: Scalar):
    """JSON-ready form: "p/q" for rationals, {a,b,D} for QuadIrr, number."""
    if isinstance(x, Rational):
        v = x.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(x, QuadIrr):
        return {"a": _frac_str(x.a), "b": _frac_str(x.b), "D": x.D}
    return x.to_float()


def _frac_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def decode_scalar(obj, tol: float = DEFAULT_TOLERANCE) -> Scalar:
    """Inverse of encode_scalar. Bare ints decode exactly; floats stay Float."""
    if isinstance(obj, Scalar):
        return obj
    if isinstance(obj, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(obj, int):
        return Rational(obj)
    if isinstance(obj, float):
        return FloatVal(obj, tol)
    if isinstance(obj, str):
        return Rational(Fraction(obj))
    if isinstance(obj, dict):
        return quadirr(Fraction(obj["a"]), Fraction(obj["b"]), int(obj["D"]))
    raise TypeError(f"cannot decode scalar from {obj!r}")


# -- expression parser for CLI flags ("1+sqrt(2)", "3/2", ...) -------------

_TOKEN = re.compile(r"\s*(sqrt|\d+\.\d+|\d+|[()+\-*/])")


def parse_scalar(text: str) -> Scalar:
    """Parse sums/products of rationals and sqrt(D) into the exact tower.

    Decimal literals are read as exact rationals (1.5 -> 3/2).
    """
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ValueError(f"bad scalar expression near {text[pos:]!r}")
            break
        tokens.append(m.group(1))
        pos = m.end()
    result, rest = _parse_expr(tokens)
    if rest:
        raise ValueError(f"trailing tokens in scalar expression: {rest}")
    return result


def _parse_expr(toks):
    value, toks = _parse_term(toks)
    while toks and toks[0] in "+-":
        op, (rhs, toks) = toks[0], _parse_term(toks[1:])
        value = value + rhs if op == "+" else value - rhs
    return value, toks


def _parse_term(toks):
    value, toks = _parse_factor(toks)
    while toks and toks[0] in "*/":
        op, (rhs, toks) = toks[0], _parse_factor(toks[1:])
        value = value * rhs if op == "*" else value / rhs
    return value, toks


def _parse_factor(toks):
    if not toks:
        raise ValueError("unexpected end of scalar expression")
    if toks[0] == "-":
        value, toks = _parse_factor(toks[1:])
        return -value, toks
    if toks[0] == "+":
        return _parse_factor(toks[1:])
    if toks[0] == "sqrt":
        if len(toks) < 3 or toks[1] != "(":
            raise ValueError("sqrt must be followed by (n)")
        inner, toks = _parse_expr(toks[2:])
        if not toks or toks[0] != ")":
            raise ValueError("unbalanced parentheses after sqrt")
        root = exact_sqrt(inner)
        if root is None:
            raise ValueError("sqrt argument has no exact root in the tower")
        return root, toks[1:]
    if toks[0] == "(":
        value, toks = _parse_expr(toks[1:])
        if not toks or toks[0] != ")":
            raise ValueError("unbalanced parentheses")
        return value, toks[1:]
    tok = toks[0]
    if "." in tok:
        return Rational(Fraction(tok)), toks[1:]
    if tok.isdigit():
        return Rational(int(tok)), toks[1:]
    raise ValueError(f"unexpected token {tok!r}")

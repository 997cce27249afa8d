"""Mutual position of the zero hypersurfaces of a form system.

Finds the common zero lines, checks transversality (normal span d-1) and
common tangency, and builds the adapted frame in which every form reads
q_j(y_2..y_d) + c_j * y_1 * y_2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import _linalg as la
from .exactnum import (
    FieldMismatchError,
    FloatVal,
    QuadIrr,
    Rational,
    Scalar,
    ZERO,
    ONE,
    _coerce,
    quadirr,
    _square_free_decompose,
)
from .forms import FormSystem, QuadraticForm, rank_signature

FLOAT_ZERO_TOL = 1e-9
DEDUP_ANGLE = 1e-6


class SingularZeroError(ValueError):
    """Some gradient vanishes at the claimed intersection point."""


class NotACommonZeroError(ValueError):
    pass


@dataclass
class IntersectionLine:
    """Direction of a line inside all zero hypersurfaces.

    Exact directions are scaled so the first nonzero coordinate is 1;
    float directions have unit Euclidean length and positive first
    nonzero coordinate.
    """

    direction: tuple
    residuals: tuple[float, ...]
    exact: bool

    def direction_floats(self) -> np.ndarray:
        return np.array([c.to_float() for c in self.direction], dtype=float)


@dataclass
class NonIsolated:
    """Marker: the common zero set is not finitely many transversal lines.

    Carries whatever lines were found before the detection fired, so
    downstream tangency analysis can still use them.
    """

    reason: str
    lines: list[IntersectionLine] = field(default_factory=list)


LineResult = Union[list[IntersectionLine], NonIsolated]


def _normalize_exact(v: Sequence[Scalar]) -> tuple:
    lead = next((c for c in v if c.sign() != 0), None)
    if lead is None:
        raise ValueError("zero vector is not a direction")
    return tuple(c / lead for c in v)


def _normalize_float(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    lead = next((x for x in v if abs(x) > FLOAT_ZERO_TOL), None)
    if lead is not None and lead < 0:
        v = -v
    return v


def _line_from_exact(S: FormSystem, v: Sequence[Scalar]) -> IntersectionLine:
    v = _normalize_exact(v)
    residuals = tuple(abs(Q.evaluate(v).to_float()) for Q in S.forms)
    return IntersectionLine(v, residuals, True)


def _line_from_float(S: FormSystem, v: np.ndarray) -> IntersectionLine:
    v = _normalize_float(v)
    grams = S.gram_floats()
    residuals = tuple(float(abs(v @ G @ v)) for G in grams)
    return IntersectionLine(tuple(FloatVal(x) for x in v), residuals, False)


# -- common zero lines -------------------------------------------------------

def common_zero_lines(S: FormSystem, seed: int = 0) -> LineResult:
    """All lines in the common zero set, or a NonIsolated marker.

    d = 3 exact systems go through resultant elimination with exact root
    recovery into the scalar tower; everything else uses seeded sphere
    sampling with Gauss-Newton refinement.  A Jacobian of rank < d-1 at
    any found zero triggers the NonIsolated marker.
    """
    if S.count == 1:
        p, n, z = rank_signature(S.forms[0])
        if p >= 1 and n >= 1 or z >= 1:
            return NonIsolated("zero set of a single form is a cone")
        return []
    if S.dim == 3 and S.is_exact:
        try:
            return _exact_lines_d3(S)
        except _ExactEliminationFailed:
            pass
    return _numeric_lines(S, seed)


class _ExactEliminationFailed(Exception):
    pass


def _sympy_scalar(s: Scalar):
    import sympy as sp

    if isinstance(s, Rational):
        return sp.Rational(s.value.numerator, s.value.denominator)
    if isinstance(s, QuadIrr):
        return (
            sp.Rational(s.a.numerator, s.a.denominator)
            + sp.Rational(s.b.numerator, s.b.denominator) * sp.sqrt(s.D)
        )
    raise _ExactEliminationFailed("non-exact scalar in exact path")


def _tower_from_sympy(expr) -> Optional[Scalar]:
    """Convert an exact sympy real number to the tower, or None."""
    import sympy as sp

    expr = sp.nsimplify(expr)
    if expr.is_rational:
        r = sp.Rational(expr)
        return Rational(Fraction(int(r.p), int(r.q)))
    try:
        t = sp.Symbol("_t")
        mp = sp.minimal_polynomial(expr, t)
        poly = sp.Poly(mp, t)
    except Exception:
        return None
    if poly.degree() == 1:
        c1, c0 = [Fraction(int(c.p), int(c.q)) for c in poly.all_coeffs()]
        return Rational(-c0 / c1)
    if poly.degree() != 2:
        return None
    c2, c1, c0 = [Fraction(int(sp.Rational(c).p), int(sp.Rational(c).q))
                  for c in poly.all_coeffs()]
    # root = (-c1 +- sqrt(c1^2 - 4 c0 c2)) / (2 c2)
    disc = c1 * c1 - 4 * c0 * c2
    if disc <= 0:
        return None
    m, sf = _square_free_decompose(disc.numerator * disc.denominator)
    if sf == 1:
        return None  # would be rational; handled above
    b = Fraction(m, disc.denominator)
    a = -c1 / (2 * c2)
    for sign in (1, -1):
        cand = quadirr(a, sign * b / (2 * c2), sf)
        if abs(cand.to_float() - float(expr.evalf(30))) < 1e-12 * (
            1 + abs(cand.to_float())
        ):
            return cand
    return None


def _exact_lines_d3(S: FormSystem) -> LineResult:
    import sympy as sp

    x0, x1, x2 = sp.symbols("x0 x1 x2")
    xs = (x0, x1, x2)

    def expr_of(Q: QuadraticForm):
        return sp.expand(
            sum(
                _sympy_scalar(Q.gram[i][j]) * xs[i] * xs[j]
                for i in range(3)
                for j in range(3)
            )
        )

    exprs = [expr_of(Q) for Q in S.forms]
    e1, e2 = exprs[0], exprs[1]
    try:
        res = sp.resultant(e1, e2, x2)
    except Exception as exc:  # pragma: no cover - sympy internals
        raise _ExactEliminationFailed(str(exc)) from exc
    res = sp.expand(res)
    if res == 0:
        return NonIsolated("forms share a component (resultant vanishes)")

    candidates = []  # sympy coordinate triples

    def z_candidates(a0, a1):
        p1 = sp.expand(e1.subs({x0: a0, x1: a1}))
        p2 = sp.expand(e2.subs({x0: a0, x1: a1}))
        if p1 == 0 and p2 == 0:
            return None  # a whole pencil of zeros over this ratio
        primary, other = (p1, p2) if p1 != 0 else (p2, p1)
        roots = sp.solve(sp.Eq(primary, 0), x2)
        out = []
        for z in roots:
            if not _looks_real(z):
                continue
            if other != 0 and not _vanishes(other.subs(x2, z)):
                continue
            out.append((a0, a1, z))
        return out

    s = sp.Symbol("s")
    runi = sp.expand(res.subs({x0: 1, x1: s}))
    if runi != 0:
        try:
            roots = sp.real_roots(sp.Poly(runi, s))
        except Exception as exc:
            raise _ExactEliminationFailed(str(exc)) from exc
        for root in roots:
            zs = z_candidates(sp.Integer(1), root)
            if zs is None:
                return NonIsolated("one-parameter family of common zeros")
            candidates.extend(zs)
    # ratio at infinity: lines with x0 = 0
    if sp.expand(res.subs({x0: 0, x1: 1})) == 0:
        zs = z_candidates(sp.Integer(0), sp.Integer(1))
        if zs is None:
            return NonIsolated("one-parameter family of common zeros")
        candidates.extend(zs)
    # the x2 axis itself
    if all(sp.expand(e.subs({x0: 0, x1: 0, x2: 1})) == 0 for e in exprs[:2]):
        candidates.append((sp.Integer(0), sp.Integer(0), sp.Integer(1)))

    lines: list[IntersectionLine] = []
    seen: list[np.ndarray] = []
    for cand in candidates:
        vals = [sp.expand(e.subs(dict(zip(xs, cand)))) for e in exprs]
        if not all(_vanishes(v) for v in vals):
            continue
        fv = np.array([float(sp.re(c).evalf(30)) for c in cand], dtype=float)
        if np.linalg.norm(fv) < 1e-14:
            continue
        fv = _normalize_float(fv)
        if any(
            min(np.linalg.norm(fv - w), np.linalg.norm(fv + w)) < DEDUP_ANGLE
            for w in seen
        ):
            continue
        seen.append(fv)
        tower = [_tower_from_sympy(c) for c in cand]
        if all(t is not None for t in tower) and _single_field(tower):
            try:
                lines.append(_line_from_exact(S, tower))
                continue
            except FieldMismatchError:
                pass
        lines.append(_line_from_float(S, fv))

    lines.sort(key=lambda l: tuple(l.direction_floats()))
    for line in lines:
        if _jacobian_rank(S, line) < S.dim - 1:
            return NonIsolated("Jacobian rank below d-1 at a found zero", lines)
    return lines


def _looks_real(expr) -> bool:
    import sympy as sp

    if expr.is_real:
        return True
    if expr.is_real is False:
        return False
    return abs(complex(expr.evalf(30)).imag) < 1e-25


def _vanishes(expr) -> bool:
    import sympy as sp

    expr = sp.expand(sp.nsimplify(expr))
    if expr == 0:
        return True
    simplified = sp.simplify(expr)
    if simplified == 0:
        return True
    return abs(complex(sp.N(simplified, 40))) < 1e-30


def _single_field(scalars: list[Scalar]) -> bool:
    ds = {s.D for s in scalars if isinstance(s, QuadIrr)}
    return len(ds) <= 1


def _jacobian_rank(S: FormSystem, line: IntersectionLine) -> int:
    if line.exact:
        try:
            rows = tuple(Q.gradient(line.direction) for Q in S.forms)
            return la.rank(rows)
        except FieldMismatchError:
            pass
    v = line.direction_floats()
    J = np.array([2.0 * G @ v for G in S.gram_floats()])
    return _float_rank(J)


def _float_rank(A: np.ndarray) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    if len(s) == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > 1e-9 * s[0]))


def _numeric_lines(S: FormSystem, seed: int) -> LineResult:
    d = S.dim
    grams = S.gram_floats()
    n_seeds = 10_000 if d <= 4 else 100_000
    rng = np.random.default_rng(seed)
    seeds = rng.normal(size=(n_seeds, d))
    seeds /= np.linalg.norm(seeds, axis=1, keepdims=True)

    found: list[np.ndarray] = []
    for x in seeds:
        x = _refine_zero(grams, x)
        if x is None:
            continue
        x = _normalize_float(x)
        if any(
            min(np.linalg.norm(x - w), np.linalg.norm(x + w)) < DEDUP_ANGLE
            for w in found
        ):
            continue
        found.append(x)

    found.sort(key=tuple)
    lines = [_line_from_float(S, v) for v in found]
    for line in lines:
        if _jacobian_rank(S, line) < d - 1:
            return NonIsolated("Jacobian rank below d-1 at a found zero", lines)
    return lines


def _refine_zero(grams, x, max_iter: int = 50) -> Optional[np.ndarray]:
    """Gauss-Newton on F(x) = (Q_j(x)) constrained to the unit sphere."""
    for _ in range(max_iter):
        F = np.array([x @ G @ x for G in grams])
        if np.max(np.abs(F)) < 1e-15:
            break
        J = np.array([2.0 * G @ x for G in grams])
        A = np.vstack([J, x[None, :]])
        b = np.concatenate([-F, [0.0]])
        step, *_ = np.linalg.lstsq(A, b, rcond=None)
        x = x + step
        nrm = np.linalg.norm(x)
        if nrm < 1e-12:
            return None
        x = x / nrm
        if np.linalg.norm(step) < 1e-14:
            break
    F = np.array([x @ G @ x for G in grams])
    if np.max(np.abs(F)) < FLOAT_ZERO_TOL:
        return x
    return None


# -- transversality / tangency -----------------------------------------------

def _check_common_zero(S: FormSystem, v: la.Vector):
    for j, Q in enumerate(S.forms):
        val = Q.evaluate(v)
        ok = val.sign() == 0 if val.is_exact else abs(val.to_float()) <= FLOAT_ZERO_TOL
        if not ok:
            raise NotACommonZeroError(
                f"Q_{j + 1} does not vanish at the given point (value {val})"
            )


def normal_span_dimension(S: FormSystem, v: Sequence) -> int:
    """Rank of the span of the gradients of all forms at a common zero v."""
    v = la.as_vector(v)
    if all(c.sign() == 0 for c in v):
        raise ValueError("need a nonzero point")
    _check_common_zero(S, v)
    if all(c.is_exact for c in v) and S.is_exact:
        try:
            return la.rank(tuple(Q.gradient(v) for Q in S.forms))
        except FieldMismatchError:
            pass
    vf = np.array([c.to_float() for c in v])
    J = np.array([2.0 * G @ vf for G in S.gram_floats()])
    return _float_rank(J)


def common_tangent_check(S: FormSystem, v: Sequence) -> bool:
    """True iff all gradients at the common zero v are pairwise parallel."""
    v = la.as_vector(v)
    _check_common_zero(S, v)
    grads = [Q.gradient(v) for Q in S.forms]
    for j, g in enumerate(grads):
        if all(
            c.sign() == 0 if c.is_exact else abs(c.to_float()) <= FLOAT_ZERO_TOL
            for c in g
        ):
            raise SingularZeroError(f"gradient of Q_{j + 1} vanishes at the point")
    g1 = grads[0]
    d = S.dim
    for g in grads[1:]:
        for a in range(d):
            for b in range(a + 1, d):
                minor = g1[a] * g[b] - g1[b] * g[a]
                ok = (
                    minor.sign() == 0
                    if minor.is_exact
                    else abs(minor.to_float()) <= FLOAT_ZERO_TOL
                )
                if not ok:
                    return False
    return True


@dataclass
class TangencyFrame:
    """Basis f_1..f_d adapted to a common tangency.

    Columns of `basis` are the frame vectors: f_1 on every hypersurface,
    f_2 off the common tangent plane, f_3..f_d inside it.  In frame
    coordinates y the decomposition Q_j(y) = q_j(y_2..y_d) + c_j y_1 y_2
    holds identically; the common tangent linear form is l(y) = y_2.
    `linear_coordinates` holds the coordinate functionals L_1..L_d (the
    rows of basis^-1).
    """

    basis: la.Matrix
    coefficients: list[Scalar]  # c_j per form
    residual_grams: list[la.Matrix]  # gram of q_j in variables y_2..y_d
    linear_coordinates: la.Matrix
    exact: bool
    tangent_form: tuple = ()  # coefficients of l in frame coordinates

    def basis_floats(self) -> np.ndarray:
        return np.array(la.to_floats(self.basis), dtype=float)

    def coordinates_floats(self) -> np.ndarray:
        return np.array(la.to_floats(self.linear_coordinates), dtype=float)


def build_tangency_frame(S: FormSystem, v: Sequence) -> TangencyFrame:
    """Adapted frame at a point of common tangency (exact when inputs are)."""
    v = la.as_vector(v)
    if not common_tangent_check(S, v):
        raise ValueError("hypersurfaces have no common tangent plane at the point")
    g1 = S.forms[0].gradient(v)
    d = S.dim

    # f_2: standard basis vector with the largest |gradient| component
    best, i2 = None, 0
    for i, c in enumerate(g1):
        mag = abs(c)
        if best is None or mag > best:
            best, i2 = mag, i
    f2 = tuple(ONE if i == i2 else ZERO for i in range(d))

    # tangent plane = kernel of the gradient row; it contains v (Euler)
    tangent = la.kernel_basis((g1,))
    chosen = [v]
    rows = [v]
    for w in tangent:
        if la.rank(tuple(rows + [w])) > len(rows):
            rows.append(w)
            chosen.append(w)
        if len(chosen) == d - 1:
            break
    if len(chosen) != d - 1:
        raise ValueError("could not complete a basis of the tangent plane")

    cols = [v, f2] + chosen[1:]
    B = la.transpose(tuple(cols))
    if la.det(B).sign() == 0:
        raise ValueError("frame is singular")

    coeffs = []
    residual_grams = []
    for j, Q in enumerate(S.forms):
        T = la.mat_mul(la.transpose(B), la.mat_mul(Q.gram, B))
        c_j = T[0][1] + T[0][1]
        if not _is_zero(T[0][0]) or any(not _is_zero(T[0][k]) for k in range(2, d)):
            raise ValueError(
                f"decomposition failed for Q_{j + 1}: f_1 block not reduced"
            )
        if _is_zero(c_j):
            raise ValueError(f"tangency coefficient c_{j + 1} vanishes")
        coeffs.append(c_j)
        q = tuple(tuple(T[r][c] for c in range(1, d)) for r in range(1, d))
        residual_grams.append(q)

    L = la.invert(B)
    exact = S.is_exact and all(c.is_exact for c in v)
    l_coeffs = tuple(ONE if i == 1 else ZERO for i in range(d))
    return TangencyFrame(B, coeffs, residual_grams, L, exact, l_coeffs)


def _is_zero(x: Scalar) -> bool:
    return x.sign() == 0 if x.is_exact else abs(x.to_float()) <= FLOAT_ZERO_TOL

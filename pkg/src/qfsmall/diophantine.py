"""Continued fractions, approximation records, and projection quantities.

Expansions of exact scalars are computed exactly (with period detection for
quadratic irrationals); approximation errors use the sup norm, projection
quantities the Euclidean norm.  All "well/badly approximable" verdicts are
finite-horizon reports, never absolute claims.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .exactnum import (
    FloatVal,
    QuadIrr,
    Rational,
    Scalar,
    ZERO,
    _coerce,
)

DIRECT_SCAN_CAP = 100_000
EPS_GRID = [Fraction(1, 2**k) for k in range(1, 41)]


@dataclass
class ContinuedFractionExpansion:
    """Partial quotients a_0, a_1, ... with convergents p_k/q_k.

    exact_periodic is (preperiod, period) when the input was a quadratic
    irrational and the expansion's complete quotients started repeating.
    For synthesized quotient lists, `alpha` is the exact rational value of
    the finite expansion.
    """

    quotients: list[int]
    convergents: list[tuple[int, int]]
    exact_periodic: Optional[tuple[int, int]]
    terminated: bool
    alpha: Optional[Scalar] = None

    def __post_init__(self):
        if any(a < 1 for a in self.quotients[1:]):
            raise ValueError("partial quotients a_k must be >= 1 for k >= 1")


def _convergents(quotients: Sequence[int]) -> list[tuple[int, int]]:
    ps, qs = [0, 1], [1, 0]
    out = []
    for a in quotients:
        ps.append(a * ps[-1] + ps[-2])
        qs.append(a * qs[-1] + qs[-2])
        out.append((ps[-1], qs[-1]))
    return out


def continued_fraction(alpha: Scalar, n: int) -> ContinuedFractionExpansion:
    """First n partial quotients of an exact scalar, computed exactly.

    Rational input terminates; QuadIrr input reports the detected period
    of its complete quotients.
    """
    alpha = _coerce(alpha)
    if not alpha.is_exact:
        raise ValueError("continued fractions need an exact scalar")
    if n < 1:
        raise ValueError("need n >= 1")

    quotients: list[int] = []
    state = alpha
    seen: dict[Scalar, int] = {}
    periodic = None
    terminated = False
    cycle_start = None
    while len(quotients) < n:
        if isinstance(state, QuadIrr):
            if state in seen:
                periodic = (seen[state], len(quotients) - seen[state])
                cycle_start = seen[state]
                break
            seen[state] = len(quotients)
        a = state.floor()
        quotients.append(a)
        frac = state - a
        if frac.sign() == 0:
            terminated = True
            break
        state = Rational(1) / frac

    if periodic is not None:
        pre, per = periodic
        cycle = quotients[cycle_start : cycle_start + per]
        while len(quotients) < n:
            quotients.append(cycle[(len(quotients) - pre) % per])

    return ContinuedFractionExpansion(
        quotients, _convergents(quotients), periodic, terminated, alpha
    )


def from_quotients(quotients: Sequence[int]) -> ContinuedFractionExpansion:
    """Synthesize an expansion from a quotient list.

    The value attached is the exact rational of the finite expansion: any
    real number extending the list agrees with it through these
    convergents.
    """
    quotients = list(quotients)
    conv = _convergents(quotients)
    p, q = conv[-1]
    return ContinuedFractionExpansion(quotients, conv, None, False, Rational(p, q))


# -- badly approximable witness ----------------------------------------------

@dataclass
class ApproximabilityWitness:
    max_quotient: int
    c_lower: float
    c_lower_exact: Optional[Scalar]
    verdict: str  # bounded-to-depth | unbounded-detected | rational
    depth: int


def badly_approximable_witness(
    alpha: Union[Scalar, ContinuedFractionExpansion], depth: int = 50
) -> ApproximabilityWitness:
    """Finite-depth evidence for bounded partial quotients.

    c_lower is a true lower bound on q_k|q_k a - p_k| over the computed
    convergents: exact when the value is known exactly, a tail-interval
    bound when only the quotient prefix is given.  `bounded-to-depth` is a
    semi-decision; `unbounded-detected` fires on sustained growth of the
    running maximum (new maximum in the tail after at least doubling).
    """
    if depth < 2:
        raise ValueError("need depth >= 2")
    if isinstance(alpha, ContinuedFractionExpansion):
        cf = alpha
    else:
        cf = continued_fraction(alpha, depth)

    tail_quotients = cf.quotients[1:]
    max_q = max(tail_quotients) if tail_quotients else 0

    if cf.terminated:
        return ApproximabilityWitness(max_q, 0.0, ZERO, "rational", len(cf.quotients))

    exact_value = cf.alpha if (cf.alpha is not None and cf.exact_periodic is not None) else None
    if isinstance(alpha, Scalar):
        exact_value = alpha

    c_exact: Optional[Scalar] = None
    if exact_value is not None and exact_value.is_exact and not isinstance(exact_value, Rational):
        best = None
        for p, q in cf.convergents:
            err = abs(exact_value * q - p)
            val = err * q
            if best is None or val < best:
                best = val
        c_exact = best
        c_float = best.to_float()
    else:
        # interval bound valid for every real with this quotient prefix:
        # q_k |q_k a - p_k| > q_k / ((a_{k+1} + 1) q_k + q_{k-1})
        best = None
        for k in range(len(cf.quotients) - 1):
            qk = cf.convergents[k][1]
            qk1 = cf.convergents[k - 1][1] if k >= 1 else 0
            bound = Fraction(qk, (cf.quotients[k + 1] + 1) * qk + qk1)
            if best is None or bound < best:
                best = bound
        c_exact = Rational(best) if best is not None else None
        c_float = float(best) if best is not None else 0.0

    verdict = "bounded-to-depth"
    if len(tail_quotients) >= 4:
        half = tail_quotients[: len(tail_quotients) // 2]
        arg_max = max(range(len(tail_quotients)), key=lambda i: tail_quotients[i])
        if max_q >= 2 * max(half) and arg_max >= len(tail_quotients) // 2:
            verdict = "unbounded-detected"

    return ApproximabilityWitness(max_q, c_float, c_exact, verdict, len(cf.quotients))


# -- well approximable records -----------------------------------------------

@dataclass
class ApproximationRecord:
    """One simultaneous-approximation witness (q, p) with its quality.

    err is the sup norm of q*alpha - p over coordinates; quality = q**r * err.
    """

    q: int
    p: tuple[int, ...]
    err: float
    quality: float
    r: float
    err_exact: Optional[Scalar] = None
    quality_exact: Optional[Scalar] = None


def _nearest_int(x: Scalar) -> int:
    if isinstance(x, FloatVal):
        return round(x.value)
    return (x + Rational(1, 2)).floor()


def _record_for_q(alphas: list[Scalar], q: int, r: float) -> ApproximationRecord:
    exact = all(a.is_exact for a in alphas)
    ps, errs = [], []
    for a in alphas:
        qa = a * q
        p = _nearest_int(qa)
        ps.append(p)
        errs.append(abs(qa - p))
    err = errs[0]
    for e in errs[1:]:
        if e > err:
            err = e
    err_f = err.to_float()
    if not exact:
        return ApproximationRecord(q, tuple(ps), err_f, q**r * err_f, r)
    if float(int(r)) == r:
        quality_exact = err * (q ** int(r))
        quality_f = quality_exact.to_float()
    else:
        quality_exact = None
        quality_f = math.exp(r * math.log(q)) * err_f if q > 1 else err_f
    return ApproximationRecord(q, tuple(ps), err_f, quality_f, r, err, quality_exact)


def _beats(rec: ApproximationRecord, prev: ApproximationRecord) -> bool:
    if rec.quality_exact is not None and prev.quality_exact is not None:
        return rec.quality_exact < prev.quality_exact
    return rec.quality < prev.quality


def _is_exact_hit(rec: ApproximationRecord) -> bool:
    if rec.err_exact is not None:
        return rec.err_exact.sign() == 0
    return rec.err == 0.0


def well_approximable_records(
    alphas: Sequence,
    r: float = 1.0,
    q_max: int = 10**6,
    expansion: Optional[ContinuedFractionExpansion] = None,
) -> list[ApproximationRecord]:
    """Decreasing-quality record subsequence of q**r * ||q a - p||, q <= q_max.

    One coordinate: candidates are the convergent denominators (optimal by
    the classical best-approximation property); `expansion` can supply a
    synthesized quotient list.  Several coordinates: candidates from a
    lattice-reduction scan over a geometric epsilon grid merged with a
    direct scan of small q.
    """
    if r <= 0 or q_max < 1:
        raise ValueError("need r > 0 and q_max >= 1")
    alphas = [_coerce(a) for a in alphas]
    if not alphas:
        raise ValueError("need at least one coordinate")

    if len(alphas) == 1:
        qs = _candidate_qs_single(alphas[0], q_max, expansion)
    else:
        qs = _candidate_qs_multi(alphas, q_max)

    records: list[ApproximationRecord] = []
    for q in sorted(set(qs)):
        if q < 1 or q > q_max:
            continue
        rec = _record_for_q(alphas, q, r)
        if not records or _beats(rec, records[-1]):
            records.append(rec)
            if _is_exact_hit(rec):
                break  # exact hit: no further record possible
    return records


def _candidate_qs_single(alpha, q_max, expansion):
    if expansion is None:
        if not alpha.is_exact:
            expansion = _float_expansion(alpha.to_float(), q_max)
        else:
            depth = 8
            while True:
                expansion = continued_fraction(alpha, depth)
                if expansion.terminated or expansion.convergents[-1][1] > q_max:
                    break
                depth *= 2
    return [q for _, q in expansion.convergents]


def _float_expansion(x: float, q_max: int) -> ContinuedFractionExpansion:
    quotients = []
    state = x
    for _ in range(64):
        a = math.floor(state)
        quotients.append(a)
        frac = state - a
        conv = _convergents(quotients)
        if frac < 1e-12 or conv[-1][1] > q_max:
            break
        state = 1.0 / frac
    return ContinuedFractionExpansion(quotients, _convergents(quotients), None, False)


def _candidate_qs_multi(alphas, q_max):
    from .dynamics import lll_reduce

    k = len(alphas)
    af = np.array([a.to_float() for a in alphas])

    # direct scan of small q: keep only the float-quality record prefix
    cap = min(q_max, DIRECT_SCAN_CAP)
    q_arr = np.arange(1, cap + 1, dtype=float)
    E = q_arr[:, None] * af[None, :]
    err = np.max(np.abs(E - np.round(E)), axis=1)
    quality = q_arr * err
    running = np.minimum.accumulate(quality)
    is_record = quality <= running
    qs = [int(q) for q in q_arr[is_record]]

    # lattice-reduction candidates over the epsilon grid
    for eps in EPS_GRID:
        B = np.zeros((k + 1, k + 1))
        B[0, 0] = float(eps)
        B[1:, 0] = af
        B[1:, 1:] = -np.eye(k)
        try:
            _, U = lll_reduce(B)
        except Exception:
            continue
        for col in range(k + 1):
            q = abs(int(U[0, col]))
            if 1 <= q <= q_max:
                qs.append(q)
    return qs


# -- ratio vectors and projections --------------------------------------------

def ratio_vector(v: Sequence, j: int) -> tuple[Scalar, ...]:
    """(v_i / v_j : i != j), order preserved, exact division."""
    v = [_coerce(c) for c in v]
    if not 0 <= j < len(v):
        raise IndexError("index out of range")
    if v[j].sign() == 0:
        raise ZeroDivisionError("reference coordinate v_j is zero")
    return tuple(c / v[j] for i, c in enumerate(v) if i != j)


@dataclass
class ProjectionSplit:
    """Euclidean split of x along the direction v.

    par = ||pi(x)||, perp = ||x - pi(x)||; squares carried exactly when
    the inputs allow, so tiny perpendicular parts of huge vectors do not
    drown in float cancellation.
    """

    par: float
    perp: float
    product: float
    par_sq: Optional[Scalar] = None
    perp_sq: Optional[Scalar] = None


def projection_criterion(v: Sequence, x: Sequence) -> ProjectionSplit:
    v = [_coerce(c) for c in v]
    x = [_coerce(c) for c in x]
    if len(v) != len(x):
        raise ValueError("dimension mismatch")
    if all(c.sign() == 0 for c in v):
        raise ValueError("projection direction must be nonzero")
    exact = all(c.is_exact for c in v + x)
    if exact:
        try:
            vv = sum((c * c for c in v), ZERO)
            xv = sum((a * b for a, b in zip(x, v)), ZERO)
            xx = sum((c * c for c in x), ZERO)
            par_sq = xv * xv / vv
            perp_sq = xx - par_sq
            par = math.sqrt(max(par_sq.to_float(), 0.0))
            perp = math.sqrt(max(perp_sq.to_float(), 0.0))
            return ProjectionSplit(par, perp, par * perp, par_sq, perp_sq)
        except Exception:
            pass
    vf = np.array([c.to_float() for c in v])
    xf = np.array([c.to_float() for c in x])
    par_vec = (xf @ vf) / (vf @ vf) * vf
    par = float(np.linalg.norm(par_vec))
    perp = float(np.linalg.norm(xf - par_vec))
    return ProjectionSplit(par, perp, par * perp)


def sequence_from_approximations(
    alphas: Sequence, records: Sequence[ApproximationRecord], position: int = 0
) -> list[tuple[int, ...]]:
    """Integer vectors (q at `position`, approximants p elsewhere).

    With position 0 this is the arrangement x_1 = q, x_{i+1} = p_i, so the
    linear forms alpha_i x_1 - x_{i+1} evaluate to q alpha_i - p_i.
    """
    k = len(alphas)
    if not records:
        raise ValueError("need at least one record")
    out = []
    for rec in records:
        if len(rec.p) != k:
            raise ValueError("record arity does not match alphas")
        x = list(rec.p)
        x.insert(position, rec.q)
        out.append(tuple(x))
    return out

"""Quadratic-form algebra: evaluation, signatures, radicals, pencils.

Exact inputs (Rational / QuadIrr grams) get exact answers via symmetric
Gaussian elimination; float inputs are classified with relative thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

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
    decode_scalar,
    encode_scalar,
    exact_sqrt,
)

RANK_REL_TOL = 1e-9  # float-mode singular value / eigenvalue cutoff


class QuadraticForm:
    """Symmetric Gram matrix with Q(x) = x^T gram x."""

    def __init__(self, gram: Sequence[Sequence]):
        G = la.as_matrix(gram)
        n = len(G)
        if n < 1 or any(len(row) != n for row in G):
            raise ValueError("gram matrix must be square")
        for i in range(n):
            for j in range(i + 1, n):
                if not (G[i][j] == G[j][i]):
                    raise ValueError(f"gram matrix not symmetric at ({i},{j})")
        self.gram = G
        self.dim = n

    @classmethod
    def diagonal(cls, *entries) -> "QuadraticForm":
        n = len(entries)
        return cls(
            [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)]
        )

    @property
    def is_exact(self) -> bool:
        return all(x.is_exact for row in self.gram for x in row)

    def evaluate(self, x: Sequence) -> Scalar:
        v = la.as_vector(x)
        if len(v) != self.dim:
            raise ValueError(f"expected vector of length {self.dim}, got {len(v)}")
        return la.dot(v, la.mat_vec(self.gram, v))

    def polar(self, u: Sequence, v: Sequence) -> Scalar:
        """Symmetric bilinear form B(u, v) = u^T gram v, with B(x, x) = Q(x)."""
        return la.dot(la.as_vector(u), la.mat_vec(self.gram, la.as_vector(v)))

    def gradient(self, v: Sequence) -> la.Vector:
        return tuple(x + x for x in la.mat_vec(self.gram, la.as_vector(v)))

    def transformed(self, g: la.Matrix) -> "QuadraticForm":
        """Gram of x -> Q(g x), i.e. g^T gram g."""
        return QuadraticForm(la.mat_mul(la.transpose(g), la.mat_mul(self.gram, g)))

    def gram_float(self) -> np.ndarray:
        return np.array(la.to_floats(self.gram), dtype=float)

    def __repr__(self):
        return f"QuadraticForm(dim={self.dim})"


def evaluate(Q: QuadraticForm, x: Sequence) -> Scalar:
    return Q.evaluate(x)


class FormSystem:
    """Ordered system (Q_1, ..., Q_t) of forms sharing one dimension."""

    def __init__(self, forms: Sequence[QuadraticForm]):
        forms = list(forms)
        if not forms:
            raise ValueError("form system needs at least one form")
        d = forms[0].dim
        if any(Q.dim != d for Q in forms):
            raise ValueError("all forms must share the same dimension")
        self.forms = forms
        self.dim = d
        self.count = len(forms)

    @property
    def is_exact(self) -> bool:
        return all(Q.is_exact for Q in self.forms)

    def evaluate_max(self, x: Sequence) -> Scalar:
        """max_j |Q_j(x)|; exact comparisons for exact systems."""
        vals = [abs(Q.evaluate(x)) for Q in self.forms]
        best = vals[0]
        for v in vals[1:]:
            if v > best:
                best = v
        return best

    def transformed(self, g) -> "FormSystem":
        G = la.as_matrix(g)
        return FormSystem([Q.transformed(G) for Q in self.forms])

    def gram_floats(self) -> list[np.ndarray]:
        return [Q.gram_float() for Q in self.forms]

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "forms": [
                {"gram": [[encode_scalar(x) for x in row] for row in Q.gram]}
                for Q in self.forms
            ],
        }

    @classmethod
    def from_json(cls, obj: dict, tol: float = 1e-9) -> "FormSystem":
        forms = [
            QuadraticForm(
                [[decode_scalar(x, tol) for x in row] for row in spec["gram"]]
            )
            for spec in obj["forms"]
        ]
        system = cls(forms)
        if system.dim != int(obj["dim"]):
            raise ValueError("declared dim does not match gram size")
        return system

    def __repr__(self):
        return f"FormSystem(t={self.count}, dim={self.dim})"


# -- rank / signature ------------------------------------------------------

def rank_signature(Q: QuadraticForm) -> tuple[int, int, int]:
    """(positive index, negative index, nullity) of a congruence diagonal.

    Exact over exact scalars; float grams fall back to eigenvalues with a
    relative cutoff of RANK_REL_TOL times the largest magnitude.
    """
    if Q.is_exact:
        try:
            _, diag = la.congruence_diagonalize(Q.gram)
            signs = [x.sign() for x in diag]
            return signs.count(1), signs.count(-1), signs.count(0)
        except FieldMismatchError:
            pass
    return _float_signature(Q.gram_float())


def _float_signature(G: np.ndarray) -> tuple[int, int, int]:
    eig = np.linalg.eigvalsh(G)
    cutoff = RANK_REL_TOL * max(1.0, float(np.max(np.abs(eig))) if len(eig) else 0.0)
    p = int(np.sum(eig > cutoff))
    n = int(np.sum(eig < -cutoff))
    return p, n, len(eig) - p - n


def is_nondegenerate(Q: QuadraticForm) -> bool:
    return rank_signature(Q)[2] == 0


def is_indefinite(Q: QuadraticForm) -> bool:
    p, n, _ = rank_signature(Q)
    return p >= 1 and n >= 1


def radical(Q: QuadraticForm) -> list[la.Vector]:
    """Basis of Rad(Q), the kernel of the Gram matrix; [] iff nondegenerate."""
    if Q.is_exact:
        try:
            return la.kernel_basis(Q.gram)
        except FieldMismatchError:
            pass
    G = Q.gram_float()
    _, s, vh = np.linalg.svd(G)
    cutoff = RANK_REL_TOL * (s[0] if len(s) and s[0] > 0 else 1.0)
    null = [vh[i] for i in range(len(s)) if s[i] <= cutoff]
    return [tuple(FloatVal(x) for x in v) for v in null]


# -- pencil radical (Theorem-1.4-style data) --------------------------------

@dataclass
class PencilRadical:
    """V = intersection of radicals of Q_j - beta_j Q_1 over j >= 2."""

    betas: tuple[Scalar, ...]
    basis: list[la.Vector]
    dim_v: int
    restricted_gram: la.Matrix  # Gram of Q_1 restricted to V (in V coordinates)
    restricted_class: str  # nondegenerate | degenerate-nonzero | zero
    isotropic_witness: Optional[la.Vector]
    witness_is_exact: bool


def pencil_radical_intersection(S: FormSystem, betas: Sequence) -> PencilRadical:
    if S.count < 2:
        raise ValueError("pencil radical needs at least two forms")
    betas = tuple(_coerce(b) for b in betas)
    if len(betas) != S.count - 1:
        raise ValueError(f"expected {S.count - 1} betas, got {len(betas)}")

    G1 = S.forms[0].gram
    stacked_rows = []
    for j, beta in enumerate(betas, start=1):
        Gj = S.forms[j].gram
        diff = tuple(
            tuple(Gj[r][c] - beta * G1[r][c] for c in range(S.dim))
            for r in range(S.dim)
        )
        stacked_rows.extend(diff)
    V = la.kernel_basis(tuple(stacked_rows))
    k = len(V)
    if k == 0:
        return PencilRadical(betas, [], 0, (), "zero", None, True)

    B = la.transpose(tuple(V))  # d x k, columns span V
    restricted = la.mat_mul(la.transpose(B), la.mat_mul(G1, B))
    p, n, z = rank_signature(QuadraticForm(restricted))
    if p + n == 0:
        cls = "zero"
    elif z == 0:
        cls = "nondegenerate"
    else:
        cls = "degenerate-nonzero"

    witness, exact = _isotropic_in_subspace(restricted, V, p, n, z)
    return PencilRadical(betas, V, k, restricted, cls, witness, exact)


def _isotropic_in_subspace(restricted, V, p, n, z):
    """Nonzero v in span(V) with (Q_1)(v) = 0, exact when the tower allows."""
    k = len(V)

    def ambient(coeffs):
        out = [ZERO] * len(V[0])
        for c, vec in zip(coeffs, V):
            out = [o + c * x for o, x in zip(out, vec)]
        return tuple(out)

    if z > 0 or p + n == 0:
        # the restricted radical itself is isotropic
        try:
            P, diag = la.congruence_diagonalize(restricted)
            for i, dv in enumerate(diag):
                if dv.sign() == 0:
                    col = tuple(P[r][i] for r in range(k))
                    return ambient(col), True
        except FieldMismatchError:
            pass
    if p >= 1 and n >= 1:
        try:
            P, diag = la.congruence_diagonalize(restricted)
            ip = next(i for i, dv in enumerate(diag) if dv.sign() > 0)
            im = next(i for i, dv in enumerate(diag) if dv.sign() < 0)
            ratio = -diag[im] / diag[ip]
            r = exact_sqrt(ratio)
            if r is not None:
                coeffs = [
                    r * P[row][ip] + P[row][im] for row in range(k)
                ]
                return ambient(coeffs), True
        except FieldMismatchError:
            pass
        # outside the tower: float witness, flagged approximate
        Gf = np.array(la.to_floats(restricted), dtype=float)
        eig, vecs = np.linalg.eigh(Gf)
        vmax, vmin = vecs[:, -1], vecs[:, 0]
        w = math.sqrt(-eig[0]) * vmax + math.sqrt(eig[-1]) * vmin
        coeffs = [FloatVal(x) for x in w]
        return ambient(coeffs), False
    if p == 0 and n == 0:
        # zero form: any basis vector works
        return V[0], True
    return None, True  # definite restriction: provably no isotropic vector


# -- definiteness of combinations -------------------------------------------

def combination_definiteness(S: FormSystem, alphas: Sequence) -> tuple[str, int]:
    """Classify sum_j alpha_j Q_j; rank is positive+negative index."""
    alphas = [_coerce(a) for a in alphas]
    if len(alphas) != S.count:
        raise ValueError(f"expected {S.count} coefficients, got {len(alphas)}")
    d = S.dim
    G = tuple(
        tuple(
            sum((a * Q.gram[r][c] for a, Q in zip(alphas, S.forms)), ZERO)
            for c in range(d)
        )
        for r in range(d)
    )
    p, n, _ = rank_signature(QuadraticForm(G))
    rank = p + n
    if rank == 0:
        return "zero", 0
    if n == 0:
        return "pos-definite-on-support", rank
    if p == 0:
        return "neg-definite-on-support", rank
    return "indefinite", rank


# -- Finsler pencil scan -----------------------------------------------------

@dataclass
class FinslerResult:
    kind: str  # all-nonzero-combinations-indefinite | definite-combination-found | inconclusive
    alpha: Optional[Scalar] = None
    beta: Optional[Scalar] = None
    inconclusive_at: Optional[tuple[float, float]] = None
    rays_checked: int = 0


def _pencil_signature(G1, G2, alpha: Scalar, beta: Scalar, exact: bool):
    d = len(G1)
    rows = tuple(
        tuple(alpha * G1[r][c] + beta * G2[r][c] for c in range(d)) for r in range(d)
    )
    return rank_signature(QuadraticForm(rows))


def finsler_pencil_check(
    Q1: QuadraticForm,
    Q2: QuadraticForm,
    initial_angles: int = 720,
    refine_levels: int = 6,
) -> FinslerResult:
    """Scan the pencil alpha*Q1 + beta*Q2 over rays of the projective line.

    Grid points are rational (alpha, beta) pairs from the two charts
    (1, u), u in [-1, 1] and (u, 1), u in (-1, 1), so exact grams are
    classified exactly.  Adjacent rays with different signatures are
    refined by mediants; a combination that looks semidefinite at the
    finest level yields an inconclusive verdict rather than a guess.
    """
    if Q1.dim != Q2.dim:
        raise ValueError("pencil forms must share a dimension")
    if Q1.dim < 3:
        raise ValueError("Finsler criterion requires dimension >= 3")
    G1, G2 = Q1.gram, Q2.gram
    exact = Q1.is_exact and Q2.is_exact

    half = max(4, initial_angles // 2)
    rays: list[tuple[Scalar, Scalar]] = []
    for i in range(half + 1):  # chart (1, u), u in [-1, 1]
        u = Rational(Fraction(2 * i, half) - 1)
        rays.append((ONE, u))
    for i in range(1, half):  # chart (u, 1), u in (-1, 1), descending angle-wise
        u = Rational(1 - Fraction(2 * i, half))
        rays.append((u, ONE))

    def angle(ray):
        return math.atan2(ray[1].to_float(), ray[0].to_float())

    rays.sort(key=angle)
    sigs = []
    checked = 0
    for a, b in rays:
        sig = _pencil_signature(G1, G2, a, b, exact)
        checked += 1
        verdict = _classify_signature(sig, Q1.dim)
        if verdict == "definite":
            return FinslerResult("definite-combination-found", a, b, rays_checked=checked)
        if verdict == "semidefinite":
            return FinslerResult(
                "inconclusive", a, b, inconclusive_at=(a.to_float(), b.to_float()),
                rays_checked=checked,
            )
        sigs.append(sig)

    # refine boundaries where the signature changes (wrap: first vs last ray
    # are adjacent modulo sign)
    pending = []
    for i in range(len(rays)):
        j = (i + 1) % len(rays)
        left, right = rays[i], rays[j]
        sl, sr = sigs[i], sigs[j]
        if j == 0:  # wrap-around compares against the negated first ray
            sr = (sr[1], sr[0], sr[2])
            right = (-right[0], -right[1])
        if (sl[0], sl[1]) != (sr[0], sr[1]):
            pending.append((left, sl, right, sr, 0))

    while pending:
        left, sl, right, sr, level = pending.pop()
        if level >= refine_levels:
            if min(sl[0], sr[0]) >= 1 and min(sl[1], sr[1]) >= 1:
                continue  # crossing stays indefinite
            res = _inspect_crossing(G1, G2, left, right)
            if res is not None:
                return res
            continue
        mid = (left[0] + right[0], left[1] + right[1])  # mediant ray
        sig = _pencil_signature(G1, G2, mid[0], mid[1], exact)
        checked += 1
        verdict = _classify_signature(sig, Q1.dim)
        if verdict == "definite":
            return FinslerResult(
                "definite-combination-found", mid[0], mid[1], rays_checked=checked
            )
        if verdict == "semidefinite":
            return FinslerResult(
                "inconclusive", mid[0], mid[1],
                inconclusive_at=(mid[0].to_float(), mid[1].to_float()),
                rays_checked=checked,
            )
        if (sig[0], sig[1]) != (sl[0], sl[1]):
            pending.append((left, sl, mid, sig, level + 1))
        if (sig[0], sig[1]) != (sr[0], sr[1]):
            pending.append((mid, sig, right, sr, level + 1))

    return FinslerResult("all-nonzero-combinations-indefinite", rays_checked=checked)


def _classify_signature(sig: tuple[int, int, int], d: int) -> str:
    p, n, z = sig
    if p >= 1 and n >= 1:
        return "indefinite"
    if z == 0 and (p == d or n == d):
        return "definite"
    if p + n == 0:
        return "zero-form"  # collapsed ray of a proportional pencil
    return "semidefinite"


def _inspect_crossing(G1, G2, left, right) -> Optional[FinslerResult]:
    """Float look at the degenerate combination between two sampled rays.

    Returns an inconclusive result when its nonzero eigenvalues are
    one-signed within tolerance, None when the crossing is clearly
    indefinite.
    """
    A1 = np.array(la.to_floats(G1))
    A2 = np.array(la.to_floats(G2))
    l = np.array([left[0].to_float(), left[1].to_float()])
    r = np.array([right[0].to_float(), right[1].to_float()])
    l /= np.linalg.norm(l)
    r /= np.linalg.norm(r)
    lo, hi = 0.0, 1.0
    det_l = np.linalg.det(l[0] * A1 + l[1] * A2)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ray = (1 - mid) * l + mid * r
        dm = np.linalg.det(ray[0] * A1 + ray[1] * A2)
        if dm == 0.0:
            break
        if (dm > 0) == (det_l > 0):
            lo = mid
        else:
            hi = mid
    ray = (1 - 0.5 * (lo + hi)) * l + 0.5 * (lo + hi) * r
    eig = np.linalg.eigvalsh(ray[0] * A1 + ray[1] * A2)
    cutoff = RANK_REL_TOL * max(1.0, float(np.max(np.abs(eig))))
    pos = int(np.sum(eig > cutoff))
    neg = int(np.sum(eig < -cutoff))
    if pos >= 1 and neg >= 1:
        return None
    return FinslerResult(
        "inconclusive",
        inconclusive_at=(float(ray[0]), float(ray[1])),
    )

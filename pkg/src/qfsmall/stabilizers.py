"""One-parameter unipotent subgroups preserving a whole form system.

Given pencil-radical data V with an isotropic vector, three explicit
constructions apply, keyed by the restriction of the first form to V:
an orthogonal-transvection family when the restriction is nondegenerate
(dim V >= 3), the shear family through the radical of the restriction
when it is degenerate nonzero, and the two-form mixing family when the
restriction vanishes.  Every returned generator is verified to stabilize
all forms as a polynomial identity before it leaves this module.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _linalg as la
from .exactnum import ONE, Rational, Scalar, ZERO, _coerce, encode_scalar
from .forms import FormSystem, PencilRadical, rank_signature


class ExcludedCaseError(ValueError):
    """dim V = 2 with nondegenerate restriction: no construction applies."""


class HypothesesNotMetError(ValueError):
    pass


class StabilizerMismatchError(ValueError):
    """A family fails to stabilize the system it was offered for."""


@dataclass
class UnipotentFamily:
    """u_t = exp(t N) with N nilpotent (N^3 = 0), in original coordinates.

    `frame` columns are the adapted basis of the construction; auxiliary
    linear forms (L, or L1/L2) are recorded as coefficient vectors in the
    frame coordinates y_3..y_d.
    """

    case: str  # orthogonal-case | degenerate-case | isotropic-case
    frame: la.Matrix
    generator: la.Matrix
    aux_forms: dict

    def matrix(self, t) -> la.Matrix:
        """I + t N + t^2/2 N^2, exact for exact t."""
        t = _coerce(t)
        N = self.generator
        d = len(N)
        N2 = la.mat_mul(N, N)
        half_t2 = t * t / 2
        return tuple(
            tuple(
                (ONE if i == j else ZERO) + t * N[i][j] + half_t2 * N2[i][j]
                for j in range(d)
            )
            for i in range(d)
        )

    def matrix_float(self, t: float) -> np.ndarray:
        N = np.array(la.to_floats(self.generator))
        return np.eye(len(self.generator)) + t * N + (t * t / 2.0) * (N @ N)

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "frame": [[encode_scalar(x) for x in row] for row in self.frame],
            "generator": [[encode_scalar(x) for x in row] for row in self.generator],
            "aux_forms": {
                k: [encode_scalar(c) for c in v] for k, v in self.aux_forms.items()
            },
        }


def _is_zero_matrix(A: la.Matrix) -> bool:
    return all(x.sign() == 0 for row in A for x in row)


def _invariance_coefficients(N: la.Matrix, G: la.Matrix) -> list[la.Matrix]:
    """Coefficients of t..t^4 in exp(tN)^T G exp(tN) - G (must all vanish)."""
    M = tuple(
        tuple(x / 2 for x in row) for row in la.mat_mul(N, N)
    )
    Nt, Mt = la.transpose(N), la.transpose(M)

    def plus(*mats):
        d = len(mats[0])
        return tuple(
            tuple(sum((m[i][j] for m in mats), ZERO) for j in range(d))
            for i in range(d)
        )

    c1 = plus(la.mat_mul(Nt, G), la.mat_mul(G, N))
    c2 = plus(la.mat_mul(Mt, G), la.mat_mul(Nt, la.mat_mul(G, N)), la.mat_mul(G, M))
    c3 = plus(la.mat_mul(Mt, la.mat_mul(G, N)), la.mat_mul(Nt, la.mat_mul(G, M)))
    c4 = la.mat_mul(Mt, la.mat_mul(G, M))
    return [c1, c2, c3, c4]


def stabilizes_symbolically(fam: UnipotentFamily, S: FormSystem) -> bool:
    """Q_j(u_t x) = Q_j(x) as a polynomial identity in (t, x), all j."""
    return all(
        all(_is_zero_matrix(C) for C in _invariance_coefficients(fam.generator, Q.gram))
        for Q in S.forms
    )


def _complete_with_standard(vectors: list[la.Vector], d: int) -> list[la.Vector]:
    out = list(vectors)
    for i in range(d):
        if len(out) == d:
            break
        e = tuple(ONE if j == i else ZERO for j in range(d))
        if la.rank(tuple(out + [e])) > len(out):
            out.append(e)
    if len(out) != d:
        raise ValueError("could not complete to a basis")
    return out


def _combine(V: list[la.Vector], coeffs) -> la.Vector:
    d = len(V[0])
    out = [ZERO] * d
    for c, vec in zip(coeffs, V):
        out = [o + c * x for o, x in zip(out, vec)]
    return tuple(out)


def build_unipotent(S: FormSystem, pr: PencilRadical) -> UnipotentFamily:
    """Explicit stabilizing family for a system with pencil-radical data."""
    if not S.is_exact:
        raise HypothesesNotMetError("construction needs exact form data")
    for j, Q in enumerate(S.forms):
        p, n, z = rank_signature(Q)
        if z != 0:
            raise HypothesesNotMetError(f"Q_{j + 1} is degenerate")
        if p == 0 or n == 0:
            raise HypothesesNotMetError(f"Q_{j + 1} is not indefinite")
    if pr.dim_v < 2:
        raise HypothesesNotMetError("need dim V >= 2")
    if pr.isotropic_witness is None:
        raise HypothesesNotMetError("V carries no isotropic vector for Q_1")
    if pr.restricted_class == "nondegenerate":
        if pr.dim_v == 2:
            raise ExcludedCaseError(
                "dim V = 2 with nondegenerate restriction is the excluded case"
            )
        fam = _orthogonal_case(S, pr)
    elif pr.restricted_class == "degenerate-nonzero":
        fam = _degenerate_case(S, pr)
    else:
        fam = _isotropic_case(S, pr)

    if _is_zero_matrix(fam.generator):
        raise HypothesesNotMetError("construction produced a trivial generator")
    if not stabilizes_symbolically(fam, S):
        raise StabilizerMismatchError("constructed family fails symbolic invariance")
    return fam


def _orthogonal_case(S: FormSystem, pr: PencilRadical) -> UnipotentFamily:
    if not pr.witness_is_exact:
        raise HypothesesNotMetError(
            "orthogonal case needs an exact isotropic vector (tower limitation)"
        )
    G1 = S.forms[0].gram
    V = pr.basis
    d = S.dim
    u = pr.isotropic_witness

    cols = la.transpose(tuple(V))
    u_coeffs = la.solve(cols, u)
    if u_coeffs is None:
        raise HypothesesNotMetError("isotropic witness does not lie in V")

    # w in V with B1(u, w) = 0 and w independent of u
    pair_row = tuple(la.dot(la.mat_vec(G1, u), v) for v in V)
    w = None
    for c in la.kernel_basis((pair_row,)):
        if la.rank((u_coeffs, c)) == 2:
            w = _combine(V, c)
            break
    if w is None:
        raise HypothesesNotMetError("no transvection partner inside V")

    G1u, G1w = la.mat_vec(G1, u), la.mat_vec(G1, w)
    N = tuple(
        tuple(w[i] * G1u[j] - u[i] * G1w[j] for j in range(d)) for i in range(d)
    )

    others = [v for v in V]
    frame_vecs = [u, w]
    for v in others:
        if len(frame_vecs) >= pr.dim_v:
            break
        if la.rank(tuple(frame_vecs + [v])) > len(frame_vecs):
            frame_vecs.append(v)
    frame = la.transpose(tuple(_complete_with_standard(frame_vecs, d)))
    return UnipotentFamily("orthogonal-case", frame, N, {})


def _degenerate_case(S: FormSystem, pr: PencilRadical) -> UnipotentFamily:
    G1 = S.forms[0].gram
    V = pr.basis
    d = S.dim
    R = pr.restricted_gram

    rad = la.kernel_basis(R)
    if not rad:
        raise HypothesesNotMetError("restriction is not degenerate")
    f1 = _combine(V, rad[0])

    P, diag = la.congruence_diagonalize(R)
    idx = next((i for i, x in enumerate(diag) if x.sign() != 0), None)
    if idx is None:
        raise HypothesesNotMetError("restriction vanishes; use the isotropic case")
    f2 = _combine(V, tuple(P[r][idx] for r in range(len(V))))
    gamma = diag[idx]

    # f_3..f_d: Q_1-orthogonal to f_2, completing f_1
    ortho = la.kernel_basis((la.mat_vec(G1, f2),))
    chosen = [f1]
    for v in ortho:
        if len(chosen) == d - 1:
            break
        if la.rank(tuple(chosen + [v])) > len(chosen):
            chosen.append(v)
    if len(chosen) != d - 1:
        raise HypothesesNotMetError("could not complete the orthogonal frame")
    frame_vecs = [f1, f2] + chosen[1:]
    B = la.transpose(tuple(frame_vecs))
    if la.det(B).sign() == 0:
        raise HypothesesNotMetError("frame degenerated")

    lam = [
        (la.dot(la.mat_vec(G1, f1), frame_vecs[i]) * 2) for i in range(2, d)
    ]
    if all(x.sign() == 0 for x in lam):
        raise HypothesesNotMetError("shear form L vanishes (Q_1 degenerate?)")

    Nf = [[ZERO] * d for _ in range(d)]
    Nf[0][1] = -(gamma + gamma)
    for i in range(2, d):
        Nf[1][i] = lam[i - 2]
    Nf = tuple(tuple(row) for row in Nf)
    N = la.mat_mul(B, la.mat_mul(Nf, la.invert(B)))
    return UnipotentFamily("degenerate-case", B, N, {"L": tuple(lam)})


def _isotropic_case(S: FormSystem, pr: PencilRadical) -> UnipotentFamily:
    G1 = S.forms[0].gram
    V = pr.basis
    d = S.dim
    f1, f2 = V[0], V[1]
    frame_vecs = _complete_with_standard([f1, f2], d)
    B = la.transpose(tuple(frame_vecs))

    mu = [(la.dot(la.mat_vec(G1, f1), frame_vecs[i]) * 2) for i in range(2, d)]
    nu = [(la.dot(la.mat_vec(G1, f2), frame_vecs[i]) * 2) for i in range(2, d)]
    if all(x.sign() == 0 for x in mu) or all(x.sign() == 0 for x in nu):
        raise HypothesesNotMetError("mixing forms vanish (Q_1 degenerate?)")

    Nf = [[ZERO] * d for _ in range(d)]
    for i in range(2, d):
        Nf[0][i] = nu[i - 2]
        Nf[1][i] = -mu[i - 2]
    Nf = tuple(tuple(row) for row in Nf)
    N = la.mat_mul(B, la.mat_mul(Nf, la.invert(B)))
    return UnipotentFamily(
        "isotropic-case", B, N, {"L1": tuple(mu), "L2": tuple(nu)}
    )


def verify_invariance(
    fam: UnipotentFamily, S: FormSystem, samples: int = 100, seed: int = 0
) -> Scalar:
    """Max |Q_j(u_t x) - Q_j(x)| over random rational (t, x); 0 expected."""
    rng = random.Random(seed)
    worst: Scalar = ZERO
    d = S.dim
    for _ in range(samples):
        t = Rational(Fraction(rng.randint(-30, 30), rng.randint(1, 12)))
        x = tuple(Rational(rng.randint(-9, 9)) for _ in range(d))
        u = fam.matrix(t)
        ux = la.mat_vec(u, x)
        for Q in S.forms:
            res = abs(Q.evaluate(ux) - Q.evaluate(x))
            if res > worst:
                worst = res
    return worst

"""Diagonal flows on lattices, shortest vectors, and boundedness diagnostics.

The flow contracts the first frame coordinate and expands the second:
L_1(a_t x) = e^-t L_1(x), L_2(a_t x) = e^t L_2(x), others fixed.  Shortest
vectors come from LLL preprocessing plus exact Fincke-Pohst enumeration;
for flowed lattices the Gram matrix is assembled in frame coordinates so
the contracted direction is not lost to float cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _linalg as la
from .exactnum import Scalar, _coerce

MAX_ENUM_DIM = 6
CONDITION_LIMIT = 1e12
DEGENERATE_LAMBDA = 1e-12
ESCAPE_THRESHOLD = 1e-6
LLL_DELTA = 0.99


class IllConditionedError(ValueError):
    """Basis too degenerate for a reliable shortest-vector computation."""


@dataclass
class DiagonalFlow:
    """One-parameter diagonal flow in the coordinates of a frame.

    `frame` rows are the linear forms L_1..L_d; exponents (-1, +1, 0, ...)
    are applied as L_i(a_t x) = e^(exp_i t) L_i(x).  `exact_rows`, when
    present, lets consumers evaluate the L_i without float cancellation.
    """

    frame: np.ndarray
    exponents: tuple[float, ...] = ()
    mode: str = "one-sided"
    exact_rows: Optional[la.Matrix] = None

    def __post_init__(self):
        self.frame = np.asarray(self.frame, dtype=float)
        d = self.frame.shape[0]
        if self.frame.shape != (d, d):
            raise ValueError("frame must be a square matrix")
        if abs(np.linalg.det(self.frame)) < 1e-300:
            raise ValueError("frame must be invertible")
        if not self.exponents:
            self.exponents = (-1.0, 1.0) + (0.0,) * (d - 2)
        if len(self.exponents) != d:
            raise ValueError("one exponent per coordinate")
        if abs(sum(self.exponents)) > 1e-12:
            raise ValueError("exponents must sum to zero (unimodular flow)")
        if self.mode not in ("one-sided", "two-sided"):
            raise ValueError("mode must be one-sided or two-sided")
        self._frame_inv = np.linalg.inv(self.frame)

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    @classmethod
    def standard(cls, d: int, mode: str = "one-sided") -> "DiagonalFlow":
        return cls(np.eye(d), mode=mode, exact_rows=la.identity(d))

    @classmethod
    def from_linear_forms(
        cls, rows, mode: str = "one-sided"
    ) -> "DiagonalFlow":
        exact = la.as_matrix(rows)
        return cls(np.array(la.to_floats(exact)), mode=mode, exact_rows=exact)

    @classmethod
    def from_tangency_frame(cls, tf, mode: str = "one-sided") -> "DiagonalFlow":
        exact = tf.linear_coordinates if tf.exact else None
        return cls(tf.coordinates_floats(), mode=mode, exact_rows=exact)


def apply_flow(flow: DiagonalFlow, t: float, B: np.ndarray) -> np.ndarray:
    """A_t B with A_t = frame^-1 diag(e^(exp_i t)) frame."""
    B = np.asarray(B, dtype=float)
    if abs(np.linalg.det(B)) < 1e-300:
        raise ValueError("B must be invertible")
    D = np.exp(np.array(flow.exponents) * t)
    return flow._frame_inv @ (D[:, None] * (flow.frame @ B))


# -- LLL + Fincke-Pohst enumeration -------------------------------------------

def lll_reduce(B: np.ndarray, delta: float = LLL_DELTA):
    """Column-LLL; returns (B U, U) with U unimodular (python ints)."""
    B = np.asarray(B, dtype=float)
    n = B.shape[1]
    G = B.T @ B
    U = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    _gram_lll(G.copy(), U, delta)
    Uarr = np.array(U, dtype=float)
    return B @ Uarr, np.array(U, dtype=object)

def _gram_lll(G: np.ndarray, U: list, delta: float, max_rounds: int = 10000):
    """In-place LLL on a Gram matrix with integer transform tracked in U."""
    n = G.shape[0]

    def gso():
        mu = np.zeros((n, n))
        bsq = np.zeros(n)
        for i in range(n):
            bsq[i] = G[i, i]
            for j in range(i):
                if bsq[j] <= 0:
                    mu[i, j] = 0.0
                    continue
                mu[i, j] = (G[i, j] - sum(mu[i, k] * mu[j, k] * bsq[k] for k in range(j))) / bsq[j]
                bsq[i] -= mu[i, j] ** 2 * bsq[j]
        return mu, bsq

    def size_reduce(i, j, q):
        if q == 0:
            return
        # column i <- column i - q * column j (on G, congruently, and U)
        for r in range(n):
            G[r, i] -= q * G[r, j]
        for c in range(n):
            G[i, c] -= q * G[j, c]
        for r in range(n):
            U[r][i] -= q * U[r][j]

    def swap(i, j):
        G[[i, j], :] = G[[j, i], :]
        G[:, [i, j]] = G[:, [j, i]]
        for r in range(n):
            U[r][i], U[r][j] = U[r][j], U[r][i]

    k = 1
    rounds = 0
    while k < n and rounds < max_rounds:
        rounds += 1
        mu, bsq = gso()
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                size_reduce(k, j, q)
                mu, bsq = gso()
        if bsq[k] >= (delta - mu[k, k - 1] ** 2) * bsq[k - 1]:
            k += 1
        else:
            swap(k, k - 1)
            k = max(k - 1, 1)


@dataclass
class ShortestVector:
    vector: np.ndarray
    norm: float
    coefficients: tuple[int, ...]


def _canonical_coeffs(c: np.ndarray) -> tuple[int, ...]:
    c = [int(x) for x in c]
    lead = next((x for x in c if x != 0), 0)
    if lead < 0:
        c = [-x for x in c]
    return tuple(c)


def _enumerate_gram(G: np.ndarray) -> tuple[float, tuple[int, ...]]:
    """Exact shortest nonzero vector of the Gram matrix by Fincke-Pohst.

    Deterministic tie-break: lexicographically smallest canonical
    coefficient vector among (near-)minimal candidates.
    """
    n = G.shape[0]
    mu = np.zeros((n, n))
    bsq = np.zeros(n)
    for i in range(n):
        bsq[i] = G[i, i]
        for j in range(i):
            mu[i, j] = (G[i, j] - sum(mu[i, k] * mu[j, k] * bsq[k] for k in range(j))) / bsq[j]
            bsq[i] -= mu[i, j] ** 2 * bsq[j]
        if bsq[i] <= 0:
            raise IllConditionedError("Gram matrix lost positive definiteness")

    best_sq = float(min(G[i, i] for i in range(n)))
    best: list[tuple[int, ...]] = []
    x = [0] * n
    tol = 1 + 1e-12

    def recurse(level: int, partial: float, centers_cache):
        nonlocal best_sq, best
        if level < 0:
            if all(v == 0 for v in x):
                return
            cand = _canonical_coeffs(np.array(x))
            if partial < best_sq / tol:
                best_sq = partial
                best = [cand]
            elif partial <= best_sq * tol:
                best.append(cand)
            return
        center = -sum(mu[j, level] * x[j] for j in range(level + 1, n))
        if bsq[level] <= 0:
            return
        width = math.sqrt(max(best_sq * tol - partial, 0.0) / bsq[level])
        lo = math.ceil(center - width)
        hi = math.floor(center + width)
        for v in range(lo, hi + 1):
            x[level] = v
            add = (v - center) ** 2 * bsq[level]
            if partial + add <= best_sq * tol:
                recurse(level - 1, partial + add, None)
        x[level] = 0

    recurse(n - 1, 0.0, None)
    if not best:
        raise IllConditionedError("enumeration found no vector")
    choice = min(best)
    # recompute the norm of the chosen candidate
    c = np.array(choice, dtype=float)
    return float(c @ G @ c), choice


def _shortest_in_metric(Y: np.ndarray, K: Optional[np.ndarray]) -> ShortestVector:
    """Shortest x = C Y c over integer c, with K = C^T C (None = identity)."""
    n = Y.shape[1]
    if n > MAX_ENUM_DIM:
        raise ValueError(f"enumeration supports dimension <= {MAX_ENUM_DIM}")
    G = Y.T @ Y if K is None else Y.T @ K @ Y
    if not np.all(np.isfinite(G)):
        raise IllConditionedError("non-finite Gram matrix")

    U = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    _gram_lll(G, U, LLL_DELTA)  # reduces G in place
    norm_sq, coeffs_red = _enumerate_gram(G)
    Uarr = np.array(U, dtype=float)
    coeffs = _canonical_coeffs(Uarr @ np.array(coeffs_red, dtype=float))
    vec = Y @ np.array(coeffs, dtype=float)
    norm = math.sqrt(max(norm_sq, 0.0))
    return ShortestVector(vec, norm, coeffs)


def _exact_atom_columns(flow: DiagonalFlow, exact_basis: la.Matrix) -> la.Matrix:
    """L-coordinates of the basis columns, exactly (t-independent atoms)."""
    return la.mat_mul(flow.exact_rows, exact_basis)


def _gauss_shortest_exact(
    A: la.Matrix, exponents, t: float, frame_inv: np.ndarray
) -> ShortestVector:
    """Lagrange-Gauss reduction for d = 2 with exact coefficient atoms.

    Frame coordinates of an integer combination c are e^(exp_k t) * float
    of the exact value (A c)_k, so near-cancelling combinations keep full
    float accuracy no matter how unbalanced the flow scaling is; the
    well-conditioned frame_inv then maps them back without harm.
    """
    scale = [math.exp(e * t) for e in exponents]

    def coords(c):
        exact = la.mat_vec(A, (_coerce(c[0]), _coerce(c[1])))
        y = np.array([scale[k] * exact[k].to_float() for k in range(2)])
        return frame_inv @ y

    u, v = [1, 0], [0, 1]
    yu, yv = coords(u), coords(v)
    for _ in range(256):
        if yu @ yu > yv @ yv:
            u, v = v, u
            yu, yv = yv, yu
        denom = yu @ yu
        if denom == 0:
            break
        m = round((yv @ yu) / denom)
        if m == 0:
            break
        v = [v[0] - m * u[0], v[1] - m * u[1]]
        yv = coords(v)
    candidates = [u, v, [u[0] + v[0], u[1] + v[1]], [u[0] - v[0], u[1] - v[1]]]
    best = None
    for c in candidates:
        if c[0] == 0 and c[1] == 0:
            continue
        y = coords(c)
        norm = math.sqrt(float(y @ y))
        key = (norm, _canonical_coeffs(np.array(c)))
        if best is None or key < best[0]:
            best = (key, y)
    (norm, coeffs), y = best
    return ShortestVector(y, norm, coeffs)


def shortest_vector(B: np.ndarray) -> ShortestVector:
    """Exact shortest nonzero vector of the lattice B Z^d (d <= 6).

    Raises IllConditionedError for singular input, and for condition
    numbers beyond 1e12 when the shortest vector is already below the
    1e-12 floor where the verdict is determined anyway.
    """
    B = np.asarray(B, dtype=float)
    if B.shape[0] != B.shape[1]:
        raise ValueError("need a square basis")
    sv = np.linalg.svd(B, compute_uv=False)
    if sv[-1] <= 0 or not np.all(np.isfinite(sv)):
        raise IllConditionedError("singular basis")
    result = _shortest_in_metric(B, None)
    if sv[0] / sv[-1] > CONDITION_LIMIT and result.norm < DEGENERATE_LAMBDA:
        raise IllConditionedError(
            f"condition number {sv[0] / sv[-1]:.2e} beyond {CONDITION_LIMIT:.0e}"
        )
    return result


@dataclass
class LatticeState:
    basis: np.ndarray
    lambda1: float
    witness: tuple[int, ...]


def lattice_state(B: np.ndarray) -> LatticeState:
    s = shortest_vector(B)
    return LatticeState(np.asarray(B, dtype=float), s.norm, s.coefficients)


# -- orbit boundedness diagnostic ---------------------------------------------

@dataclass
class TracePoint:
    t: float
    lambda1: float
    witness: tuple[int, ...]


@dataclass
class BoundednessReport:
    min_lambda1: float
    argmin_t: float
    verdict: str  # escape-detected | no-escape-to-horizon
    threshold: float
    trace: list[TracePoint] = field(default_factory=list)

    def csv_rows(self):
        yield ("t", "lambda1", "witness")
        for p in self.trace:
            yield (f"{p.t:.10g}", f"{p.lambda1:.17g}", ";".join(map(str, p.witness)))


def orbit_boundedness_diagnostic(
    flow: DiagonalFlow,
    B: Optional[np.ndarray] = None,
    t_max: float = 25.0,
    step: float = 0.05,
    threshold: float = ESCAPE_THRESHOLD,
    exact_basis: Optional[la.Matrix] = None,
) -> BoundednessReport:
    """Trace lambda_1(a_t B Z^d) over a t grid and report the minimum.

    two-sided flows mirror the grid to negative t.  The scan stops early
    once lambda_1 < 1e-12: the escape verdict is already determined and
    floats carry no more meaning there.  With d = 2, an exact frame and an
    exact basis, shortest vectors come from coefficient-exact Gauss
    reduction, which stays accurate at large t where Gram arithmetic
    cancels catastrophically.
    """
    if t_max <= 0 or step <= 0:
        raise ValueError("need t_max > 0 and step > 0")
    if B is None:
        if exact_basis is None:
            raise ValueError("need a basis")
        B = np.array(la.to_floats(exact_basis), dtype=float)
    B = np.asarray(B, dtype=float)
    n_steps = int(math.floor(t_max / step + 1e-9))
    ts = [i * step for i in range(n_steps + 1)]
    if ts[-1] < t_max - 1e-12:
        ts.append(t_max)
    if flow.mode == "two-sided":
        ts = [-t for t in reversed(ts) if t > 0] + ts

    FB = flow.frame @ B
    K = flow._frame_inv.T @ flow._frame_inv
    exps = np.array(flow.exponents)
    atoms = None
    if (
        flow.dim == 2
        and flow.exact_rows is not None
        and exact_basis is not None
    ):
        atoms = _exact_atom_columns(flow, exact_basis)

    trace: list[TracePoint] = []
    stopped_early = False
    for t in ts:
        if atoms is not None:
            s = _gauss_shortest_exact(atoms, flow.exponents, t, flow._frame_inv)
        else:
            Y = np.exp(exps * t)[:, None] * FB
            s = _shortest_in_metric(Y, K)
        trace.append(TracePoint(t, s.norm, s.coefficients))
        if s.norm < DEGENERATE_LAMBDA:
            stopped_early = True
            break

    min_pt = min(trace, key=lambda p: (p.lambda1, p.t))
    verdict = (
        "escape-detected"
        if (min_pt.lambda1 < threshold or stopped_early)
        else "no-escape-to-horizon"
    )
    return BoundednessReport(min_pt.lambda1, min_pt.t, verdict, threshold, trace)


# -- Dani schedule -------------------------------------------------------------

def dani_time_schedule(L1x: float, L2x: float) -> float:
    """t with e^-t1|L1x| = e^t |L2x| = sqrt(|L1x L2x|); needs L2x != 0."""
    if L2x == 0:
        raise ValueError(
            "L2 vanishes: use the divergent schedule (any t_n -> infinity "
            "with e^-t_n |L1| -> 0)"
        )
    if L1x == 0:
        return 0.0
    return 0.5 * math.log(abs(L1x / L2x))


@dataclass
class DaniElement:
    x: tuple[int, ...]
    t: float
    balanced_norm: float
    quantity: float  # max(|L1 L2|, monitored |L_i|)
    branch: str  # balanced | divergent


@dataclass
class DaniReport:
    elements: list[DaniElement]
    verdict: str  # satisfied-to-horizon | not-satisfied
    mode: str


def _exact_L_values(flow: DiagonalFlow, x) -> list[float]:
    if flow.exact_rows is not None and all(
        isinstance(c, (int, np.integer)) for c in x
    ):
        vals = la.mat_vec(flow.exact_rows, tuple(_coerce(int(c)) for c in x))
        return [v.to_float() for v in vals]
    return list(flow.frame @ np.array(x, dtype=float))


def verify_dani_criterion(
    flow: DiagonalFlow,
    sequence: Sequence[Sequence[int]],
    tol: float = 1e-3,
) -> DaniReport:
    """Check the product-and-decay criterion along a sequence empirically.

    One-sided mode monitors L_i for i = 2..d, two-sided only i = 3..d.
    Each element gets the balanced time schedule (or the divergent branch
    when L_2 = 0) and the resulting flowed sup norm max_i |L_i(a_t x)|.
    """
    if not sequence:
        raise ValueError("need a nonempty sequence")
    d = flow.dim
    monitored = range(1, d) if flow.mode == "one-sided" else range(2, d)
    elements: list[DaniElement] = []
    for idx, x in enumerate(sequence):
        L = _exact_L_values(flow, tuple(x))
        l1, l2 = abs(L[0]), abs(L[1])
        rest = [abs(L[i]) for i in range(2, d)]
        quantity = max([l1 * l2] + [abs(L[i]) for i in monitored])
        if l2 > 0:
            t = dani_time_schedule(L[0], L[1])
            balanced = math.sqrt(l1 * l2)
            norm = max([balanced] + rest)
            branch = "balanced"
        else:
            t = math.log((idx + 1) * (1.0 + l1))
            norm = max([l1 * math.exp(-t)] + rest)
            branch = "divergent"
        elements.append(DaniElement(tuple(int(c) for c in x), t, norm, quantity, branch))

    qs = [e.quantity for e in elements]
    satisfied = (
        len(qs) >= 2 and qs[-1] == min(qs) and qs[-1] < qs[0] and qs[-1] < tol
    )
    return DaniReport(
        elements, "satisfied-to-horizon" if satisfied else "not-satisfied", flow.mode
    )


# -- model lattices ------------------------------------------------------------

def geodesic_lattice_exact(alpha: Scalar) -> la.Matrix:
    """The standard lattice whose flow boundedness reflects alpha's type.

    Quadratic irrational: columns (1, 1) and (alpha, alpha'), the ring
    embedding, with integral norm form bounded away from zero.  Rational:
    columns (1, alpha) and (0, 1); the relation q alpha - p = 0 makes a
    lattice vector collapse under the contracting direction.
    """
    alpha = _coerce(alpha)
    from .exactnum import ONE, QuadIrr, Rational, ZERO

    if isinstance(alpha, QuadIrr):
        return la.as_matrix([[ONE, alpha], [ONE, alpha.conjugate()]])
    if isinstance(alpha, Rational):
        return la.as_matrix([[ONE, ZERO], [alpha, ONE]])
    raise ValueError("geodesic lattice needs an exact scalar")


def geodesic_lattice(alpha: Scalar) -> np.ndarray:
    return np.array(la.to_floats(geodesic_lattice_exact(alpha)), dtype=float)

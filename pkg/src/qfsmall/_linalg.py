"""Exact linear algebra on matrices of Scalars (internal).

Matrices are tuples of row-tuples.  Everything here works over any field
level of the scalar tower and raises FieldMismatchError if an operation
would need to mix incompatible quadratic fields.
"""

from __future__ import annotations

from .exactnum import Scalar, ZERO, ONE, _coerce

Matrix = tuple[tuple[Scalar, ...], ...]
Vector = tuple[Scalar, ...]


def as_matrix(rows) -> Matrix:
    return tuple(tuple(_coerce(x) for x in row) for row in rows)


def as_vector(xs) -> Vector:
    return tuple(_coerce(x) for x in xs)


def identity(n: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def transpose(A: Matrix) -> Matrix:
    return tuple(zip(*A))


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    Bt = transpose(B)
    return tuple(
        tuple(sum((a * b for a, b in zip(row, col)), ZERO) for col in Bt) for row in A
    )


def mat_vec(A: Matrix, v: Vector) -> Vector:
    return tuple(sum((a * x for a, x in zip(row, v)), ZERO) for row in A)


def dot(u: Vector, v: Vector) -> Scalar:
    return sum((a * b for a, b in zip(u, v)), ZERO)


def scale_vec(c: Scalar, v: Vector) -> Vector:
    return tuple(c * x for x in v)


def add_vec(u: Vector, v: Vector) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def rref(A: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot column indices."""
    rows = [list(r) for r in A]
    nrows, ncols = len(rows), len(rows[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, nrows) if rows[i][c].sign() != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = ONE / rows[r][c]
        rows[r] = [inv * x for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c].sign() != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return tuple(tuple(row) for row in rows), pivots


def kernel_basis(A: Matrix) -> list[Vector]:
    """Basis of the right kernel of A (exact)."""
    if not A:
        return []
    R, pivots = rref(A)
    ncols = len(A[0])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for r, c in enumerate(pivots):
            v[c] = -R[r][f]
        basis.append(tuple(v))
    return basis


def rank(A: Matrix) -> int:
    return len(rref(A)[1])


def det(A: Matrix) -> Scalar:
    rows = [list(r) for r in A]
    n = len(rows)
    d = ONE
    for c in range(n):
        pivot = next((i for i in range(c, n) if rows[i][c].sign() != 0), None)
        if pivot is None:
            return ZERO
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            d = -d
        d = d * rows[c][c]
        inv = ONE / rows[c][c]
        for i in range(c + 1, n):
            if rows[i][c].sign() != 0:
                f = rows[i][c] * inv
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[c])]
    return d


def invert(A: Matrix) -> Matrix:
    n = len(A)
    aug = tuple(tuple(A[i]) + tuple(identity(n)[i]) for i in range(n))
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return tuple(row[n:] for row in R)


def solve(A: Matrix, b: Vector) -> Vector | None:
    """One solution of A x = b, or None if inconsistent."""
    n = len(A)
    aug = tuple(tuple(A[i]) + (b[i],) for i in range(n))
    R, pivots = rref(aug)
    ncols = len(A[0])
    if ncols in pivots:
        return None
    x = [ZERO] * ncols
    for r, c in enumerate(pivots):
        x[c] = R[r][ncols]
    return tuple(x)


def congruence_diagonalize(G: Matrix) -> tuple[Matrix, list[Scalar]]:
    """P with P^T G P diagonal; returns (P, diagonal entries).

    Symmetric Gaussian elimination with the classical fix when all
    remaining diagonal entries vanish (add a column with nonzero
    off-diagonal pairing to create a usable pivot).
    """
    n = len(G)
    P = [list(row) for row in identity(n)]
    M = [list(row) for row in G]

    def col_op(dst: int, src: int, f: Scalar):
        # column dst += f * column src, mirrored on rows (congruence)
        for i in range(n):
            M[i][dst] = M[i][dst] + f * M[i][src]
        for j in range(n):
            M[dst][j] = M[dst][j] + f * M[src][j]
        for i in range(n):
            P[i][dst] = P[i][dst] + f * P[i][src]

    def col_swap(i: int, j: int):
        for r in range(n):
            M[r][i], M[r][j] = M[r][j], M[r][i]
        M[i], M[j] = M[j], M[i]
        for r in range(n):
            P[r][i], P[r][j] = P[r][j], P[r][i]

    for k in range(n):
        if M[k][k].sign() == 0:
            j = next((j for j in range(k + 1, n) if M[j][j].sign() != 0), None)
            if j is not None:
                col_swap(k, j)
            else:
                pair = next(
                    (
                        (i, j)
                        for i in range(k, n)
                        for j in range(i + 1, n)
                        if M[i][j].sign() != 0
                    ),
                    None,
                )
                if pair is None:
                    break  # remaining block is zero
                i, j = pair
                if i != k:
                    col_swap(k, i)
                    j = i if j == k else j
                col_op(k, j, ONE)  # M[k][k] becomes 2*M[k][j] != 0
        if M[k][k].sign() == 0:
            continue
        inv = ONE / M[k][k]
        for j in range(k + 1, n):
            if M[k][j].sign() != 0:
                col_op(j, k, -M[k][j] * inv)
    return tuple(tuple(row) for row in P), [M[i][i] for i in range(n)]


def to_floats(A) -> list[list[float]]:
    return [[x.to_float() for x in row] for row in A]

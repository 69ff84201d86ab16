"""Dense exact linear algebra over a field (Fractions or number field elements).

Matrices are lists of rows.  Only field operations are used, so entries may be
ints, Fractions or `Element`s from one field tower.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .field import Element


def _zero(x) -> bool:
    if isinstance(x, Element):
        return x.is_zero()
    return x == 0


def _inv(x):
    if isinstance(x, Element):
        return x.inverse()
    return 1 / Fraction(x)


def rref(mat: Sequence[Sequence]):
    """Reduced row echelon form and pivot columns."""
    m = [list(r) for r in mat]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if not _zero(m[i][c])), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = _inv(m[r][c])
        m[r] = [x * inv for x in m[r]]
        for i in range(rows):
            if i != r and not _zero(m[i][c]):
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def kernel(mat: Sequence[Sequence], ncols: int | None = None) -> list[list]:
    """Basis of {v : mat v = 0} as a list of vectors."""
    if not mat:
        n = ncols or 0
        return [[int(i == j) for j in range(n)] for i in range(n)]
    n = len(mat[0])
    m, pivots = rref(mat)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * n
        v[fc] = 1
        for i, pc in enumerate(pivots):
            v[pc] = -m[i][fc]
        basis.append(v)
    return basis


def rank(mat) -> int:
    if not mat:
        return 0
    return len(rref(mat)[1])


def mat_mul(a, b):
    n, m, p = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        ai = a[i]
        for j in range(p):
            s = 0
            for t in range(m):
                x = ai[t]
                if not _zero(x):
                    y = b[t][j]
                    if not _zero(y):
                        s = s + x * y
            row.append(s)
        out.append(row)
    return out


def mat_vec(a, v):
    out = []
    for row in a:
        s = 0
        for x, y in zip(row, v):
            if not _zero(x) and not _zero(y):
                s = s + x * y
        out.append(s)
    return out


def transpose(a):
    return [list(r) for r in zip(*a)]


def identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def mat_sub(a, b):
    return [[x - y for x, y in zip(r, s)] for r, s in zip(a, b)]


def mat_add(a, b):
    return [[x + y for x, y in zip(r, s)] for r, s in zip(a, b)]


def mat_scale(a, c):
    return [[x * c for x in r] for r in a]


def is_zero_matrix(a) -> bool:
    return all(_zero(x) for r in a for x in r)


def solve_columns(basis_cols: Sequence[Sequence], targets: Sequence[Sequence]) -> list[list]:
    """Coordinates c_j with target = sum_i c_ij basis_i for each target column;
    raises if a target is not in the span."""
    n = len(basis_cols)
    dim = len(basis_cols[0])
    aug = [[basis_cols[i][r] for i in range(n)] + [t[r] for t in targets] for r in range(dim)]
    m, pivots = rref(aug)
    if any(p >= n for p in pivots):
        raise ValueError("target not in the span")
    coords = []
    for j in range(len(targets)):
        c = [0] * n
        for i, pc in enumerate(pivots):
            c[pc] = m[i][n + j]
        coords.append(c)
    return coords


def restrict(op, basis_cols):
    """Matrix of `op` (acting on column vectors) on the span of basis_cols,
    which must be invariant."""
    images = [mat_vec(op, b) for b in basis_cols]
    coords = solve_columns(basis_cols, images)
    n = len(basis_cols)
    return [[coords[j][i] for j in range(n)] for i in range(n)]


def charpoly(a) -> list:
    """Characteristic polynomial det(x - a), coefficients low to high
    (Faddeev-LeVerrier)."""
    n = len(a)
    coeffs = [0] * (n + 1)
    coeffs[n] = 1
    m = [[0] * n for _ in range(n)]
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{n-k+1} I
        am = mat_mul(a, m) if k > 1 else [[0] * n for _ in range(n)]
        for i in range(n):
            am[i][i] = am[i][i] + coeffs[n - k + 1]
        m = am
        tr = 0
        amk = mat_mul(a, m)
        for i in range(n):
            tr = tr + amk[i][i]
        coeffs[n - k] = tr * Fraction(-1, k)
    return coeffs


def poly_eval_matrix(coeffs, a):
    """g(a) for a polynomial with coefficients low to high."""
    n = len(a)
    out = [[0] * n for _ in range(n)]
    for c in reversed(coeffs):
        out = mat_mul(out, a) if any(not _zero(x) for r in out for x in r) else out
        for i in range(n):
            out[i][i] = out[i][i] + c
    return out

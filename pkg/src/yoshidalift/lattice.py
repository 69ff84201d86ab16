"""Integer lattice utilities: Hermite normal form, congruence kernels, LLL and
Fincke-Pohst enumeration of short vectors for positive definite forms."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np


def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def hnf_rows(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row-style Hermite normal form of the Z-span of `rows` (nonzero rows
    only, upper triangular, positive pivots, reduced above the pivots)."""
    a = [list(map(int, r)) for r in rows if any(r)]
    if not a:
        return []
    ncols = len(a[0])
    out = []
    row0 = 0
    for col in range(ncols):
        # bring a gcd to the pivot position among rows row0..
        while True:
            nz = [r for r in range(row0, len(a)) if a[r][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda r: abs(a[r][col]))
            a[row0], a[piv] = a[piv], a[row0]
            done = True
            for r in range(row0 + 1, len(a)):
                if a[r][col]:
                    q = a[r][col] // a[row0][col]
                    if q:
                        a[r] = [x - q * y for x, y in zip(a[r], a[row0])]
                    if a[r][col]:
                        done = False
            if done:
                break
        if row0 < len(a) and a[row0][col] != 0:
            if a[row0][col] < 0:
                a[row0] = [-x for x in a[row0]]
            p = a[row0][col]
            for r in range(row0):
                q = a[r][col] // p
                if q:
                    a[r] = [x - q * y for x, y in zip(a[r], a[row0])]
            row0 += 1
            if row0 == len(a):
                break
    out = [r for r in a[:row0] if any(r)]
    return out


def congruence_kernel(matrix: Sequence[Sequence[int]], moduli: Sequence[int], n: int) -> list[list[int]]:
    """Basis (rows) of {v in Z^n : matrix[i] . v = 0 mod moduli[i] for all i}."""
    r = len(matrix)
    gens = []
    for j in range(n):
        gens.append([int(matrix[i][j]) for i in range(r)] + [int(j == t) for t in range(n)])
    for i in range(r):
        gens.append([int(moduli[i]) if t == i else 0 for t in range(r)] + [0] * n)
    h = hnf_rows(gens)
    basis = [row[r:] for row in h if not any(row[:r])]
    assert len(basis) == n
    return basis


class RationalLattice:
    """A full-rank lattice in Q^n given by basis rows."""

    def __init__(self, rows: Sequence[Sequence]):
        rows = [[Fraction(x) for x in r] for r in rows]
        den = _lcm(x.denominator for r in rows for x in r)
        ints = [[int(x * den) for x in r] for r in rows]
        h = hnf_rows(ints)
        self.n = len(rows[0])
        if len(h) != self.n:
            raise ValueError("lattice is not of full rank")
        self.basis = [[Fraction(x, den) for x in r] for r in h]

    def __eq__(self, other):
        return isinstance(other, RationalLattice) and self.basis == other.basis

    def __hash__(self):
        return hash(tuple(tuple(r) for r in self.basis))

    def __repr__(self):
        return f"RationalLattice({[[str(x) for x in r] for r in self.basis]})"

    def denominator(self) -> int:
        return _lcm(x.denominator for r in self.basis for x in r)

    def covolume(self) -> Fraction:
        out = Fraction(1)
        for i, r in enumerate(self.basis):
            out *= r[i]
        return abs(out)

    def coordinates(self, vec: Sequence) -> list[Fraction]:
        """Coordinates of vec in the basis (upper triangular solve)."""
        vec = [Fraction(x) for x in vec]
        n = self.n
        c = [Fraction(0)] * n
        rem = vec[:]
        for i in range(n):
            c[i] = rem[i] / self.basis[i][i]
            if c[i]:
                rem = [a - c[i] * b for a, b in zip(rem, self.basis[i])]
        if any(rem):
            raise ValueError("vector not in the span")
        return c

    def contains(self, vec: Sequence) -> bool:
        return all(x.denominator == 1 for x in self.coordinates(vec))

    def contains_lattice(self, other: "RationalLattice") -> bool:
        return all(self.contains(r) for r in other.basis)

    def sum(self, other: "RationalLattice") -> "RationalLattice":
        return RationalLattice(self.basis + other.basis)

    def scale(self, c) -> "RationalLattice":
        c = Fraction(c)
        return RationalLattice([[c * x for x in r] for r in self.basis])

    def intersection(self, other: "RationalLattice") -> "RationalLattice":
        # v = a.B1 = b.B2; kernel of [B1; -B2] acting on (a, b)
        den = _lcm([self.denominator(), other.denominator()])
        n = self.n
        gens = []
        for r in self.basis:
            gens.append([int(x * den) for x in r] + [int(x * den) for x in r])
        for r in other.basis:
            gens.append([-int(x * den) for x in r] + [0] * n)
        h = hnf_rows(gens)
        rows = [row[n:] for row in h if not any(row[:n])]
        return RationalLattice([[Fraction(x, den) for x in r] for r in rows])


def gram_lll(gram: Sequence[Sequence], delta: Fraction = Fraction(3, 4)):
    """LLL on a positive definite rational Gram matrix.  Returns the unimodular
    transform U (rows = new basis in old coordinates)."""
    n = len(gram)
    g = [[Fraction(x) for x in r] for r in gram]
    u = [[int(i == j) for j in range(n)] for i in range(n)]

    def ip(a, b):
        return sum(a[i] * g[i][j] * b[j] for i in range(n) for j in range(n) if a[i] and b[j])

    def gso():
        mu = [[Fraction(0)] * n for _ in range(n)]
        bb = [Fraction(0)] * n
        for i in range(n):
            for j in range(i):
                mu[i][j] = (ip(u[i], u[j]) - sum(mu[j][t] * mu[i][t] * bb[t] for t in range(j))) / bb[j]
            bb[i] = ip(u[i], u[i]) - sum(mu[i][t] ** 2 * bb[t] for t in range(i))
        return mu, bb

    k = 1
    mu, bb = gso()
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                u[k] = [a - q * b for a, b in zip(u[k], u[j])]
                mu, bb = gso()
        if bb[k] >= (delta - mu[k][k - 1] ** 2) * bb[k - 1]:
            k += 1
        else:
            u[k], u[k - 1] = u[k - 1], u[k]
            mu, bb = gso()
            k = max(k - 1, 1)
    return u


def short_vectors(gram: Sequence[Sequence], bound, lower=0, lll: bool = True):
    """All integer vectors v with lower <= v^t G v <= bound for a positive
    definite rational Gram matrix G.  Returns (vectors as int array, values)."""
    n = len(gram)
    g = [[Fraction(x) for x in r] for r in gram]
    bound = Fraction(bound)
    if lll and n > 1:
        u = gram_lll(g)
    else:
        u = [[int(i == j) for j in range(n)] for i in range(n)]
    # reduced Gram
    gr = [[sum(u[i][a] * g[a][b] * u[j][b] for a in range(n) for b in range(n)) for j in range(n)]
          for i in range(n)]
    vecs = _fincke_pohst(gr, bound)
    if not vecs:
        return np.zeros((0, n), dtype=object), []
    arr = np.array(vecs, dtype=object)
    um = np.array(u, dtype=object)
    orig = arr.dot(um)
    den = _lcm(x.denominator for r in g for x in r)
    gi = np.array([[int(x * den) for x in r] for r in g], dtype=object)
    vals = [(Fraction(int(v.dot(gi).dot(v)), den)) for v in orig]
    keep = [i for i, q in enumerate(vals) if lower <= q <= bound]
    return orig[keep], [vals[i] for i in keep]


def _fincke_pohst(gram: list[list[Fraction]], bound: Fraction) -> list[list[int]]:
    n = len(gram)
    # Cholesky-type decomposition q_ii, q_ij in floats with safety margin
    q = [[float(x) for x in r] for r in gram]
    for i in range(n):
        for j in range(i + 1, n):
            q[j][i] = q[i][j]
            q[i][j] = q[i][j] / q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k][l] -= q[k][i] * q[i][l]
    b = float(bound) * (1 + 1e-9) + 1e-9
    out = []
    x = [0] * n
    # recursive enumeration from the last coordinate
    def rec(i, remaining):
        c = -sum(q[i][j] * x[j] for j in range(i + 1, n))
        r = math.sqrt(max(remaining, 0) / q[i][i]) + 1e-9
        lo = math.ceil(c - r)
        hi = math.floor(c + r)
        for xi in range(lo, hi + 1):
            x[i] = xi
            t = remaining - q[i][i] * (xi - c) ** 2
            if t < -1e-7 * (1 + b):
                continue
            if i == 0:
                out.append(x[:])
            else:
                rec(i - 1, t)
        x[i] = 0
    rec(n - 1, b)
    return out


def nullspace_mod_p(rows: Sequence[Sequence[int]], p: int) -> list[list[int]]:
    """Basis of the linear forms f (mod p) with f . row = 0 for every row."""
    n = len(rows[0])
    # forms f satisfy A f = 0 with A the matrix of rows
    a = [[x % p for x in r] for r in rows]
    pivots = []
    r0 = 0
    for col in range(n):
        piv = next((r for r in range(r0, len(a)) if a[r][col]), None)
        if piv is None:
            continue
        a[r0], a[piv] = a[piv], a[r0]
        inv = pow(a[r0][col], -1, p)
        a[r0] = [x * inv % p for x in a[r0]]
        for r in range(len(a)):
            if r != r0 and a[r][col]:
                f = a[r][col]
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[r0])]
        pivots.append(col)
        r0 += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * n
        v[fc] = 1
        for i, pc in enumerate(pivots):
            v[pc] = -a[i][fc] % p
        basis.append(v)
    return basis

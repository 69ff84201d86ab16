"""Polynomial models of the algebraic representations of GL_2.

A `PolyVector` is a polynomial that is homogeneous of a fixed degree in each
of several pairs of variables (X_t, Y_t).  Its coefficients sit in a numpy
object array indexed by the X-exponents, so entry (i_1, ..., i_r) multiplies
prod_t X_t^{i_t} Y_t^{d_t - i_t}.  Coefficients may be ints, Fractions,
number field elements or polynomial ring elements; only ring operations are
used.

The group acts by rho_kappa(g) P(X, Y) = P((X, Y) g) det(g)^b on each factor.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .field import Element


def _is_zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    if isinstance(c, Element):
        return c.is_zero()
    return not c


class Mat2:
    """A 2x2 matrix with entries in any commutative ring."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        self.a, self.b, self.c, self.d = a, b, c, d

    @classmethod
    def from_rows(cls, rows) -> "Mat2":
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    def rows(self):
        return ((self.a, self.b), (self.c, self.d))

    def __mul__(self, o):
        if isinstance(o, Mat2):
            return Mat2(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                        self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)
        return Mat2(self.a * o, self.b * o, self.c * o, self.d * o)

    def __rmul__(self, o):
        return Mat2(o * self.a, o * self.b, o * self.c, o * self.d)

    def __add__(self, o: "Mat2"):
        return Mat2(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    def __sub__(self, o: "Mat2"):
        return Mat2(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)

    def __neg__(self):
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def __eq__(self, o):
        return isinstance(o, Mat2) and all(_is_zero(x - y) for x, y in
                                           zip((self.a, self.b, self.c, self.d), (o.a, o.b, o.c, o.d)))

    def det(self):
        return self.a * self.d - self.b * self.c

    def trace(self):
        return self.a + self.d

    def adj(self) -> "Mat2":
        """Adjugate; the main involution of M_2."""
        return Mat2(self.d, -self.b, -self.c, self.a)

    def transpose(self) -> "Mat2":
        return Mat2(self.a, self.c, self.b, self.d)

    def inverse(self) -> "Mat2":
        dt = self.det()
        adj = self.adj()
        if isinstance(dt, int):
            dt = Fraction(dt)
        inv = 1 / dt
        return adj * inv

    def traceless(self) -> "Mat2":
        """x - Tr(x)/2, returned as 2 * (...) scaled back; entries must allow /2."""
        h = (self.a - self.d) * Fraction(1, 2) if not isinstance(self.a, int) else Fraction(self.a - self.d, 2)
        return Mat2(h, self.b, self.c, -h)

    def __repr__(self):
        return f"Mat2({self.a}, {self.b}; {self.c}, {self.d})"


def _zeros(shape):
    arr = np.empty(shape, dtype=object)
    arr.fill(0)
    return arr


class PolyVector:
    """Multi-homogeneous polynomial in pairs (X_t, Y_t) of degrees `degrees`."""

    def __init__(self, degrees: Sequence[int], coeffs=None, tags: Sequence[str] | None = None):
        self.degrees = tuple(int(d) for d in degrees)
        shape = tuple(d + 1 for d in self.degrees)
        if coeffs is None:
            self.coeffs = _zeros(shape)
        else:
            arr = np.empty(shape, dtype=object)
            src = np.asarray(coeffs, dtype=object)
            if src.shape != shape:
                raise ValueError(f"coefficient array has shape {src.shape}, expected {shape}")
            arr[...] = src
            self.coeffs = arr
        self.tags = tuple(tags) if tags is not None else tuple(f"v{t}" for t in range(len(self.degrees)))

    # -- construction -----------------------------------------------------
    @classmethod
    def monomial(cls, degrees, exps, coeff=1, tags=None) -> "PolyVector":
        v = cls(degrees, tags=tags)
        v.coeffs[tuple(exps)] = coeff
        return v

    @classmethod
    def linear_power(cls, a, b, n: int, tag: str = "v0") -> "PolyVector":
        """(a X + b Y)^n as a one-factor vector."""
        v = cls((n,), tags=(tag,))
        for i in range(n + 1):
            v.coeffs[i] = math.comb(n, i) * (a ** i) * (b ** (n - i))
        return v

    def copy(self) -> "PolyVector":
        return PolyVector(self.degrees, self.coeffs.copy(), self.tags)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, o: "PolyVector"):
        self._check(o)
        return PolyVector(self.degrees, self.coeffs + o.coeffs, self.tags)

    def __sub__(self, o: "PolyVector"):
        self._check(o)
        return PolyVector(self.degrees, self.coeffs - o.coeffs, self.tags)

    def __neg__(self):
        return PolyVector(self.degrees, -self.coeffs, self.tags)

    def scale(self, c) -> "PolyVector":
        return PolyVector(self.degrees, self.coeffs * c, self.tags)

    def __rmul__(self, c):
        return self.scale(c)

    def _check(self, o):
        if self.degrees != o.degrees:
            raise ValueError("degree mismatch")

    def __mul__(self, o):
        if not isinstance(o, PolyVector):
            return self.scale(o)
        if len(self.degrees) != len(o.degrees):
            raise ValueError("factor count mismatch")
        degs = tuple(a + b for a, b in zip(self.degrees, o.degrees))
        out = _zeros(tuple(d + 1 for d in degs))
        for idx in itertools.product(*(range(d + 1) for d in self.degrees)):
            c = self.coeffs[idx]
            if _is_zero(c):
                continue
            sl = tuple(slice(i, i + d + 1) for i, d in zip(idx, o.degrees))
            out[sl] = out[sl] + o.coeffs * c
        return PolyVector(degs, out, self.tags)

    def __pow__(self, n: int) -> "PolyVector":
        result = PolyVector((0,) * len(self.degrees), np.ones((1,) * len(self.degrees), dtype=object),
                            self.tags)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def tensor(self, o: "PolyVector") -> "PolyVector":
        out = np.multiply.outer(self.coeffs, o.coeffs)
        return PolyVector(self.degrees + o.degrees, out, self.tags + o.tags)

    def is_zero(self) -> bool:
        return all(_is_zero(c) for c in self.coeffs.flat)

    def __eq__(self, o):
        return isinstance(o, PolyVector) and self.degrees == o.degrees and (self - o).is_zero()

    def map(self, fn) -> "PolyVector":
        out = np.empty(self.coeffs.shape, dtype=object)
        for idx in np.ndindex(self.coeffs.shape):
            out[idx] = fn(self.coeffs[idx])
        return PolyVector(self.degrees, out, self.tags)

    def evaluate(self, points: Sequence[tuple]):
        """Value at (X_t, Y_t) = points[t]."""
        total = 0
        for idx in np.ndindex(self.coeffs.shape):
            c = self.coeffs[idx]
            if _is_zero(c):
                continue
            term = c
            for t, i in enumerate(idx):
                x, y = points[t]
                term = term * (x ** i) * (y ** (self.degrees[t] - i))
            total = total + term
        return total

    def __repr__(self):
        return f"PolyVector(degrees={self.degrees}, tags={self.tags})"

    # -- serialisation -------------------------------------------------------
    def to_json(self, encode=None):
        enc = encode or (lambda c: str(c))
        return {"degrees": list(self.degrees), "tags": list(self.tags),
                "coeffs": [enc(c) for c in self.coeffs.flat]}

    @classmethod
    def from_json(cls, data, decode=None) -> "PolyVector":
        dec = decode or (lambda s: Fraction(s))
        degs = tuple(data["degrees"])
        flat = [dec(s) for s in data["coeffs"]]
        arr = np.empty(tuple(d + 1 for d in degs), dtype=object)
        for pos, idx in enumerate(np.ndindex(arr.shape)):
            arr[idx] = flat[pos]
        return cls(degs, arr, data.get("tags"))


def HomogPoly(degree: int, coeffs=None, tag: str = "v0") -> PolyVector:
    """One-factor PolyVector: coeffs[i] multiplies X^i Y^(degree - i)."""
    return PolyVector((degree,), coeffs, (tag,))


# ---------------------------------------------------------------------------
# the invariant pairing

def pairing_n(p: PolyVector, q: PolyVector):
    """<P, Q> = sum over multi-indices of prod_t (-1)^{i_t} / C(n_t, i_t) P_i Q_{n - i}."""
    if p.degrees != q.degrees:
        raise ValueError("pairing needs equal degrees")
    total = 0
    degs = p.degrees
    for idx in np.ndindex(p.coeffs.shape):
        a = p.coeffs[idx]
        if _is_zero(a):
            continue
        comp = tuple(d - i for d, i in zip(degs, idx))
        b = q.coeffs[comp]
        if _is_zero(b):
            continue
        w = Fraction(1)
        for d, i in zip(degs, idx):
            w *= Fraction((-1) ** i, math.comb(d, i))
        total = total + a * b * w
    return total


# ---------------------------------------------------------------------------
# the group action

def sym_power_matrix(g: Mat2, n: int) -> list[list]:
    """Matrix M with (P((X, Y) g))_j = sum_i M[j][i] P_i."""
    scaled = _integral_multiple(g)
    if scaled is not None and scaled[1] > 1:
        m = sym_power_matrix(scaled[0], n)
        scale = scaled[1] ** n
        return [[Fraction(x, scale) for x in row] for row in m]
    # (X, Y) g = (a X + c Y, b X + d Y)
    l1 = [g.c, g.a]  # coefficients by X-degree
    l2 = [g.d, g.b]
    pw1 = [[1]]
    pw2 = [[1]]
    for _ in range(n):
        pw1.append(_mul1(pw1[-1], l1))
        pw2.append(_mul1(pw2[-1], l2))
    cols = [_mul1(pw1[i], pw2[n - i]) for i in range(n + 1)]
    return [[cols[i][j] for i in range(n + 1)] for j in range(n + 1)]


def _integral_multiple(g: Mat2):
    """(den g, den) with den g integral when g is rational, else None."""
    entries = (g.a, g.b, g.c, g.d)
    if not all(isinstance(x, (int, Fraction)) for x in entries):
        return None
    den = math.lcm(*[Fraction(x).denominator for x in entries])
    return Mat2(*(int(x * den) for x in entries)), den


def _mul1(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def act(p: PolyVector, mats: Sequence[Mat2 | None], det_powers: Sequence[int] = None) -> PolyVector:
    """Apply P -> P((X_t, Y_t) g_t) det(g_t)^{b_t} factor by factor (None = identity)."""
    coeffs = p.coeffs
    for t, g in enumerate(mats):
        if g is None:
            continue
        n = p.degrees[t]
        scaled = _integral_multiple(g)
        if scaled is not None:
            # integer matrix first, one division afterwards
            m = np.array(sym_power_matrix(scaled[0], n), dtype=object)
            coeffs = np.moveaxis(np.tensordot(m, coeffs, axes=([1], [t])), 0, t)
            if scaled[1] > 1:
                coeffs = coeffs * Fraction(1, scaled[1] ** n)
        else:
            m = np.array(sym_power_matrix(g, n), dtype=object)
            coeffs = np.moveaxis(np.tensordot(m, coeffs, axes=([1], [t])), 0, t)
        if det_powers is not None and det_powers[t]:
            coeffs = coeffs * (g.det() ** det_powers[t]) if det_powers[t] > 0 else \
                coeffs * (1 / _as_field(g.det())) ** (-det_powers[t])
    return PolyVector(p.degrees, coeffs, p.tags)


def _as_field(x):
    return Fraction(x) if isinstance(x, int) else x


def rho_kappa_apply(kappa: tuple[int, int], g: Mat2, p: PolyVector) -> PolyVector:
    """rho_kappa(g) on the space Sym^{kappa_1 - kappa_2} (x) det^{kappa_2} (one factor)."""
    n = kappa[0] - kappa[1]
    if p.degrees != (n,):
        raise ValueError("degree does not match the weight")
    return act(p, [g], [kappa[1]])


def random_gl2(rng, height: int = 9) -> Mat2:
    """A random invertible rational 2x2 matrix."""
    while True:
        vals = [Fraction(rng.randint(-height, height), rng.randint(1, height)) for _ in range(4)]
        g = Mat2(*vals)
        if g.det() != 0:
            return g


def pairing_invariance_check(n: int, rng, trials: int = 100, b: int = 0) -> bool:
    """<rho(g) v, rho(g) w> = det(g)^{n + 2b} <v, w> for rho = Sym^n (x) det^b."""
    for _ in range(trials):
        g = random_gl2(rng)
        v = HomogPoly(n, np.array([rng.randint(-20, 20) for _ in range(n + 1)], dtype=object))
        w = HomogPoly(n, np.array([rng.randint(-20, 20) for _ in range(n + 1)], dtype=object))
        lhs = pairing_n(rho_kappa_apply((n + b, b), g, v), rho_kappa_apply((n + b, b), g, w))
        if lhs != g.det() ** (n + 2 * b) * pairing_n(v, w):
            return False
    return True


def tau_apply(k: int, g: Mat2, p: PolyVector) -> PolyVector:
    """tau_k(g) v = v((X, Y) g) det(g)^{-k} on W_k = Sym^{2k} (x) det^{-k}."""
    return act(p, [g], [-k])


# ---------------------------------------------------------------------------
# the polynomials entering the lift

def poly_p(y: Mat2, tag: str = "v0") -> PolyVector:
    """p(y) = -beta X^2 + 2 alpha X Y + gamma Y^2 for y = [[alpha, beta], [gamma, -alpha]],
    computed from the entries of any y (2 alpha = y_11 - y_22)."""
    v = PolyVector((2,), tags=(tag,))
    v.coeffs[2] = -y.b
    v.coeffs[1] = y.a - y.d
    v.coeffs[0] = y.c
    return v


def poly_q(x: Mat2, tags=("v0", "v1")) -> PolyVector:
    """q(x) = Tr(x* J W) for W = (X_1, Y_1)^t (X_2, Y_2), bidegree (1, 1)."""
    v = PolyVector((1, 1), tags=tags)
    v.coeffs[1, 1] = x.b
    v.coeffs[0, 1] = x.d
    v.coeffs[1, 0] = -x.a
    v.coeffs[0, 0] = -x.c
    return v


def poly_P_alpha(x1: Mat2, x2: Mat2, alpha: int, k: tuple[int, int]) -> PolyVector:
    """p(x1 x2* - Tr/2)^{k1 - k2} q(x1)^alpha q(x2)^{2 k2 - alpha} in W_{k1} (x) W_{k2}."""
    k1, k2 = k
    m = x1 * x2.adj()
    pp = poly_p(m)
    # bring p into the two-factor shape (degree 0 in the second pair)
    p2 = PolyVector((2, 0), pp.coeffs.reshape(3, 1), ("v0", "v1"))
    out = p2 ** (k1 - k2) if k1 > k2 else PolyVector((0, 0), np.ones((1, 1), dtype=object), ("v0", "v1"))
    q1 = poly_q(x1)
    q2 = poly_q(x2)
    if alpha:
        out = out * (q1 ** alpha)
    if 2 * k2 - alpha:
        out = out * (q2 ** (2 * k2 - alpha))
    return out


def poly_P_k(x1: Mat2, x2: Mat2, k: tuple[int, int]) -> PolyVector:
    """sum_alpha C(2 k2, alpha) P_alpha(x) X^alpha Y^{2 k2 - alpha}, a vector of
    degrees (2 k1, 2 k2, 2 k2) in the pairs (X_1, Y_1), (X_2, Y_2), (X, Y)."""
    k1, k2 = k
    if not (k1 >= k2 >= 0):
        raise ValueError("need k1 >= k2 >= 0")
    # expand p^{k1-k2} (X q1 + Y q2)^{2 k2} directly as a three-factor product
    m = x1 * x2.adj()
    pp = poly_p(m)
    p3 = PolyVector((2, 0, 0), pp.coeffs.reshape(3, 1, 1), ("v0", "v1", "v2"))
    lin = PolyVector((1, 1, 1), tags=("v0", "v1", "v2"))
    q1 = poly_q(x1).coeffs
    q2 = poly_q(x2).coeffs
    lin.coeffs[:, :, 1] = q1
    lin.coeffs[:, :, 0] = q2
    one = PolyVector((0, 0, 0), np.ones((1, 1, 1), dtype=object), ("v0", "v1", "v2"))
    out = p3 ** (k1 - k2) if k1 > k2 else one
    if k2:
        out = out * (lin ** (2 * k2))
    return out


def p_equivariance_check(rng, trials: int = 100) -> bool:
    """p(g x g^-1) = tau_1(g) p(x) for random traceless x and g in GL_2(Q)."""
    for _ in range(trials):
        g = random_gl2(rng)
        a, b, c = (Fraction(rng.randint(-20, 20), rng.randint(1, 9)) for _ in range(3))
        x = Mat2(a, b, c, -a)
        if not (poly_p(g * x * g.inverse()) - tau_apply(1, g, poly_p(x))).is_zero():
            return False
    return True


def P_k_equivariance_check(k: tuple[int, int], rng, trials: int = 100) -> bool:
    """P_k(a x_i d^-1 mixed by g) = tau_{k1}(a) (x) tau_{k2}(d) (x) rho(g^t) P_k(x_1, x_2)
    for det a = det d, where (x_1, x_2) g = (g11 x_1 + g21 x_2, g12 x_1 + g22 x_2)
    and rho = Sym^{2 k2} (x) det^{k1 - k2}."""
    k1, k2 = k
    for _ in range(trials):
        a = random_gl2(rng)
        d = random_gl2(rng)
        r = a.det() / d.det()
        d = Mat2(d.a * r, d.b * r, d.c, d.d)
        g = random_gl2(rng)
        x1, x2 = random_gl2(rng), random_gl2(rng)
        y1, y2 = a * x1 * d.inverse(), a * x2 * d.inverse()
        z1, z2 = y1 * g.a + y2 * g.c, y1 * g.b + y2 * g.d
        lhs = poly_P_k(z1, z2, k)
        rhs = act(poly_P_k(x1, x2, k), [a, d, g.transpose()], [-k1, -k2, k1 - k2])
        if not (lhs - rhs).is_zero():
            return False
    return True


def poly_Q_S(S: Mat2, k2: int, sqrt_det, total_exponent: int) -> PolyVector:
    """(x S x^t)^{k2} sqrt(det S)^{-total_exponent}, x = (X, Y)."""
    form = PolyVector((2,), tags=("v0",))
    form.coeffs[2] = S.a
    form.coeffs[1] = S.b + S.c
    form.coeffs[0] = S.d
    out = form ** k2 if k2 else PolyVector((0,), np.ones((1,), dtype=object), ("v0",))
    return out.scale((1 / sqrt_det) ** total_exponent)


def slice_last(p: PolyVector, i: int) -> PolyVector:
    """Coefficient of X^i Y^{d - i} in the last pair, as a vector in the others."""
    return PolyVector(p.degrees[:-1], p.coeffs[..., i], p.tags[:-1])


def contract_first(p: PolyVector, vectors: Sequence[PolyVector]) -> PolyVector:
    """Pair the first len(vectors) factors of p with the given one-factor vectors."""
    out = p.coeffs
    for t, v in enumerate(vectors):
        n = p.degrees[t]
        w = np.empty(n + 1, dtype=object)
        for i in range(n + 1):
            w[i] = v.coeffs[n - i] * Fraction((-1) ** i, math.comb(n, i))
        out = np.tensordot(w, out, axes=([0], [0]))
    rest = p.degrees[len(vectors):]
    return PolyVector(rest, out, p.tags[len(vectors):])


# ---------------------------------------------------------------------------
# symbolic check of pluriharmonicity

def pluriharmonic_check(k: tuple[int, int]) -> dict:
    """Expand P_k over independent indeterminates z_i, zbar_i, w_i, wbar_i
    (x_i = [[z_i, w_i], [-wbar_i, zbar_i]]) and apply the operators
    D_ii = d^2/dz_i dzbar_i + d^2/dw_i dwbar_i and the symmetrised cross
    operator D_12 = d^2/dz_1 dzbar_2 + d^2/dzbar_1 dz_2 + d^2/dw_1 dwbar_2 + d^2/dwbar_1 dw_2."""
    from sympy import QQ
    from sympy.polys.rings import ring

    R, z1, zb1, w1, wb1, z2, zb2, w2, wb2 = ring("z1 zb1 w1 wb1 z2 zb2 w2 wb2", QQ)
    x1 = Mat2(z1, w1, -wb1, zb1)
    x2 = Mat2(z2, w2, -wb2, zb2)
    P = poly_P_k(x1, x2, k)
    ops = {
        "11": lambda c: c.diff(z1).diff(zb1) + c.diff(w1).diff(wb1),
        "22": lambda c: c.diff(z2).diff(zb2) + c.diff(w2).diff(wb2),
        "12": lambda c: (c.diff(z1).diff(zb2) + c.diff(zb1).diff(z2)
                         + c.diff(w1).diff(wb2) + c.diff(wb1).diff(w2)),
    }
    failures = []
    integral = True
    nterms = 0
    for idx in np.ndindex(P.coeffs.shape):
        c = R(P.coeffs[idx])
        if not c:
            continue
        nterms += len(c.terms())
        if any(v.denominator != 1 for v in c.coeffs()):
            integral = False
        for name, op in ops.items():
            if op(c):
                failures.append((idx, name))
    return {"k": list(k), "pluriharmonic": not failures, "integral": integral,
            "failures": failures[:5], "terms": nterms}

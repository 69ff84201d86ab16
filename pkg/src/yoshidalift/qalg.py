"""Definite quaternion algebras over Q, maximal and Eichler orders, local
splittings, right ideal classes and optimal embeddings of imaginary quadratic
orders.

Elements are 4-tuples of Fractions in the basis 1, i, j, k = ij with
i^2 = a, j^2 = b.  Lattices are `RationalLattice` objects in those coordinates.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import sympy

from .field import FieldTower, default_tower
from .lattice import RationalLattice, congruence_kernel, nullspace_mod_p, short_vectors

Quat = tuple  # (x0, x1, x2, x3) of Fractions


def _prime_factors(n: int) -> list[int]:
    return sorted(sympy.factorint(abs(n)).keys()) if abs(n) > 1 else []


def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def _frac_gcd(values) -> Fraction:
    num = 0
    den = 1
    fr = [Fraction(v) for v in values if v != 0]
    if not fr:
        return Fraction(0)
    den = _lcm(v.denominator for v in fr)
    for v in fr:
        num = math.gcd(num, int(v * den))
    return Fraction(num, den)


def _vp(n, p: int) -> int:
    n = Fraction(n)
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    a, b = n.numerator, n.denominator
    while a % p == 0:
        a //= p
        v += 1
    while b % p == 0:
        b //= p
        v -= 1
    return v


# ---------------------------------------------------------------------------
# Hilbert symbols

def hilbert_symbol(a: int, b: int, p) -> int:
    """(a, b)_p for nonzero integers a, b and p a prime or the string 'inf'."""
    if p == "inf" or p == math.inf:
        return -1 if (a < 0 and b < 0) else 1
    al, u = 0, a
    while u % p == 0:
        u //= p
        al += 1
    be, v = 0, b
    while v % p == 0:
        v //= p
        be += 1
    if p == 2:
        eps = lambda t: ((t - 1) // 2) % 2
        omg = lambda t: ((t * t - 1) // 8) % 2
        e = eps(u) * eps(v) + al * omg(v) + be * omg(u)
        return -1 if e % 2 else 1
    leg = lambda t: 1 if pow(t % p, (p - 1) // 2, p) == 1 else -1
    s = (-1) ** (al * be * ((p - 1) // 2))
    if be % 2:
        s *= leg(u)
    if al % 2:
        s *= leg(v)
    return s


def ramified_primes(a: int, b: int) -> list[int]:
    cands = set(_prime_factors(2 * a * b))
    return sorted(p for p in cands if hilbert_symbol(a, b, p) == -1)


# ---------------------------------------------------------------------------
# the algebra

class QuaternionAlgebra:
    """(a, b)_Q with a, b negative integers (definite)."""

    def __init__(self, a: int, b: int):
        self.a = int(a)
        self.b = int(b)

    def __repr__(self):
        return f"QuaternionAlgebra({self.a}, {self.b})"

    def mul(self, x: Quat, y: Quat) -> Quat:
        a, b = self.a, self.b
        x0, x1, x2, x3 = x
        y0, y1, y2, y3 = y
        return (x0 * y0 + a * x1 * y1 + b * x2 * y2 - a * b * x3 * y3,
                x0 * y1 + x1 * y0 - b * x2 * y3 + b * x3 * y2,
                x0 * y2 + x2 * y0 + a * x1 * y3 - a * x3 * y1,
                x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1)

    @staticmethod
    def conj(x: Quat) -> Quat:
        return (x[0], -x[1], -x[2], -x[3])

    def norm(self, x: Quat) -> Fraction:
        a, b = self.a, self.b
        return x[0] * x[0] - a * x[1] * x[1] - b * x[2] * x[2] + a * b * x[3] * x[3]

    @staticmethod
    def trace(x: Quat) -> Fraction:
        return 2 * x[0]

    def pairing(self, x: Quat, y: Quat) -> Fraction:
        """Tr(x conj(y))."""
        a, b = self.a, self.b
        return 2 * (x[0] * y[0] - a * x[1] * y[1] - b * x[2] * y[2] + a * b * x[3] * y[3])

    def inverse(self, x: Quat) -> Quat:
        n = self.norm(x)
        c = self.conj(x)
        return tuple(Fraction(t) / n for t in c)

    def one(self) -> Quat:
        return (Fraction(1), Fraction(0), Fraction(0), Fraction(0))

    def norm_gram(self, basis: Sequence[Quat]) -> list[list[Fraction]]:
        """Gram matrix G of the norm form, v^t G v = n(sum v_i b_i)."""
        return [[self.pairing(u, v) / 2 for v in basis] for u in basis]

    def ramified_primes(self) -> list[int]:
        return ramified_primes(self.a, self.b)

    def to_matrix(self, x: Quat, tower: FieldTower | None = None):
        """Image in M_2(Q(sqrt a)) under i -> diag(s, -s), j -> [[0, b], [1, 0]]."""
        tower = tower or default_tower()
        s = tower.sqrt(self.a)
        x0, x1, x2, x3 = (Fraction(t) for t in x)
        return ((s * x1 + x0, (s * x3 + x2) * self.b),
                (-s * x3 + x2, -s * x1 + x0))


def make_algebra(n_minus: int) -> QuaternionAlgebra:
    """Smallest definite presentation (a, b) ramified exactly at the primes of
    n_minus (and infinity); a = -1 is preferred when possible."""
    target = _prime_factors(n_minus)
    if len(target) % 2 == 0:
        raise ValueError("a definite algebra needs an odd number of finite ramified primes")
    if any(e > 1 for e in sympy.factorint(n_minus).values()):
        raise ValueError("discriminant must be squarefree")
    for s in range(2, 4 * n_minus + 20):
        for aa in range(1, s):
            bb = s - aa
            if aa > bb:
                continue
            if ramified_primes(-aa, -bb) == target:
                return QuaternionAlgebra(-aa, -bb)
    raise RuntimeError("no presentation found")


# ---------------------------------------------------------------------------
# lattices in the algebra

class QuatLattice:
    """A full rank Z-lattice in the algebra, with basis rows in 1, i, j, k coordinates."""

    def __init__(self, alg: QuaternionAlgebra, rows):
        self.alg = alg
        self.lat = rows if isinstance(rows, RationalLattice) else RationalLattice(rows)

    @property
    def basis(self) -> list[Quat]:
        return [tuple(r) for r in self.lat.basis]

    def __eq__(self, other):
        return isinstance(other, QuatLattice) and self.lat == other.lat

    def __hash__(self):
        return hash(self.lat)

    def __repr__(self):
        return f"QuatLattice({self.lat.basis})"

    def contains(self, x: Quat) -> bool:
        return self.lat.contains(x)

    def coordinates(self, x: Quat) -> list[Fraction]:
        return self.lat.coordinates(x)

    def element(self, coords) -> Quat:
        out = [Fraction(0)] * 4
        for c, b in zip(coords, self.basis):
            if c:
                for t in range(4):
                    out[t] += c * b[t]
        return tuple(out)

    def gram(self) -> list[list[Fraction]]:
        return self.alg.norm_gram(self.basis)

    def norm(self) -> Fraction:
        """Reduced norm: generator of the Z-module spanned by n(x), x in the lattice."""
        g = self.gram()
        vals = [g[i][i] for i in range(4)] + [2 * g[i][j] for i in range(4) for j in range(i + 1, 4)]
        return _frac_gcd(vals)

    def discriminant(self) -> Fraction:
        """Reduced discriminant sqrt(det(Tr(b_i conj b_j)))."""
        g = self.gram()
        d = sympy.Matrix([[2 * x for x in r] for r in g]).det()
        d = Fraction(str(d))
        r = Fraction(math.isqrt(d.numerator), math.isqrt(d.denominator))
        if r * r != d:
            raise ValueError("discriminant is not a square")
        return r

    def conjugate(self) -> "QuatLattice":
        return QuatLattice(self.alg, [self.alg.conj(b) for b in self.basis])

    def scale(self, c) -> "QuatLattice":
        return QuatLattice(self.alg, self.lat.scale(c))

    def left_mul(self, x: Quat) -> "QuatLattice":
        return QuatLattice(self.alg, [self.alg.mul(x, b) for b in self.basis])

    def right_mul(self, x: Quat) -> "QuatLattice":
        return QuatLattice(self.alg, [self.alg.mul(b, x) for b in self.basis])

    def __mul__(self, other: "QuatLattice") -> "QuatLattice":
        return QuatLattice(self.alg, [self.alg.mul(u, v) for u in self.basis for v in other.basis])

    def intersection(self, other: "QuatLattice") -> "QuatLattice":
        return QuatLattice(self.alg, self.lat.intersection(other.lat))

    def __add__(self, other: "QuatLattice") -> "QuatLattice":
        return QuatLattice(self.alg, self.lat.sum(other.lat))

    def left_order(self) -> "QuatLattice":
        lat = None
        for b in self.basis:
            t = self.right_mul(self.alg.inverse(b))
            lat = t if lat is None else lat.intersection(t)
        return lat

    def right_order(self) -> "QuatLattice":
        lat = None
        for b in self.basis:
            t = self.left_mul(self.alg.inverse(b))
            lat = t if lat is None else lat.intersection(t)
        return lat

    def is_order(self) -> bool:
        if not self.contains(self.alg.one()):
            return False
        return all(self.contains(self.alg.mul(u, v)) for u in self.basis for v in self.basis)

    def short_elements(self, bound, lower=0, scale=1):
        """Elements x with lower <= n(x)/scale <= bound, with their norms."""
        g = [[x / scale for x in r] for r in self.gram()]
        vecs, vals = short_vectors(g, bound, lower)
        return [self.element([Fraction(int(c)) for c in v]) for v in vecs], vals


def _ring_closure(alg: QuaternionAlgebra, basis: list[Quat], min_disc: Fraction):
    lat = QuatLattice(alg, basis)
    for _ in range(12):
        new = lat + QuatLattice(alg, [alg.mul(u, v) for u in lat.basis for v in lat.basis])
        try:
            d = new.discriminant()
        except ValueError:
            return None
        if d < min_disc or d.denominator != 1:
            return None
        if new == lat:
            return lat
        lat = new
    return None


def maximal_order(alg: QuaternionAlgebra) -> QuatLattice:
    """A maximal order, by saturating Z<i, j> one prime at a time."""
    one = Fraction(1)
    z = Fraction(0)
    order = QuatLattice(alg, [(one, z, z, z), (z, one, z, z), (z, z, one, z), (z, z, z, one)])
    target = Fraction(math.prod(alg.ramified_primes()))
    while order.discriminant() != target:
        d = order.discriminant()
        p = _prime_factors(int(d / target))[0]
        basis = order.basis
        found = None
        for coeffs in itertools.product(range(p), repeat=4):
            if not any(coeffs):
                continue
            x = tuple(sum(Fraction(c, p) * b[t] for c, b in zip(coeffs, basis)) for t in range(4))
            if alg.trace(x).denominator != 1 or alg.norm(x).denominator != 1:
                continue
            cand = _ring_closure(alg, basis + [x], target)
            if cand is not None and cand.discriminant() < d:
                found = cand
                break
        if found is None:
            raise RuntimeError("maximal order saturation failed")
        order = found
    return order


# ---------------------------------------------------------------------------
# local splittings

def _hensel_root(coeffs: Sequence[int], r: int, p: int, prec: int) -> int:
    """Lift a simple root r mod p of the integer polynomial (low to high)."""
    mod = p
    f = lambda t: sum(c * t ** i for i, c in enumerate(coeffs))
    df = lambda t: sum(i * c * t ** (i - 1) for i, c in enumerate(coeffs) if i)
    target = p ** prec
    while mod < target:
        mod = min(mod * mod, target)
        r = (r - f(r) * pow(df(r), -1, mod)) % mod
    return r % target


def _mod_inv_frac(x: Fraction, m: int) -> int:
    return (x.numerator * pow(x.denominator, -1, m)) % m


class LocalSplitting:
    """A ring homomorphism O -> M_2(Z / p^prec) for a maximal order O and p
    not dividing its discriminant, built from an idempotent."""

    def __init__(self, alg: QuaternionAlgebra, order: QuatLattice, p: int, prec: int):
        self.alg = alg
        self.order = order
        self.p = p
        self.prec = prec
        self.mod = p ** prec
        basis = order.basis
        n = 4
        # structure constants in order coordinates
        self._struct = [[[int(c) for c in order.coordinates(alg.mul(u, v))] for v in basis] for u in basis]
        self._one = [int(c) for c in order.coordinates(alg.one())]
        x_coords, r1, r2 = self._find_split_element(basis)
        m = self.mod
        inv = pow((r1 - r2) % m, -1, m)
        e = [((x_coords[t] - r2 * self._one[t]) * inv) % m for t in range(n)]
        us = [self._mul(self._unit(k), e) for k in range(n)]
        pair = None
        for k1, k2 in itertools.combinations(range(n), 2):
            for c1, c2 in itertools.combinations(range(n), 2):
                det = us[k1][c1] * us[k2][c2] - us[k1][c2] * us[k2][c1]
                if det % p:
                    pair = (k1, k2, c1, c2)
                    break
            if pair:
                break
        k1, k2, c1, c2 = pair
        self._u = (us[k1], us[k2])
        self._minor = (c1, c2)
        det = us[k1][c1] * us[k2][c2] - us[k1][c2] * us[k2][c1]
        self._det_inv = pow(det % m, -1, m)
        self.basis_images = [self._left_action(k) for k in range(n)]

    def _unit(self, k):
        return [int(t == k) for t in range(4)]

    def _mul(self, u, v):
        m = self.mod
        out = [0] * 4
        for a in range(4):
            if u[a]:
                for b in range(4):
                    if v[b]:
                        w = u[a] * v[b]
                        sc = self._struct[a][b]
                        for t in range(4):
                            out[t] += w * sc[t]
        return [t % m for t in out]

    def _find_split_element(self, basis):
        p = self.p
        for coeffs in itertools.product(range(-2, 3), repeat=4):
            x = tuple(sum(c * b[t] for c, b in zip(coeffs, basis)) for t in range(4))
            tr = self.alg.trace(x)
            nm = self.alg.norm(x)
            tr, nm = int(tr), int(nm)
            roots = [r for r in range(p) if (r * r - tr * r + nm) % p == 0]
            if len(roots) == 2:
                poly = [nm, -tr, 1]
                r1 = _hensel_root(poly, roots[0], p, self.prec)
                r2 = _hensel_root(poly, roots[1], p, self.prec)
                return list(coeffs), r1, r2
        raise RuntimeError("no split element found")

    def _solve(self, w):
        """Coordinates (alpha, beta) with w = alpha u1 + beta u2."""
        m = self.mod
        c1, c2 = self._minor
        u1, u2 = self._u
        a = (w[c1] * u2[c2] - w[c2] * u2[c1]) * self._det_inv % m
        b = (u1[c1] * w[c2] - u1[c2] * w[c1]) * self._det_inv % m
        return a, b

    def _left_action(self, k):
        u1, u2 = self._u
        a1, b1 = self._solve(self._mul(self._unit(k), u1))
        a2, b2 = self._solve(self._mul(self._unit(k), u2))
        return ((a1, a2), (b1, b2))

    def image_coords(self, coords) -> tuple:
        """Image of sum c_k O_k; the c_k are rationals prime to p in the denominator."""
        m = self.mod
        out = [[0, 0], [0, 0]]
        for c, mat in zip(coords, self.basis_images):
            c = Fraction(c)
            if c == 0:
                continue
            ci = _mod_inv_frac(c, m)
            for r in range(2):
                for s in range(2):
                    out[r][s] += ci * mat[r][s]
        return tuple(tuple(v % m for v in row) for row in out)

    def image(self, x: Quat) -> tuple:
        return self.image_coords(self.order.coordinates(x))


def mat_mul_mod(a, b, m):
    return tuple(tuple(sum(a[i][t] * b[t][j] for t in range(2)) % m for j in range(2)) for i in range(2))


# ---------------------------------------------------------------------------
# the arithmetic context: algebra, orders and right ideal classes

def eichler_mass(n_minus: int, n_plus: int) -> Fraction:
    """Sum over right ideal classes of 1/|O_l(I)^x|."""
    m = Fraction(1, 24)
    for p in _prime_factors(n_minus):
        m *= p - 1
    for p, e in sympy.factorint(n_plus).items():
        m *= Fraction(p + 1) * p ** (e - 1)
    return m


@dataclass
class IdealClass:
    ideal: QuatLattice
    norm: Fraction
    left_order: QuatLattice
    units: list  # all elements of norm 1 in the left order


class QuatContext:
    """Algebra, maximal order, Eichler order of level n_plus and its classes."""

    PREC_EXTRA = 24

    def __init__(self, n_minus: int, n_plus: int = 1, algebra: QuaternionAlgebra | None = None,
                 max_order: QuatLattice | None = None):
        if math.gcd(n_minus, n_plus) != 1:
            raise ValueError("levels must be coprime")
        self.n_minus = n_minus
        self.n_plus = n_plus
        self.alg = algebra or make_algebra(n_minus)
        self.max_order = max_order or maximal_order(self.alg)
        self._splittings: dict = {}
        self.level_factors = dict(sympy.factorint(n_plus))
        self.order = self._eichler_order()
        self._classes = None
        self._neighbor_cache: dict = {}

    # -- local data -------------------------------------------------------
    def splitting(self, p: int, prec: int | None = None) -> LocalSplitting:
        if self.n_minus % p == 0:
            raise ValueError("the algebra is ramified at p")
        base_prec = self.level_factors.get(p, 0) + self.PREC_EXTRA
        prec = max(prec or 0, base_prec)
        s = self._splittings.get(p)
        if s is None or s.prec < prec:
            s = LocalSplitting(self.alg, self.max_order, p, prec)
            self._splittings[p] = s
        return s

    def _eichler_order(self) -> QuatLattice:
        order = self.max_order
        if self.n_plus == 1:
            return order
        rows, mods = [], []
        for q, e in self.level_factors.items():
            sp = self.splitting(q)
            # lower-left entry is linear in the order coordinates
            rows.append([mat[1][0] for mat in sp.basis_images])
            mods.append(q ** e)
        ker = congruence_kernel(rows, mods, 4)
        basis = [order.element([Fraction(c) for c in v]) for v in ker]
        return QuatLattice(self.alg, basis)

    def local_image(self, p: int, x: Quat, prec: int | None = None):
        """Phi_p(x) for x integral at p (in the maximal order locally)."""
        sp = self.splitting(p, prec)
        coords = self.max_order.coordinates(x)
        return sp.image_coords(coords)

    # -- ideal classes ------------------------------------------------------
    def class_of_norm_one_units(self, lo: QuatLattice) -> list:
        elems, _ = lo.short_elements(1, 1)
        return elems

    def make_class(self, ideal: QuatLattice) -> IdealClass:
        lo = ideal.left_order()
        return IdealClass(ideal, ideal.norm(), lo, self.class_of_norm_one_units(lo))

    def neighbor_prime(self) -> int:
        p = 2
        while (self.n_minus * self.n_plus) % p == 0:
            p = int(sympy.nextprime(p))
        return p

    def neighbors(self, ideal: QuatLattice, p: int) -> list[QuatLattice]:
        """The p + 1 right R-ideals J in I with I/J of order p^2 and n(J) = p n(I)."""
        key = (ideal, p)
        if key in self._neighbor_cache:
            return self._neighbor_cache[key]
        alg = self.alg
        nI = ideal.norm()
        # an element alpha of I with n(alpha)/n(I) prime to p generates I locally at p
        alpha = None
        elems, vals = ideal.short_elements(8, 1, nI)
        for x, v in zip(elems, vals):
            if Fraction(v).numerator % p:
                alpha = x
                break
        bound = 8
        while alpha is None:
            bound *= 2
            elems, vals = ideal.short_elements(bound, 1, nI)
            for x, v in zip(elems, vals):
                if Fraction(v).numerator % p:
                    alpha = x
                    break
        ainv = alg.inverse(alpha)
        sp = self.splitting(p)
        mats = []
        for b in ideal.basis:
            y = alg.mul(ainv, b)
            mats.append(sp.image_coords(self.max_order.coordinates(y)))
        out = []
        lines = [(1, t) for t in range(p)] + [(0, 1)]
        for v in lines:
            w = (-v[1] % p, v[0] % p)  # w . v = 0
            rows = []
            for col in range(2):
                rows.append([(w[0] * m[0][col] + w[1] * m[1][col]) % p for m in mats])
            ker = congruence_kernel(rows, [p, p], 4)
            basis = [ideal.element([Fraction(c) for c in r]) for r in ker]
            out.append(QuatLattice(alg, basis))
        self._neighbor_cache[key] = out
        return out

    def isomorphism(self, J: QuatLattice, I: QuatLattice):
        """Return gamma with J = gamma I, or None."""
        target = J.norm() * I.norm()
        prod = J * I.conjugate()
        elems, _ = prod.short_elements(1, 1, target)
        if not elems:
            return None
        y = elems[0]
        gamma = tuple(t / I.norm() for t in y)
        return gamma

    @property
    def classes(self) -> list[IdealClass]:
        if self._classes is None:
            self._classes = self._enumerate_classes()
        return self._classes

    def _enumerate_classes(self) -> list[IdealClass]:
        mass = eichler_mass(self.n_minus, self.n_plus)
        first = self.make_class(self.order)
        classes = [first]
        acc = Fraction(1, len(first.units))
        p = self.neighbor_prime()
        queue = [first]
        while acc < mass and queue:
            cur = queue.pop(0)
            for J in self.neighbors(cur.ideal, p):
                if any(self.isomorphism(J, c.ideal) is not None for c in classes):
                    continue
                new = self.make_class(J)
                classes.append(new)
                queue.append(new)
                acc += Fraction(1, len(new.units))
                if acc >= mass:
                    break
        if acc != mass:
            raise RuntimeError(f"mass check failed: {acc} != {mass}")
        return classes

    def class_index(self, J: QuatLattice):
        """(index m, gamma) with J = gamma I_m."""
        for m, c in enumerate(self.classes):
            g = self.isomorphism(J, c.ideal)
            if g is not None:
                return m, g
        raise RuntimeError("ideal not isomorphic to any class representative")

    def mass_check(self) -> tuple[Fraction, Fraction]:
        return sum((Fraction(1, len(c.units)) for c in self.classes), Fraction(0)), \
            eichler_mass(self.n_minus, self.n_plus)

    # -- lattices from local data --------------------------------------------
    def local_lattice(self, local: dict) -> QuatLattice:
        """J = x R^ intersected with D, where `local` maps primes p to 2x2
        rational matrices (x_p in GL_2(Q_p)) for p not dividing n_minus, or to
        quaternions (x_p in D_p^x) for p dividing n_minus.  Primes not listed
        have x_p = 1."""
        alg = self.alg
        R = self.order
        rows, mods = [], []
        scale = Fraction(1)
        for p, xp in sorted(local.items()):
            if self.n_minus % p == 0:
                # locally x_p R_p = pi^v R_p with v the valuation of the norm
                v = _vp(alg.norm(xp), p)
                rows_p, mods_p, sc = self._ramified_conditions(p, v)
            else:
                rows_p, mods_p, sc = self._split_conditions(p, xp)
            rows += rows_p
            mods += mods_p
            scale *= sc
        # J = scale * {y in R : conditions}
        if rows:
            ker = congruence_kernel(rows, mods, 4)
        else:
            ker = [[int(i == j) for j in range(4)] for i in range(4)]
        basis = [tuple(scale * t for t in R.element([Fraction(c) for c in r])) for r in ker]
        return QuatLattice(alg, basis)

    def _split_conditions(self, p: int, xp):
        xp = [[Fraction(t) for t in row] for row in xp]
        det = xp[0][0] * xp[1][1] - xp[0][1] * xp[1][0]
        inv = [[xp[1][1] / det, -xp[0][1] / det], [-xp[1][0] / det, xp[0][0] / det]]
        e = self.level_factors.get(p, 0)
        s = max([0] + [-_vp(t, p) for row in xp for t in row if t != 0])
        t = max([0] + [-_vp(u, p) for row in inv for u in row if u != 0])
        shift = s + e
        target = t + shift
        prec = target + e + 2
        sp = self.splitting(p, prec)
        m = sp.mod
        M = [[_mod_inv_frac(p ** t * u, m) if u != 0 else 0 for u in row] for row in inv]
        imgs = [sp.image_coords(self.max_order.coordinates(b)) for b in self.order.basis]
        rows, mods = [], []
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)]:
            row = [(M[r][0] * A[0][c] + M[r][1] * A[1][c]) % m for A in imgs]
            rows.append(row)
            mods.append(p ** (target + (e if (r, c) == (1, 0) else 0)))
        # the units of Z_(p) in the scaling are irrelevant; use p^-shift
        return rows, mods, Fraction(1, p ** shift)

    def _ramified_conditions(self, p: int, v: int):
        """x_p R_p = P^v with P the maximal ideal of R_p; P^v = p^(v//2) P^(v%2)."""
        q, r = divmod(v, 2)
        if r == 0:
            return [], [], Fraction(p) ** q
        pi = self.uniformizer(p)
        P = self.order.left_mul(pi) + self.order.scale(p)
        coords = [[int(c) for c in self.order.coordinates(b)] for b in P.basis]
        forms = nullspace_mod_p(coords, p)
        return forms, [p] * len(forms), Fraction(p) ** q

    def uniformizer(self, p: int) -> Quat:
        """An element of R with reduced norm p (or of p-valuation one)."""
        elems, vals = self.order.short_elements(p, p)
        if elems:
            return elems[0]
        bound = 2 * p
        while True:
            elems, vals = self.order.short_elements(bound, 1)
            for x, v in zip(elems, vals):
                if _vp(v, p) == 1:
                    return x
            bound *= 2

    def atkin_lehner_ideal(self, q: int) -> QuatLattice:
        """The two-sided R-ideal of norm q^e for q^e || N^+ N^-."""
        alg = self.alg
        R = self.order
        if self.n_minus % q == 0:
            pi = self.uniformizer(q)
            return R.left_mul(pi) + R.scale(q)
        e = self.level_factors[q]
        mod = q ** e
        sp = self.splitting(q)
        imgs = [sp.image_coords(self.max_order.coordinates(b)) for b in R.basis]
        # w R_q = {[[-N b, a], [-N d, N c]]}: diagonal entries divisible by q^e
        rows = [[A[0][0] % mod for A in imgs], [A[1][1] % mod for A in imgs]]
        ker = congruence_kernel(rows, [mod, mod], 4)
        return QuatLattice(alg, [R.element([Fraction(c) for c in r]) for r in ker])


# ---------------------------------------------------------------------------
# optimal embeddings of imaginary quadratic fields

def fundamental_discriminant(d: int) -> int:
    """Discriminant of Q(sqrt(-d)) for a squarefree positive d."""
    return -d if (-d) % 4 == 1 else -4 * d


def kronecker(D: int, p: int) -> int:
    return int(sympy.jacobi_symbol(D % p, p)) if p != 2 else (
        0 if D % 2 == 0 else (1 if D % 8 in (1, 7) else -1))


@dataclass
class ImagQuadField:
    """K = Q(sqrt(-d)), d squarefree positive."""
    d: int

    @property
    def disc(self) -> int:
        return fundamental_discriminant(self.d)

    @property
    def omega(self) -> tuple:
        """(trace, norm) of the standard generator of O_K."""
        if self.disc % 4 == 0:
            return 0, self.d
        return 1, (1 + self.d) // 4

    def splitting_type(self, p: int) -> str:
        k = kronecker(self.disc, p)
        return {1: "split", -1: "inert", 0: "ramified"}[k]

    def units(self) -> int:
        return {3: 6, 1: 4}.get(self.d, 2)


def heegner_ok(K: ImagQuadField, n_minus: int, n_plus: int) -> bool:
    if any(K.splitting_type(p) != "inert" for p in _prime_factors(n_minus)):
        return False
    return all(K.splitting_type(p) == "split" for p in _prime_factors(n_plus))


def optimal_embedding(ctx: QuatContext, K: ImagQuadField, order: QuatLattice | None = None) -> Quat:
    """An element y of the order (default R) with the trace and norm of the
    generator of O_K; the map omega -> y is an optimal embedding since O_K is
    maximal."""
    if not heegner_ok(K, ctx.n_minus, ctx.n_plus):
        raise ValueError("Heegner hypothesis fails for this field and level")
    t, n = K.omega
    elems, _ = (order or ctx.order).short_elements(n, n)
    for y in elems:
        if ctx.alg.trace(y) == t:
            return y
    raise RuntimeError("no optimal embedding found")


def optimal_embedding_in_classes(ctx: QuatContext, K: ImagQuadField) -> tuple[int, Quat]:
    """(m, y) with y an optimal embedding of O_K into the left order of the
    first class representative I_m whose left order admits one."""
    for m, c in enumerate(ctx.classes):
        try:
            return m, optimal_embedding(ctx, K, c.left_order)
        except RuntimeError:
            continue
    raise RuntimeError("no optimal embedding into any left order of the class set")


def embedded_sqrt(ctx: QuatContext, K: ImagQuadField, y: Quat) -> Quat:
    """iota(sqrt(-d)) from iota(omega)."""
    if K.disc % 4 == 0:
        return y
    return tuple(2 * y[t] - (1 if t == 0 else 0) for t in range(4))


def _solve_conjugator(A, T, p: int, prec: int):
    """An invertible S mod p^prec with A S = S T (both integral mod p^prec)."""
    m = p ** prec
    # unknowns s11, s12, s21, s22; linear equations (A S - S T) = 0
    eqs = []
    for r in range(2):
        for c in range(2):
            row = [0] * 4
            for t in range(2):
                row[2 * t + c] += A[r][t]
                row[2 * r + t] -= T[t][c]
            eqs.append([v % m for v in row])
    ker = congruence_kernel(eqs, [m] * 4, 4)
    # the solution module mod p^prec contains a free rank-2 part; search small combos
    for coeffs in itertools.product(range(-2, 3), repeat=len(ker)):
        s = [sum(c * k[t] for c, k in zip(coeffs, ker)) % m for t in range(4)]
        if (s[0] * s[3] - s[1] * s[2]) % p:
            return ((s[0], s[1]), (s[2], s[3]))
    raise RuntimeError("no invertible conjugator found")


def local_sigma(ctx: QuatContext, K: ImagQuadField, y: Quat, p: int, prec: int = 20):
    """Matrix s in GL_2(Z_p) mod p^prec putting the local image in standard form:
    s^-1 Phi_p(iota(omega)) s is diagonal if p splits and the companion matrix
    of omega if p is inert; s^-1 Phi_p(iota(sqrt -d)) s is the companion matrix
    of sqrt(-d) if p ramifies."""
    if ctx.n_minus % p == 0:
        raise ValueError("p divides the discriminant of the algebra")
    m = p ** prec
    delta = embedded_sqrt(ctx, K, y)
    typ = K.splitting_type(p)
    d = K.d
    if typ == "split":
        # diagonalise the image of omega (eigenvalues distinct mod p)
        W = ctx.local_image(p, y, prec + 2)
        W = tuple(tuple(v % m for v in row) for row in W)
        t, n = K.omega
        roots = [r for r in range(p) if (r * r - t * r + n) % p == 0]
        r1 = _hensel_root([n, -t, 1], roots[0], p, prec)
        r2 = _hensel_root([n, -t, 1], roots[1], p, prec)
        # sqrt(-d) = 2 omega - t; choose the order with the first eigenvalue of
        # sqrt(-d) equal to the root fixed by `padic_sqrt_minus_d`
        s_root = padic_sqrt_minus_d(K, p, prec)
        if (2 * r1 - t - s_root) % m != 0:
            r1, r2 = r2, r1
        T = ((r1, 0), (0, r2))
        return _solve_conjugator(W, T, p, prec)
    if typ == "inert":
        # companion matrix of omega: lower-left entry 1 keeps the twisted
        # lattices optimal for every conductor
        t, n = K.omega
        W = ctx.local_image(p, y, prec + 2)
        W = tuple(tuple(v % m for v in row) for row in W)
        T = ((0, -n % m), (1, t % m))
        return _solve_conjugator(W, T, p, prec)
    D = ctx.local_image(p, delta, prec + 2)
    D = tuple(tuple(v % m for v in row) for row in D)
    T = ((0, (-d) % m), (1, 0))
    return _solve_conjugator(D, T, p, prec)


def padic_sqrt_minus_d(K: ImagQuadField, p: int, prec: int) -> int:
    """The p-adic square root of -d fixed once for all: the lift of the
    smallest root mod p, or 2 w - 1 with w the root of the O_K generator's
    minimal polynomial that is 1 mod 2 when p = 2."""
    m = p ** prec
    if p == 2:
        # -d = 1 mod 8; lift the root congruent to 1 mod 4 via omega
        t, n = K.omega
        # omega roots mod 2 are 0 and 1; sqrt(-d) = 2 omega - 1
        r = _hensel_root([n, -t, 1], 1, 2, prec)
        return (2 * r - 1) % m
    r0 = min(r for r in range(1, p) if (r * r + K.d) % p == 0)
    return _hensel_root([K.d, 0, 1], r0, p, prec)

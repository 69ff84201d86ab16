"""Bessel periods of Yoshida lifts, toric periods of quaternionic forms and
the identity relating them.

Ring class groups Pic(O_C), O_C = Z + C O_K, are realised by reduced primitive
binary quadratic forms of discriminant D = C^2 Delta_K.  The form (a, b, c)
is attached to the proper O_C-ideal [a, (b + sqrt D) / 2]; in this basis the
ideal's norm form divided by its norm is exactly a x^2 + b x y + c y^2, so the
same form indexes the class in the toric sum and the Fourier coefficient in
the Bessel sum.  Ideals are Z-lattices in K with coordinates (u, v) standing
for u + v sqrt(Delta_K).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import sympy

from .field import Element, FieldTower, PrimePlace, default_tower
from .lattice import RationalLattice
from .polyrep import HomogPoly, Mat2, PolyVector, pairing_n, poly_Q_S, tau_apply
from .qalg import (ImagQuadField, Quat, QuatContext, QuatLattice, embedded_sqrt, heegner_ok,
                   kronecker, local_sigma, optimal_embedding_in_classes)
from .qmforms import QuatForm, quat_mat2
from .yoshida import FourierTable, GramS, YoshidaLift


def _prime_factors(n: int) -> list[int]:
    return sorted(sympy.factorint(abs(n)).keys()) if abs(n) > 1 else []


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """(u, v, g) with u a + v b = g = gcd(a, b)."""
    u, v, g = sympy.gcdex(a, b)
    return int(u), int(v), int(g)


# ---------------------------------------------------------------------------
# binary quadratic forms

@dataclass(frozen=True, order=True)
class BinaryQF:
    """a x^2 + b x y + c y^2, positive definite."""
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_primitive(self) -> bool:
        return math.gcd(self.a, self.b, self.c) == 1

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        return b >= 0 if (abs(b) == a or a == c) else True

    def reduced(self) -> "BinaryQF":
        a, b, c = self.a, self.b, self.c
        D = self.disc
        while True:
            r = b % (2 * a)
            if r > a:
                r -= 2 * a
            b = r
            c = (b * b - D) // (4 * a)
            if a > c:
                a, b, c = c, -b, a
                continue
            if a == c and b < 0:
                b = -b
            return BinaryQF(a, b, c)

    def inverse(self) -> "BinaryQF":
        return BinaryQF(self.a, -self.b, self.c).reduced()

    @staticmethod
    def identity(D: int) -> "BinaryQF":
        return BinaryQF(1, D % 2, (D % 2 - D) // 4)

    def compose(self, other: "BinaryQF") -> "BinaryQF":
        """Dirichlet composition followed by reduction."""
        if self.disc != other.disc:
            raise ValueError("forms of different discriminants")
        f, g = (self, other) if self.a <= other.a else (other, self)
        a1, b1 = f.a, f.b
        a2, b2, c2 = g.a, g.b, g.c
        s = (b1 + b2) // 2
        n = b2 - s
        if a2 % a1 == 0:
            y1, d = 0, a1
        else:
            u, _, d = _xgcd(a2, a1)
            y1 = u
        if s % d == 0:
            y2, x2, d1 = -1, 0, d
        else:
            u, v, d1 = _xgcd(s, d)
            x2, y2 = u, -v
        v1, v2 = a1 // d1, a2 // d1
        r = (y1 * y2 * n - x2 * c2) % v1
        b3 = b2 + 2 * v2 * r
        a3 = v1 * v2
        c3 = (c2 * d1 + r * (b2 + v2 * r)) // v1
        return BinaryQF(a3, b3, c3).reduced()

    def gram(self) -> GramS:
        return GramS(self.a, self.b, self.c)


def reduced_forms(D: int) -> list[BinaryQF]:
    """All reduced primitive positive definite forms of discriminant D < 0,
    principal form first."""
    if D >= 0 or D % 4 not in (0, 1):
        raise ValueError("need a negative discriminant")
    out = []
    a = 1
    while 3 * a * a <= -D:
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            f = BinaryQF(a, b, c)
            if c >= a and f.is_reduced() and f.is_primitive():
                out.append(f)
        a += 1
    ident = BinaryQF.identity(D)
    return [ident] + sorted(f for f in out if f != ident)


# ---------------------------------------------------------------------------
# ideals of O_C as lattices in K

def _kmul(x, y, disc: int) -> tuple:
    return (x[0] * y[0] + disc * x[1] * y[1], x[0] * y[1] + x[1] * y[0])


def _knorm(x, disc: int) -> Fraction:
    return x[0] * x[0] - disc * x[1] * x[1]


def form_to_lattice(f: BinaryQF, C: int) -> RationalLattice:
    """[a, (b + C sqrt(Delta_K)) / 2]."""
    return RationalLattice([[f.a, 0], [Fraction(f.b, 2), Fraction(C, 2)]])


def order_lattice(K: ImagQuadField, C: int) -> RationalLattice:
    return form_to_lattice(BinaryQF.identity(C * C * K.disc), C)


def lattice_product(L1: RationalLattice, L2: RationalLattice, disc: int) -> RationalLattice:
    return RationalLattice([list(_kmul(x, y, disc)) for x in L1.basis for y in L2.basis])


def lattice_to_form(L: RationalLattice, K: ImagQuadField, C: int) -> BinaryQF:
    """Norm form of a proper O_C-ideal in a positively oriented basis, divided
    by the norm of the ideal (not reduced)."""
    disc = K.disc
    al, be = [tuple(r) for r in L.basis]
    det = al[0] * be[1] - al[1] * be[0]
    if det < 0:
        be = (-be[0], -be[1])
        det = -det
    norm = det / Fraction(C, 2)
    a = _knorm(al, disc) / norm
    b = 2 * (al[0] * be[0] - disc * al[1] * be[1]) / norm
    c = _knorm(be, disc) / norm
    if any(t.denominator != 1 for t in (a, b, c)):
        raise ValueError("lattice is not a proper ideal of the order")
    return BinaryQF(int(a), int(b), int(c))


def class_number_formula(K: ImagQuadField, C: int = 1) -> int:
    """h(O_C) from the analytic class number formula for O_K and the
    conductor formula."""
    D = K.disc
    total = 0
    for a in range(1, -D):
        total += _kronecker_symbol(D, a) * a
    hK = Fraction(-K.units() * total, 2 * -D)
    h = hK * C
    for p in _prime_factors(C):
        h *= 1 - Fraction(kronecker(D, p), p)
    w_C = K.units() if C == 1 else 2
    h /= Fraction(K.units(), w_C)
    if h.denominator != 1:
        raise ArithmeticError("class number formula gave a non-integer")
    return int(h)


def _kronecker_symbol(D: int, n: int) -> int:
    """Kronecker symbol (D / n) for n >= 1."""
    out = 1
    for p, e in sympy.factorint(n).items():
        out *= kronecker(D, p) ** e
    return out


# ---------------------------------------------------------------------------
# ring class groups and their characters

class RingClassGroup:
    """Pic(O_C) as reduced forms of discriminant C^2 Delta_K."""

    def __init__(self, K: ImagQuadField, C: int = 1):
        self.K = K
        self.C = int(C)
        self.D = self.C ** 2 * K.disc
        self.elements = reduced_forms(self.D)
        self.index = {f: i for i, f in enumerate(self.elements)}
        n = len(self.elements)
        self.table = [[self.index[self.elements[i].compose(self.elements[j])] for j in range(n)]
                      for i in range(n)]

    @property
    def order(self) -> int:
        return len(self.elements)

    def mul(self, i: int, j: int) -> int:
        return self.table[i][j]

    def inv(self, i: int) -> int:
        return self.index[self.elements[i].inverse()]

    def element_order(self, i: int) -> int:
        n, x = 1, i
        while x != 0:
            x = self.mul(x, i)
            n += 1
        return n

    def exponent(self) -> int:
        return math.lcm(*[self.element_order(i) for i in range(self.order)])

    def ideal(self, i: int) -> RationalLattice:
        return form_to_lattice(self.elements[i], self.C)

    def class_of_lattice(self, L: RationalLattice) -> int:
        return self.index[lattice_to_form(L, self.K, self.C).reduced()]

    def check_lattice_route(self) -> bool:
        """Composition of forms agrees with multiplication of ideals."""
        for i in range(self.order):
            for j in range(self.order):
                L = lattice_product(self.ideal(i), self.ideal(j), self.K.disc)
                if self.class_of_lattice(L) != self.mul(i, j):
                    return False
        return True

    def prime_class(self, p: int) -> int:
        """Class of a prime of O_C above p (p prime to C, not inert in K)."""
        if self.C % p == 0 or self.K.splitting_type(p) == "inert":
            raise ValueError("no prime of degree one above p")
        D = self.D
        for b in range(2 * p):
            if (b * b - D) % (4 * p) == 0:
                return self.index[BinaryQF(p, b, (b * b - D) // (4 * p)).reduced()]
        raise RuntimeError("no prime form found")

    def reduction_kernel(self, p: int) -> list[int]:
        """Kernel of Pic(O_C) -> Pic(O_{C/p})."""
        C2 = self.C // p
        target = order_lattice(self.K, C2)
        ident = BinaryQF.identity(C2 * C2 * self.K.disc)
        out = []
        for i in range(self.order):
            L = lattice_product(self.ideal(i), target, self.K.disc)
            if lattice_to_form(L, self.K, C2).reduced() == ident:
                out.append(i)
        return out

    def _generators(self):
        gens, span = [], {0}
        for i in range(1, self.order):
            if i in span:
                continue
            gens.append(i)
            frontier = list(span)
            span = set(span)
            while frontier:
                x = frontier.pop()
                y = self.mul(x, i)
                if y not in span:
                    span.add(y)
                    frontier.append(y)
                    for g in gens:
                        z = self.mul(y, g)
                        if z not in span:
                            span.add(z)
                            frontier.append(z)
        return gens

    def characters(self) -> list["RingClassCharacter"]:
        """All characters, values as exponents of zeta_m with m the exponent;
        sorted by value table, trivial character first."""
        m = self.exponent()
        gens = self._generators()
        words = {0: (0,) * len(gens)}
        frontier = [0]
        while frontier:
            x = frontier.pop(0)
            for t, g in enumerate(gens):
                y = self.mul(x, g)
                if y not in words:
                    w = list(words[x])
                    w[t] += 1
                    words[y] = tuple(w)
                    frontier.append(y)
        found = set()
        for assign in itertools.product(range(m), repeat=len(gens)):
            vals = tuple(sum(e * a for e, a in zip(words[i], assign)) % m for i in range(self.order))
            if all(vals[self.mul(i, j)] == (vals[i] + vals[j]) % m
                   for i in range(self.order) for j in range(self.order)):
                found.add(vals)
        return [RingClassCharacter(self, m, v) for v in sorted(found)]


@dataclass
class RingClassCharacter:
    group: RingClassGroup
    m: int
    exps: tuple  # exponent of zeta_m per group element

    def value(self, i: int, tower: FieldTower | None = None):
        e = self.exps[i] % self.m
        if e == 0:
            return 1
        if 2 * e == self.m:
            return -1
        return (tower or default_tower()).zeta(self.m) ** e

    def inverse(self) -> "RingClassCharacter":
        return RingClassCharacter(self.group, self.m, tuple((-e) % self.m for e in self.exps))

    def is_trivial(self) -> bool:
        return not any(self.exps)

    def order(self) -> int:
        return self.m // math.gcd(self.m, *self.exps)

    def conductor_ok(self) -> bool:
        """Nontrivial on the kernel of Pic(O_C) -> Pic(O_{C/p}) for every p | C."""
        return all(any(self.exps[i] for i in self.group.reduction_kernel(p))
                   for p in _prime_factors(self.group.C))

    def to_json(self):
        return {"m": self.m, "exponents": list(self.exps),
                "forms": [[f.a, f.b, f.c] for f in self.group.elements]}


# ---------------------------------------------------------------------------
# the datum

@dataclass
class BesselDatum:
    K: ImagQuadField
    C: int
    ctx: QuatContext
    delta: tuple  # (trace, norm) of delta
    S: GramS
    y: Quat  # iota(omega)
    sqrt_elem: Quat  # iota(sqrt(-d))
    base_class: int  # I_m with iota(O_K) in its left order; the toric sums start from I_m
    flags: dict = dc_field(default_factory=dict)
    tower: FieldTower = dc_field(default_factory=default_tower)

    @property
    def level(self) -> int:
        return self.ctx.n_minus * self.ctx.n_plus

    def iota(self, x) -> Quat:
        """Image of u + v sqrt(Delta_K)."""
        s = 2 if self.K.disc % 4 == 0 else 1
        u, v = Fraction(x[0]), Fraction(x[1])
        return tuple((u if t == 0 else 0) + v * s * self.sqrt_elem[t] for t in range(4))

    def sqrt_det(self) -> Element:
        """sqrt(det S') = C sqrt(|Delta_K|) / 2 for the translates S'."""
        return self.tower.sqrt(-self.K.disc) * Fraction(self.C, 2)

    def to_json(self):
        return {"K": -self.K.d, "disc": self.K.disc, "C": self.C,
                "level": [self.ctx.n_minus, self.ctx.n_plus],
                "delta": {"trace": self.delta[0], "norm": self.delta[1]},
                "S": [self.S.a, self.S.b, self.S.c],
                "embedding": [str(t) for t in self.y], "base_class": self.base_class,
                "flags": self.flags}


class HypothesisError(ValueError):
    pass


def build_bessel_datum(K: ImagQuadField | int, C: int, ctx: QuatContext,
                       tower: FieldTower | None = None) -> BesselDatum:
    if isinstance(K, int):
        K = ImagQuadField(-K if K < 0 else K)
    N = ctx.n_minus * ctx.n_plus
    heeg = heegner_ok(K, ctx.n_minus, ctx.n_plus)
    hC = math.gcd(C, N * K.disc) == 1
    if not heeg:
        raise HypothesisError("Heeg: primes of N^- must be inert and primes of N^+ split in K")
    if not hC:
        raise HypothesisError("hC: C must be prime to N Delta_K")
    t, n = K.omega
    S = GramS(1, t, n)
    m, y = optimal_embedding_in_classes(ctx, K)
    if math.gcd(C, ctx.classes[m].norm.numerator) != 1:
        raise HypothesisError("C must be prime to the norm of the base ideal class")
    return BesselDatum(K, int(C), ctx, (t, n), S, y, embedded_sqrt(ctx, K, y), m,
                       {"Heeg": heeg, "hC": hC, "rFK": True}, tower or default_tower())


# ---------------------------------------------------------------------------
# coset representatives

@dataclass
class CosetRep:
    m: int  # divisor of C
    divisor: int  # product of the prime powers of N in the Atkin-Lehner part
    local: dict  # p -> 2x2 rational matrix, or quaternion at p | N^-


def _sigma_xi(datum: BesselDatum, p: int, j: int):
    s = local_sigma(datum.ctx, datum.K, datum.y, p)
    if datum.K.splitting_type(p) == "split":
        xi = ((1, Fraction(1, p ** j)), (0, 1))
    else:
        xi = ((Fraction(1, p ** j), 0), (0, 1))
    return [[sum(Fraction(s[r][t]) * xi[t][c] for t in range(2)) for c in range(2)] for r in range(2)]


def coset_reps(datum: BesselDatum) -> list[CosetRep]:
    ctx = datum.ctx
    out = []
    primes_N = [(p, e) for p, e in sympy.factorint(datum.level).items()]
    for m in sympy.divisors(datum.C):
        base = {p: _sigma_xi(datum, p, e) for p, e in sympy.factorint(m).items()}
        for r in range(len(primes_N) + 1):
            for sub in itertools.combinations(primes_N, r):
                local = dict(base)
                div = 1
                for p, e in sub:
                    div *= p ** e
                    if ctx.n_minus % p == 0:
                        local[p] = ctx.uniformizer(p)
                    else:
                        local[p] = [[0, 1], [-p ** e, 0]]
                out.append(CosetRep(int(m), div, local))
    return out


def _split_part(n: int, primes) -> int:
    out = 1
    for p in primes:
        while n % p == 0:
            n //= p
            out *= p
    return out


def _glue(A: QuatLattice, B: QuatLattice, primes) -> QuatLattice:
    """The lattice equal to B at the given primes and to A elsewhere:
    (A cap B) + u A + v B with u A inside B at those primes and v B inside A
    at the others."""
    den_a = math.lcm(*[c.denominator for x in A.basis for c in B.coordinates(x)])
    den_b = math.lcm(*[c.denominator for x in B.basis for c in A.coordinates(x)])
    u = _split_part(den_a, primes)
    v = den_b // _split_part(den_b, primes)
    return A.intersection(B) + A.scale(u) + B.scale(v)


def _based_lattice(datum: BesselDatum, local: dict) -> QuatLattice:
    """The lattice equal to x_p R_p at the primes of `local` and to the base
    ideal I_m elsewhere (I_m is R_p at those primes)."""
    base = datum.ctx.classes[datum.base_class].ideal
    if not local:
        return base
    nrm = datum.ctx.classes[datum.base_class].norm
    if any(nrm.numerator % p == 0 or nrm.denominator % p == 0 for p in local):
        raise ValueError("local modification at a prime dividing the base norm")
    return _glue(base, datum.ctx.local_lattice(local), list(local))


def lattice_of(datum: BesselDatum, rep: CosetRep) -> QuatLattice:
    return _based_lattice(datum, rep.local)


def membership_check(datum: BesselDatum, rep: CosetRep) -> bool:
    """The lattice J of the representative is a right R-ideal on which
    iota(O_{K,m}) acts on the left, and no larger order O_{K,m/p} does."""
    ctx, alg = datum.ctx, datum.ctx.alg
    J = lattice_of(datum, rep)
    if not all(J.contains(alg.mul(x, r)) for x in J.basis for r in ctx.order.basis):
        return False

    def stable(m):
        g = tuple(m * t for t in datum.y)
        return all(J.contains(alg.mul(g, x)) for x in J.basis)

    if not stable(rep.m):
        return False
    return all(not stable(rep.m // p) for p in _prime_factors(rep.m))


def conductor_lattice(datum: BesselDatum) -> QuatLattice:
    """J_C: the lattice of the representative with m = C and no Atkin-Lehner part."""
    local = {p: _sigma_xi(datum, p, e) for p, e in sympy.factorint(datum.C).items()}
    return _based_lattice(datum, local)


# ---------------------------------------------------------------------------
# toric periods

def archimedean_vector(datum: BesselDatum, k: int) -> PolyVector:
    """tau_k(s_inf) (X Y)^k, where the columns of s_inf are eigenvectors of
    iota(sqrt -d) for i sqrt(d) and -i sqrt(d)."""
    tower = datum.tower
    M = quat_mat2(datum.ctx, datum.sqrt_elem, tower)
    lam = tower.i() * tower.sqrt(datum.K.d)
    cols = []
    for ev in (lam, -lam):
        if not _is_zero(M.b):
            cols.append((M.b, ev - M.a))
        else:
            cols.append((ev - M.d, M.c))
    s = Mat2(cols[0][0], cols[1][0], cols[0][1], cols[1][1])
    diag = s.inverse() * M * s
    if not (_is_zero(diag.b) and _is_zero(diag.c) and _is_zero(diag.a - lam)):
        raise ArithmeticError("archimedean diagonalisation failed")
    xy = HomogPoly(2 * k)
    xy.coeffs[k] = 1
    return tau_apply(k, s, xy)


def _is_zero(x) -> bool:
    return x.is_zero() if isinstance(x, Element) else x == 0


def twisted_lattice(datum: BesselDatum, ideal: RationalLattice, J: QuatLattice,
                    scale=None) -> QuatLattice:
    """iota(a) J for an ideal a of O_C, optionally with a replaced by x a."""
    alg = datum.ctx.alg
    gens = [tuple(r) for r in ideal.basis]
    if scale is not None:
        gens = [_kmul(scale, g, datum.K.disc) for g in gens]
    return QuatLattice(alg, [alg.mul(datum.iota(g), b) for g in gens for b in J.basis])


def toric_period(f: QuatForm, chi: RingClassCharacter, datum: BesselDatum,
                 J: QuatLattice | None = None, lifts: Sequence | None = None):
    """Theta_C(f, chi) = sum over [a] in Pic(O_C) of <tau_k(s_inf)(XY)^k, f(iota(a) J_C)> chi(a).
    `lifts` optionally multiplies each class representative by an element of K."""
    group = chi.group
    if group.C != datum.C:
        raise ValueError("character and datum have different conductors")
    J = J or conductor_lattice(datum)
    v = archimedean_vector(datum, f.k)
    total = 0
    for i in range(group.order):
        lat = twisted_lattice(datum, group.ideal(i), J, None if lifts is None else lifts[i])
        w = f.at_ideal(lat)
        term = pairing_n(v, w)
        if not _is_zero(term):
            total = total + term * chi.value(i, datum.tower)
    return total


# ---------------------------------------------------------------------------
# constants

def _units_of_OK(K: ImagQuadField) -> list[tuple[int, int]]:
    """Units x + y omega of O_K."""
    t, n = K.omega
    return [(x, y) for x in range(-2, 3) for y in range(-2, 3) if x * x + t * x * y + n * y * y == 1]


def index_constants(datum: BesselDatum) -> dict:
    """t_{E,C}, t_{K,C}, v_{E/K,C} and the unit index #(O_K^/O_C^)^x for
    E = K + K, computed by finite enumeration."""
    K, C = datum.K, datum.C
    t, n = K.omega
    units = _units_of_OK(K)
    # x in O_K^x lies in O_C^x Q^x locally at every p | C iff C | y
    tK = Fraction(sum(1 for (x, y) in units if y % C == 0), 2)
    tE = tK * tK
    unitsK = sum(1 for x in range(C) for y in range(C)
                 if math.gcd(x * x + t * x * y + n * y * y, C) == 1)
    unitsZ = sum(1 for x in range(C) if math.gcd(x, C) == 1)
    u = Fraction(unitsK, unitsZ)
    v = u / (u * u)
    return {"t_E": tE, "t_K": tK, "v": v, "unit_index_K": u, "unit_index_E": u * u,
            "w_C": sum(1 for (x, y) in units if y % C == 0)}


def local_constant(f1: QuatForm, f2: QuatForm, chi: RingClassCharacter, datum: BesselDatum):
    """prod over p | N of (1 + eps_p(f1) eps_p(f2) chi(P)^{ord_p N1 - ord_p N2})."""
    N1 = f1.space.ctx.n_minus * f1.space.ctx.n_plus
    N2 = f2.space.ctx.n_minus * f2.space.ctx.n_plus
    out = 1
    for p in _prime_factors(math.lcm(N1, N2)):
        try:
            e1 = f1.atkin_lehner[p] if N1 % p == 0 else 1
            e2 = f2.atkin_lehner[p] if N2 % p == 0 else 1
        except KeyError as exc:
            raise KeyError(f"missing Atkin-Lehner sign at {p}") from exc
        shift = sympy.multiplicity(p, N1) - sympy.multiplicity(p, N2)
        val = 1
        if shift:
            idx = chi.group.prime_class(p)
            val = chi.value(idx, datum.tower) if shift > 0 else 1 / chi.value(idx, datum.tower)
            val = val ** abs(shift)
        out = out * (1 + e1 * e2 * val)
    return out


# ---------------------------------------------------------------------------
# the two sides

def _coefficient(source, S: GramS) -> PolyVector:
    if isinstance(source, YoshidaLift):
        return source.fourier_coefficient(S)
    if S not in source:
        raise KeyError(f"coefficient {S.key()} missing; need bound >= {max(S.a, S.c)}")
    return source[S]


def bessel_from_fourier(source: FourierTable | YoshidaLift, datum: BesselDatum,
                        chi: RingClassCharacter, k: tuple | None = None):
    """C^2 / (-2i)^{k1+k2} * t_E / t_K * sum over [a] of <a(S_a), Q_{S_a}> chi(a),
    with S_a the reduced form of the class."""
    k1, k2 = k or tuple(source.k)
    group = chi.group
    tower = datum.tower
    sqrt_det = datum.sqrt_det()
    total = 0
    for i, form in enumerate(group.elements):
        S = form.gram()
        if S.det4 != datum.C ** 2 * -datum.K.disc:
            raise ArithmeticError("translate has the wrong determinant")
        coeff = _coefficient(source, S)
        Q = poly_Q_S(S.matrix(), k2, sqrt_det, k1 + k2 + 2)
        term = pairing_n(coeff, Q)
        if not _is_zero(term):
            total = total + term * chi.value(i, tower)
    const = index_constants(datum)
    factor = Fraction(datum.C ** 2) * const["t_E"] / const["t_K"]
    arch = (tower.i() * -2) ** (k1 + k2)
    return total * factor * (1 / arch if isinstance(arch, Element) else Fraction(1, arch))


def required_bound(group: RingClassGroup) -> int:
    """Smallest table bound covering every reduced form of the ring class group."""
    return max(max(f.a, f.c) for f in group.elements)


def archimedean_factor(datum: BesselDatum) -> Fraction:
    """(Im delta)^-2 = 4 / |Delta_K|."""
    return Fraction(4, -datum.K.disc)


@dataclass
class BesselReport:
    fourier_side: object
    product_side: object
    e_factor: object
    theta1: object
    theta2: object
    equal: bool
    info: dict = dc_field(default_factory=dict)

    def to_json(self):
        enc = lambda x: x.to_json() if isinstance(x, Element) else str(Fraction(x))
        return {"fourier_side": enc(self.fourier_side), "product_side": enc(self.product_side),
                "e_factor": enc(self.e_factor), "theta1": enc(self.theta1),
                "theta2": enc(self.theta2), "equal": self.equal, **self.info}


def _eq(x, y) -> bool:
    d = x - y
    return d.is_zero() if isinstance(d, Element) else d == 0


def bessel_identity_check(f1: QuatForm, f2: QuatForm, datum: BesselDatum, chi: RingClassCharacter,
                          source: FourierTable | YoshidaLift | None = None) -> BesselReport:
    """Fourier side against 4/|Delta_K| * e(f, chi) * Theta_C(f1, chi) * Theta_C(f2, chi^-1)."""
    if source is None:
        source = YoshidaLift(f1, f2, datum.tower)
    lhs = bessel_from_fourier(source, datum, chi, (f1.k, f2.k))
    J = conductor_lattice(datum)
    th1 = toric_period(f1, chi, datum, J)
    th2 = toric_period(f2, chi.inverse(), datum, J)
    e = local_constant(f1, f2, chi, datum)
    rhs = archimedean_factor(datum) * e * th1 * th2
    info = {"K": -datum.K.d, "C": datum.C, "k": [f1.k, f2.k],
            "level": [datum.ctx.n_minus, datum.ctx.n_plus], "character": list(chi.exps),
            "class_number": chi.group.order}
    return BesselReport(lhs, rhs, e, th1, th2, _eq(lhs, rhs), info)


def nonvanishing_witness(f1: QuatForm, f2: QuatForm, datum: BesselDatum, chi: RingClassCharacter,
                         ell: int, source: FourierTable | YoshidaLift | None = None,
                         report: BesselReport | None = None) -> dict:
    """Search the coefficients a(S) with 4 det S = C^2 |Delta_K| for one that is
    nonzero modulo a degree-one prime lambda above ell.  When e(f, chi) and both
    toric periods are lambda-units the Bessel sum is a lambda-unit, so such an S
    must exist; `implied` records whether that hypothesis holds."""
    k1 = max(f1.k, f2.k)
    N = datum.level
    if ell <= 2 * k1 or (2 * N) % ell == 0:
        raise HypothesisError(f"need ell > 2 k1 = {2 * k1} and ell prime to 2 N = {2 * N}")
    if source is None:
        source = YoshidaLift(f1, f2, datum.tower)
    if report is None:
        report = bessel_identity_check(f1, f2, datum, chi, source)
    coeffs = {}
    for form in chi.group.elements:
        S = form.gram()
        coeffs[S.key()] = _coefficient(source, S)
    place = PrimePlace(datum.tower.top, ell)
    vals = {name: place.valuation(getattr(report, name))
            for name in ("e_factor", "theta1", "theta2", "fourier_side")}
    witnesses = []
    for key, v in sorted(coeffs.items()):
        entries = [x for x in v.coeffs.tolist() if not _is_zero(x)]
        if any(place.valuation(x) < 0 for x in entries):
            raise ArithmeticError(f"a{key} is not lambda-integral")
        if any(place.reduce(x) for x in entries):
            witnesses.append(key)
    implied = all(vals[n] == 0 for n in ("e_factor", "theta1", "theta2"))
    return {"ell": ell, "place": place.to_json(), "valuations": vals, "implied": implied,
            "witnesses": witnesses, "identity_holds": report.equal,
            "ok": bool(witnesses) or not implied}

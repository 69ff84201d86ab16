"""Exact arithmetic in number fields presented as Q[x]/(m(x)).

Every field used in a session lives in one tower: a new field is built from
the current top by adjoining a root of a rational polynomial, and carries an
explicit embedding of its parent.  Elements of different fields of the tower
combine by lifting the smaller one.  Minimal polynomials are kept monic with
integer coefficients so elements can be stored as integer numerators over a
single positive denominator.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import sympy
from sympy.polys.domains import QQ, ZZ
from sympy.polys.polytools import Poly

_x, _z = sympy.symbols("x z")


def _lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def _poly_mod(num: list[int], modulus: Sequence[int]) -> list[int]:
    """Reduce an integer polynomial (low to high) by a monic integer modulus."""
    d = len(modulus) - 1
    num = list(num)
    for top in range(len(num) - 1, d - 1, -1):
        c = num[top]
        if c:
            shift = top - d
            for i in range(d):
                num[shift + i] -= c * modulus[i]
            num[top] = 0
    return num[:d] + [0] * max(0, d - len(num))


class NumberField:
    """Q[x]/(m) with m monic, integral and irreducible."""

    def __init__(self, modulus: Sequence[int], name: str = "t",
                 parent: "NumberField | None" = None,
                 parent_gen_image: "Element | None" = None):
        self.modulus = tuple(int(c) for c in modulus)
        if self.modulus[-1] != 1:
            raise ValueError("modulus must be monic")
        self.degree = len(self.modulus) - 1
        self.name = name
        self.parent = parent
        self._parent_gen_image = parent_gen_image
        self.depth = 0 if parent is None else parent.depth + 1
        self._power_basis_traces = None

    def __repr__(self):
        return f"NumberField(degree={self.degree}, modulus={self.modulus})"

    def __call__(self, value) -> "Element":
        return self.coerce(value)

    @property
    def gen(self) -> "Element":
        if self.degree == 1:
            return Element(self, (-self.modulus[0],), 1)
        return Element(self, tuple(1 if i == 1 else 0 for i in range(self.degree)), 1)

    def zero(self) -> "Element":
        return Element(self, (0,) * self.degree, 1)

    def one(self) -> "Element":
        return Element(self, (1,) + (0,) * (self.degree - 1), 1)

    def from_rational(self, q) -> "Element":
        q = Fraction(q)
        return Element(self, (q.numerator,) + (0,) * (self.degree - 1), q.denominator)

    def from_coefficients(self, coeffs: Sequence) -> "Element":
        fr = [Fraction(c) for c in coeffs]
        fr += [Fraction(0)] * (self.degree - len(fr))
        den = _lcm(c.denominator for c in fr)
        return Element(self, tuple(int(c * den) for c in fr), den)

    def is_ancestor_of(self, other: "NumberField") -> bool:
        f = other
        while f is not None:
            if f is self:
                return True
            f = f.parent
        return False

    def coerce(self, value) -> "Element":
        if isinstance(value, Element):
            if value.field is self:
                return value
            if value.field.is_ancestor_of(self):
                return self._lift(value)
            raise TypeError("element belongs to a field outside this tower branch")
        if isinstance(value, (int, Fraction)):
            return self.from_rational(value)
        if isinstance(value, sympy.Rational):
            return self.from_rational(Fraction(int(value.p), int(value.q)))
        raise TypeError(f"cannot coerce {type(value).__name__} into a number field")

    def _lift(self, value: "Element") -> "Element":
        chain = []
        f = self
        while f is not value.field:
            chain.append(f)
            f = f.parent
        out = value
        for f in reversed(chain):
            out = f._lift_from_parent(out)
        return out

    def _lift_from_parent(self, value: "Element") -> "Element":
        g = self._parent_gen_image
        acc = self.zero()
        for c in reversed(value.num):
            acc = acc * g + c
        return acc / value.den

    def element_from_poly(self, coeffs: Sequence[int], den: int = 1) -> "Element":
        return Element(self, tuple(_poly_mod(list(coeffs), self.modulus)), den)


class Element:
    """An element num(t)/den of a NumberField."""

    __slots__ = ("field", "num", "den")

    def __init__(self, field: NumberField, num: Sequence[int], den: int = 1):
        if den < 0:
            num = tuple(-c for c in num)
            den = -den
        g = den
        for c in num:
            if g == 1:
                break
            g = math.gcd(g, c)
        if g > 1:
            num = tuple(c // g for c in num)
            den //= g
        self.field = field
        self.num = tuple(num)
        self.den = den

    def _common(self, other):
        if isinstance(other, Element):
            if other.field is self.field:
                return self, other
            if other.field.is_ancestor_of(self.field):
                return self, self.field._lift(other)
            if self.field.is_ancestor_of(other.field):
                return other.field._lift(self), other
            raise TypeError("elements of unrelated number fields")
        if isinstance(other, (int, Fraction)):
            return self, self.field.from_rational(other)
        return NotImplemented, NotImplemented

    def __add__(self, other):
        a, b = self._common(other)
        if a is NotImplemented:
            return NotImplemented
        if a.den == b.den:
            return Element(a.field, tuple(x + y for x, y in zip(a.num, b.num)), a.den)
        return Element(a.field, tuple(x * b.den + y * a.den for x, y in zip(a.num, b.num)),
                       a.den * b.den)

    __radd__ = __add__

    def __neg__(self):
        return Element(self.field, tuple(-c for c in self.num), self.den)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return Element(self.field, tuple(c * other for c in self.num), self.den)
        if isinstance(other, Fraction):
            return Element(self.field, tuple(c * other.numerator for c in self.num),
                           self.den * other.denominator)
        a, b = self._common(other)
        if a is NotImplemented:
            return NotImplemented
        d = a.field.degree
        if d == 1:
            return Element(a.field, (a.num[0] * b.num[0],), a.den * b.den)
        prod = [0] * (2 * d - 1)
        for i, x in enumerate(a.num):
            if x:
                for j, y in enumerate(b.num):
                    if y:
                        prod[i + j] += x * y
        return Element(a.field, tuple(_poly_mod(prod, a.field.modulus)), a.den * b.den)

    __rmul__ = __mul__

    def inverse(self) -> "Element":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in a number field")
        d = self.field.degree
        if d == 1:
            return Element(self.field, (self.den,), self.num[0])
        # multiplication matrix, then solve M v = e_0
        cols = []
        basis_elem = self
        for i in range(d):
            cols.append([Fraction(c, basis_elem.den) for c in basis_elem.num])
            basis_elem = basis_elem * self.field.gen if i < d - 1 else basis_elem
        # cols[i] = coordinates of self * t^i; solve sum v_i cols[i] = 1
        mat = [[cols[j][i] for j in range(d)] + [Fraction(int(i == 0))] for i in range(d)]
        sol = _solve_rational(mat, d)
        return self.field.from_coefficients(sol)

    def __truediv__(self, other):
        if isinstance(other, int):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return Element(self.field, self.num, self.den * other)
        if isinstance(other, Fraction):
            return self * (1 / other)
        a, b = self._common(other)
        if a is NotImplemented:
            return NotImplemented
        return a * b.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.to_fraction() == other
        if isinstance(other, Element):
            try:
                a, b = self._common(other)
            except TypeError:
                return False
            return a.num == b.num and a.den == b.den
        return NotImplemented

    def __hash__(self):
        if self.is_rational():
            return hash(self.to_fraction())
        return hash((self.field.modulus, self.num, self.den))

    def __bool__(self):
        return not self.is_zero()

    def is_zero(self) -> bool:
        return not any(self.num)

    def is_rational(self) -> bool:
        return not any(self.num[1:])

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("element is not rational")
        return Fraction(self.num[0], self.den)

    def coefficients(self) -> list[Fraction]:
        return [Fraction(c, self.den) for c in self.num]

    def multiplication_matrix(self) -> list[list[Fraction]]:
        d = self.field.degree
        cols = []
        e = self
        for i in range(d):
            cols.append(e.coefficients())
            if i < d - 1:
                e = e * self.field.gen
        return [[cols[j][i] for j in range(d)] for i in range(d)]

    def norm(self) -> Fraction:
        m = sympy.Matrix(self.multiplication_matrix())
        return Fraction(str(m.det()))

    def trace(self) -> Fraction:
        m = self.multiplication_matrix()
        return sum((m[i][i] for i in range(len(m))), Fraction(0))

    def complex_value(self, root: complex) -> complex:
        acc = 0j
        for c in reversed(self.num):
            acc = acc * root + c
        return acc / self.den

    def __repr__(self):
        if self.is_rational():
            return str(self.to_fraction())
        terms = []
        for i, c in enumerate(self.coefficients()):
            if c:
                terms.append(f"{c}" if i == 0 else f"{c}*{self.field.name}^{i}")
        return "(" + " + ".join(terms) + ")"

    def to_json(self):
        return {"num": [str(c) for c in self.num], "den": str(self.den)}


def _solve_rational(aug: list[list[Fraction]], n: int) -> list[Fraction]:
    """Gauss-Jordan on an n x (n+1) augmented rational matrix."""
    m = [row[:] for row in aug]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


# ---------------------------------------------------------------------------
# polynomials over a number field (lists of Elements, low to high)

def _trim(p: list) -> list:
    while p and p[-1].is_zero():
        p.pop()
    return p


def _poly_divmod(a: list, b: list):
    a = _trim(list(a))
    b = _trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = b[-1].inverse()
    q = [b[0].field.zero()] * max(0, len(a) - len(b) + 1)
    while len(a) >= len(b):
        c = a[-1] * inv_lead
        shift = len(a) - len(b)
        q[shift] = c
        for i, bc in enumerate(b):
            a[shift + i] = a[shift + i] - c * bc
        a.pop()
        _trim(a)
    return q, a


def poly_gcd(a: list, b: list) -> list:
    a = _trim(list(a))
    b = _trim(list(b))
    while b:
        _, r = _poly_divmod(a, b)
        a, b = b, r
    if not a:
        return a
    inv = a[-1].inverse()
    return [c * inv for c in a]


# ---------------------------------------------------------------------------
# the session tower

def _integral_monic(poly: Sequence[Fraction]) -> tuple[list[int], int]:
    """Given g (low to high, rational), return (h, s) with h monic integral and
    h(s*y) = 0 whenever g(y) = 0."""
    g = [Fraction(c) for c in poly]
    while g and g[-1] == 0:
        g.pop()
    n = len(g) - 1
    lead = g[-1]
    g = [c / lead for c in g]
    s = _lcm(c.denominator for c in g)
    # h(z) = s^n g(z/s)
    h = [g[i] * s ** (n - i) for i in range(n + 1)]
    assert all(c.denominator == 1 for c in h)
    return [int(c) for c in h], s


def _sympy_poly(coeffs: Sequence, var=_x) -> Poly:
    return Poly(list(reversed([sympy.Rational(int(c.numerator), int(c.denominator))
                               if isinstance(c, Fraction) else sympy.Integer(c)
                               for c in coeffs])), var, domain=QQ)


def _factor_over_field(field: NumberField, g: Sequence[int]):
    """Trager factorisation of a monic integer polynomial g over `field`.

    Returns a list of (factor over field as list of Elements, shift c, norm
    polynomial over Z as Poly) with each factor irreducible."""
    m = Poly(list(reversed(field.modulus)), _x, domain=ZZ)
    gz = list(g)
    deg_g = len(gz) - 1
    for c in [0, 1, -1, 2, -2, 3, -3, 4, 5, 7]:
        if field.degree == 1 and c != 0:
            continue
        # N(z) = Res_x(m(x), g(z - c x))
        gzx = sum((sympy.Integer(gz[i]) * (_z - c * _x) ** i for i in range(deg_g + 1)),
                  sympy.Integer(0))
        res = sympy.resultant(m.as_expr(), sympy.expand(gzx), _x)
        norm = Poly(res, _z, domain=ZZ)
        if sympy.degree(sympy.gcd(norm, norm.diff(_z))) > 0:
            continue
        _, facs = norm.factor_list()
        theta = field.gen
        out = []
        gpoly = [field(int(v)) for v in gz]
        for fac, _mult in facs:
            # fac(x + c theta) over the field
            fc = [int(v) for v in reversed(fac.all_coeffs())]
            shifted = _compose_linear(field, fc, theta * c)
            part = poly_gcd(gpoly, shifted)
            out.append((part, c, fac))
        out.sort(key=lambda t: (len(t[0]), [int(v) for v in t[2].all_coeffs()]))
        return out
    raise RuntimeError("no separating shift found for the compositum")


def _compose_linear(field: NumberField, coeffs: Sequence[int], shift: Element) -> list:
    """Coefficients (low to high) of p(x + shift)."""
    out = [field.zero()]
    for c in reversed(coeffs):
        # out = out * (x + shift) + c
        new = [field.zero()] * (len(out) + 1)
        for i, v in enumerate(out):
            new[i + 1] = new[i + 1] + v
            new[i] = new[i] + v * shift
        new[0] = new[0] + c
        out = new
    return _trim(out)


class FieldTower:
    """A lazily extended compositum; `top` is the largest field built so far."""

    def __init__(self):
        self.base = NumberField((0, 1), name="q")
        self.top = self.base
        self._cache: dict = {}

    def roots_in(self, field: NumberField, poly: Sequence) -> list[Element]:
        h, s = _integral_monic(poly)
        if len(h) == 2:
            return [field.from_rational(Fraction(-h[0], s))]
        roots = []
        for part, _c, _n in _factor_over_field(field, h):
            if len(part) == 2:
                roots.append(-part[0] / part[1] / s)
        return roots

    def adjoin_root(self, poly: Sequence, key=None) -> Element:
        """Return a root of the rational polynomial `poly`, extending the top
        field if it has none.  Results are cached by `key` (or the polynomial)."""
        key = ("root", tuple(Fraction(c) for c in poly)) if key is None else key
        if key in self._cache:
            return self._cache[key]
        h, s = _integral_monic(poly)
        if len(h) == 2:
            r = self.top.from_rational(Fraction(-h[0], s))
            self._cache[key] = r
            return r
        facs = _factor_over_field(self.top, h)
        lin = [p for p, _c, _n in facs if len(p) == 2]
        if lin:
            r = -lin[0][0] / lin[0][1] / s
            self._cache[key] = r
            return r
        part, c, norm = facs[0]
        new_mod = [int(v) for v in reversed(norm.all_coeffs())]
        lead = new_mod[-1]
        if lead != 1:
            raise RuntimeError("non-monic norm polynomial")
        parent = self.top
        child = NumberField(new_mod, name="t", parent=None)
        # theta in child: linear gcd of m(x) and h(z - c x)
        zc = child.gen
        mpoly = [child(int(v)) for v in parent.modulus]
        hz = _compose_linear(child, [int(v) for v in h], zc)  # h(x + z)
        # h(z - c x): substitute x -> -c x
        hz = [v * ((-c) ** i) for i, v in enumerate(hz)]
        lin_fac = poly_gcd(mpoly, hz)
        if len(lin_fac) != 2:
            raise RuntimeError("primitive element computation failed")
        theta = -lin_fac[0]
        if parent.degree == 1:
            theta = child.from_rational(-Fraction(parent.modulus[0]))
        child.parent = parent
        child.depth = parent.depth + 1
        child._parent_gen_image = theta
        self.top = child
        root_scaled = zc - theta * c
        r = root_scaled / s
        self._cache[key] = r
        return r

    def sqrt(self, n) -> Element:
        """A square root of the rational n, built as a product of square roots
        of -1 and of primes so that sqrt(m n) = sqrt(m) sqrt(n) and no
        redundant extension is ever adjoined."""
        n = Fraction(n)
        key = ("sqrt", n)
        if key in self._cache:
            return self._cache[key]
        if n == 0:
            return self.top.zero()
        num = abs(n.numerator) * n.denominator
        out = self.top.from_rational(Fraction(1, n.denominator))
        for p, e in sorted(sympy.factorint(num).items()):
            out = out * p ** (e // 2)
            if e % 2:
                out = out * self.adjoin_root([-p, 0, 1], key=("sqrt", Fraction(p)))
        if n < 0:
            out = out * self.adjoin_root([1, 0, 1], key=("sqrt", Fraction(-1)))
        self._cache[key] = out
        return out

    def zeta(self, m: int) -> Element:
        """A primitive m-th root of unity; m = 3, 4, 6, 8, 12 reuse square roots."""
        key = ("zeta", m)
        if key in self._cache:
            return self._cache[key]
        if m in (1, 2):
            return self.top.from_rational(1 if m == 1 else -1)
        special = {
            3: lambda: (self.sqrt(-3) - 1) / 2,
            4: lambda: self.sqrt(-1),
            6: lambda: (self.sqrt(-3) + 1) / 2,
            8: lambda: (self.sqrt(-1) + 1) * self.sqrt(2) / 2,
            12: lambda: -self.sqrt(-1) * self.zeta(3),
        }
        if m in special:
            r = special[m]()
        else:
            cyc = Poly(sympy.cyclotomic_poly(m, _x), _x)
            coeffs = [int(v) for v in reversed(cyc.all_coeffs())]
            r = self.adjoin_root(coeffs, key=("cyclotomic", m))
        self._cache[key] = r
        return r

    def i(self) -> Element:
        return self.sqrt(-1)

    def lift(self, value) -> Element:
        return self.top.coerce(value)


_DEFAULT_TOWER: FieldTower | None = None


def default_tower() -> FieldTower:
    global _DEFAULT_TOWER
    if _DEFAULT_TOWER is None:
        _DEFAULT_TOWER = FieldTower()
    return _DEFAULT_TOWER


def reset_default_tower() -> FieldTower:
    global _DEFAULT_TOWER
    _DEFAULT_TOWER = FieldTower()
    return _DEFAULT_TOWER


def to_element(value, tower: FieldTower | None = None) -> Element:
    tower = tower or default_tower()
    return tower.top.coerce(value) if not isinstance(value, Element) else value


def scalar_eq(a, b) -> bool:
    """Equality for mixed ints, Fractions and Elements."""
    if isinstance(a, Element) or isinstance(b, Element):
        return (a - b) == 0 if isinstance(a, Element) else (b - a) == 0
    return Fraction(a) == Fraction(b)


def scalar_is_zero(a) -> bool:
    if isinstance(a, Element):
        return a.is_zero()
    return a == 0


# ---------------------------------------------------------------------------
# degree-one primes

def _hensel_lift(coeffs: Sequence[int], r: int, p: int, prec: int) -> int:
    """Lift a simple root r of an integer polynomial mod p to a root mod p^prec."""
    mod = p
    deriv = [i * c for i, c in enumerate(coeffs)][1:]
    while mod < p ** prec:
        mod = min(mod * mod, p ** prec)
        fv = sum(c * pow(r, i, mod) for i, c in enumerate(coeffs)) % mod
        dv = sum(c * pow(r, i, mod) for i, c in enumerate(deriv)) % mod
        r = (r - fv * pow(dv, -1, mod)) % mod
    return r


class PrimePlace:
    """A prime of degree one above an unramified rational prime ell, given by
    an embedding of the field into Q_ell (a simple root of the modulus mod ell)."""

    def __init__(self, field: NumberField, ell: int, root_index: int = 0):
        self.field = field
        self.ell = int(ell)
        mod = field.modulus
        deriv = [i * c for i, c in enumerate(mod)][1:]
        roots = [r for r in range(self.ell)
                 if sum(c * r ** i for i, c in enumerate(mod)) % self.ell == 0
                 and (not deriv or sum(c * r ** i for i, c in enumerate(deriv)) % self.ell)]
        if field.degree == 1:
            roots = [(-mod[0]) % self.ell]
        if len(roots) <= root_index:
            raise ValueError(f"no degree-one prime above {ell}: the defining polynomial has no simple root mod {ell}")
        self.root = roots[root_index]
        self._cache: dict[int, int] = {}

    def _root(self, prec: int) -> int:
        if prec not in self._cache:
            self._cache[prec] = _hensel_lift(list(self.field.modulus), self.root, self.ell, prec)
        return self._cache[prec]

    def _image(self, x: Element, prec: int) -> int:
        m = self.ell ** prec
        r = self._root(prec)
        acc = 0
        for c in reversed(x.num):
            acc = (acc * r + c) % m
        return acc

    def valuation(self, x) -> float:
        """Normalized valuation (v(ell) = 1); +inf for zero."""
        x = self.field.coerce(x)
        if x.is_zero():
            return math.inf
        vden = 0
        d = x.den
        while d % self.ell == 0:
            d //= self.ell
            vden += 1
        prec = 16
        while True:
            img = self._image(x, prec)
            if img:
                v = 0
                while img % self.ell == 0:
                    img //= self.ell
                    v += 1
                return v - vden
            prec *= 2

    def reduce(self, x) -> int:
        """Residue in F_ell of a lambda-integral element."""
        x = self.field.coerce(x)
        if self.valuation(x) < 0:
            raise ValueError("element is not integral at the place")
        if x.is_zero():
            return 0
        vden = 0
        d = x.den
        while d % self.ell == 0:
            d //= self.ell
            vden += 1
        prec = vden + 1
        img = self._image(x, prec)
        val = img // self.ell ** vden
        return val * pow(d, -1, self.ell) % self.ell

    def to_json(self):
        return {"ell": self.ell, "root_mod_ell": self.root, "field_modulus": list(self.field.modulus)}

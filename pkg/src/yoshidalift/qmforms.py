"""Algebraic modular forms on a definite quaternion algebra.

A form of weight k and level (N^-, N^+) is a function on the right ideal
classes of the Eichler order R with values in W_k = Sym^{2k} (x) det^{-k},
subject to f(I) = tau_k(u) f(I) for the units u of the left order of I.
Values are stored as coefficient vectors in the X-degree basis of W_k.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy

from . import linalg
from .field import Element, FieldTower, PrimePlace, default_tower
from .polyrep import HomogPoly, Mat2, PolyVector, sym_power_matrix
from .qalg import QuatContext, QuatLattice, Quat


def quat_mat2(ctx: QuatContext, x: Quat, tower: FieldTower | None = None) -> Mat2:
    """Archimedean image of x in M_2(C) (entries in Q(sqrt a))."""
    rows = ctx.alg.to_matrix(x, tower)
    return Mat2.from_rows(rows)


def tau_matrix(k: int, g: Mat2) -> list[list]:
    """Matrix of tau_k(g) on coefficient vectors of W_k."""
    m = sym_power_matrix(g, 2 * k)
    if k == 0:
        return [[1]]
    d = g.det()
    dinv = (1 / Fraction(d)) if isinstance(d, (int, Fraction)) else d.inverse()
    c = dinv ** k
    return [[x * c for x in row] for row in m]


class FormSpace:
    """The space M_k(N^-, N^+) with its Hecke and Atkin-Lehner operators."""

    def __init__(self, ctx: QuatContext, k: int, tower: FieldTower | None = None):
        self.ctx = ctx
        self.k = int(k)
        self.tower = tower or default_tower()
        self.classes = ctx.classes
        self.h = len(self.classes)
        self.wdim = 2 * self.k + 1
        self._hecke_full: dict = {}
        self._hecke: dict = {}
        self._al: dict = {}
        self.local_bases = [self._invariants(c.units) for c in self.classes]
        self.basis = []
        for i, lb in enumerate(self.local_bases):
            for v in lb:
                full = [0] * (self.h * self.wdim)
                full[i * self.wdim:(i + 1) * self.wdim] = v
                self.basis.append(full)
        self.dim = len(self.basis)

    @property
    def level(self) -> int:
        return self.ctx.n_minus * self.ctx.n_plus

    def tau(self, gamma: Quat) -> list[list]:
        return tau_matrix(self.k, quat_mat2(self.ctx, gamma, self.tower))

    def _invariants(self, units) -> list[list]:
        if self.k == 0:
            return [[1]]
        rows = []
        seen = set()
        for u in units:
            key = tuple(abs(Fraction(t)) for t in u)
            if key in seen:
                continue
            seen.add(key)
            t = self.tau(u)
            rows += linalg.mat_sub(t, linalg.identity(self.wdim))
        return linalg.kernel(rows, self.wdim)

    # -- operators on the full sum of W_k ----------------------------------
    def _block_operator(self, targets) -> list[list]:
        """Operator with (T f)(I_i) = sum over (m, gamma) in targets[i] of tau(gamma) f(I_m)."""
        n = self.h * self.wdim
        out = [[0] * n for _ in range(n)]
        for i, lst in enumerate(targets):
            for m, gamma in lst:
                t = self.tau(gamma)
                for r in range(self.wdim):
                    row = out[i * self.wdim + r]
                    for c in range(self.wdim):
                        row[m * self.wdim + c] = row[m * self.wdim + c] + t[r][c]
        return out

    def hecke_full(self, p: int) -> list[list]:
        if p not in self._hecke_full:
            if self.level % p == 0:
                raise ValueError("Hecke operators are defined here for p prime to the level")
            targets = []
            for c in self.classes:
                targets.append([self.ctx.class_index(J) for J in self.ctx.neighbors(c.ideal, p)])
            self._hecke_full[p] = self._block_operator(targets)
        return self._hecke_full[p]

    def hecke(self, p: int) -> list[list]:
        """Matrix of T_p on the basis of the space."""
        if p not in self._hecke:
            self._hecke[p] = linalg.restrict(self.hecke_full(p), self.basis)
        return self._hecke[p]

    def atkin_lehner_full(self, q: int) -> list[list]:
        P = self.ctx.atkin_lehner_ideal(q)
        targets = [[self.ctx.class_index(c.ideal * P)] for c in self.classes]
        return self._block_operator(targets)

    def atkin_lehner(self, q: int) -> list[list]:
        if q not in self._al:
            if self.level % q:
                raise ValueError("q must divide the level")
            self._al[q] = linalg.restrict(self.atkin_lehner_full(q), self.basis)
        return self._al[q]

    def level_primes(self) -> list[int]:
        return sorted(sympy.factorint(self.level))

    def good_primes(self, bound: int) -> list[int]:
        return [p for p in sympy.primerange(2, bound + 1) if self.level % p]

    # -- vectors ---------------------------------------------------------------
    def full_vector(self, coords: Sequence) -> list:
        out = [0] * (self.h * self.wdim)
        for c, b in zip(coords, self.basis):
            if c != 0:
                out = [x + c * y for x, y in zip(out, b)]
        return out


@dataclass
class QuatForm:
    """A form given by its values on the class representatives."""

    space: FormSpace
    values: list  # per class: list of 2k + 1 coefficients
    hecke: dict = dc_field(default_factory=dict)  # p -> eigenvalue of T_p
    atkin_lehner: dict = dc_field(default_factory=dict)  # q -> sign
    field_poly: tuple = (0, 1)  # minimal polynomial of the generating eigenvalue
    label: str = ""

    @property
    def k(self) -> int:
        return self.space.k

    def value(self, i: int) -> PolyVector:
        return HomogPoly(2 * self.k, np.array(self.values[i], dtype=object))

    def scale(self, c) -> "QuatForm":
        vals = [[x * c for x in v] for v in self.values]
        return QuatForm(self.space, vals, dict(self.hecke), dict(self.atkin_lehner),
                        self.field_poly, self.label)

    def classical_ap(self, p: int):
        """a_p = p^k lambda_p, the eigenvalue in the classical normalization."""
        return self.hecke[p] * p ** self.k

    def is_eisenstein(self) -> bool:
        if self.k:
            return False
        v0 = self.values[0][0]
        return all(linalg._zero(v[0] - v0) for v in self.values)

    def evaluate(self, local: dict) -> PolyVector:
        """f at the finite adelic point with the given local components
        (see QuatContext.local_lattice)."""
        J = self.space.ctx.local_lattice(local)
        return self.at_ideal(J)

    def at_ideal(self, J: QuatLattice) -> PolyVector:
        m, gamma = self.space.ctx.class_index(J)
        t = self.space.tau(gamma)
        vec = linalg.mat_vec(t, self.values[m])
        return HomogPoly(2 * self.k, np.array(vec, dtype=object))

    def to_json(self):
        enc = lambda x: x.to_json() if isinstance(x, Element) else str(Fraction(x))
        return {
            "k": self.k,
            "label": self.label,
            "level": [self.space.ctx.n_minus, self.space.ctx.n_plus],
            "field_poly": [int(c) for c in self.field_poly],
            "hecke": {str(p): enc(v) for p, v in sorted(self.hecke.items())},
            "atkin_lehner": {str(q): int(v) for q, v in sorted(self.atkin_lehner.items())},
            "values": [[enc(x) for x in v] for v in self.values],
        }


def _rational_coeffs(coeffs) -> list[Fraction] | None:
    out = []
    for c in coeffs:
        if isinstance(c, Element):
            if not c.is_rational():
                return None
            out.append(c.to_fraction())
        else:
            out.append(Fraction(c))
    return out


def _eigenvalue(op, vec):
    """Scalar lambda with op vec = lambda vec."""
    img = linalg.mat_vec(op, vec)
    j = next(i for i, x in enumerate(vec) if not linalg._zero(x))
    lam = img[j] * linalg._inv(vec[j])
    for x, y in zip(img, vec):
        if not linalg._zero(x - lam * y):
            raise RuntimeError("vector is not an eigenvector")
    return lam


def eigenforms(space: FormSpace, hecke_bound: int = 13, seed: int = 0,
               with_atkin_lehner: bool = True, max_tries: int = 6) -> list[QuatForm]:
    """Decompose the space into simultaneous eigenforms for T_p (p <= hecke_bound,
    p prime to the level) and the Atkin-Lehner involutions.  One form is returned
    per Galois orbit, with values in the field generated by its eigenvalues."""
    if space.dim == 0:
        return []
    primes = space.good_primes(hecke_bound)
    ops = {("T", p): space.hecke(p) for p in primes}
    if with_atkin_lehner:
        for q in space.level_primes():
            ops[("W", q)] = space.atkin_lehner(q)
    rng = random.Random(seed)
    names = sorted(ops)
    n = space.dim
    for _ in range(max_tries):
        weights = {nm: rng.randint(1, 9) for nm in names}
        comb = [[0] * n for _ in range(n)]
        for nm in names:
            comb = linalg.mat_add(comb, linalg.mat_scale(ops[nm], weights[nm]))
        cp = _rational_coeffs(linalg.charpoly(comb))
        if cp is None:
            raise RuntimeError("characteristic polynomial is not rational")
        x = sympy.Symbol("x")
        poly = sympy.Poly(list(reversed([sympy.Rational(c.numerator, c.denominator) for c in cp])), x)
        _, facs = sympy.factor_list(poly)
        if any(mult > 1 for _, mult in facs):
            continue
        forms = []
        for g, _ in facs:
            gc = [Fraction(int(c.p), int(c.q)) for c in reversed(g.all_coeffs())]
            theta = space.tower.adjoin_root(gc)
            shifted = [[x - (theta if i == j else 0) for j, x in enumerate(row)]
                       for i, row in enumerate(comb)]
            ker = linalg.kernel(shifted)
            if len(ker) != 1:
                raise RuntimeError("eigenspace is not one-dimensional")
            v = ker[0]
            hecke = {}
            al = {}
            for nm in names:
                lam = _eigenvalue(ops[nm], v)
                if nm[0] == "T":
                    hecke[nm[1]] = lam
                else:
                    sgn = lam.to_fraction() if isinstance(lam, Element) else Fraction(lam)
                    al[nm[1]] = int(sgn)
            full = space.full_vector(v)
            values = [full[i * space.wdim:(i + 1) * space.wdim] for i in range(space.h)]
            monic = [c / gc[-1] for c in gc]
            den = math.lcm(*[c.denominator for c in monic])
            fpoly = tuple(int(c * den) for c in monic)
            forms.append(QuatForm(space, values, hecke, al, fpoly))
        forms.sort(key=lambda f: (len(f.field_poly), f.field_poly))
        for i, f in enumerate(forms):
            f.label = f"{space.ctx.n_minus}.{space.ctx.n_plus}.k{space.k}.{i}"
        return forms
    raise RuntimeError("operators do not separate the eigensystems; raise hecke_bound")


def normalize_lambda(f: QuatForm, place: PrimePlace) -> tuple[QuatForm, int]:
    """Scale f by a power of ell so that its values are lambda-integral with some
    coefficient a lambda-unit.  Returns the scaled form and the exponent used."""
    vals = [place.valuation(x) for v in f.values for x in v]
    finite = [v for v in vals if v != math.inf]
    if not finite:
        raise ValueError("the zero form cannot be normalized")
    e = -min(finite)
    c = Fraction(place.ell) ** e
    return f.scale(c), e


def content_valuation(f: QuatForm, place: PrimePlace) -> int:
    vals = [place.valuation(x) for v in f.values for x in v]
    return min(v for v in vals if v != math.inf)


def pullback(f: QuatForm, target: FormSpace) -> QuatForm:
    """The old form I -> f(I R_source) on a space of level dividing into the
    target level (same N^-, N^+ of the source dividing N^+ of the target)."""
    src = f.space.ctx
    dst = target.ctx
    if src.n_minus != dst.n_minus or dst.n_plus % src.n_plus:
        raise ValueError("levels are not compatible")
    values = []
    for c in dst.classes:
        J = c.ideal * src.order
        values.append(f.at_ideal(J).coeffs.tolist())
    return QuatForm(target, values, {}, {}, f.field_poly, f.label + "^old")

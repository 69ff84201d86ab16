"""Fourier expansion of the Yoshida lift of a pair of quaternionic forms.

For f = f1 (x) f2 on the same class set, the coefficient at the half-integral
matrix S = [[a, b/2], [b/2, c]] is

    a(S) = sum over class pairs (i, j) of
           2 / (|O_i^x| |O_j^x|) * N_ij^(-k1)
           * sum over (x1, x2) in L_ij^2 with n(x1) = N_ij a, n(x2) = N_ij c,
             (x1, x2) = N_ij b  of  < P_k(x1, x2), f1(I_i) (x) f2(I_j) >

with L_ij = I_i conj(I_j) and N_ij = n(I_i) n(I_j); the pairing (x, y) is
n(x + y) - n(x) - n(y).  The value is a polynomial of degree 2 k2 in (X, Y).

Two evaluation routes are provided.  The batched route enumerates lattice
vectors once, groups pairs by (n(x1), n(x2)) and evaluates the contraction
through pure-power decompositions of the form values, in exact integer
arithmetic over Z[sqrt a].  The generic route builds P_k(x1, x2) as a
polynomial vector and contracts it; it is slow and used as a cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .field import Element, FieldTower, PrimePlace
from .lattice import short_vectors
from .polyrep import HomogPoly, Mat2, PolyVector, act, contract_first, poly_P_k
from .qalg import QuatContext, QuatLattice
from .qmforms import QuatForm

_INT64_LIMIT = 2 ** 62


# ---------------------------------------------------------------------------
# index matrices

@dataclass(frozen=True, order=True)
class GramS:
    """S = [[a, b/2], [b/2, c]] with integers a, b, c, semi-positive definite."""
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.a < 0 or self.c < 0 or 4 * self.a * self.c - self.b * self.b < 0:
            raise ValueError(f"({self.a}, {self.b}, {self.c}) is not semi-positive definite")

    @property
    def det4(self) -> int:
        """4 det S = 4ac - b^2."""
        return 4 * self.a * self.c - self.b * self.b

    def is_singular(self) -> bool:
        return self.det4 == 0

    def matrix(self) -> Mat2:
        h = Fraction(self.b, 2)
        return Mat2(Fraction(self.a), h, h, Fraction(self.c))

    def transform(self, u: Mat2) -> "GramS":
        """U S U^t."""
        m = u * self.matrix() * u.transpose()
        return GramS(int(m.a), int(2 * m.b), int(m.d))

    def key(self) -> tuple:
        return (self.a, self.b, self.c)


def gram_range(bound: int) -> list[GramS]:
    """All S in Lambda_2 with max(a, c) <= bound, in a fixed order."""
    out = []
    for a in range(bound + 1):
        for c in range(bound + 1):
            lim = math.isqrt(4 * a * c)
            for b in range(-lim, lim + 1):
                out.append(GramS(a, b, c))
    return out


# ---------------------------------------------------------------------------
# the lattices attached to class pairs

@dataclass
class TwistedLatticePair:
    """L = I_i conj(I_j) with norm form divided by N = n(I_i) n(I_j)."""
    i: int
    j: int
    lattice: QuatLattice
    scale: Fraction
    stabilizer_order: int  # |O_i^x| |O_j^x| / 2: pairs of units modulo +-1

    def gram(self) -> list[list[Fraction]]:
        return [[x / self.scale for x in r] for r in self.lattice.gram()]


def class_reps_H(ctx: QuatContext) -> list[TwistedLatticePair]:
    out = []
    for i, ci in enumerate(ctx.classes):
        for j, cj in enumerate(ctx.classes):
            lat = ci.ideal * cj.ideal.conjugate()
            scale = ci.norm * cj.norm
            if lat.norm() != scale:
                raise RuntimeError("unexpected norm of the product lattice")
            out.append(TwistedLatticePair(i, j, lat, scale, len(ci.units) * len(cj.units) // 2))
    return out


class _VectorCache:
    """Integer coordinates (in 1, i, j, k scaled by a common denominator) of
    all vectors of a twisted lattice up to a scaled norm bound."""

    def __init__(self, pair: TwistedLatticePair):
        self.pair = pair
        basis = pair.lattice.basis
        self.den = math.lcm(*[Fraction(x).denominator for b in basis for x in b])
        self.basis_int = np.array([[int(Fraction(x) * self.den) for x in b] for b in basis], dtype=object)
        self.bound = -1
        self.by_norm: dict[int, np.ndarray] = {}

    def ensure(self, bound: int):
        if bound <= self.bound:
            return
        vecs, vals = short_vectors(self.pair.gram(), bound)
        groups: dict[int, list] = {}
        for v, q in zip(vecs, vals):
            if q.denominator != 1:
                raise RuntimeError("scaled norm form is not integral")
            groups.setdefault(int(q), []).append(v)
        self.by_norm = {}
        for n, vs in groups.items():
            coords = np.array(vs, dtype=object).dot(self.basis_int)
            self.by_norm[n] = np.array(coords.tolist(), dtype=np.int64)
        self.bound = bound

    def vectors(self, n: int) -> np.ndarray:
        self.ensure(n)
        return self.by_norm.get(n, np.zeros((0, 4), dtype=np.int64))


def enumerate_pairs(ctx: QuatContext, pair: TwistedLatticePair, S: GramS) -> list[tuple]:
    """All (x1, x2) in L^2 with n(x1) = N a, n(x2) = N c and (x1, x2) = N b, as
    quaternions."""
    cache = _VectorCache(pair)
    y1 = cache.vectors(S.a)
    y2 = cache.vectors(S.c)
    alg = ctx.alg
    out = []
    for u in y1:
        x1 = tuple(Fraction(int(t), cache.den) for t in u)
        for v in y2:
            x2 = tuple(Fraction(int(t), cache.den) for t in v)
            if alg.pairing(x1, x2) == pair.scale * S.b:
                out.append((x1, x2))
    return out


# ---------------------------------------------------------------------------
# exact Z[sqrt a] array arithmetic (pairs of arrays: real part, sqrt(a) part)

def _zmul(x, y, a):
    return (x[0] * y[0] + a * (x[1] * y[1]), x[0] * y[1] + x[1] * y[0])


def _zpow(x, n, a, one_shape, dtype):
    out = (np.ones(one_shape, dtype=dtype), np.zeros(one_shape, dtype=dtype))
    for _ in range(n):
        out = _zmul(out, x, a)
    return out


def _pure_power_decomposition(values: Sequence, n: int) -> list:
    """c_t with v = sum_t c_t (X + t Y)^n, t = 0..n."""
    if n == 0:
        return [values[0]]
    cols = [[math.comb(n, i) * t ** (n - i) for i in range(n + 1)] for t in range(n + 1)]
    coords = linalg.solve_columns(cols, [list(values)])
    return coords[0]


def _maxabs(arrs) -> int:
    m = 0
    for x in arrs:
        if x.size:
            m = max(m, int(np.max(np.abs(x.astype(object)))))
    return m


@dataclass
class FourierTable:
    """a(S) for all S in Lambda_2 with max(a, c) <= bound (zeros stored)."""
    k: tuple
    bound: int
    coeffs: dict  # (a, b, c) -> PolyVector of degree 2 k2
    meta: dict = dc_field(default_factory=dict)

    def __getitem__(self, S) -> PolyVector:
        key = S.key() if isinstance(S, GramS) else tuple(S)
        return self.coeffs[key]

    def __contains__(self, S) -> bool:
        key = S.key() if isinstance(S, GramS) else tuple(S)
        return key in self.coeffs

    def keys(self) -> list[GramS]:
        return [GramS(*k) for k in self.coeffs]

    def restrict(self, bound: int) -> "FourierTable":
        sub = {k: v for k, v in self.coeffs.items() if max(k[0], k[2]) <= bound}
        return FourierTable(self.k, bound, sub, dict(self.meta))

    def scale(self, c) -> "FourierTable":
        return FourierTable(self.k, self.bound, {k: v.scale(c) for k, v in self.coeffs.items()},
                            dict(self.meta))

    def nonzero(self) -> list[GramS]:
        return [GramS(*k) for k, v in self.coeffs.items() if not v.is_zero()]

    def to_json(self):
        enc = lambda x: x.to_json() if isinstance(x, Element) else str(Fraction(x))
        return {
            "k": list(self.k),
            "bound": self.bound,
            "meta": self.meta,
            "coefficients": [{"a": k[0], "b": k[1], "c": k[2],
                              "coeff": [enc(x) for x in v.coeffs.tolist()]}
                             for k, v in sorted(self.coeffs.items())],
        }


class YoshidaLift:
    """The lift of f1 (x) f2 (same level, k1 >= k2)."""

    def __init__(self, f1: QuatForm, f2: QuatForm, tower: FieldTower | None = None):
        if f1.space.ctx is not f2.space.ctx:
            raise ValueError("both forms must live on the same class set")
        if f1.k < f2.k:
            raise ValueError("need k1 >= k2")
        self.f1, self.f2 = f1, f2
        self.ctx = f1.space.ctx
        self.k = (f1.k, f2.k)
        self.tower = tower or f1.space.tower
        self.sqrt_a = self.tower.sqrt(self.ctx.alg.a)
        self.pairs = class_reps_H(self.ctx)
        self._caches = [_VectorCache(p) for p in self.pairs]
        n1, n2 = 2 * self.k[0], 2 * self.k[1]
        self._dec1 = [_pure_power_decomposition(f1.values[i], n1) for i in range(len(self.ctx.classes))]
        self._dec2 = [_pure_power_decomposition(f2.values[j], n2) for j in range(len(self.ctx.classes))]

    @property
    def kappa(self) -> tuple:
        return (self.k[0] + self.k[1] + 2, self.k[0] - self.k[1] + 2)

    def _zero(self) -> PolyVector:
        return HomogPoly(2 * self.k[1])

    # -- batched route ------------------------------------------------------
    def _entries(self, y: np.ndarray, dtype):
        """Z[sqrt a] parts of the matrix entries (times the denominator)."""
        b = self.ctx.alg.b
        y = y.astype(dtype)
        y0, y1, y2, y3 = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
        return {"a": (y0, y1), "b": (b * y2, b * y3), "c": (y2, -y3), "d": (y0, -y1)}

    def _block(self, pidx: int, a: int, c: int, only_b: Iterable[int] | None = None) -> dict:
        """Contributions of class pair pidx to a(S) for all S = (a, *, c)."""
        pair = self.pairs[pidx]
        cache = self._caches[pidx]
        y1 = cache.vectors(a)
        y2 = cache.vectors(c)
        if len(y1) == 0 or len(y2) == 0:
            return {}
        alg = self.ctx.alg
        A = alg.a
        k1, k2 = self.k
        D = cache.den
        N = pair.scale
        # pairing (x1, x2) = 2 (x0 y0 - a x1 y1 - b x2 y2 + ab x3 y3), scaled by D^2 N
        w = np.array([1, -alg.a, -alg.b, alg.a * alg.b], dtype=np.int64)
        bm = (y1 * w).dot(y2.T) * 2
        nq = Fraction(N)
        num = D * D * nq.numerator
        scaled = bm * nq.denominator
        if np.any(scaled % num):
            raise RuntimeError("pairing is not integral")
        bvals = scaled // num
        flat_b = bvals.ravel()
        if only_b is not None:
            keep_b = set(only_b)
            if not any(int(b) in keep_b for b in np.unique(flat_b)):
                return {}
        order = np.argsort(flat_b, kind="stable")
        sorted_b = flat_b[order]
        uniq, starts = np.unique(sorted_b, return_index=True)

        e1 = self._entries(y1, object)
        e2 = self._entries(y2, object)
        T = 2 * k1 + 1
        U = 2 * k2 + 1
        # q(x) at (X1, Y1) = (-t, 1), (X2, Y2) = (-u, 1): t u b - u d + t a - c
        def qvals(e, t, u):
            return tuple(t * u * e["b"][r] - u * e["d"][r] + t * e["a"][r] - e["c"][r] for r in range(2))

        # choose the integer type from a magnitude bound
        ent_max1 = _maxabs([x for v in e1.values() for x in v])
        ent_max2 = _maxabs([x for v in e2.values() for x in v])
        tmax = max(T, U)
        qb1 = 4 * tmax * tmax * ent_max1 * (1 + abs(A))
        qb2 = 4 * tmax * tmax * ent_max2 * (1 + abs(A))
        pb = 8 * tmax * tmax * ent_max1 * ent_max2 * (1 + abs(A)) ** 2
        est = (pb ** (k1 - k2)) * max(qb1, qb2, 1) ** (2 * k2) * (1 + abs(A)) ** (2 * k1 + 2) * len(flat_b)
        dtype = np.int64 if est < _INT64_LIMIT else object
        if dtype is np.int64:
            e1 = {k_: (v[0].astype(np.int64), v[1].astype(np.int64)) for k_, v in e1.items()}
            e2 = {k_: (v[0].astype(np.int64), v[1].astype(np.int64)) for k_, v in e2.items()}

        shape = (len(y1), len(y2))
        # p(x1 adj(x2)) at (-t, 1), bilinear in the entries
        def outer(x, y):
            return (x[0][:, None] * y[0][None, :] + A * (x[1][:, None] * y[1][None, :]),
                    x[0][:, None] * y[1][None, :] + x[1][:, None] * y[0][None, :])

        def sub(x, y):
            return (x[0] - y[0], x[1] - y[1])

        m_a = sub(outer(e1["a"], e2["d"]), outer(e1["b"], e2["c"]))
        m_b = sub(outer(e1["b"], e2["a"]), outer(e1["a"], e2["b"]))
        m_c = sub(outer(e1["c"], e2["d"]), outer(e1["d"], e2["c"]))
        m_d = sub(outer(e1["d"], e2["a"]), outer(e1["c"], e2["b"]))
        # sums[(t, u, alpha)] -> (real, sqrt a) arrays indexed by unique b
        results: dict = {}
        for t in range(T):
            if k1 > k2:
                pt = tuple(-m_b[r] * (t * t) - (m_a[r] - m_d[r]) * t + m_c[r] for r in range(2))
                ppow = _zpow(pt, k1 - k2, A, shape, dtype)
            else:
                ppow = None
            for u in range(U):
                qa = qvals(e1, t, u)
                qb = qvals(e2, t, u)
                apows = [(np.ones(len(y1), dtype=dtype), np.zeros(len(y1), dtype=dtype))]
                bpows = [(np.ones(len(y2), dtype=dtype), np.zeros(len(y2), dtype=dtype))]
                for _ in range(2 * k2):
                    apows.append(_zmul(apows[-1], qa, A))
                    bpows.append(_zmul(bpows[-1], qb, A))
                for alpha in range(2 * k2 + 1):
                    x = apows[alpha]
                    y = bpows[2 * k2 - alpha]
                    term = (x[0][:, None] * y[0][None, :] + A * (x[1][:, None] * y[1][None, :]),
                            x[0][:, None] * y[1][None, :] + x[1][:, None] * y[0][None, :])
                    if ppow is not None:
                        term = _zmul(term, ppow, A)
                    red = tuple(np.add.reduceat(term[r].ravel()[order], starts) for r in range(2))
                    results[(t, u, alpha)] = red
        # assemble exact values
        s = self.sqrt_a
        weight = Fraction(1, pair.stabilizer_order) / (Fraction(D) ** (2 * k1) * N ** k1)
        c1 = self._dec1[pair.i]
        c2 = self._dec2[pair.j]
        out = {}
        for bi, bval in enumerate(uniq.tolist()):
            if only_b is not None and bval not in keep_b:
                continue
            coeffs = [0] * (2 * k2 + 1)
            for (t, u, alpha), red in results.items():
                re, im = int(red[0][bi]), int(red[1][bi])
                if re == 0 and im == 0:
                    continue
                ct, du = c1[t], c2[u]
                if linalg._zero(ct) or linalg._zero(du):
                    continue
                val = (s * im + re) if im else re
                coeffs[alpha] = coeffs[alpha] + ct * du * val * math.comb(2 * k2, alpha)
            out[bval] = [x * weight for x in coeffs]
        return out

    def fourier_coefficient(self, S: GramS) -> PolyVector:
        total = [0] * (2 * self.k[1] + 1)
        for pidx in range(len(self.pairs)):
            blk = self._block(pidx, S.a, S.c, only_b=[S.b])
            if S.b in blk:
                total = [x + y for x, y in zip(total, blk[S.b])]
        return HomogPoly(2 * self.k[1], np.array(total, dtype=object))

    def expansion_up_to(self, bound: int) -> FourierTable:
        coeffs = {S.key(): [0] * (2 * self.k[1] + 1) for S in gram_range(bound)}
        for pidx in range(len(self.pairs)):
            self._caches[pidx].ensure(bound)
            for a in range(bound + 1):
                for c in range(bound + 1):
                    for bval, vec in self._block(pidx, a, c).items():
                        key = (a, bval, c)
                        coeffs[key] = [x + y for x, y in zip(coeffs[key], vec)]
        table = {key: HomogPoly(2 * self.k[1], np.array(v, dtype=object)) for key, v in coeffs.items()}
        meta = {"level": [self.ctx.n_minus, self.ctx.n_plus], "k": list(self.k),
                "f1": self.f1.label, "f2": self.f2.label}
        return FourierTable(self.k, bound, table, meta)

    # -- generic route ------------------------------------------------------
    def _mat(self, x) -> Mat2:
        rows = self.ctx.alg.to_matrix(x, self.tower)
        return Mat2.from_rows(rows)

    def fourier_coefficient_generic(self, S: GramS) -> PolyVector:
        """Same coefficient through explicit polynomial vectors P_k(x1, x2)."""
        k1, k2 = self.k
        total = self._zero()
        for pair in self.pairs:
            v1 = self.f1.value(pair.i)
            v2 = self.f2.value(pair.j)
            acc = self._zero()
            for x1, x2 in enumerate_pairs(self.ctx, pair, S):
                P = poly_P_k(self._mat(x1), self._mat(x2), (k1, k2))
                acc = acc + contract_first(P, [v1, v2])
            w = Fraction(1, pair.stabilizer_order) / pair.scale ** k1
            total = total + acc.scale(w)
        return total


# ---------------------------------------------------------------------------
# checks on tables

ORIENTATIONS = ("U", "U^t", "U^-1", "U^-t")


def _orient(u: Mat2, name: str) -> Mat2:
    return {"U": u, "U^t": u.transpose(), "U^-1": u.inverse(),
            "U^-t": u.inverse().transpose()}[name]


SL2_GENERATORS = {"T": Mat2(1, 1, 0, 1), "J": Mat2(0, 1, -1, 0)}


def _poly_equal(p: PolyVector, q: PolyVector) -> bool:
    return (p - q).is_zero()


def check_equivariance(table: FourierTable, generators: dict | None = None) -> dict:
    """Find the orientations W with a(U S U^t) = rho(W(U)) a(S) for every S of
    the table whose transform is also in the table and every generator U."""
    generators = generators or SL2_GENERATORS
    counts = {o: 0 for o in ORIENTATIONS}
    failures = {o: [] for o in ORIENTATIONS}
    checked = 0
    for S in table.keys():
        for gname, u in generators.items():
            S2 = S.transform(u)
            if S2 not in table:
                continue
            checked += 1
            lhs = table[S2]
            src = table[S]
            for o in ORIENTATIONS:
                rhs = act(src, [_orient(u, o)])
                if _poly_equal(lhs, rhs):
                    counts[o] += 1
                else:
                    failures[o].append((S.key(), gname))
    consistent = [o for o in ORIENTATIONS if not failures[o]]
    return {"checked": checked, "consistent": consistent,
            "failures": {o: len(v) for o, v in failures.items()},
            "examples": {o: v[:3] for o, v in failures.items()}}


def check_cuspidality(table: FourierTable, distinct_systems: bool) -> dict:
    singular = [S for S in table.keys() if S.is_singular()]
    nonzero = [S.key() for S in singular if not table[S].is_zero()]
    ok = (not nonzero) if distinct_systems else True
    if distinct_systems and nonzero:
        raise AssertionError(f"nonzero singular coefficients: {nonzero[:5]}")
    return {"singular": len(singular), "nonzero_singular": nonzero, "ok": ok,
            "asserted": distinct_systems}


def table_integrality(table: FourierTable, place: PrimePlace) -> dict:
    worst = math.inf
    bad = []
    for key, v in table.coeffs.items():
        for x in v.coeffs.tolist():
            if linalg._zero(x):
                continue
            val = place.valuation(x)
            worst = min(worst, val)
            if val < 0:
                bad.append(key)
    return {"min_valuation": worst, "non_integral": bad, "ok": not bad}


def reduce_mod_lambda(table: FourierTable, place: PrimePlace, det4_target: int | None = None) -> dict:
    """Reduce every coefficient modulo lambda.  Returns the S with nonzero
    reduction and, among them, those with 4 det S equal to det4_target."""
    if place.ell <= 2 * table.k[0]:
        raise ValueError("need ell > 2 k1")
    reduced = {}
    nonzero = []
    for key, v in sorted(table.coeffs.items()):
        res = []
        for x in v.coeffs.tolist():
            if linalg._zero(x):
                res.append(0)
                continue
            if place.valuation(x) < 0:
                raise ArithmeticError(f"coefficient at {key} is not lambda-integral")
            res.append(place.reduce(x))
        reduced[key] = res
        if any(res):
            nonzero.append(key)
    flagged = [k for k in nonzero if det4_target is not None and 4 * k[0] * k[2] - k[1] ** 2 == det4_target]
    return {"reduced": reduced, "nonzero": nonzero, "flagged": flagged}

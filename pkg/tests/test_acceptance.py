"""Acceptance criteria 1-9.  Each test records one pass/fail line, printed in
the terminal summary (and by running this file directly)."""
import functools
import itertools
import math
import random
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy

from yoshidalift import (FieldTower, FormSpace, PrimePlace, RingClassGroup, YoshidaLift,
                         bessel_identity_check, build_bessel_datum, check_cuspidality,
                         check_equivariance, eigenforms, nonvanishing_witness, pluriharmonic_check,
                         table_integrality)
from yoshidalift import linalg
from yoshidalift.polyrep import P_k_equivariance_check, p_equivariance_check, pairing_invariance_check
from yoshidalift.qmforms import normalize_lambda

from conftest import ACCEPTANCE, context, forms_on


def criterion(n: int, desc: str):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t = time.time()
            try:
                fn(*args, **kwargs)
            except BaseException:
                ACCEPTANCE[n] = (False, desc)
                raise
            prev = ACCEPTANCE.get(n)
            if prev is None or prev[0]:
                spent = time.time() - t + (prev[2] if prev else 0)
                ACCEPTANCE[n] = (True, f"{desc} ({spent:.1f}s)", spent)
        return run
    return wrap


# ---------------------------------------------------------------------------
# independent oracles

def lattice_vectors(L, N: Fraction, bound: int) -> list[tuple]:
    """All (coords, q, gram, den) with q = n(x) / N <= bound, by exhaustive
    search in the box given by the inverse Gram matrix."""
    alg = L.alg
    basis = L.basis
    G = [[alg.pairing(a, b) / (2 * N) for b in basis] for a in basis]
    den = math.lcm(*[x.denominator for r in G for x in r])
    Gi = np.array([[int(x * den) for x in r] for r in G], dtype=np.int64)
    inv = np.linalg.inv(np.array(G, dtype=float))
    radius = [int(math.floor(math.sqrt(bound * inv[s][s]) + 1e-9)) for s in range(4)]
    grid = np.array(list(itertools.product(*[range(-r, r + 1) for r in radius])), dtype=np.int64)
    q = np.einsum("ns,st,nt->n", grid, Gi, grid)
    keep = q <= bound * den
    return [(tuple(int(c) for c in v), int(val) // den, Gi, den) for v, val in zip(grid[keep], q[keep])]


def unit_count(ideal, norm) -> int:
    """|O^x| for the left order O of the ideal, as norm-1 vectors of I conj(I) / n(I)^2."""
    return sum(1 for v in lattice_vectors(ideal * ideal.conjugate(), norm ** 2, 1) if v[1] == 1)


def _same(x, y) -> bool:
    d = x - y
    return d.is_zero() if hasattr(d, "is_zero") else d == 0


def theta_oracle(ctx, f1, f2, bound: int) -> dict:
    """k = 0: sum over class pairs of f1(i) f2(j) / |Gamma_ij| times the number of
    (x1, x2) in (I_i conj I_j)^2 with Gram matrix S, where Gamma_ij = (O_i^x x O_j^x) / +-1."""
    h = len(ctx.classes)
    units = [unit_count(c.ideal, c.norm) for c in ctx.classes]
    out = {}
    for i, j in itertools.product(range(h), repeat=2):
        ci, cj = ctx.classes[i], ctx.classes[j]
        vecs = lattice_vectors(ci.ideal * cj.ideal.conjugate(), ci.norm * cj.norm, bound)
        Gi, den = vecs[0][2], vecs[0][3]
        w = f1.values[i][0] * f2.values[j][0] * Fraction(2, units[i] * units[j])
        coords = np.array([v[0] for v in vecs], dtype=np.int64)
        norms = np.array([v[1] for v in vecs], dtype=np.int64)
        cross = 2 * (coords @ Gi @ coords.T)
        assert not (cross % den).any()
        n = len(vecs)
        keys = np.stack([np.repeat(norms, n), (cross // den).ravel(), np.tile(norms, n)], axis=1)
        uniq, counts = np.unique(keys, axis=0, return_counts=True)
        for key, cnt in zip(uniq.tolist(), counts.tolist()):
            key = tuple(key)
            out[key] = out.get(key, 0) + w * cnt
    return out


def elliptic_ap(p: int) -> int:
    """a_p of y^2 + y = x^3 - x^2 - 10x - 20 (conductor 11) by point counting."""
    count = 1
    for x in range(p):
        for y in range(p):
            if (y * y + y - (x ** 3 - x * x - 10 * x - 20)) % p == 0:
                count += 1
    return p + 1 - count


def brandt_by_theta(ctx, p: int):
    """B(p)_ij = #{x in I_i conj(I_j) : n(x) = p n(I_i) n(I_j)} / |O_j^x|."""
    h = len(ctx.classes)
    B = [[0] * h for _ in range(h)]
    units = [unit_count(c.ideal, c.norm) for c in ctx.classes]
    for i in range(h):
        for j in range(h):
            ci, cj = ctx.classes[i], ctx.classes[j]
            vecs = lattice_vectors(ci.ideal * cj.ideal.conjugate(), ci.norm * cj.norm, p)
            B[i][j] = Fraction(sum(1 for v in vecs if v[1] == p), units[j])
    return B


# ---------------------------------------------------------------------------
# criteria

@criterion(1, "pairing invariance for Sym^n (x) det^b, n <= 10, 100 random g each")
def test_criterion_1_pairing_invariance():
    t = time.time()
    rng = random.Random(1)
    for n in range(11):
        for b in (-2, 0, 1):
            assert pairing_invariance_check(n, rng, trials=100, b=b)
    assert time.time() - t < 10


@criterion(2, "pluriharmonicity of P_k for all k2 <= k1 <= 4")
def test_criterion_2_pluriharmonic():
    t = time.time()
    for k1 in range(5):
        for k2 in range(k1 + 1):
            r = pluriharmonic_check((k1, k2))
            assert r["pluriharmonic"] and r["integral"], (k1, k2, r["failures"])
    assert time.time() - t < 60


@criterion(3, "equivariance of p and P_k, 100 random specializations per weight up to (4, 4)")
def test_criterion_3_equivariance():
    assert p_equivariance_check(random.Random(7), trials=100)
    for k1 in range(5):
        for k2 in range(k1 + 1):
            assert P_k_equivariance_check((k1, k2), random.Random(10 * k1 + k2), trials=100), (k1, k2)


CLASS_NUMBERS = {(2, 1): 1, (3, 1): 1, (11, 1): 2, (2, 3): 1, (2, 5): 1, (3, 2): 1}


@criterion(4, "mass formula on (2,1), (3,1), (11,1), (2,3), (2,5), (3,2)")
def test_criterion_4_mass():
    from yoshidalift.qalg import QuatContext
    for (n_minus, n_plus), h in CLASS_NUMBERS.items():
        t = time.time()
        ctx = QuatContext(n_minus, n_plus)
        assert len(ctx.classes) == h
        # unit groups recounted by brute force, not taken from the class data
        mass = sum(Fraction(1, unit_count(c.ideal, c.norm)) for c in ctx.classes)
        formula = Fraction(1, 24)
        for p in sympy.primefactors(n_minus):
            formula *= p - 1
        for p, e in sympy.factorint(n_plus).items():
            formula *= (p + 1) * p ** (e - 1)
        assert mass == formula
        assert time.time() - t < 30


@criterion(5, "Brandt matrices commute with each other and W_q; level 11 a_2 = -2, a_3 = -1")
def test_criterion_5_hecke():
    for level, k in [((11, 1), 0), ((11, 1), 1), ((2, 3), 1), ((23, 1), 0), ((2, 1), 6), ((3, 2), 1)]:
        space = FormSpace(context(*level), k, FieldTower())
        ops = [space.hecke(p) for p in space.good_primes(13)] + \
              [space.atkin_lehner(q) for q in space.level_primes()]
        for a, b in itertools.product(ops, repeat=2):
            assert linalg.mat_mul(a, b) == linalg.mat_mul(b, a)
    # oracle 1: Brandt matrices from theta counts, without the neighbor graph
    ctx = context(11)
    space = FormSpace(ctx, 0, FieldTower())
    x = sympy.Symbol("x")
    for p in (2, 3, 5, 7):
        theta = sympy.Matrix(brandt_by_theta(ctx, p)).applyfunc(sympy.Rational)
        nbr = sympy.Matrix(space.hecke(p)).applyfunc(lambda c: sympy.Rational(str(c)))
        assert theta.charpoly(x) == nbr.charpoly(x)
    # oracle 2: the elliptic curve of conductor 11
    cusp = [f for f in eigenforms(space) if not f.is_eisenstein()][0]
    assert (elliptic_ap(2), elliptic_ap(3)) == (-2, -1)
    for p in (2, 3, 5, 7, 13):
        assert cusp.classical_ap(p) == elliptic_ap(p)


@criterion(6, "Fourier tables to max(a, c) <= 20: one orientation, cuspidality, lambda-integrality")
def test_criterion_6_tables():
    for n_minus, k in [(5, 1), (7, 1)]:
        tower, forms = forms_on(n_minus, [k])
        f = forms[k][0]
        ell = next(l for l in sympy.primerange(2 * k + 1, 200)
                   if (2 * n_minus) % l and _has_place(tower, l))
        place = PrimePlace(tower.top, ell)
        g, _ = normalize_lambda(f, place)
        table = YoshidaLift(g, g, tower).expansion_up_to(20)
        assert len(table.nonzero()) > 100
        eq = check_equivariance(table)
        assert eq["consistent"] == ["U"] and eq["checked"] > 1000
        assert table_integrality(table, place)["ok"]
    tower, forms = forms_on(11, [0])
    eis = [f for f in forms[0] if f.is_eisenstein()][0]
    cusp = [f for f in forms[0] if not f.is_eisenstein()][0]
    table = YoshidaLift(cusp, eis, tower).expansion_up_to(20)
    assert table.nonzero()
    cu = check_cuspidality(table, distinct_systems=True)
    assert cu["ok"] and cu["singular"] > 100
    assert check_equivariance(table)["consistent"]
    assert table_integrality(table, PrimePlace(tower.top, 5))["ok"]


def _has_place(tower, ell) -> bool:
    try:
        PrimePlace(tower.top, ell)
    except ValueError:
        return False
    return True


@criterion(7, "k = 0 coefficients equal brute-force theta pair counts for max(a, c) <= 10")
def test_criterion_7_theta_oracle():
    for n_minus in (2, 11):
        tower, forms = forms_on(n_minus, [0])
        ctx = context(n_minus)
        for f1, f2 in itertools.product(forms[0], repeat=2):
            table = YoshidaLift(f1, f2, tower).expansion_up_to(10)
            oracle = theta_oracle(ctx, f1, f2, 10)
            for S in table.keys():
                assert _same(table[S].coeffs[0], oracle.get(S.key(), 0)), S.key()
            assert set(oracle) <= set(table.coeffs)
            assert any(not _same(v, 0) for v in oracle.values())


BESSEL_CONFIGS = [
    # (label, N^-, (k1, k2), form indices, -D_K, C, expect_zero)
    ("zero instance, opposed signs, weights (10, 8), C = 3", 2, (4, 3), (0, 0), 11, 3, True),
    ("zero instance, opposed signs, weights (10, 8), C = 1", 2, (4, 3), (0, 0), 11, 1, True),
    ("C = 1, trivial character, weights (8, 8)", 2, (3, 3), (0, 0), 11, 1, False),
    ("C = 3, nontrivial character, weights (8, 8)", 2, (3, 3), (0, 0), 11, 3, False),
    ("C = 1, cubic characters, level 11, weight 2", 11, (0, 0), (0, 0), 23, 1, False),
    ("C = 5, order 4 characters, level 7, weight 4", 7, (1, 1), (0, 0), 11, 5, False),
]


@criterion(8, "Bessel identity, exact, on zero, C = 1 and C > 1 configurations")
@pytest.mark.parametrize("config", BESSEL_CONFIGS, ids=[c[0] for c in BESSEL_CONFIGS])
def test_criterion_8_bessel(config):
    label, n_minus, k, idx, d, C, expect_zero = config
    t = time.time()
    tower, forms = forms_on(n_minus, list(k))
    if k == (0, 0):
        # weight 2: take the cusp form, the constant form pairs to zero
        f1 = f2 = [f for f in forms[0] if not f.is_eisenstein()][idx[0]]
    else:
        f1, f2 = forms[k[0]][idx[0]], forms[k[1]][idx[1]]
    datum = build_bessel_datum(-d, C, context(n_minus), tower)
    group = RingClassGroup(datum.K, C)
    lift = YoshidaLift(f1, f2, tower)
    chars = [c for c in group.characters() if c.conductor_ok()]
    assert chars
    if C > 1:
        assert all(not c.is_trivial() for c in chars)
    sides = []
    for chi in chars:
        r = bessel_identity_check(f1, f2, datum, chi, lift)
        assert r.equal, (label, chi.exps)
        sides.append(r.fourier_side)
    if expect_zero:
        assert all(s == 0 for s in sides)
    else:
        assert any(s != 0 for s in sides)
    assert time.time() - t < 1800


@criterion(9, "mod-lambda witness with 4 det S = C^2 |Delta_K| on (2,1), weights (8, 8), K = Q(sqrt -11), C = 3")
def test_criterion_9_mod_lambda():
    tower, forms = forms_on(2, [3])
    f = forms[3][0]
    datum = build_bessel_datum(-11, 3, context(2), tower)
    chi = [c for c in RingClassGroup(datum.K, 3).characters() if c.conductor_ok()][0]
    lift = YoshidaLift(f, f, tower)
    report = bessel_identity_check(f, f, datum, chi, lift)
    assert report.equal
    ell = 37
    assert ell > 2 * f.k and (2 * datum.level) % ell
    w = nonvanishing_witness(f, f, datum, chi, ell, lift, report)
    assert w["implied"]
    assert w["witnesses"]
    for key in w["witnesses"]:
        assert 4 * key[0] * key[2] - key[1] ** 2 == 9 * 11


if __name__ == "__main__":
    code = pytest.main([__file__, "-q"])
    for n in sorted(ACCEPTANCE):
        ok, desc = ACCEPTANCE[n][:2]
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {desc}")
    sys.exit(code)

from fractions import Fraction

import pytest

from yoshidalift import FieldTower, FormSpace, PrimePlace, eigenforms
from yoshidalift import linalg
from yoshidalift.qmforms import content_valuation, normalize_lambda

from conftest import context


def eta_product(exps: dict, terms: int) -> list[int]:
    """q-expansion coefficients a_1 .. a_terms of prod_m eta(m z)^e_m (shift 1 assumed)."""
    assert sum(m * e for m, e in exps.items()) == 24
    coeffs = [0] * terms
    coeffs[0] = 1  # q^1 times a power series in q
    series = [1] + [0] * (terms - 1)
    for m, e in exps.items():
        for n in range(m, terms, m):
            for _ in range(abs(e)):
                if e > 0:  # multiply by (1 - q^n)
                    for i in range(terms - 1, n - 1, -1):
                        series[i] -= series[i - n]
                else:  # divide by (1 - q^n)
                    for i in range(n, terms):
                        series[i] += series[i - n]
    return [0] + series[:terms - 1]  # index j holds a_j


ORACLES = {
    # (N^-, N^+, k): eta product of the unique newform
    (11, 1, 0): {1: 2, 11: 2},
    (2, 1, 3): {1: 8, 2: 8},
    (2, 7, 0): {1: 1, 2: 1, 7: 1, 14: 1},
    (7, 2, 0): {1: 1, 2: 1, 7: 1, 14: 1},
    (3, 5, 0): {1: 1, 3: 1, 5: 1, 15: 1},
    (5, 3, 0): {1: 1, 3: 1, 5: 1, 15: 1},
    (3, 1, 2): {1: 6, 3: 6},
    (5, 1, 1): {1: 4, 5: 4},
}


@pytest.mark.parametrize("key", sorted(ORACLES))
def test_eigenvalues_match_eta_products(key):
    n_minus, n_plus, k = key
    a = eta_product(ORACLES[key], 40)
    forms = [f for f in eigenforms(FormSpace(context(n_minus, n_plus), k, FieldTower()))
             if not f.is_eisenstein()]
    assert len(forms) == 1 and len(forms[0].field_poly) == 2
    f = forms[0]
    for p in [p for p in (2, 3, 5, 7, 11, 13) if (n_minus * n_plus) % p]:
        assert f.classical_ap(p) == a[p]
    # at p | N^- the quaternionic sign equals a_p / p^k
    for p in [p for p in (2, 3, 5, 7, 11) if n_minus % p == 0]:
        assert f.atkin_lehner[p] == Fraction(a[p], p ** k)
    # at p | N^+ it is the classical eigenvalue -a_p / p^k of W_p
    for p in [p for p in (2, 3, 5, 7) if n_plus % p == 0]:
        assert f.atkin_lehner[p] == -Fraction(a[p], p ** k)


def test_level_11_weight_2():
    f = [f for f in eigenforms(FormSpace(context(11), 0, FieldTower())) if not f.is_eisenstein()][0]
    assert (f.classical_ap(2), f.classical_ap(3)) == (-2, -1)


@pytest.mark.parametrize("n_minus,k,dim", [(2, 3, 1), (2, 4, 1), (2, 5, 0), (2, 6, 2), (11, 0, 2),
                                           (11, 1, 2), (5, 1, 1), (7, 1, 1), (3, 2, 1)])
def test_dimensions(n_minus, k, dim):
    assert FormSpace(context(n_minus), k, FieldTower()).dim == dim


@pytest.mark.parametrize("level,k", [((11, 1), 1), ((2, 3), 1), ((2, 1), 6), ((23, 1), 0), ((2, 5), 1)])
def test_operators_commute(level, k):
    space = FormSpace(context(*level), k, FieldTower())
    ops = [space.hecke(p) for p in space.good_primes(11)] + \
          [space.atkin_lehner(q) for q in space.level_primes()]
    for a in ops:
        for b in ops:
            assert linalg.mat_mul(a, b) == linalg.mat_mul(b, a)
    n = space.dim
    ident = [[int(i == j) for j in range(n)] for i in range(n)]
    for q in space.level_primes():
        W = space.atkin_lehner(q)
        assert linalg.mat_mul(W, W) == ident


def test_eigenforms_are_eigenvectors():
    space = FormSpace(context(23), 0, FieldTower())
    forms = eigenforms(space)
    assert sorted(len(f.field_poly) - 1 for f in forms) == [1, 2]
    for f in forms:
        assert f.classical_ap(2) is not None
        # T_p f = lambda_p f on the class values
        full = space.hecke_full(3)
        vec = [v[0] for v in f.values]
        lhs = linalg.mat_vec(full, vec)
        assert all(linalg._zero(x - f.hecke[3] * y) for x, y in zip(lhs, vec))


def test_eigenforms_are_deterministic():
    a = eigenforms(FormSpace(context(11), 1, FieldTower()), seed=0)
    b = eigenforms(FormSpace(context(11), 1, FieldTower()), seed=0)
    assert [f.field_poly for f in a] == [f.field_poly for f in b]
    assert [f.atkin_lehner for f in a] == [f.atkin_lehner for f in b]


def test_lambda_normalization():
    tower = FieldTower()
    f = eigenforms(FormSpace(context(2), 3, tower))[0]
    place = PrimePlace(tower.top, 13)
    g, e = normalize_lambda(f.scale(Fraction(13, 169 * 3)), place)
    assert content_valuation(g, place) == 0
    assert e == 1

import math
import random
from fractions import Fraction

import numpy as np
import pytest
import sympy

from yoshidalift.polyrep import (HomogPoly, Mat2, P_k_equivariance_check, PolyVector, act,
                                 p_equivariance_check, pairing_invariance_check, pairing_n,
                                 pluriharmonic_check, poly_P_alpha, poly_P_k, poly_p, poly_q,
                                 poly_Q_S, slice_last, tau_apply)


def hp(*coeffs):
    return HomogPoly(len(coeffs) - 1, np.array([Fraction(c) for c in coeffs], dtype=object))


def test_poly_p_examples():
    assert poly_p(Mat2(1, 0, 0, -1)) == hp(0, 2, 0)  # 2 X Y
    assert poly_p(Mat2(0, 1, 0, 0)) == hp(0, 0, -1)  # -X^2


def test_poly_q_examples():
    q = poly_q(Mat2(1, 0, 0, 1))
    # Y1 X2 - X1 Y2: coeffs[i, j] multiplies X1^i Y1^(1-i) X2^j Y2^(1-j)
    assert (q.coeffs[0, 1], q.coeffs[1, 0], q.coeffs[1, 1], q.coeffs[0, 0]) == (1, -1, 0, 0)
    assert poly_q(Mat2(0, 0, 0, 0)).is_zero()
    q = poly_q(Mat2(0, 1, -1, 0))
    assert (q.coeffs[1, 1], q.coeffs[0, 0], q.coeffs[0, 1], q.coeffs[1, 0]) == (1, 1, 0, 0)


def test_P_alpha_hand_value(tower):
    i = tower.i()
    v = poly_P_alpha(Mat2(1, 0, 0, 1), Mat2(i, 0, 0, -i), 0, (1, 0))
    assert v.coeffs[1, 0] == -2 * i
    assert all(v.coeffs[j, 0] == 0 for j in (0, 2))


def test_P_k_trivial_weights():
    P = poly_P_k(Mat2(2, 3, 5, 7), Mat2(1, -1, 4, 2), (0, 0))
    assert P.degrees == (0, 0, 0) and P.coeffs[0, 0, 0] == 1


@pytest.mark.parametrize("k", [(1, 0), (1, 1), (2, 1), (3, 2)])
def test_P_k_archimedean_contraction(k, tower):
    """<P_k(1, diag(i, -i)), (X^2 + Y^2)^k2> = (-2i)^(k1+k2) (X1 Y1)^k1 (X2 Y2)^k2."""
    k1, k2 = k
    i = tower.i()
    P = poly_P_k(Mat2(1, 0, 0, 1), Mat2(i, 0, 0, -i), k)
    n = 2 * k2
    Q = [Fraction(math.comb(k2, j // 2)) if j % 2 == 0 else 0 for j in range(n + 1)]
    acc = None
    for j in range(n + 1):
        if Q[n - j] == 0:
            continue
        term = slice_last(P, j).scale(Fraction((-1) ** j, math.comb(n, j)) * Q[n - j])
        acc = term if acc is None else acc + term
    expected = PolyVector((2 * k1, 2 * k2), tags=("v0", "v1"))
    expected.coeffs[k1, k2] = (-2 * i) ** (k1 + k2)
    assert (acc - expected).is_zero()


def test_Q_S_examples(tower):
    Q = poly_Q_S(Mat2(1, 0, 0, 1), 1, 1, 4)
    assert Q == hp(1, 0, 1)
    half = Fraction(1, 2)
    Q = poly_Q_S(Mat2(1, half, half, 1), 0, tower.sqrt(3) / 2, 2)
    assert Q.coeffs[0] == Fraction(4, 3)


def test_scalar_matrices_act_trivially_on_W_k():
    rng = random.Random(3)
    for k in range(4):
        v = hp(*[rng.randint(-9, 9) for _ in range(2 * k + 1)])
        assert tau_apply(k, Mat2(Fraction(5, 3), 0, 0, Fraction(5, 3)), v) == v


@pytest.mark.parametrize("n", range(11))
def test_pairing_is_perfect(n):
    gram = sympy.Matrix(n + 1, n + 1, lambda a, b: pairing_n(
        HomogPoly(n, np.array([int(t == a) for t in range(n + 1)], dtype=object)),
        HomogPoly(n, np.array([int(t == b) for t in range(n + 1)], dtype=object))))
    assert gram.det() != 0


def test_pairing_invariance_small():
    rng = random.Random(0)
    for n in range(7):
        for b in (-1, 0, 2):
            assert pairing_invariance_check(n, rng, trials=15, b=b)


def test_p_equivariance():
    assert p_equivariance_check(random.Random(1), trials=50)


def test_P_k_equivariance_small():
    for k in [(1, 0), (1, 1), (2, 1)]:
        assert P_k_equivariance_check(k, random.Random(2), trials=20)


def test_P_k_equivariance_detects_wrong_orientation():
    k = (1, 1)
    g = Mat2(1, 2, 0, 1)
    x1, x2 = Mat2(1, 2, 3, 5), Mat2(-1, 1, 2, 7)
    z1, z2 = x1 * g.a + x2 * g.c, x1 * g.b + x2 * g.d
    lhs = poly_P_k(z1, z2, k)
    good = act(poly_P_k(x1, x2, k), [None, None, g.transpose()], [0, 0, 0])
    bad = act(poly_P_k(x1, x2, k), [None, None, g], [0, 0, 0])
    assert (lhs - good).is_zero()
    assert not (lhs - bad).is_zero()


@pytest.mark.parametrize("k", [(0, 0), (1, 0), (2, 2)])
def test_pluriharmonic_and_integral(k):
    r = pluriharmonic_check(k)
    assert r["pluriharmonic"] and r["integral"]

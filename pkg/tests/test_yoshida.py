from fractions import Fraction

import pytest

from yoshidalift import (FourierTable, GramS, PrimePlace, YoshidaLift, check_cuspidality,
                         check_equivariance, reduce_mod_lambda, table_integrality)
from yoshidalift.qmforms import normalize_lambda
from yoshidalift.yoshida import class_reps_H, gram_range

from conftest import context, forms_on


def test_gram_basics():
    S = GramS(2, 1, 3)
    assert S.det4 == 23 and not S.is_singular()
    assert GramS(1, 2, 1).is_singular()
    with pytest.raises(ValueError):
        GramS(1, 3, 1)
    from yoshidalift import Mat2
    assert S.transform(Mat2(1, 1, 0, 1)) == GramS(2 + 1 + 3, 1 + 2 * 3, 3)


def test_gram_range_size():
    # count of (a, b, c) with 0 <= a, c <= B and b^2 <= 4 a c
    B = 3
    expected = sum(1 for a in range(B + 1) for c in range(B + 1) for b in range(-12, 13) if b * b <= 4 * a * c)
    assert len(gram_range(B)) == expected


def test_twisted_lattices_have_integral_scaled_norms():
    for pair in class_reps_H(context(11)):
        g = pair.gram()
        assert all(x.denominator == 1 for x in (g[0][0], g[1][1], g[2][2], g[3][3]))


@pytest.mark.parametrize("level,k,keys", [
    ((5, 1), (1, 1), [(1, 0, 1), (1, 1, 2), (2, 1, 3), (2, -2, 3), (3, 2, 3)]),
    ((7, 1), (1, 1), [(1, 1, 2), (2, 1, 4), (3, 0, 3)]),
    ((11, 1), (1, 0), [(1, 1, 3), (2, 2, 3), (3, 1, 4)]),
])
def test_batched_route_matches_generic_route(level, k, keys):
    tower, forms = forms_on(level[0], k)
    L = YoshidaLift(forms[k[0]][0], forms[k[1]][0], tower)
    for key in keys:
        S = GramS(*key)
        assert (L.fourier_coefficient(S) - L.fourier_coefficient_generic(S)).is_zero()


def test_prefix_consistency():
    tower, forms = forms_on(7, [1])
    f = forms[1][0]
    L = YoshidaLift(f, f, tower)
    small = L.expansion_up_to(3)
    big = YoshidaLift(f, f, tower).expansion_up_to(5)
    for S in small.keys():
        assert (small[S] - big[S]).is_zero()
    assert (big.restrict(3)[GramS(2, 1, 3)] - small[GramS(2, 1, 3)]).is_zero()


def test_opposed_signs_give_zero_lift():
    tower, forms = forms_on(2, [4, 3])
    f1, f2 = forms[4][0], forms[3][0]
    assert f1.atkin_lehner[2] == -f2.atkin_lehner[2]
    table = YoshidaLift(f1, f2, tower).expansion_up_to(3)
    assert not table.nonzero()


def test_cusp_times_eisenstein_is_cuspidal_and_equivariant():
    tower, forms = forms_on(11, [0])
    eis = [f for f in forms[0] if f.is_eisenstein()][0]
    cusp = [f for f in forms[0] if not f.is_eisenstein()][0]
    table = YoshidaLift(cusp, eis, tower).expansion_up_to(6)
    assert table.nonzero()
    assert check_cuspidality(table, True)["ok"]
    assert check_equivariance(table)["consistent"]
    # the Eisenstein square is not cuspidal
    sq = YoshidaLift(eis, eis, tower).expansion_up_to(2)
    assert not sq[GramS(0, 0, 0)].is_zero()


def test_equivariance_picks_one_orientation():
    tower, forms = forms_on(5, [1])
    f = forms[1][0]
    table = YoshidaLift(f, f, tower).expansion_up_to(6)
    assert check_equivariance(table)["consistent"] == ["U"]


def test_integrality_and_reduction():
    tower, forms = forms_on(7, [1])
    f = forms[1][0]
    table0 = YoshidaLift(f, f, tower).expansion_up_to(4)
    place = PrimePlace(tower.top, 5)
    g, _ = normalize_lambda(f, place)
    table = YoshidaLift(g, g, tower).expansion_up_to(4)
    assert table0.nonzero()
    assert table_integrality(table, place)["ok"]
    red = reduce_mod_lambda(table, place, det4_target=23)
    assert red["nonzero"]
    assert all(4 * a * c - b * b == 23 for (a, b, c) in red["flagged"])
    assert not table_integrality(table.scale(Fraction(1, 5 ** 6)), place)["ok"]
    with pytest.raises(ValueError):
        reduce_mod_lambda(FourierTable((3, 3), 0, {}), place)


def test_requires_ordered_weights_and_one_class_set():
    tower, forms = forms_on(5, [1, 0])
    with pytest.raises(ValueError):
        YoshidaLift(forms[0][0], forms[1][0], tower)
    _, other = forms_on(7, [0])
    with pytest.raises(ValueError):
        YoshidaLift(forms[1][0], other[0][0], tower)

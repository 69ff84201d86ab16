import itertools

import pytest

from yoshidalift import (BinaryQF, FieldTower, HypothesisError, ImagQuadField, RingClassGroup,
                         YoshidaLift, bessel_identity_check, build_bessel_datum, toric_period)
from yoshidalift.bessel import (archimedean_factor, bessel_from_fourier, class_number_formula,
                                conductor_lattice, coset_reps, index_constants, local_constant,
                                membership_check, reduced_forms, required_bound)

from conftest import context, forms_on

# class numbers of discriminants from standard tables
CLASS_NUMBERS = {-3: 1, -4: 1, -7: 1, -8: 1, -11: 1, -15: 2, -20: 2, -23: 3, -47: 5, -71: 7,
                 -99: 2, -75: 2, -27: 1, -12: 1, -16: 1, -275: 4, -1584: 12}


@pytest.mark.parametrize("D", sorted(CLASS_NUMBERS))
def test_reduced_forms_count(D):
    forms = reduced_forms(D)
    assert len(forms) == CLASS_NUMBERS[D]
    assert forms[0] == BinaryQF.identity(D)
    assert all(f.is_reduced() and f.is_primitive() and f.disc == D for f in forms)


@pytest.mark.parametrize("d,C", [(1, 1), (1, 5), (11, 3), (11, 5), (3, 1), (3, 2), (3, 7), (23, 1),
                                 (47, 1), (7, 15), (14, 1), (5, 3), (71, 1)])
def test_ring_class_group(d, C):
    K = ImagQuadField(d)
    G = RingClassGroup(K, C)
    assert G.order == class_number_formula(K, C)
    n = G.order
    for i, j, k in itertools.product(range(n), repeat=3):
        assert G.mul(G.mul(i, j), k) == G.mul(i, G.mul(j, k))
    assert all(G.mul(i, G.inv(i)) == 0 for i in range(n))
    assert G.check_lattice_route()


@pytest.mark.parametrize("d,C", [(23, 1), (11, 3), (11, 5), (7, 3), (3, 5)])
def test_characters(d, C, tower):
    G = RingClassGroup(ImagQuadField(d), C)
    chars = G.characters()
    assert len(chars) == G.order and chars[0].is_trivial()
    for a, b in itertools.product(chars, repeat=2):
        s = sum(a.value(i, tower) * b.inverse().value(i, tower) for i in range(G.order))
        assert s == (G.order if a.exps == b.exps else 0)
    # primitive characters are exactly those not factoring through a smaller conductor
    for chi in chars:
        for p in {p for p in (2, 3, 5, 7) if C % p == 0}:
            ker = G.reduction_kernel(p)
            assert chi.conductor_ok() <= any(chi.exps[i] for i in ker)


def test_prime_class_orders():
    G = RingClassGroup(ImagQuadField(23), 1)
    # 2 splits in Q(sqrt -23) and its prime has order 3
    assert G.element_order(G.prime_class(2)) == 3


def test_hypotheses_are_enforced():
    with pytest.raises(HypothesisError, match="Heeg"):
        build_bessel_datum(-3, 1, context(3))  # 3 ramifies in Q(sqrt -3)
    with pytest.raises(HypothesisError, match="Heeg"):
        build_bessel_datum(-7, 1, context(2))  # 2 splits in Q(sqrt -7)
    with pytest.raises(HypothesisError, match="hC"):
        build_bessel_datum(-11, 2, context(2))


def test_coset_representatives_have_the_right_conductor():
    datum = build_bessel_datum(-11, 15, context(2), FieldTower())
    reps = coset_reps(datum)
    assert len(reps) == 4 * 2
    for rep in reps:
        assert membership_check(datum, rep)


def test_index_constants():
    c = index_constants(build_bessel_datum(-3, 1, context(2), FieldTower()))
    assert c["t_K"] == 3 and c["w_C"] == 6
    c = index_constants(build_bessel_datum(-11, 3, context(2), FieldTower()))
    # 3 splits in Q(sqrt -11): #(O_K/3)^x / #(Z/3)^x = 4 / 2
    assert c["t_K"] == 1 and c["unit_index_K"] == 2


def test_required_bound():
    assert required_bound(RingClassGroup(ImagQuadField(11), 3)) == 25


@pytest.mark.parametrize("d,C", [(3, 1), (11, 1), (19, 1), (35, 1)])
def test_scalar_identity_level_2(d, C):
    tower, forms = forms_on(2, [0])
    f = forms[0][0]
    datum = build_bessel_datum(-d, C, context(2), tower)
    G = RingClassGroup(datum.K, C)
    lift = YoshidaLift(f, f, tower)
    for chi in G.characters():
        if chi.conductor_ok():
            assert bessel_identity_check(f, f, datum, chi, lift).equal


def test_cubic_characters_level_11():
    tower, forms = forms_on(11, [0])
    datum = build_bessel_datum(-23, 1, context(11), tower)
    G = RingClassGroup(datum.K, 1)
    f1, f2 = forms[0]
    lift = YoshidaLift(f1, f2, tower)
    values = []
    for chi in G.characters():
        r = bessel_identity_check(f1, f2, datum, chi, lift)
        assert r.equal
        values.append(r.fourier_side)
    assert any(v != 0 for v in values)


def test_toric_period_is_independent_of_lifts():
    tower, forms = forms_on(7, [1])
    f = forms[1][0]
    datum = build_bessel_datum(-11, 5, context(7), tower)
    G = RingClassGroup(datum.K, 5)
    J = conductor_lattice(datum)
    chi = [c for c in G.characters() if c.conductor_ok()][0]
    base = toric_period(f, chi, datum, J)
    lifts = [(1 + i, 2 - i) for i in range(G.order)]
    assert toric_period(f, chi, datum, J, lifts) == base


def test_tampered_coefficient_breaks_the_identity():
    tower, forms = forms_on(11, [0])
    f1, f2 = forms[0]
    datum = build_bessel_datum(-3, 1, context(11), tower)
    chi = RingClassGroup(datum.K, 1).characters()[0]
    table = YoshidaLift(f1, f2, tower).expansion_up_to(1)
    good = bessel_identity_check(f1, f2, datum, chi, table)
    assert good.equal and good.fourier_side != 0
    key = (1, 1, 1)
    table.coeffs[key] = table.coeffs[key].scale(2)
    assert not bessel_identity_check(f1, f2, datum, chi, table).equal


def test_insufficient_table_names_the_bound():
    tower, forms = forms_on(2, [0])
    f = forms[0][0]
    datum = build_bessel_datum(-11, 3, context(2), tower)
    chi = RingClassGroup(datum.K, 3).characters()[1]
    table = YoshidaLift(f, f, tower).expansion_up_to(4)
    with pytest.raises(KeyError, match="bound >= 25"):
        bessel_from_fourier(table, datum, chi)


def test_local_constant_and_archimedean_factor():
    tower, forms = forms_on(2, [4, 3])
    datum = build_bessel_datum(-11, 1, context(2), tower)
    chi = RingClassGroup(datum.K, 1).characters()[0]
    assert local_constant(forms[4][0], forms[3][0], chi, datum) == 0
    assert local_constant(forms[3][0], forms[3][0], chi, datum) == 2
    assert archimedean_factor(datum) * 11 == 4

import random
from fractions import Fraction

import pytest

from cmmod.gl2q import (
    HeckeRep,
    PrimIntMat2,
    RatMat2,
    act,
    coset_normal_form,
    hecke_representatives,
    level,
    matrix_from_json,
    matrix_to_json,
    mul_prim,
    primitive_integral_form,
    psi,
    sl2_group_order,
    sl2z_lifts,
    xgcd,
)
from cmmod.qimath import UHPQuadPoint

from conftest import random_sl2z_word


def test_xgcd():
    rng = random.Random(1)
    for _ in range(200):
        a, b = rng.randint(-50, 50), rng.randint(-50, 50)
        g, x, y = xgcd(a, b)
        assert g >= 0 and a * x + b * y == g
        if a or b:
            assert a % g == 0 and b % g == 0


def test_primitive_integral_form_examples():
    m, s = primitive_integral_form(RatMat2.identity())
    assert m == PrimIntMat2.identity() and s == 1

    m, s = primitive_integral_form(RatMat2(Fraction(1, 3), Fraction(0), Fraction(0), Fraction(1)))
    assert m.entries() == (1, 0, 0, 3) and s == Fraction(1, 3)

    m, s = primitive_integral_form(RatMat2.from_ints(2, 0, 0, 2))
    assert m == PrimIntMat2.identity() and s == 2


def test_primitive_form_reconstructs_input():
    rng = random.Random(2)
    for _ in range(100):
        g = RatMat2(
            Fraction(rng.randint(1, 9), rng.randint(1, 9)),
            Fraction(rng.randint(-9, 9), rng.randint(1, 9)),
            Fraction(0),
            Fraction(rng.randint(1, 9), rng.randint(1, 9)),
        )
        m, s = primitive_integral_form(g)
        assert s > 0
        assert (s * m.a, s * m.b, s * m.c, s * m.d) == g.entries()


def test_level_examples():
    assert level(RatMat2.identity()) == 1
    assert level(PrimIntMat2(2, 0, 0, 1)) == 2
    assert level(RatMat2(Fraction(1, 2), Fraction(0), Fraction(0), Fraction(1))) == 2


def test_level_sl2z_invariance():
    rng = random.Random(3)
    for _ in range(200):
        g = RatMat2(
            Fraction(rng.randint(1, 6)),
            Fraction(rng.randint(-6, 6)),
            Fraction(0),
            Fraction(rng.randint(1, 6)),
        )
        e1 = random_sl2z_word(rng, 10).to_rat()
        e2 = random_sl2z_word(rng, 10).to_rat()
        assert level(e1 * g * e2) == level(g)
        assert level(g.inverse()) == level(g)


def test_level_scalar_invariance():
    g = RatMat2.from_ints(3, 1, 0, 5)
    for k in (2, 3, 7):
        scaled = RatMat2(g.a * k, g.b * k, g.c * k, g.d * k)
        assert level(scaled) == level(g)


def test_hecke_representatives_counts():
    assert [h.key() for h in hecke_representatives(1)] == [(1, 0, 1)]
    assert [h.key() for h in hecke_representatives(2)] == [(1, 0, 2), (1, 1, 2), (2, 0, 1)]
    reps4 = hecke_representatives(4)
    assert len(reps4) == psi(4) == 6
    assert (2, 0, 2) not in [h.key() for h in reps4]  # imprimitive diagonal excluded
    for l in range(1, 13):
        assert len(hecke_representatives(l)) == psi(l)


def test_hecke_representatives_pairwise_distinct_cosets():
    for l in range(1, 13):
        seen = set()
        for h in hecke_representatives(l):
            rep, eps = coset_normal_form(h.to_prim())
            assert rep.key() == h.key()
            assert eps == PrimIntMat2.identity()
            seen.add(rep.key())
        assert len(seen) == psi(l)


def test_coset_normal_form_examples():
    rep, eps = coset_normal_form(PrimIntMat2.identity())
    assert rep.key() == (1, 0, 1) and eps == PrimIntMat2.identity()

    rep, eps = coset_normal_form(PrimIntMat2(0, -2, 1, 0))
    assert rep.key() == (1, 0, 2)
    assert mul_prim(eps, PrimIntMat2(0, -2, 1, 0)).entries() == (1, 0, 0, 2)

    rng = random.Random(4)
    for _ in range(30):
        e = random_sl2z_word(rng, 10)
        rep, wit = coset_normal_form(e)
        assert rep.key() == (1, 0, 1)
        assert mul_prim(wit, e) == PrimIntMat2.identity()


def test_coset_normal_form_constant_on_cosets():
    rng = random.Random(5)
    for _ in range(200):
        l = rng.randint(1, 9)
        h = rng.choice(hecke_representatives(l)).to_prim()
        e = random_sl2z_word(rng, 10)
        rep, wit = coset_normal_form(mul_prim(e, h))
        assert rep.key() == coset_normal_form(h)[0].key()
        assert mul_prim(wit, mul_prim(e, h)) == rep.to_prim()


def test_act_examples():
    i = UHPQuadPoint(1, 0, 1)
    assert act(PrimIntMat2(1, 1, 0, 1), i) == UHPQuadPoint(1, -2, 2)  # 1 + i
    assert act(PrimIntMat2(0, -1, 1, 0), i) == i
    assert act(PrimIntMat2(2, 0, 0, 1), i) == UHPQuadPoint(1, 0, 4)  # 2i


def test_act_composition():
    rng = random.Random(6)
    from conftest import random_quad_point

    for _ in range(100):
        g = rng.choice(hecke_representatives(rng.randint(1, 7))).to_prim().to_rat()
        h = random_sl2z_word(rng, 8).to_rat()
        tau = random_quad_point(rng)
        assert act(g * h, tau) == act(g, act(h, tau))


def test_hecke_images_keep_level_and_field():
    from cmmod.qimath import cm_id_of, squarefree_kernel
    from conftest import random_quad_point

    rng = random.Random(7)
    for l in range(1, 8):
        for m in hecke_representatives(l):
            assert level(m) == l
            tau = random_quad_point(rng)
            image = act(m, tau)
            assert squarefree_kernel(image.disc) == squarefree_kernel(tau.disc)


def test_sl2z_lifts_cover_all_residues():
    for modulus in (1, 2, 3, 4, 6, 12):
        table = sl2z_lifts(modulus)
        assert len(table) == sl2_group_order(modulus)
        for key, m in table.items():
            assert m.det == 1
            if modulus > 1:
                assert tuple(v % modulus for v in m.entries()) == key


def test_matrix_json_round_trip():
    g = RatMat2(Fraction(1, 2), Fraction(3), Fraction(0), Fraction(5, 7))
    assert matrix_from_json(matrix_to_json(g)) == g
    m = PrimIntMat2(1, 2, 3, 7)
    assert matrix_to_json(m) == [[1, 2], [3, 7]]


def test_invalid_matrices_rejected():
    with pytest.raises(ValueError):
        PrimIntMat2(2, 0, 0, 2)  # imprimitive
    with pytest.raises(ValueError):
        PrimIntMat2(1, 0, 0, -1)  # negative determinant
    with pytest.raises(ValueError):
        HeckeRep(1, 1, 1)  # upper entry out of range
    with pytest.raises(ValueError):
        hecke_representatives(0)

import random

import pytest

from cmmod.gl2q import PrimIntMat2, SL2Z_IDENTITY, mul_prim
from cmmod.qimath import (
    CMPointId,
    ConstantValue,
    UHPQuadPoint,
    cm_id_of,
    cyclic_isogeny_levels,
    enumerate_cm_points,
    ground_phi_holds,
    hom_rank,
    orbit_level_between,
    reduce_to_fundamental_domain,
    reduced_forms_of_disc,
    squarefree_kernel,
)

from conftest import random_quad_point, random_sl2z_word

I4 = CMPointId(-4, (1, 0, 1))
I16 = CMPointId(-16, (1, 0, 4))
R3 = CMPointId(-3, (1, 1, 1))


def _in_fundamental_domain(p: UHPQuadPoint) -> bool:
    # b in [-a, a), c >= a, and b <= 0 when a = c
    if not (-p.a <= p.b < p.a):
        return False
    if p.c < p.a:
        return False
    if p.c == p.a and p.b > 0:
        return False
    return True


def test_reduce_examples():
    # 3 + 4i reduces by a pure translation
    red, g = reduce_to_fundamental_domain(UHPQuadPoint(1, -6, 25))
    assert red.triple() == (1, 0, 16)
    assert g.entries() == (1, -3, 0, 1)

    # i/2 reduces to 2i through one inversion
    pt = UHPQuadPoint(4, 0, 1)
    red, g = reduce_to_fundamental_domain(pt)
    assert red.triple() == (1, 0, 4)
    assert pt.transform(*g.entries()) == red

    # boundary point with Re = +1/2 is kept by the tie-break
    pt = UHPQuadPoint(1, -1, 1)
    red, g = reduce_to_fundamental_domain(pt)
    assert red == pt and g == SL2Z_IDENTITY


def test_reduce_postconditions_random():
    rng = random.Random(11)
    for _ in range(300):
        tau = random_quad_point(rng)
        red, g = reduce_to_fundamental_domain(tau)
        assert g.det == 1
        assert tau.transform(*g.entries()) == red
        assert _in_fundamental_domain(red)


def test_reduce_idempotent():
    rng = random.Random(12)
    for _ in range(200):
        red, _ = reduce_to_fundamental_domain(random_quad_point(rng))
        red2, g = reduce_to_fundamental_domain(red)
        assert red2 == red and g == SL2Z_IDENTITY


def test_cm_id_examples():
    assert cm_id_of(UHPQuadPoint(1, 0, 1)) == I4
    assert cm_id_of(UHPQuadPoint(1, 0, 4)) == I16
    assert cm_id_of(UHPQuadPoint(1, -2, 2)) == I4


def test_cm_id_sl2z_invariant():
    rng = random.Random(13)
    for _ in range(200):
        tau = random_quad_point(rng)
        g = random_sl2z_word(rng, 12)
        assert cm_id_of(tau.transform(*g.entries())) == cm_id_of(tau)


def test_enumerate_cm_points():
    pts = enumerate_cm_points(4)
    assert [(p.d, p.form) for p in pts] == [(-3, (1, 1, 1)), (-4, (1, 0, 1))]
    assert [(p.d, p.form) for p in enumerate_cm_points(3)] == [(-3, (1, 1, 1))]
    forms15 = [p.form for p in enumerate_cm_points(15) if p.d == -15]
    assert forms15 == [(1, 1, 4), (2, 1, 2)]
    with pytest.raises(ValueError):
        enumerate_cm_points(2)


def test_enumeration_matches_per_disc_listing():
    pts = enumerate_cm_points(100)
    by_disc = {}
    for p in pts:
        by_disc.setdefault(p.d, []).append(p)
    for d, group in by_disc.items():
        assert group == reduced_forms_of_disc(d)
    # spot checks against classical class numbers
    assert len(by_disc[-23]) == 3
    assert len(by_disc[-47]) == 5
    assert len(by_disc[-15]) == 2


def test_squarefree_kernel():
    assert squarefree_kernel(-4) == -1
    assert squarefree_kernel(-16) == -1
    assert squarefree_kernel(-8) == -2
    assert squarefree_kernel(-12) == -3
    assert squarefree_kernel(-15) == -15


def test_cyclic_isogeny_levels_examples():
    assert cyclic_isogeny_levels(I4, I16, 2) == {2}
    assert cyclic_isogeny_levels(I4, R3, 7) == set()
    assert cyclic_isogeny_levels(I4, I4, 2) == {1, 2}


def test_cyclic_isogeny_levels_symmetric():
    pts = enumerate_cm_points(50)
    for p in pts:
        for q in pts:
            assert cyclic_isogeny_levels(p, q, 7) == cyclic_isogeny_levels(q, p, 7)


def test_hom_rank():
    c4 = ConstantValue.of_cm(I4)
    c16 = ConstantValue.of_cm(I16)
    c3 = ConstantValue.of_cm(R3)
    oid = ConstantValue.of_orbit(PrimIntMat2.identity())
    o2 = ConstantValue.of_orbit(PrimIntMat2(1, 1, 0, 2))
    assert hom_rank(c4, c16) == 2
    assert hom_rank(c4, c3) == 0
    assert hom_rank(oid, o2) == 1
    assert hom_rank(c4, oid) == 0
    for c in (c4, c3, oid, o2):
        assert hom_rank(c, c) == (2 if c.is_cm else 1)
    for a in (c4, c16, c3, oid, o2):
        for b in (c4, c16, c3, oid, o2):
            assert hom_rank(a, b) == hom_rank(b, a)


def test_ground_phi_semantics():
    c4 = ConstantValue.of_cm(I4)
    c16 = ConstantValue.of_cm(I16)
    oid = ConstantValue.of_orbit(PrimIntMat2.identity())
    o2 = ConstantValue.of_orbit(PrimIntMat2(1, 1, 0, 2))
    assert ground_phi_holds(2, c4, c16)
    assert not ground_phi_holds(2, c4, ConstantValue.of_cm(R3))
    assert ground_phi_holds(2, oid, o2)
    assert not ground_phi_holds(3, oid, o2)
    assert not ground_phi_holds(3, c4, oid)
    assert orbit_level_between(oid.orb, o2.orb) == 2


def test_orbit_constants_canonical():
    rng = random.Random(14)
    base = PrimIntMat2(1, 1, 0, 2)
    c = ConstantValue.of_orbit(base)
    for _ in range(50):
        e = random_sl2z_word(rng, 10)
        assert ConstantValue.of_orbit(mul_prim(e, base)) == c
    # positive rational scalings do not change the name either
    from cmmod.gl2q import RatMat2

    scaled = RatMat2.from_ints(3 * base.a, 3 * base.b, 3 * base.c, 3 * base.d)
    assert ConstantValue.of_orbit(scaled) == c


def test_json_round_trips():
    assert CMPointId.from_json(I16.to_json()) == I16
    c = ConstantValue.of_orbit(PrimIntMat2(1, 1, 0, 2))
    assert ConstantValue.from_json(c.to_json()) == c
    c4 = ConstantValue.of_cm(I4)
    assert ConstantValue.from_json(c4.to_json()) == c4


def test_invalid_points_rejected():
    with pytest.raises(ValueError):
        UHPQuadPoint(0, 0, 1)
    with pytest.raises(ValueError):
        UHPQuadPoint(2, 0, 2)  # imprimitive
    with pytest.raises(ValueError):
        UHPQuadPoint(1, 3, 1)  # positive discriminant
    with pytest.raises(ValueError):
        CMPointId(-4, (1, 0, 2))  # mismatched discriminant
    with pytest.raises(ValueError):
        CMPointId(-16, (2, 0, 2))  # imprimitive form

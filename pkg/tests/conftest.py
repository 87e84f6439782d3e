import random

from cmmod.gl2q import PrimIntMat2, mul_prim
from cmmod.qimath import UHPQuadPoint

T = PrimIntMat2(1, 1, 0, 1)
T_INV = PrimIntMat2(1, -1, 0, 1)
S = PrimIntMat2(0, -1, 1, 0)


def random_sl2z_word(rng: random.Random, max_len: int) -> PrimIntMat2:
    m = PrimIntMat2(1, 0, 0, 1)
    for _ in range(rng.randint(0, max_len)):
        m = mul_prim(m, rng.choice((T, T_INV, S)))
    return m


def random_quad_point(rng: random.Random, size: int = 12) -> UHPQuadPoint:
    while True:
        a = rng.randint(1, size)
        b = rng.randint(-size, size)
        c = rng.randint(1, size)
        if b * b - 4 * a * c >= 0:
            continue
        from math import gcd
        g = gcd(gcd(a, b), c)
        return UHPQuadPoint(a // g, b // g, c // g)

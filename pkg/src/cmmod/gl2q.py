"""GL2(Q)+ machinery: primitive integral forms, isogeny levels, Hecke cosets.

Matrices act on the upper half plane by fractional-linear transformations
(a b; c d).tau = (a tau + b)/(c tau + d).  Everything here is exact: rational
matrices reduce to a primitive integral form times a positive rational
scalar, and the scalar never changes the action.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with g = gcd(a, b) >= 0 and a*x + b*y = g."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        return -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of n >= 1 by trial division."""
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n).items():
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def psi(l: int) -> int:
    """Index of the level-l Hecke coset space: l * prod_{p | l} (1 + 1/p)."""
    out = l
    for p in factorize(l):
        out = out // p * (p + 1)
    return out


def _gcd4(a: int, b: int, c: int, d: int) -> int:
    return gcd(gcd(abs(a), abs(b)), gcd(abs(c), abs(d)))


@dataclass(frozen=True)
class PrimIntMat2:
    """Primitive integer 2x2 matrix (a b; c d) with positive determinant."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if det <= 0:
            raise ValueError(f"determinant must be positive, got {det}")
        if _gcd4(self.a, self.b, self.c, self.d) != 1:
            raise ValueError("matrix entries must be coprime")

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @classmethod
    def identity(cls) -> "PrimIntMat2":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_entries(cls, a: int, b: int, c: int, d: int) -> "PrimIntMat2":
        """Divide out the content; the determinant must stay positive."""
        g = _gcd4(a, b, c, d)
        if g == 0:
            raise ValueError("zero matrix")
        return cls(a // g, b // g, c // g, d // g)

    def entries(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def rows(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    def adjugate(self) -> "PrimIntMat2":
        return PrimIntMat2(self.d, -self.b, -self.c, self.a)

    def to_rat(self) -> "RatMat2":
        return RatMat2(Fraction(self.a), Fraction(self.b), Fraction(self.c), Fraction(self.d))

    def __repr__(self):
        return f"PrimIntMat2({self.a}, {self.b}, {self.c}, {self.d})"


SL2Z_IDENTITY = PrimIntMat2(1, 0, 0, 1)


def mul_prim(x: PrimIntMat2, y: PrimIntMat2) -> PrimIntMat2:
    """Primitive form of the integer product x*y."""
    return PrimIntMat2.from_entries(
        x.a * y.a + x.b * y.c,
        x.a * y.b + x.b * y.d,
        x.c * y.a + x.d * y.c,
        x.c * y.b + x.d * y.d,
    )


@dataclass(frozen=True)
class RatMat2:
    """2x2 rational matrix with positive determinant."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __post_init__(self):
        if self.det <= 0:
            raise ValueError(f"determinant must be positive, got {self.det}")

    @property
    def det(self) -> Fraction:
        return self.a * self.d - self.b * self.c

    @classmethod
    def identity(cls) -> "RatMat2":
        return cls(Fraction(1), Fraction(0), Fraction(0), Fraction(1))

    @classmethod
    def from_ints(cls, a, b, c, d) -> "RatMat2":
        return cls(Fraction(a), Fraction(b), Fraction(c), Fraction(d))

    def __mul__(self, other: "RatMat2") -> "RatMat2":
        return RatMat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "RatMat2":
        det = self.det
        return RatMat2(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def entries(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.a, self.b, self.c, self.d)

    def __repr__(self):
        return f"RatMat2({self.a}, {self.b}, {self.c}, {self.d})"


AnyMat = "PrimIntMat2 | RatMat2 | HeckeRep"


def _as_rat(g) -> RatMat2:
    if isinstance(g, RatMat2):
        return g
    if isinstance(g, PrimIntMat2):
        return g.to_rat()
    if isinstance(g, HeckeRep):
        return g.to_prim().to_rat()
    raise TypeError(f"not a matrix: {g!r}")


def primitive_integral_form(g) -> tuple[PrimIntMat2, Fraction]:
    """Write g = scalar * M with M primitive integral and scalar > 0."""
    r = _as_rat(g)
    denom = 1
    for e in r.entries():
        denom = denom * e.denominator // gcd(denom, e.denominator)
    ints = [int(e * denom) for e in r.entries()]
    content = _gcd4(*ints)
    mat = PrimIntMat2(*(v // content for v in ints))
    return mat, Fraction(content, denom)


def level(g) -> int:
    """Isogeny level: determinant of the primitive integral form of g."""
    if isinstance(g, PrimIntMat2):
        return g.det
    if isinstance(g, HeckeRep):
        return g.level
    return primitive_integral_form(g)[0].det


def act(g, tau):
    """Image of an exact upper-half-plane point under g (det > 0)."""
    m, _ = primitive_integral_form(g)
    return tau.transform(m.a, m.b, m.c, m.d)


@dataclass(frozen=True)
class HeckeRep:
    """Canonical upper-triangular coset representative (a b; 0 d), ad = level."""

    a: int
    b: int
    d: int

    def __post_init__(self):
        if self.a <= 0 or self.d <= 0:
            raise ValueError("diagonal entries must be positive")
        if not (0 <= self.b < self.d):
            raise ValueError("upper entry must satisfy 0 <= b < d")
        if gcd(gcd(self.a, self.b), self.d) != 1:
            raise ValueError("representative must be primitive")

    @property
    def level(self) -> int:
        return self.a * self.d

    def to_prim(self) -> PrimIntMat2:
        return PrimIntMat2(self.a, self.b, 0, self.d)

    def key(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.d)

    def __repr__(self):
        return f"HeckeRep([[{self.a}, {self.b}], [0, {self.d}]])"


def hecke_representatives(l: int) -> list[HeckeRep]:
    """All level-l coset representatives; there are psi(l) of them."""
    if l < 1:
        raise ValueError("level must be positive")
    reps = []
    for a in divisors(l):
        d = l // a
        ga = gcd(a, d)
        for b in range(d):
            if gcd(b, ga) == 1:
                reps.append(HeckeRep(a, b, d))
    return reps


def coset_normal_form(m: PrimIntMat2) -> tuple[HeckeRep, PrimIntMat2]:
    """Hermite-style normal form of the left SL2(Z)-coset of m.

    Returns (rep, eps) with eps in SL2(Z) and eps * m upper triangular equal
    to rep.  Two primitive matrices share a normal form exactly when they lie
    in the same left coset.
    """
    g, u, v = xgcd(m.a, m.c)
    # (u v; -c/g a/g) has determinant 1 and clears the lower-left entry.
    e1 = (u, v, -(m.c // g), m.a // g)
    top_b = u * m.b + v * m.d
    dd = m.det // g
    t = top_b // dd
    # (1 -t; 0 1) shifts the upper entry into [0, dd).
    eps = PrimIntMat2.from_entries(e1[0] - t * e1[2], e1[1] - t * e1[3], e1[2], e1[3])
    rep = HeckeRep(g, top_b - t * dd, dd)
    return rep, eps


def sl2_group_order(modulus: int) -> int:
    """|SL2(Z/modulus)| = modulus^3 * prod_{p | modulus} (1 - 1/p^2)."""
    if modulus == 1:
        return 1
    out = modulus**3
    for p in factorize(modulus):
        out = out // (p * p) * (p * p - 1)
    return out


@lru_cache(maxsize=None)
def sl2z_lifts(modulus: int) -> dict[tuple[int, int, int, int], PrimIntMat2]:
    """One integral SL2(Z) lift for every residue class in SL2(Z/modulus).

    Built by closing the generator set {T, T^-1, S} over the residues, so
    every stored matrix is an honest word in SL2(Z) reducing to its key.
    """
    if modulus == 1:
        return {(0, 0, 0, 0): SL2Z_IDENTITY}
    gens = [(1, 1, 0, 1), (1, -1, 0, 1), (0, -1, 1, 0)]
    start = (1, 0, 0, 1)
    table = {tuple(v % modulus for v in start): SL2Z_IDENTITY}
    frontier = [start]
    while frontier:
        new_frontier = []
        for mat in frontier:
            a, b, c, d = mat
            for p, q, r, s in gens:
                prod = (p * a + q * c, p * b + q * d, r * a + s * c, r * b + s * d)
                key = tuple(v % modulus for v in prod)
                if key not in table:
                    table[key] = PrimIntMat2(*prod)
                    new_frontier.append(prod)
        frontier = new_frontier
    assert len(table) == sl2_group_order(modulus)
    return table


def matrix_to_json(m) -> list[list]:
    """Serialize a matrix as [[a, b], [c, d]]; non-integers become "p/q"."""
    if isinstance(m, HeckeRep):
        m = m.to_prim()
    if isinstance(m, PrimIntMat2):
        return m.rows()
    return [[_frac_json(m.a), _frac_json(m.b)], [_frac_json(m.c), _frac_json(m.d)]]


def _frac_json(x: Fraction):
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def matrix_from_json(rows) -> RatMat2:
    def conv(v) -> Fraction:
        if isinstance(v, str):
            num, _, den = v.partition("/")
            return Fraction(int(num), int(den or 1))
        return Fraction(v)

    (a, b), (c, d) = rows
    return RatMat2(conv(a), conv(b), conv(c), conv(d))

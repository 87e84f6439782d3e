"""Exact arithmetic for quadratic imaginary points of the upper half plane.

A point is stored as a primitive integer triple (a, b, c) with a > 0 and
b^2 - 4ac < 0, denoting the root tau = (-b + sqrt(b^2 - 4ac)) / (2a) of
a x^2 + b x + c.  SL2(Z)-reduction, canonical CM names, and exact isogeny
decisions between CM points all live here; no floating point anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

from .gl2q import (
    PrimIntMat2,
    RatMat2,
    SL2Z_IDENTITY,
    factorize,
    hecke_representatives,
    primitive_integral_form,
)


@dataclass(frozen=True)
class UHPQuadPoint:
    """Quadratic imaginary tau = (-b + sqrt(b^2 - 4ac)) / (2a), as a triple."""

    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("leading coefficient must be positive")
        if gcd(gcd(self.a, self.b), self.c) != 1:
            raise ValueError("triple must be primitive")
        if self.disc >= 0:
            raise ValueError("discriminant must be negative")

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def re(self) -> Fraction:
        return Fraction(-self.b, 2 * self.a)

    @property
    def im_sq(self) -> Fraction:
        return Fraction(-self.disc, 4 * self.a * self.a)

    @property
    def norm_sq(self) -> Fraction:
        """|tau|^2 = c/a."""
        return Fraction(self.c, self.a)

    def triple(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def transform(self, p: int, q: int, r: int, s: int) -> "UHPQuadPoint":
        """Exact image under (p q; r s) with ps - qr > 0.

        The defining quadratic pulls back along the adjugate, so the image
        triple is primitive-integral again and the positive root is the
        image of the positive root.
        """
        a, b, c = self.a, self.b, self.c
        na = a * s * s - b * s * r + c * r * r
        nb = -2 * a * q * s + b * (p * s + q * r) - 2 * c * p * r
        nc = a * q * q - b * p * q + c * p * p
        g = gcd(gcd(na, nb), nc)
        return UHPQuadPoint(na // g, nb // g, nc // g)


def reduce_to_fundamental_domain(tau: UHPQuadPoint) -> tuple[UHPQuadPoint, PrimIntMat2]:
    """SL2(Z)-reduce tau into the fundamental domain, returning the witness.

    Domain convention: Re tau in (-1/2, 1/2], |tau| >= 1, and Re tau >= 0 on
    the arc |tau| = 1.  On triples this reads b in [-a, a), c >= a, and
    b <= 0 whenever a = c.  The returned gamma satisfies gamma . input =
    output exactly.
    """
    a, b, c = tau.a, tau.b, tau.c
    p, q, r, s = 1, 0, 0, 1  # accumulated SL2(Z) word
    while True:
        # Translate so b lands in [-a, a), i.e. Re in (-1/2, 1/2].
        t = (b + a) // (2 * a)
        if t:
            b, c = b - 2 * a * t, a * t * t - b * t + c
            p, q = p + t * r, q + t * s
        if c < a:
            a, b, c = c, -b, a
            p, q, r, s = r, s, -p, -q
            continue
        if c == a and b > 0:
            a, b, c = c, -b, a
            p, q, r, s = r, s, -p, -q
        break
    g = gcd(gcd(a, b), c)
    return UHPQuadPoint(a // g, b // g, c // g), PrimIntMat2(p, q, r, s)


@dataclass(frozen=True)
class CMPointId:
    """Canonical name of a CM j-invariant: discriminant plus reduced form."""

    d: int
    form: tuple[int, int, int]

    def __post_init__(self):
        a, b, c = self.form
        if self.d >= 0 or self.d % 4 not in (0, 1):
            raise ValueError("discriminant must be negative and 0 or 1 mod 4")
        if b * b - 4 * a * c != self.d:
            raise ValueError("form does not match the discriminant")
        if not _is_reduced(a, b, c):
            raise ValueError(f"form {self.form} is not reduced")
        if gcd(gcd(a, b), c) != 1:
            raise ValueError("form must be primitive")

    def tau(self) -> UHPQuadPoint:
        return UHPQuadPoint(*self.form)

    def sort_key(self) -> tuple[int, int, int]:
        return (-self.d, self.form[0], self.form[1])

    def to_json(self) -> dict:
        return {"d": self.d, "f": list(self.form)}

    @classmethod
    def from_json(cls, obj) -> "CMPointId":
        return cls(obj["d"], tuple(obj["f"]))

    def __repr__(self):
        return f"CMPointId({self.d}, {self.form})"


def _is_reduced(a: int, b: int, c: int) -> bool:
    if not (abs(b) <= a <= c):
        return False
    if (abs(b) == a or a == c) and b < 0:
        return False
    return True


def cm_id_of(tau: UHPQuadPoint) -> CMPointId:
    """Canonical CM name; constant on SL2(Z)-orbits."""
    red, _ = reduce_to_fundamental_domain(tau)
    a, b, c = red.a, red.b, red.c
    # Fundamental-domain tie-breaks differ from the classical reduced-form
    # ones exactly on the boundary; flip the two boundary cases.
    if b == -a:
        b, c = a, c  # translate tau -> tau + 1: (a, -a, c) -> (a, a, c)
    if a == c and b < 0:
        b = -b
    return CMPointId(b * b - 4 * a * c, (a, b, c))


def enumerate_cm_points(dmax: int) -> list[CMPointId]:
    """All CM point names with |discriminant| <= dmax, sorted by (|D|, a, b)."""
    if dmax < 3:
        raise ValueError("dmax must be at least 3")
    out = []
    for a in range(1, isqrt(dmax // 3) + 1):
        for b in range(-a + 1, a + 1):
            # c >= a keeps D < 0 automatically; the upper bound caps |D|.
            for c in range(a, (dmax + b * b) // (4 * a) + 1):
                if b < 0 and a == c:
                    continue
                if gcd(gcd(a, b), c) != 1:
                    continue
                out.append(CMPointId(b * b - 4 * a * c, (a, b, c)))
    out.sort(key=CMPointId.sort_key)
    return out


def reduced_forms_of_disc(d: int) -> list[CMPointId]:
    """The h(d) reduced forms of one discriminant d < 0."""
    if d >= 0 or d % 4 not in (0, 1):
        raise ValueError("need a negative discriminant congruent to 0 or 1 mod 4")
    out = []
    for b in range(-isqrt(-d // 3), isqrt(-d // 3) + 1):
        if (b - d) % 2:
            continue
        ac4 = b * b - d
        if ac4 % 4:
            continue
        ac = ac4 // 4
        for a in range(max(abs(b), 1), isqrt(ac) + 1):
            if ac % a:
                continue
            c = ac // a
            if _is_reduced(a, b, c) and gcd(gcd(a, b), c) == 1:
                out.append(CMPointId(d, (a, b, c)))
    out.sort(key=CMPointId.sort_key)
    return out


@lru_cache(maxsize=None)
def squarefree_kernel(d: int) -> int:
    """Largest squarefree divisor pattern of d: d divided by its square part."""
    if d == 0:
        return 0
    sign = -1 if d < 0 else 1
    out = 1
    for p, e in factorize(abs(d)).items():
        if e % 2:
            out *= p
    return sign * out


def same_cm_field(p: CMPointId, q: CMPointId) -> bool:
    """Whether the two orders live in the same imaginary quadratic field."""
    return squarefree_kernel(p.d) == squarefree_kernel(q.d)


def has_cyclic_isogeny(p: CMPointId, q: CMPointId, l: int) -> bool:
    """Exact test for a cyclic degree-l isogeny between the two CM points."""
    if not same_cm_field(p, q):
        return False
    tau = p.tau()
    return any(cm_id_of(tau.transform(h.a, h.b, 0, h.d)) == q for h in hecke_representatives(l))


def cyclic_isogeny_levels(p: CMPointId, q: CMPointId, lmax: int) -> set[int]:
    """All levels l <= lmax for which a cyclic l-isogeny p -> q exists."""
    if lmax < 1:
        raise ValueError("lmax must be positive")
    if not same_cm_field(p, q):
        return set()
    tau = p.tau()
    out = set()
    for l in range(1, lmax + 1):
        for h in hecke_representatives(l):
            if cm_id_of(tau.transform(h.a, h.b, 0, h.d)) == q:
                out.add(l)
                break
    return out


@dataclass(frozen=True)
class ConstantValue:
    """A named constant: a CM point, or a point of the fixed transcendental orbit.

    Orbit constants name j(M . tau_base) for a primitive integral M; the name
    only depends on the left SL2(Z)-coset of M, so M is stored in Hecke
    normal form.
    """

    cm: CMPointId | None = None
    orb: PrimIntMat2 | None = None

    def __post_init__(self):
        if (self.cm is None) == (self.orb is None):
            raise ValueError("exactly one of cm/orb must be set")
        if self.orb is not None and not _is_hecke_normal(self.orb):
            raise ValueError("orbit matrix must be in Hecke normal form")

    @classmethod
    def of_cm(cls, p: CMPointId) -> "ConstantValue":
        return cls(cm=p)

    @classmethod
    def of_orbit(cls, m) -> "ConstantValue":
        from .gl2q import coset_normal_form

        prim, _ = primitive_integral_form(m)
        rep, _ = coset_normal_form(prim)
        return cls(orb=rep.to_prim())

    @property
    def is_cm(self) -> bool:
        return self.cm is not None

    def sort_key(self):
        if self.cm is not None:
            return (0,) + self.cm.sort_key()
        return (1,) + self.orb.entries()

    def to_json(self) -> dict:
        if self.cm is not None:
            return {"cm": self.cm.to_json()}
        return {"orb": self.orb.rows()}

    @classmethod
    def from_json(cls, obj) -> "ConstantValue":
        if "cm" in obj:
            return cls.of_cm(CMPointId.from_json(obj["cm"]))
        (a, b), (c, d) = obj["orb"]
        return cls.of_orbit(PrimIntMat2(a, b, c, d))

    def __repr__(self):
        if self.cm is not None:
            return f"ConstantValue(cm={self.cm!r})"
        return f"ConstantValue(orb={self.orb!r})"


def _is_hecke_normal(m: PrimIntMat2) -> bool:
    return m.c == 0 and m.a > 0 and m.d > 0 and 0 <= m.b < m.d


def orbit_level_between(m1: PrimIntMat2, m2: PrimIntMat2) -> int:
    """Level of the isogeny linking the orbit points named by m1 and m2."""
    from .gl2q import level

    return level(m2.to_rat() * m1.to_rat().inverse())


def hom_rank(c1: ConstantValue, c2: ConstantValue) -> int:
    """Rank of the group of maps between the named elliptic curves: 0, 1 or 2.

    Two CM points give rank 2 when they share a CM field and 0 otherwise.
    Two orbit points are always isogenous but never CM (the base is
    transcendental), so they give rank 1.  Mixed pairs are never isogenous.
    """
    if c1.is_cm and c2.is_cm:
        return 2 if same_cm_field(c1.cm, c2.cm) else 0
    if not c1.is_cm and not c2.is_cm:
        return 1
    return 0


def ground_phi_holds(l: int, c1: ConstantValue, c2: ConstantValue) -> bool:
    """Truth of the level-l modular relation between two named constants."""
    if l < 1:
        raise ValueError("level must be positive")
    if c1.is_cm and c2.is_cm:
        return has_cyclic_isogeny(c1.cm, c2.cm, l)
    if not c1.is_cm and not c2.is_cm:
        return orbit_level_between(c1.orb, c2.orb) == l
    return False


def constants_equal(c1: ConstantValue, c2: ConstantValue) -> bool:
    return c1 == c2

"""Exact q-expansion engine: the j-function, modular polynomials Phi_l,
Hilbert class polynomials, and the high-precision numeric oracle.

All polynomial output is exact integer arithmetic.  Phi_l is computed by
expanding prod_{M in level-l coset reps} (x - j(M tau)) as a series in
Q = q^(1/l).  Representatives are grouped by diagonal (a, d); each group is
stable under the Galois action on the root-of-unity twists, so its
sub-product has integer series coefficients, which we obtain from integer
power sums (the twist sums collapse to Mobius-style divisor weights) via
Newton's identities.  Matching principal parts against powers of j then
expresses every x-coefficient as an integer polynomial in y = j.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

import mpmath

from .config import DEFAULT_CONFIG
from .errors import ResourceLimitError
from .gl2q import factorize, hecke_representatives, psi
from .qimath import CMPointId, UHPQuadPoint, has_cyclic_isogeny, reduce_to_fundamental_domain, reduced_forms_of_disc

DEFAULT_PHI_LMAX = 10

_PHI_MEMO: dict[int, "ModPoly"] = {}
_PHI_LOCK = threading.Lock()


class QExpansion:
    """Integer Laurent series in q with explicit truncation.

    Coefficients are exact for exponents in [lead, prec); exponents below
    lead are zero, exponents at or above prec are unknown.  Arithmetic
    narrows prec so unknown terms never leak into known ones.
    """

    __slots__ = ("lead", "coeffs", "prec")

    def __init__(self, lead: int, coeffs: list[int], prec: int):
        while coeffs and coeffs[0] == 0:
            coeffs = coeffs[1:]
            lead += 1
        if not coeffs:
            lead = prec
        if len(coeffs) != max(prec - lead, 0):
            raise ValueError("coefficient window does not match prec")
        self.lead = lead
        self.coeffs = coeffs
        self.prec = prec

    @classmethod
    def constant(cls, value: int, prec: int) -> "QExpansion":
        return cls(0, [value] + [0] * (prec - 1), prec) if value else cls(prec, [], prec)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def get(self, exp: int) -> int:
        if exp >= self.prec:
            raise ValueError(f"coefficient of q^{exp} beyond truncation q^{self.prec}")
        if exp < self.lead:
            return 0
        return self.coeffs[exp - self.lead]

    def min_exp(self) -> int | None:
        for i, c in enumerate(self.coeffs):
            if c:
                return self.lead + i
        return None

    def truncate(self, prec: int) -> "QExpansion":
        if prec >= self.prec:
            return self
        return QExpansion(self.lead, self.coeffs[: max(prec - self.lead, 0)], prec)

    def __add__(self, other: "QExpansion") -> "QExpansion":
        lead = min(self.lead, other.lead)
        prec = min(self.prec, other.prec)
        out = [0] * max(prec - lead, 0)
        for src in (self, other):
            for i, c in enumerate(src.coeffs):
                e = src.lead + i
                if c and e < prec:
                    out[e - lead] += c
        return QExpansion(lead, out, prec)

    def __neg__(self) -> "QExpansion":
        return QExpansion(self.lead, [-c for c in self.coeffs], self.prec)

    def __sub__(self, other: "QExpansion") -> "QExpansion":
        return self + (-other)

    def scaled(self, k: int) -> "QExpansion":
        if k == 0:
            return QExpansion(self.prec, [], self.prec)
        return QExpansion(self.lead, [k * c for c in self.coeffs], self.prec)

    def __mul__(self, other: "QExpansion") -> "QExpansion":
        if self.is_zero() or other.is_zero():
            # A known zero factor keeps the best window either side allows.
            prec = min(self.prec + other.lead, other.prec + self.lead)
            return QExpansion(prec, [], prec)
        lead = self.lead + other.lead
        prec = min(self.prec + other.lead, other.prec + self.lead)
        out = [0] * max(prec - lead, 0)
        for i, ca in enumerate(self.coeffs):
            if not ca:
                continue
            ea = self.lead + i
            for j, cb in enumerate(other.coeffs):
                e = ea + other.lead + j
                if e >= prec:
                    break
                if cb:
                    out[e - lead] += ca * cb
        return QExpansion(lead, out, prec)

    def exact_div_int(self, k: int) -> "QExpansion":
        out = []
        for c in self.coeffs:
            q, r = divmod(c, k)
            if r:
                raise ArithmeticError(f"series coefficient {c} not divisible by {k}")
            out.append(q)
        return QExpansion(self.lead, out, self.prec)

    def inverse(self) -> "QExpansion":
        """Inverse of a series whose lowest coefficient is a unit (+-1)."""
        first = self.min_exp()
        if first is None:
            raise ZeroDivisionError("cannot invert the zero series")
        u = self.coeffs[first - self.lead]
        if u not in (1, -1):
            raise ArithmeticError("leading coefficient must be a unit for exact inversion")
        n = self.prec - first
        body = self.coeffs[first - self.lead :] + [0] * (n - (self.prec - first))
        inv = [0] * n
        inv[0] = u
        for k in range(1, n):
            acc = 0
            for i in range(1, k + 1):
                if body[i]:
                    acc += body[i] * inv[k - i]
            inv[k] = -u * acc
        return QExpansion(-first, inv, -first + n)

    def stride_expand(self, factor: int) -> "QExpansion":
        """Reinterpret exponents e as e * factor (substituting q -> q^factor)."""
        if factor == 1:
            return self
        lead = self.lead * factor
        prec = (self.prec - 1) * factor + 1
        out = [0] * max(prec - lead, 0)
        for i, c in enumerate(self.coeffs):
            if c:
                out[(self.lead + i) * factor - lead] = c
        return QExpansion(lead, out, prec)

    def __repr__(self):
        head = {self.lead + i: c for i, c in enumerate(self.coeffs[:4]) }
        return f"QExpansion(lead={self.lead}, prec={self.prec}, head={head})"


def euler_series(prec: int) -> QExpansion:
    """prod (1 - q^n) via the pentagonal number theorem."""
    out = [0] * prec
    out[0] = 1
    k = 1
    while True:
        e1 = k * (3 * k - 1) // 2
        e2 = k * (3 * k + 1) // 2
        if e1 >= prec and e2 >= prec:
            break
        sign = -1 if k % 2 else 1
        if e1 < prec:
            out[e1] += sign
        if e2 < prec:
            out[e2] += sign
        k += 1
    return QExpansion(0, out, prec)


def _sigma_series(power: int, weight: int, offset: int, prec: int) -> QExpansion:
    """offset + weight * sum sigma_power(n) q^n."""
    out = [0] * prec
    out[0] = offset
    for d in range(1, prec):
        dp = d**power
        for m in range(d, prec, d):
            out[m] += dp
    for m in range(1, prec):
        out[m] *= weight
    return QExpansion(0, out, prec)


def e4_series(prec: int) -> QExpansion:
    return _sigma_series(3, 240, 1, prec)


def e6_series(prec: int) -> QExpansion:
    return _sigma_series(5, -504, 1, prec)


def delta_series(prec: int) -> QExpansion:
    """q * prod (1 - q^n)^24, exact through q^(prec-1)."""
    u = euler_series(prec)
    u2 = u * u
    u4 = u2 * u2
    u8 = u4 * u4
    u24 = u8 * u8 * u8
    return QExpansion(1, u24.coeffs[: prec - 1], prec)


_J_CACHE: dict[str, QExpansion] = {}


def j_series(order: int) -> QExpansion:
    """q-expansion of j, exact from q^-1 through q^order."""
    cached = _J_CACHE.get("j")
    if cached is None or cached.prec <= order:
        n = order + 2
        e4 = e4_series(n + 1)
        num = e4 * e4 * e4
        jq = num * delta_series(n + 1).inverse()
        assert jq.get(-1) == 1 and jq.get(0) == 744
        _J_CACHE["j"] = jq
        cached = jq
    return cached.truncate(order + 1)


def j_power_table(max_power: int, order: int) -> list[QExpansion]:
    """[1, j, j^2, ..., j^max_power] each exact through q^order."""
    base = j_series(order + max_power)
    powers = [QExpansion.constant(1, order + 1), base]
    for _ in range(2, max_power + 1):
        powers.append((powers[-1] * base).truncate(order + 1))
    powers[1] = base.truncate(order + 1)
    return powers


def j_alg(g2: Fraction | int, g3: Fraction | int) -> Fraction:
    """Exact algebraic j-invariant 1728 g2^3 / (g2^3 - 27 g3^2)."""
    g2, g3 = Fraction(g2), Fraction(g3)
    disc = g2**3 - 27 * g3**2
    if disc == 0:
        raise ValueError("not an elliptic curve: the discriminant g2^3 - 27 g3^2 is zero")
    return 1728 * g2**3 / disc


@dataclass(frozen=True)
class IntPoly:
    """Dense univariate integer polynomial, low degree first."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        if self.coeffs and self.coeffs[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")

    @classmethod
    def from_list(cls, coeffs) -> "IntPoly":
        c = list(coeffs)
        while c and c[-1] == 0:
            c.pop()
        return cls(tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def divide_exact(self, other: "IntPoly") -> "IntPoly":
        """Quotient self / other, raising if the division is not exact."""
        rem = list(self.coeffs)
        out = [0] * (len(rem) - len(other.coeffs) + 1)
        for k in range(len(out) - 1, -1, -1):
            q, r = divmod(rem[k + other.degree], other.coeffs[-1])
            if r:
                raise ArithmeticError("polynomial division is not exact")
            out[k] = q
            for i, c in enumerate(other.coeffs):
                rem[k + i] -= q * c
        if any(rem):
            raise ArithmeticError("polynomial division leaves a remainder")
        return IntPoly.from_list(out)

    def to_json(self) -> dict:
        return {"coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj) -> "IntPoly":
        return cls.from_list([int(c) for c in obj["coeffs"]])


@dataclass(frozen=True)
class ModPoly:
    """The modular polynomial Phi_l as an exact integer coefficient table.

    coeffs[i][j] is the coefficient of x^i y^j; the table is (psi+1) square,
    monic in x, and symmetric for l > 1 (Phi_1 = x - y is the one exception).
    """

    l: int
    psi: int
    coeffs: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = self.psi + 1
        if len(self.coeffs) != n or any(len(row) != n for row in self.coeffs):
            raise ValueError("coefficient table must be (psi+1) x (psi+1)")
        if self.coeffs[self.psi][0] != 1 or any(self.coeffs[self.psi][j] for j in range(1, n)):
            raise ValueError("polynomial must be monic in x")
        if self.l > 1:
            for i in range(n):
                for j in range(i):
                    if self.coeffs[i][j] != self.coeffs[j][i]:
                        raise ValueError("coefficient table must be symmetric")

    def evaluate(self, x, y):
        """Exact evaluation; works for ints, Fractions, or mpmath numbers."""
        acc = 0
        for i in range(self.psi, -1, -1):
            row = 0
            for j in range(self.psi, -1, -1):
                row = row * y + self.coeffs[i][j]
            acc = acc * x + row
        return acc

    def specialize_diagonal(self) -> IntPoly:
        """Phi_l(x, x) as a univariate polynomial."""
        out = [0] * (2 * self.psi + 1)
        for i in range(self.psi + 1):
            for j in range(self.psi + 1):
                out[i + j] += self.coeffs[i][j]
        return IntPoly.from_list(out)

    def to_json(self) -> dict:
        entries = []
        for i in range(self.psi + 1):
            for j in range(i + 1):
                if self.coeffs[i][j]:
                    entries.append([i, j, str(self.coeffs[i][j])])
        return {"version": 1, "l": self.l, "psi": self.psi, "coeffs": entries}

    @classmethod
    def from_json(cls, obj) -> "ModPoly":
        if obj.get("version") != 1:
            raise ValueError(f"unsupported cache version {obj.get('version')!r}")
        l, p = obj["l"], obj["psi"]
        table = [[0] * (p + 1) for _ in range(p + 1)]
        for i, j, c in obj["coeffs"]:
            table[i][j] = int(c)
            table[j][i] = int(c)
        return cls(l, p, tuple(tuple(row) for row in table))


def _mobius(n: int) -> int:
    out = 1
    for _, e in factorize(n).items():
        if e > 1:
            return 0
        out = -out
    return out


def _twist_weight(a: int, d: int) -> dict[int, int]:
    """For the (a, d) block: sum of the allowed root-of-unity twists.

    The b-sum over the block collapses to sum_{e | gcd(a,d)} mu(e) * (d/e)
    on exponents divisible by d/e; returns {modulus: weight} pieces.
    """
    g = gcd(a, d)
    out: dict[int, int] = {}
    for e in _divisors_of(g):
        mu = _mobius(e)
        if mu:
            out[d // e] = out.get(d // e, 0) + mu * (d // e)
    return out


def _divisors_of(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _block_members(l: int) -> dict[tuple[int, int], int]:
    blocks: dict[tuple[int, int], int] = {}
    for h in hecke_representatives(l):
        blocks[(h.a, h.d)] = blocks.get((h.a, h.d), 0) + 1
    return blocks


def _block_poly(a: int, d: int, count: int, jpow: list[QExpansion], clamp: int) -> list[QExpansion]:
    """x-polynomial of prod over the (a, d) block, ascending in x.

    Power sums of the block are integer series in R = Q^(a^2); Newton's
    identities recover the elementary symmetric functions, which are then
    re-expanded to Q-units and clamped to the globally useful window.
    """
    weights = _twist_weight(a, d)
    psums = [None]
    for k in range(1, count + 1):
        jk = jpow[k]
        lead, prec = jk.lead, jk.prec
        out = [0] * (prec - lead)
        for i, c in enumerate(jk.coeffs):
            if not c:
                continue
            m = lead + i
            w = sum(wt for mod, wt in weights.items() if m % mod == 0)
            if w:
                out[i] = c * w
        psums.append(QExpansion(lead, out, prec))
    elem = [QExpansion.constant(1, psums[1].prec)]
    for k in range(1, count + 1):
        acc = None
        for i in range(1, k + 1):
            term = elem[k - i] * psums[i]
            if i % 2 == 0:
                term = -term
            acc = term if acc is None else acc + term
        elem.append(acc.exact_div_int(k))
    poly = []
    for i in range(count + 1):
        e = elem[count - i]
        if (count - i) % 2:
            e = -e
        poly.append(e.stride_expand(a * a).truncate(clamp))
    return poly


def _poly_mul(p1: list[QExpansion], p2: list[QExpansion], clamp: int) -> list[QExpansion]:
    out: list[QExpansion | None] = [None] * (len(p1) + len(p2) - 1)
    for i, ci in enumerate(p1):
        for j, cj in enumerate(p2):
            term = (ci * cj).truncate(clamp)
            out[i + j] = term if out[i + j] is None else out[i + j] + term
    return out


def _collapse_to_q(series: QExpansion, l: int) -> QExpansion:
    """Reindex a Q = q^(1/l) series with support in l*Z to a q-series."""
    lead_q = -(-series.lead // l)
    prec_q = -(-series.prec // l)
    out = [0] * (prec_q - lead_q)
    for i, c in enumerate(series.coeffs):
        e = series.lead + i
        if c:
            if e % l:
                raise AssertionError(f"unexpected fractional exponent {e}/{l} in the product")
            out[e // l - lead_q] = c
    return QExpansion(lead_q, out, prec_q)


def _reduce_against_j(series: QExpansion, jpow: list[QExpansion], guard: int) -> dict[int, int]:
    """Write an integer q-series as an integer polynomial in j.

    Principal parts are matched from the most negative exponent upward; the
    positive-exponent window through q^guard must vanish afterwards, which
    certifies that the series really was polynomial in j at this precision.
    """
    out: dict[int, int] = {}
    work = series
    while True:
        low = work.min_exp()
        if low is None or low > 0:
            break
        m = -low
        if m == 0:
            break
        if m >= len(jpow):
            raise AssertionError("series has larger pole order than the expected j-degree")
        alpha = work.get(low)
        out[m] = alpha
        work = work - jpow[m].scaled(alpha)
    const = work.get(0) if work.prec > 0 else 0
    if const:
        out[0] = const
        work = work - QExpansion.constant(const, work.prec)
    for e in range(1, min(guard + 1, work.prec)):
        if work.get(e):
            raise AssertionError("nonzero tail after matching powers of j")
    if work.prec <= guard:
        raise AssertionError("not enough certified tail terms; raise the truncation order")
    return out


def _compute_modular_polynomial(l: int, extra_prec: int = 0) -> ModPoly:
    if l == 1:
        return ModPoly(1, 1, ((0, -1), (1, 0)))
    reps = hecke_representatives(l)
    psi_l = len(reps)
    s_total = sum(h.a * h.a for h in reps)
    blocks = _block_members(l)
    guard_q = 4
    jp = s_total + guard_q * l + max(blocks.values()) + 8 + extra_prec
    jpow = j_power_table(psi_l, jp)
    clamp = s_total + guard_q * l + 1  # Q-exponents beyond this can never matter
    poly = [QExpansion.constant(1, clamp)]
    for (a, d), count in sorted(blocks.items()):
        poly = _poly_mul(poly, _block_poly(a, d, count, jpow, clamp), clamp)
    assert len(poly) == psi_l + 1
    table = [[0] * (psi_l + 1) for _ in range(psi_l + 1)]
    table[psi_l][0] = 1
    for i in range(psi_l):
        sq = _collapse_to_q(poly[i], l)
        for m, c in _reduce_against_j(sq, jpow, guard_q).items():
            if m > psi_l:
                raise AssertionError("y-degree exceeds the coset index")
            table[i][m] = c
    result = ModPoly(l, psi_l, tuple(tuple(row) for row in table))
    fact = factorize(l)
    if len(fact) == 1 and next(iter(fact.values())) == 1:
        _check_kronecker(result)
    return result


def _check_kronecker(phi: ModPoly) -> None:
    """For prime l, Phi_l = (x^l - y)(x - y^l) mod l."""
    l = phi.l
    assert phi.psi == l + 1
    kron = [[0] * (phi.psi + 1) for _ in range(phi.psi + 1)]
    kron[l + 1][0] += 1
    kron[l][l] -= 1
    kron[1][1] -= 1
    kron[0][l + 1] += 1
    for i in range(phi.psi + 1):
        for j in range(phi.psi + 1):
            if (phi.coeffs[i][j] - kron[i][j]) % l:
                raise AssertionError(f"Kronecker congruence fails at x^{i} y^{j}")


def phi_cache_path(cache_dir: str, l: int) -> str:
    return os.path.join(cache_dir, f"phi_{l}.json")


def _cache_load(cache_dir: str, l: int) -> ModPoly | None:
    path = phi_cache_path(cache_dir, l)
    if not os.path.exists(path):
        return None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        phi = ModPoly.from_json(obj)
        if phi.l != l or phi.psi != psi(l):
            raise ValueError("cache file does not match the requested level")
        return phi
    except (ValueError, KeyError, json.JSONDecodeError):
        return None  # corrupt cache entries are recomputed and rewritten


def _cache_store(cache_dir: str, phi: ModPoly) -> None:
    os.makedirs(cache_dir, exist_ok=True)
    path = phi_cache_path(cache_dir, phi.l)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(phi.to_json(), fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def modular_polynomial(l: int, lmax: int = DEFAULT_PHI_LMAX, cache_dir: str | None = None) -> ModPoly:
    """Exact Phi_l; levels above lmax are refused with a resource error.

    Results are memoized in memory and, when cache_dir is given, persisted
    as phi_<l>.json.  Writes go through a single lock plus atomic rename,
    so concurrent readers always see complete files.
    """
    if l < 1:
        raise ValueError("level must be positive")
    if l > lmax:
        raise ResourceLimitError(f"modular polynomial level {l} exceeds the configured bound lmax={lmax}")
    if l == 1:
        return ModPoly(1, 1, ((0, -1), (1, 0)))
    with _PHI_LOCK:
        if l in _PHI_MEMO:
            return _PHI_MEMO[l]
    phi = None
    if cache_dir is not None:
        phi = _cache_load(cache_dir, l)
    if phi is None:
        phi = _compute_modular_polynomial(l)
        if cache_dir is not None:
            with _PHI_LOCK:
                _cache_store(cache_dir, phi)
    with _PHI_LOCK:
        _PHI_MEMO[l] = phi
    return phi


@dataclass(frozen=True)
class BigComplex:
    """Arbitrary-precision complex value with its working precision in bits."""

    re: mpmath.mpf
    im: mpmath.mpf
    prec: int

    def __post_init__(self):
        if self.prec < 64:
            raise ValueError("precision must be at least 64 bits")

    @classmethod
    def from_mpc(cls, z, prec: int) -> "BigComplex":
        return cls(mpmath.mpf(z.real), mpmath.mpf(z.imag), prec)

    @property
    def mpc(self):
        return mpmath.mpc(self.re, self.im)

    def __repr__(self):
        return f"BigComplex({self.re}, {self.im}, prec={self.prec})"


def _tau_to_mpc(tau: UHPQuadPoint):
    re = mpmath.mpf(-tau.b) / (2 * tau.a)
    im = mpmath.sqrt(mpmath.mpf(-tau.disc)) / (2 * tau.a)
    return mpmath.mpc(re, im)


def _numeric_reduce(z):
    """Float SL2(Z)-reduction into (a neighbourhood of) the fundamental domain."""
    if z.imag <= 0:
        raise ValueError("point must lie in the upper half plane")
    for _ in range(4096):
        t = mpmath.floor(z.real + mpmath.mpf("0.5"))
        if t:
            z = z - t
        if mpmath.fabs(z) < 1 - mpmath.mpf(2) ** -40:
            z = -1 / z
        else:
            return z
    return z


def j_numeric(tau, precision_bits: int = 512) -> BigComplex:
    """Numeric j with absolute error below 2^(-precision_bits/2).

    The point is SL2(Z)-reduced first (exactly for quadratic points, in
    floating point otherwise), so |q| <= exp(-pi sqrt(3)) and the series
    tail after N = precision_bits//6 + 32 terms is far below the error
    budget; 64 guard bits cover the rounding of the summation itself.
    """
    if precision_bits < 64:
        raise ValueError("precision must be at least 64 bits")
    nterms = precision_bits // 6 + 32
    series = j_series(nterms)
    with mpmath.workprec(precision_bits + 64):
        if isinstance(tau, UHPQuadPoint):
            red, _ = reduce_to_fundamental_domain(tau)
            z = _tau_to_mpc(red)
        elif isinstance(tau, BigComplex):
            z = _numeric_reduce(tau.mpc)
        else:
            z = _numeric_reduce(mpmath.mpc(tau))
        q = mpmath.exp(2j * mpmath.pi * z)
        acc = mpmath.mpc(0)
        for k in range(nterms, 0, -1):
            acc = (acc + series.get(k)) * q
        value = acc + series.get(0) + 1 / q
        return BigComplex.from_mpc(value, precision_bits)


def hilbert_class_polynomial(d: int, max_disc: int = DEFAULT_CONFIG.dmax) -> IntPoly:
    """Monic integer polynomial whose roots are the j-invariants of disc d.

    Evaluated from the exact q-expansion at escalating precision; integer
    coefficients are accepted only when every rounding error is below 2^-32,
    and the precision doubles otherwise (with a hard failure cap).
    """
    if d >= 0 or d % 4 not in (0, 1):
        raise ValueError("need a negative discriminant congruent to 0 or 1 mod 4")
    if -d > max_disc:
        raise ResourceLimitError(f"|{d}| exceeds the configured discriminant bound {max_disc}")
    forms = reduced_forms_of_disc(d)
    est = mpmath.pi * isqrt(-d) * sum(Fraction(1, f.form[0]) for f in forms)
    prec = max(128, int(float(est) * 1.5) + 16 * len(forms) + 96)
    threshold_bits = 32
    while True:
        if prec > (1 << 22):
            raise ResourceLimitError("class polynomial precision cap exceeded; coefficients never stabilized")
        with mpmath.workprec(prec + 64):
            roots = [j_numeric(f.tau(), prec).mpc for f in forms]
            coeffs = [mpmath.mpc(1)]
            for r in roots:
                nxt = [mpmath.mpc(0)] * (len(coeffs) + 1)
                for i, c in enumerate(coeffs):
                    nxt[i + 1] += c
                    nxt[i] -= c * r
                coeffs = nxt
            tol = mpmath.mpf(2) ** (-threshold_bits)
            ok = True
            ints = []
            for c in coeffs:
                n = mpmath.nint(c.real)
                if mpmath.fabs(c.imag) > tol or mpmath.fabs(c.real - n) > tol:
                    ok = False
                    break
                ints.append(int(n))
            if ok:
                assert ints[-1] == 1
                return IntPoly.from_list(ints)
        prec *= 2


def phi_vanishes_at_cm(l: int, p: CMPointId, q: CMPointId, lmax: int = DEFAULT_PHI_LMAX) -> bool:
    """Exact truth of Phi_l(j_p, j_q) = 0, decided by the lattice test."""
    if l > lmax:
        raise ResourceLimitError(f"level {l} exceeds the configured bound lmax={lmax}")
    return has_cyclic_isogeny(p, q, l)


def phi_vanishes_at_cm_resultant(l: int, p: CMPointId, q: CMPointId, lmax: int = DEFAULT_PHI_LMAX) -> bool:
    """Resultant-based cross-check of phi_vanishes_at_cm.

    Tests Res_x(H_dp(x), Res_y(H_dq(y), Phi_l(x, y))) = 0 with exact integer
    arithmetic.  The resultant vanishes when ANY Galois-conjugate pair is
    l-isogenous, so this equals phi_vanishes_at_cm when both class numbers
    are 1 and is implied by it in general.
    """
    import sympy

    if l > lmax:
        raise ResourceLimitError(f"level {l} exceeds the configured bound lmax={lmax}")
    x, y = sympy.symbols("x y")
    hp = sum(c * x**i for i, c in enumerate(hilbert_class_polynomial(p.d).coeffs))
    hq = sum(c * y**i for i, c in enumerate(hilbert_class_polynomial(q.d).coeffs))
    phi = modular_polynomial(l, lmax=lmax)
    phi_expr = sum(
        phi.coeffs[i][j] * x**i * y**j
        for i in range(phi.psi + 1)
        for j in range(phi.psi + 1)
        if phi.coeffs[i][j]
    )
    inner = sympy.resultant(hq, phi_expr, y)
    outer = sympy.resultant(hp, sympy.expand(inner), x)
    return outer == 0

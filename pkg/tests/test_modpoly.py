import json
import random
from fractions import Fraction

import mpmath
import pytest

from cmmod.errors import ResourceLimitError
from cmmod.gl2q import hecke_representatives, psi
from cmmod.modpoly import (
    BigComplex,
    IntPoly,
    ModPoly,
    QExpansion,
    _compute_modular_polynomial,
    delta_series,
    e4_series,
    e6_series,
    hilbert_class_polynomial,
    j_alg,
    j_numeric,
    j_series,
    modular_polynomial,
    phi_cache_path,
    phi_vanishes_at_cm,
    phi_vanishes_at_cm_resultant,
)
from cmmod.qimath import CMPointId, UHPQuadPoint, reduced_forms_of_disc

I4 = CMPointId(-4, (1, 0, 1))
I16 = CMPointId(-16, (1, 0, 4))
R3 = CMPointId(-3, (1, 1, 1))
M8 = CMPointId(-8, (1, 0, 2))


def test_qexpansion_arithmetic():
    a = QExpansion(-1, [1, 2, 3], 2)  # q^-1 + 2 + 3q + O(q^2)
    b = QExpansion(0, [1, -1], 2)  # 1 - q + O(q^2)
    s = a + b
    assert [s.get(k) for k in range(-1, 2)] == [1, 3, 2]
    p = a * b
    # truncation: a unknown from q^2, b from q^2 -> product known below q^1
    assert p.prec == 1
    assert p.get(-1) == 1 and p.get(0) == 1
    inv = b.inverse()
    one = b * inv
    assert one.get(0) == 1 and all(one.get(k) == 0 for k in range(1, one.prec))
    with pytest.raises(ValueError):
        p.get(5)


def test_j_series_coefficients():
    js = j_series(4)
    assert [js.get(k) for k in range(-1, 4)] == [1, 744, 196884, 21493760, 864299970]


def test_eisenstein_delta_identity():
    # E4^3 - E6^2 = 1728 Delta, with Delta from the eta product: two
    # independent routes to the same series.
    n = 50
    lhs = e4_series(n) * e4_series(n) * e4_series(n) - e6_series(n) * e6_series(n)
    rhs = delta_series(n).scaled(1728)
    for k in range(min(lhs.prec, rhs.prec)):
        assert lhs.get(k) == rhs.get(k)


def test_j_alg():
    assert j_alg(5, 0) == 1728
    assert j_alg(0, 7) == 0
    assert j_alg(Fraction(1, 2), Fraction(1, 3)) == 1728 * Fraction(1, 8) / (Fraction(1, 8) - 3)
    with pytest.raises(ValueError, match="not an elliptic curve"):
        j_alg(3, 1)


def test_phi_1():
    p1 = modular_polynomial(1)
    assert p1.psi == 1
    assert p1.evaluate(5, 5) == 0 and p1.evaluate(5, 4) == 1


def test_phi_2_matches_golden():
    with open("tests/golden/phi_2.json") as fh:
        golden = ModPoly.from_json(json.load(fh))
    assert modular_polynomial(2).coeffs == golden.coeffs
    # classical coefficients, spelled out
    p2 = modular_polynomial(2)
    assert p2.coeffs[2][1] == 1488
    assert p2.coeffs[1][1] == 40773375
    assert p2.coeffs[0][0] == -157464000000000


def test_phi_structure_small_levels():
    for l in (2, 3, 4, 5):
        p = modular_polynomial(l)
        assert p.psi == psi(l)
        assert p.coeffs[p.psi][0] == 1
        for i in range(p.psi + 1):
            for j in range(p.psi + 1):
                assert p.coeffs[i][j] == p.coeffs[j][i]


def test_kronecker_congruence():
    for l in (2, 3):
        p = modular_polynomial(l)
        kron = [[0] * (p.psi + 1) for _ in range(p.psi + 1)]
        kron[l + 1][0] = 1
        kron[0][l + 1] = 1
        kron[l][l] = -1
        kron[1][1] = -1
        for i in range(p.psi + 1):
            for j in range(p.psi + 1):
                assert (p.coeffs[i][j] - kron[i][j]) % l == 0


def test_phi2_diagonal_factorization():
    diag = modular_polynomial(2).specialize_diagonal()
    q = diag
    for root, mult in ((1728, 1), (-3375, 2), (8000, 1)):
        for _ in range(mult):
            q = q.divide_exact(IntPoly.from_list([-root, 1]))
    assert q.coeffs == (-1,)


def test_phi3_diagonal_factorization():
    diag = modular_polynomial(3).specialize_diagonal()
    q = diag
    for root, mult in ((0, 1), (8000, 2), (-32768, 2), (54000, 1)):
        for _ in range(mult):
            q = q.divide_exact(IntPoly.from_list([-root, 1]))
    assert q.coeffs == (-1,)


def test_truncation_escalation_is_stable():
    base = _compute_modular_polynomial(3)
    doubled = _compute_modular_polynomial(3, extra_prec=psi(3) * 3 + 16)
    assert base.coeffs == doubled.coeffs


def test_modular_polynomial_resource_bound():
    with pytest.raises(ResourceLimitError):
        modular_polynomial(11, lmax=10)


def test_phi_cache_round_trip(tmp_path):
    cache = str(tmp_path)
    import cmmod.modpoly as mp

    mp._PHI_MEMO.pop(5, None)
    cold = modular_polynomial(5, cache_dir=cache)
    mp._PHI_MEMO.pop(5, None)
    warm = modular_polynomial(5, cache_dir=cache)
    assert cold.coeffs == warm.coeffs
    path = phi_cache_path(cache, 5)
    with open(path) as fh:
        obj = json.load(fh)
    assert obj["version"] == 1 and obj["l"] == 5 and obj["psi"] == psi(5)
    assert all(i >= j for i, j, _ in obj["coeffs"])
    # corrupt cache entries are recomputed
    with open(path, "w") as fh:
        fh.write("{\"version\": 1, \"l\": 5")
    mp._PHI_MEMO.pop(5, None)
    again = modular_polynomial(5, cache_dir=cache)
    assert again.coeffs == cold.coeffs


def test_hilbert_goldens():
    for d, want in [(-3, (0, 1)), (-4, (-1728, 1)), (-7, (3375, 1)), (-8, (-8000, 1)),
                    (-11, (32768, 1)), (-15, (-121287375, 191025, 1))]:
        assert hilbert_class_polynomial(d).coeffs == want
    for name, d in (("3", -3), ("4", -4), ("15", -15)):
        with open(f"tests/golden/hilbert_{name}.json") as fh:
            obj = json.load(fh)
        assert hilbert_class_polynomial(obj["d"]).coeffs == IntPoly.from_json(obj).coeffs


def test_hilbert_degree_is_class_number():
    for d in range(-3, -60, -1):
        if d % 4 in (0, 1):
            assert hilbert_class_polynomial(d).degree == len(reduced_forms_of_disc(d))


def test_hilbert_validation():
    with pytest.raises(ValueError):
        hilbert_class_polynomial(-5)  # 3 mod 4
    with pytest.raises(ResourceLimitError):
        hilbert_class_polynomial(-10007 * 4, max_disc=100)


def test_j_numeric_classical_values():
    for tau, want in [
        (UHPQuadPoint(1, 0, 1), 1728),
        (UHPQuadPoint(1, -1, 1), 0),
        (UHPQuadPoint(1, 0, 2), 8000),
        (UHPQuadPoint(1, 0, 4), 287496),
    ]:
        v = j_numeric(tau, 256)
        assert abs(v.mpc - want) < mpmath.mpf(2) ** -128


def test_j_numeric_matches_independent_implementation():
    with mpmath.workprec(320):
        rng = random.Random(21)
        for _ in range(5):
            z = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2.0))
            ours = j_numeric(BigComplex.from_mpc(z, 256), 256).mpc
            theirs = 1728 * mpmath.kleinj(z)
            assert abs(ours - theirs) < mpmath.mpf(2) ** -100 * (1 + abs(theirs))


def _float_reduced_im(z: complex) -> float:
    for _ in range(512):
        z = complex(z.real - round(z.real), z.imag)
        if abs(z) < 1 - 1e-12:
            z = -1 / z
        else:
            return z.imag
    return z.imag


def sample_low_strip_tau(rng: random.Random, lmax: int, cap: float = 2.2) -> complex:
    """Random tau whose Hecke images up to lmax all reduce below the cap.

    Keeping every image's reduced imaginary part small bounds |j| at each
    image, which keeps the 512-bit evaluation error far below the 2^-64
    residual tolerance.
    """
    while True:
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.16, 0.22))
        images = [z]
        for l in range(1, lmax + 1):
            for h in hecke_representatives(l):
                images.append((h.a * z + h.b) / h.d)
        if all(_float_reduced_im(w) <= cap for w in images):
            return z


def test_numeric_consistency_of_phi(subtests=None):
    rng = random.Random(22)
    prec = 512
    tol = mpmath.mpf(2) ** -64
    with mpmath.workprec(prec + 64):
        for _ in range(4):
            z = sample_low_strip_tau(rng, 7)
            zb = BigComplex.from_mpc(mpmath.mpc(z.real, z.imag), prec)
            j1 = j_numeric(zb, prec).mpc
            for l in range(2, 8):
                phi = modular_polynomial(l)
                for h in hecke_representatives(l):
                    w = (h.a * mpmath.mpc(z.real, z.imag) + h.b) / h.d
                    j2 = j_numeric(BigComplex.from_mpc(w, prec), prec).mpc
                    res = abs(phi.evaluate(j1, j2)) / (1 + abs(j1)) ** phi.psi
                    assert res < tol, (l, h, float(res))


def test_phi_vanishes_at_cm():
    assert phi_vanishes_at_cm(2, I4, I16)
    assert not phi_vanishes_at_cm(2, I4, R3)
    assert phi_vanishes_at_cm(1, I4, I4)
    with pytest.raises(ResourceLimitError):
        phi_vanishes_at_cm(11, I4, I4)


def test_resultant_check_agrees_on_class_number_one():
    # class number one on both sides: the resultant criterion is exact
    pairs = [(2, I4, I16), (2, I4, R3), (3, M8, M8), (2, M8, M8), (3, I4, I4), (1, I4, I4)]
    for l, p, q in pairs:
        assert phi_vanishes_at_cm_resultant(l, p, q) == phi_vanishes_at_cm(l, p, q)


def test_resultant_check_implied_in_general():
    # vanishing at the named pair always forces the resultant to vanish
    p15a = CMPointId(-15, (1, 1, 4))
    p15b = CMPointId(-15, (2, 1, 2))
    assert phi_vanishes_at_cm(2, p15a, p15b)
    assert phi_vanishes_at_cm_resultant(2, p15a, p15b)

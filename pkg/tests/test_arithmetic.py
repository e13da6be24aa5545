import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kuznetsov_numerics import arithmetic as ar
from kuznetsov_numerics.experiments import bijection_audit
from kuznetsov_numerics.errors import DivergentParameter, InexactDivision, NotADivisor, NotCoprime


def brute_kloosterman(a, b, c):
    total = 0j
    for x in range(c):
        if math.gcd(x, c) == 1:
            xbar = pow(x, -1, c) if c > 1 else 0
            total += cmath.exp(2j * math.pi * (a * xbar + b * x) / c)
    return total


def brute_ramanujan(c, m):
    return sum(cmath.exp(2j * math.pi * s * m / c) for s in range(c) if math.gcd(s, c) == 1).real


# ---------------------------------------------------------------- elementary functions

def test_factorize_small():
    assert ar.factorize(1) == ()
    assert ar.factorize(360) == ((2, 3), (3, 2), (5, 1))
    assert ar.factorize(9973) == ((9973, 1),)


@given(st.integers(min_value=1, max_value=10**6))
def test_factorize_multiplies_back(n):
    assert math.prod(p**e for p, e in ar.factorize(n)) == n


def test_phi_and_moebius_values():
    assert [ar.euler_phi(n) for n in range(1, 11)] == [1, 1, 2, 2, 4, 2, 6, 4, 6, 4]
    assert [ar.moebius(n) for n in range(1, 11)] == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]


def test_sieves_match_pointwise():
    mu, phi = ar.moebius_sieve(500), ar.phi_sieve(500)
    for n in range(1, 501):
        assert mu[n] == ar.moebius(n)
        assert phi[n] == ar.euler_phi(n)


def test_divisors():
    assert ar.divisors(36) == [1, 2, 3, 4, 6, 9, 12, 18, 36]
    assert ar.num_divisors(36) == 9


@given(st.integers(min_value=2, max_value=5000), st.integers(min_value=-10**6, max_value=10**6))
def test_mod_inverse_property(c, a):
    if math.gcd(a, c) != 1:
        with pytest.raises(NotCoprime):
            ar.mod_inverse(a, c)
    else:
        assert (ar.mod_inverse(a, c).value * a) % c == 1


def test_mod_inverse_modulus_one():
    assert ar.mod_inverse(5, 1).value == 0


# ---------------------------------------------------------------- Kloosterman sums

@pytest.mark.parametrize("a,b,c", [(1, 1, 1), (1, 1, 2), (1, 1, 5), (3, 7, 12), (2, 5, 30), (0, 0, 9), (4, 4, 64)])
def test_kloosterman_matches_brute_force(a, b, c):
    ref = brute_kloosterman(a, b, c)
    assert abs(ref.imag) < 1e-9
    assert ar.kloosterman(a, b, c) == pytest.approx(ref.real, abs=1e-10)


@settings(max_examples=60)
@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 120))
def test_kloosterman_symmetry_and_weil(a, b, c):
    s = ar.kloosterman(a, b, c)
    assert s == pytest.approx(ar.kloosterman(b, a, c), abs=1e-9)
    bound = ar.num_divisors(c) * math.sqrt(math.gcd(math.gcd(a, b), c)) * math.sqrt(c)
    assert abs(s) <= bound + 1e-9


def test_kloosterman_with_zero_argument_is_ramanujan_sum():
    for c in range(1, 40):
        assert ar.kloosterman(0, 6, c) == pytest.approx(ar.ramanujan_closed(c, 6), abs=1e-9)


def test_kloosterman_row_and_cache_agree():
    cache = ar.KloostermanCache()
    for c in (7, 30, 97):
        row = cache.row(3, c)
        for b in range(c):
            assert row[b] == pytest.approx(ar.kloosterman(3, b, c), abs=1e-9)
    assert ar.kloosterman(3, 5, 30, cache) == pytest.approx(cache.row(3, 30)[5], abs=1e-12)


def test_unit_inverses_are_inverses():
    for c in (1, 2, 15, 64, 105):
        units, inv = ar.unit_inverses(c)
        assert len(units) == ar.euler_phi(c)
        if c > 1:
            assert np.all((units * inv) % c == 1)


# ---------------------------------------------------------------- Ramanujan sums

def test_ramanujan_both_formulas_small_grid():
    for n in range(1, 60):
        for m in range(-60, 61):
            closed = ar.ramanujan_closed(n, m)
            assert closed == ar.ramanujan_divisor(n, m)
            assert closed == pytest.approx(brute_ramanujan(n, m), abs=1e-8)


def test_ramanujan_special_values():
    assert ar.ramanujan_closed(12, 0) == ar.euler_phi(12)
    assert ar.ramanujan_closed(30, 1) == ar.moebius(30)


# ---------------------------------------------------------------- residue classes

def test_enumerate_X_solves_linear_equation():
    for cls in ar.enumerate_X(4, 6, 10):
        assert cls.c2 * cls.x + cls.c1 * cls.y == 10
        assert math.gcd(cls.x, 4) == 1 and math.gcd(cls.y, 6) == 1


def test_n_zero_forces_equal_moduli():
    for c1 in range(1, 9):
        for c2 in range(1, 9):
            classes = ar.enumerate_X(c1, c2, 0)
            if c1 != c2:
                assert classes == []
            for cls in classes:
                assert cls.x == -cls.y


@pytest.mark.parametrize("c1,c2,n", [(3, 5, 7), (4, 6, 10), (6, 10, -14), (12, 18, 36), (1, 1, 1)])
def test_bijection_onto_Y(c1, c2, n):
    xs = ar.enumerate_X(c1, c2, n)
    ys = ar.enumerate_Y(c1, c2, n)
    images = [ar.bijection_r(cls) for cls in xs]
    assert len(xs) == len(ys)
    assert sorted(p.r1.value for p in images) == sorted(r.value for r in ys)
    for p in images:
        assert (p.r1.value * p.r2.value - 1) % abs(n) == 0


def test_bijection_audit_small_grid():
    audit = bijection_audit(8, 16)
    assert audit["cases"] > 0
    assert audit["size_mismatch"] == audit["not_injective"] == audit["off_target"] == audit["bad_product"] == 0


def test_exact_division_is_enforced():
    with pytest.raises(InexactDivision):
        ar._exact_div(7, 2)


# ---------------------------------------------------------------- Z, R and Dirichlet series

def test_z_factor_at_d_one_is_one():
    assert ar.z_factor(1, 12, 2.0) == 1


def test_z_factor_rejects_non_divisor_and_bad_s():
    with pytest.raises(NotADivisor):
        ar.z_factor(5, 12, 1.0)
    with pytest.raises(DivergentParameter):
        ar.z_factor(2, 12, -0.5)


def test_z_factor_matches_truncated_series():
    # sum over d' whose primes divide d but not n/d of phi(d' d)/(d' d)^(1+s)
    d, n, s = 6, 12, 1.5
    primes_free = [p for p in ar.prime_divisors(d) if (n // d) % p]
    total = 0.0
    for dp in range(1, 20000):
        if all(p in primes_free for p in ar.prime_divisors(dp)):
            c = dp * d
            total += ar.euler_phi(c) / c ** (1 + s)
    assert ar.z_factor(d, n, s).real == pytest.approx(total, rel=1e-6)


@pytest.mark.parametrize("n", [1, 2, 12, 30, 360, 9973, 10000])
def test_r_weights_sum_to_one(n):
    assert math.fsum(ar.r_weight(n, d) for d in ar.divisors(n)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p", [2, 3, 7, 101])
def test_r_weight_at_a_prime(p):
    # Z(1, s) = 1 and Z(p, 1) = 1/p, each divided by 1 + 1/p
    assert Fraction(ar.r_weight(p, 1)).limit_denominator(10**6) == Fraction(p, p + 1)
    assert Fraction(ar.r_weight(p, p)).limit_denominator(10**6) == Fraction(1, p + 1)


@pytest.mark.parametrize("s", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("l,lp", [(1, 1), (5, 2), (3, 9)])
def test_dirichlet_closed_forms(l, lp, s):
    N = 20000
    trunc, closed = ar.dirichlet_series_check(l, lp, s, N)
    assert abs(trunc - closed) <= ar.dirichlet_tail_bound(l - lp, s, N)


def test_dirichlet_rejects_small_s():
    with pytest.raises(DivergentParameter):
        ar.dirichlet_series_check(1, 1, 1.0, 100)


def test_phi_series_m_zero():
    trunc, closed = ar.phi_dirichlet_check(12, 4, 0, 2.0, 20000)
    assert abs(trunc - closed) <= ar.dirichlet_tail_bound(0, 2.0, 20000)


def test_principal_l_ratio_trivial_modulus():
    from kuznetsov_numerics.special import zeta

    assert ar.principal_l_ratio(1, 2.0) == pytest.approx(zeta(2.0) / zeta(3.0), rel=1e-12)

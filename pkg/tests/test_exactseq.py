import math
import time
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from flatbeam import exactseq as es


def akiyama_tanigawa(n_max):
    """Bernoulli numbers with B_1 = +1/2 by the Akiyama-Tanigawa transform."""
    out = []
    a = [Fraction(0)] * (n_max + 1)
    for m in range(n_max + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    return out


def secant_euler(n_max):
    """E_{2n} from sec(x) = 1 / cos(x), by exact power-series inversion."""
    cos = [Fraction((-1) ** n, math.factorial(2 * n)) for n in range(n_max + 1)]
    sec = [Fraction(1)]
    for n in range(1, n_max + 1):
        sec.append(-sum(cos[j] * sec[n - j] for j in range(1, n + 1)))
    return [(-1) ** n * sec[n] * math.factorial(2 * n) for n in range(n_max + 1)]


def test_known_values():
    assert es.eta_recursive(2).entries == (0, Fraction(1, 18), Fraction(17, 7560))
    assert es.mu_recursive(2).entries == (2, Fraction(1, 4), Fraction(31, 2880))
    assert es.eta_recursive(0).entries == (0,)


def test_bernoulli_against_akiyama_tanigawa():
    B = es.bernoulli_numbers(40)
    ref = akiyama_tanigawa(40)
    assert B[1] == Fraction(-1, 2)
    for n in range(41):
        if n != 1:
            assert B[n] == ref[n]
    assert B[12] == Fraction(-691, 2730)


def test_euler_against_secant_series():
    E = es.euler_numbers(15)
    assert list(E)[:6] == [1, -1, 5, -61, 1385, -50521]
    assert list(E) == secant_euler(15)


@pytest.mark.parametrize("K", [0, 1, 5, 25, 30])
def test_recursions_match_closed_forms(K):
    assert es.eta_recursive(K) == es.eta_closed_form(K)
    assert es.mu_recursive(K) == es.mu_closed_form(K)


def test_identity_suite_runtime():
    t0 = time.perf_counter()
    es.eta_closed_form(25), es.eta_recursive(25), es.mu_closed_form(25), es.mu_recursive(25)
    assert time.perf_counter() - t0 < 1.0


def test_mu_ratio_near_one_over_24():
    mu = es.mu_recursive(11)
    for k in range(2, 11):
        assert abs(mu[k + 1] / mu[k] * 24 - 1) <= Fraction(5, 100)


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        es.mu_recursive(-1)
    with pytest.raises(ValueError):
        es.RationalSeq.of([1], meaning="nonsense")


def test_convolve_length_mismatch():
    with pytest.raises(ValueError):
        es.convolve([Fraction(1)], [Fraction(1), Fraction(2)])


def test_convolve_with_unit_sequence():
    a = es.mu_recursive(6)
    unit = [Fraction(1)] + [Fraction(0)] * 6
    assert es.convolve(a, unit).entries == a.entries


rationals = st.builds(Fraction, st.integers(-100, 100), st.integers(1, 50))
same_length = st.integers(1, 7).flatmap(
    lambda n: st.tuples(*[st.lists(rationals, min_size=n, max_size=n)] * 3)
)


@settings(max_examples=60, deadline=None)
@given(same_length, rationals, rationals)
def test_convolve_bilinear_commutative(seqs, p, q):
    a, b, c = seqs
    ab = es.convolve(a, b)
    assert ab == es.convolve(b, a)
    lhs = es.convolve([p * x + q * y for x, y in zip(a, c)], b)
    rhs = es.convolve(a, b).scaled(p) + es.convolve(c, b).scaled(q)
    assert lhs == rhs
    for x in lhs:
        assert math.gcd(x.numerator, x.denominator) == 1


def test_csv_formats():
    mu = es.mu_recursive(2)
    assert es.to_csv(mu, "exact").splitlines()[:2] == ["k,numerator,denominator", "0,2,1"]
    assert es.to_csv(mu, "fraction").splitlines()[2] == "1,1/4"
    dec = es.to_csv(mu, "decimal", digits=5).splitlines()
    assert dec[2] == "1,0.25"
    withref = es.to_csv(mu, "fraction", reference=es.mu_closed_form(2)).splitlines()
    assert withref[0] == "k,value,discrepancy"
    assert all(line.endswith(",0/1") for line in withref[1:])
    with pytest.raises(ValueError):
        es.to_csv(mu, "hex")


def test_format_decimal_digits():
    assert es.format_decimal(Fraction(1, 3), 17) == "0.33333333333333333"
    assert es.parse_rational(" -3/9 ") == Fraction(-1, 3)

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from bclab import gauss
from bclab.rng import RngSeed

GAUSS_H = math.pi**2 / (6 * math.log(2))


def test_cf_digits_rational():
    assert gauss.cf_digits(3, 7, 10) == ([2, 3], True)
    assert gauss.cf_digits(3, 7, 1) == ([2], False)


def test_convergents():
    (p, q), (pp, qp) = gauss.convergents([2, 3])
    assert (p, q, pp, qp) == (3, 7, 1, 2)


@given(st.lists(st.integers(1, 50), min_size=1, max_size=12))
def test_prefix_measure_matches_rational_endpoints(digits):
    want = oracles.gauss_interval_measure(digits)
    assert math.isclose(math.exp(gauss.log_prefix_measure(digits)), want, rel_tol=1e-9)


def test_prefix_measure_first_digit():
    for k in range(1, 6):
        want = math.log2((k + 1) ** 2 / (k * (k + 2)))
        assert math.isclose(math.exp(gauss.log_prefix_measure([k])), want, rel_tol=1e-13)


def test_long_prefix_stays_finite():
    digits = [1] * 5000
    lp = gauss.log_prefix_measure(digits)
    # all-ones prefixes shrink like the golden ratio squared
    assert math.isclose(lp / 5000, -2 * math.log((1 + math.sqrt(5)) / 2), rel_tol=1e-3)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_digits_match_high_precision(seed):
    key = RngSeed(seed).key()
    count = 300
    digits = gauss.sample_digits(key, count).tolist()
    nbits = 64 * 64
    U = gauss._uniform_bits(key, nbits)
    with mpmath.workprec(nbits + 200):
        x = mpmath.power(2, mpmath.ldexp(mpmath.mpf(U), -nbits)) - 1
        want = oracles.cf_digits_mpmath(x, count)
    assert digits == want


def test_longer_requests_extend_shorter():
    key = RngSeed(4).key()
    short = gauss.sample_digits(key, 50)
    long = gauss.sample_digits(key, 2000)
    assert np.array_equal(short, long[:50])


def test_entropy_reference_closed_form():
    assert math.isclose(gauss.entropy_reference(), GAUSS_H, rel_tol=1e-10)

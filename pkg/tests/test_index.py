from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bclab.errors import InvariantViolation, ResourceError, ValidationError
from bclab.index import (IndexFamily, check_assumption, check_assumption_i, check_assumption_ii,
                         delta_semimetric, delta_values, increasing_from, q_min, q_min_values)

SQUARE = IndexFamily([[0, 1], [0, 0, 1]])


def brute_k_ii(poly, upto):
    q = [sum(a * n**k for k, a in enumerate(poly)) for n in range(upto)]
    return sum(1 for n in range(upto) for m in range(n) if q[n] <= q[m])


class TestEvaluate:
    def test_examples(self):
        assert IndexFamily([[0, 0, 1]]).evaluate(1, 7) == 49
        assert IndexFamily([[3, 2]]).evaluate(1, 0) == 3

    def test_negative_value(self):
        with pytest.raises(InvariantViolation, match=r"q_1\(3\)"):
            IndexFamily([[0, -10, 1]]).evaluate(1, 3)

    def test_exact_for_large_n(self):
        assert IndexFamily([[0, 0, 0, 1]]).evaluate(1, 10**7) == 10**21

    def test_bad_index(self):
        with pytest.raises(ValidationError):
            SQUARE.evaluate(3, 1)

    def test_values_overflow_guard(self):
        with pytest.raises(ResourceError):
            IndexFamily([[0, 0, 0, 0, 1]]).values([10**6])

    def test_values_match_evaluate(self):
        fam = IndexFamily([[1, 2], [0, 3, 1]])
        v = fam.values(range(20))
        assert all(v[i - 1, n] == fam.evaluate(i, n) for i in (1, 2) for n in range(20))

    def test_nonnegative_witness(self):
        assert IndexFamily([[0, -10, 1]]).nonnegative_witness()[0] == 1
        assert IndexFamily([[5, -1]]).nonnegative_witness() == (1, 6)
        assert SQUARE.nonnegative_witness() is None


class TestAssumptionI:
    def test_square_pair(self):
        rep = check_assumption_i(SQUARE, 10**4)
        assert rep.verdict and rep.certified
        assert rep.K_i == 2

    def test_constant_difference(self):
        rep = check_assumption_i(IndexFamily([[0, 1], [1, 1]]), 100)
        assert not rep.verdict
        assert rep.witness["pair"] == [1, 2]

    def test_injective_single(self):
        rep = check_assumption_i(IndexFamily([[0, 2]]), 1000)
        assert rep.verdict and rep.K_i == 1

    def test_constant_polynomial_fails(self):
        assert not check_assumption_i(IndexFamily([[4]]), 10).verdict

    def test_short_horizon_is_uncertified(self):
        # the difference n^2 - 41n decreases until n = 20
        rep = check_assumption_i(IndexFamily([[0, 41], [0, 0, 1]]), 5)
        assert not rep.certified and rep.witness["reason"] == "uncertified-tail"

    def test_bad_horizon(self):
        with pytest.raises(ValidationError):
            check_assumption_i(SQUARE, 0)


class TestAssumptionII:
    def test_square_pair(self):
        assert check_assumption_ii(SQUARE, 10**4).K_ii == 0

    def test_dip(self):
        poly = [9, -5, 1]  # (n - 3)^2 + n
        rep = check_assumption_ii(IndexFamily([poly]), 1000)
        assert rep.verdict
        assert rep.K_ii == brute_k_ii(poly, 60) == 9

    @given(st.lists(st.integers(0, 5), min_size=1, max_size=3), st.integers(1, 3))
    def test_increasing_families(self, lows, top):
        fam = IndexFamily([[c, top + k] for k, c in enumerate(lows)])
        assert check_assumption_ii(fam, 100).K_ii == 0

    def test_uncertified(self):
        rep = check_assumption_ii(IndexFamily([[400, -40, 1]]), 10)
        assert not rep.verdict and rep.K_ii is not None


class TestCounting:
    def test_q_min_examples(self):
        assert q_min(SQUARE, 3) == 6
        assert q_min(SQUARE, 1) == 0
        assert q_min(IndexFamily.linear(1, 2, 3), 5) == 5
        with pytest.raises(ValidationError):
            q_min(IndexFamily([[0, 1]]), 3)

    def test_delta_examples(self):
        assert delta_semimetric(SQUARE, 2, 3) == 1
        assert delta_semimetric(IndexFamily([[0, 1]]), 2, 5) == 3
        for m in (1, 7, 40):
            assert delta_semimetric(SQUARE, m, m) == 0

    def test_vectorized_agree(self):
        ns = np.arange(1, 200)
        assert q_min_values(SQUARE, ns).tolist() == [q_min(SQUARE, int(n)) for n in ns]
        assert delta_values(SQUARE, 9, ns).tolist() == [delta_semimetric(SQUARE, 9, int(n)) for n in ns]

    @pytest.mark.parametrize("polys", [[[0, 1], [0, 0, 1]], [[0, 1], [0, 2]], [[0, 1], [0, 2], [0, 3]],
                                       [[1, 1], [0, 0, 2], [0, 0, 0, 1]]])
    def test_count_bounds(self, polys):
        fam = IndexFamily(polys)
        rep = check_assumption(fam, 10**4)
        assert rep.verdict
        K, ell = rep.K, fam.ell
        ns = np.arange(0, 10**4 + 1)
        tally = Counter(q_min_values(fam, ns).tolist())
        assert all(tally[k] <= K * ell**2 for k in range(51))
        for m in range(1, 101, 9):
            tally = Counter(delta_values(fam, m, ns[1:]).tolist())
            assert all(tally[k] <= 2 * K**2 * ell**2 for k in range(51))


distinct_families = st.lists(
    st.tuples(st.integers(0, 6), st.integers(1, 4), st.integers(1, 3)), min_size=1, max_size=3,
    unique_by=lambda t: (t[1], t[2]),
).map(lambda rows: IndexFamily([[c] + [0] * (d - 1) + [a] for c, a, d in rows]))


@settings(max_examples=40)
@given(distinct_families)
def test_essentially_distinct_families_pass(fam):
    # c + a n^d with distinct (a, d): nonnegative, nonconstant, pairwise differences nonconstant
    rep = check_assumption(fam, 2000)
    assert rep.verdict, rep.to_dict()
    assert rep.K_i <= rep.K_bound


def test_increasing_from():
    assert increasing_from([9, -5, 1]) == 3
    assert increasing_from([0, 0, 1]) == 0
    with pytest.raises(ValidationError):
        increasing_from([3])

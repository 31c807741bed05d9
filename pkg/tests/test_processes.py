import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from bclab.errors import ModelError, ResourceError, UnsupportedFeatureError, ValidationError
from bclab.processes import (PHI, PSI, GaussDigits, IIDFinite, IIDGeometric, MarkovChain, MixingProfile,
                             cylinder_probability, decay_rate, joint_cylinder_probability, mixing_oracle_bruteforce,
                             mixing_profile, model_from_dict, phi_exact, psi_exact, sample_window,
                             stationary_distribution)
from bclab.rng import RngSeed
from bclab.symbolic import ONE_SIDED, Cylinder

# frozen by hand from the reference chain [[0.9, 0.1], [0.2, 0.8]]
PI_REF = (2 / 3, 1 / 3)
JOINT_00_20 = (2 / 3) * 0.83
PHI_1 = 0.4666666666666667
PSI_1 = 1.4


class TestModels:
    def test_stationary_reference(self):
        assert np.allclose(stationary_distribution([[0.9, 0.1], [0.2, 0.8]]), PI_REF, atol=1e-15)

    def test_stationary_symmetric(self):
        assert np.allclose(stationary_distribution([[0.5, 0.5], [0.5, 0.5]]), [0.5, 0.5])

    @pytest.mark.parametrize("P", [[[1, 0], [0, 1]], [[0, 1], [1, 0]], [[0.5, 0.6], [0.5, 0.5]],
                                   [[1.2, -0.2], [0.5, 0.5]]])
    def test_bad_chains(self, P):
        with pytest.raises(ModelError):
            stationary_distribution(P)

    @given(st.lists(st.floats(0.05, 1.0), min_size=9, max_size=9))
    def test_stationary_residual(self, raw):
        P = np.array(raw).reshape(3, 3)
        P /= P.sum(axis=1, keepdims=True)
        pi = stationary_distribution(P)
        assert abs(pi.sum() - 1) < 1e-12
        assert np.abs(pi @ P - pi).max() < 1e-12
        assert np.allclose(pi, oracles.stationary_by_power(P), atol=1e-12)

    def test_iid_constraints(self):
        with pytest.raises(ModelError):
            IIDFinite([0.5, 0.5, 0.0])
        with pytest.raises(ModelError):
            IIDFinite([1.0])
        with pytest.raises(ValidationError):
            IIDGeometric(1.0)

    def test_round_trip(self, markov, coin, geometric):
        for m in (markov, coin, geometric, GaussDigits()):
            again = model_from_dict(m.to_dict())
            assert again.to_dict() == m.to_dict()

    def test_gauss_is_one_sided(self):
        with pytest.raises(ModelError):
            GaussDigits().sample(-1, 3, RngSeed(0), sidedness="two-sided")


class TestKernels:
    def test_coin_cylinder(self, coin):
        assert cylinder_probability(coin, Cylinder.on(0, 1, [0, 0])) == 0.25

    def test_markov_cylinder(self, markov):
        assert math.isclose(cylinder_probability(markov, Cylinder.on(0, 1, [0, 0])), 0.6, abs_tol=1e-15)

    def test_gauss_first_digit(self):
        assert math.isclose(cylinder_probability(GaussDigits(), Cylinder.on(0, 0, [1])), math.log2(4 / 3),
                            rel_tol=1e-14)

    def test_joint_examples(self, coin, markov):
        assert joint_cylinder_probability(coin, {(0, 0), (5, 0)}) == 0.25
        assert math.isclose(joint_cylinder_probability(markov, {(0, 0), (2, 0)}), JOINT_00_20, rel_tol=1e-14)
        for m in (coin, markov, GaussDigits()):
            assert joint_cylinder_probability(m, {(3, 0), (3, 1)}) == 0.0

    def test_gauss_joint_needs_block(self):
        g = GaussDigits()
        assert math.isclose(g.joint_probability([(0, 1), (1, 2)]),
                            g.cylinder_probability(Cylinder(0, [1, 2])))
        with pytest.raises(UnsupportedFeatureError):
            g.joint_probability([(0, 1), (2, 1)])

    def test_invalid_symbol(self, coin, markov):
        with pytest.raises(ValidationError):
            coin.cylinder_probability(Cylinder(0, [2]))
        with pytest.raises(ValidationError):
            markov.cylinder_probability(Cylinder(0, [0, 5]))

    @pytest.mark.parametrize("length", [1, 4, 8])
    def test_cylinders_match_enumeration(self, markov, length):
        words, probs = oracles.markov_word_probs(markov.P.tolist(), markov.pi.tolist(), length)
        got = np.array([markov.cylinder_probability(Cylinder(-2, w)) for w in words])
        assert np.abs(got - probs).max() <= 1e-12

    @given(st.dictionaries(st.integers(-3, 5), st.integers(0, 1), min_size=1, max_size=5))
    def test_joint_matches_enumeration(self, cons):
        m = MarkovChain(np.array([[0.9, 0.1], [0.2, 0.8]]))
        words, probs = oracles.markov_word_probs(m.P.tolist(), m.pi.tolist(), 9)
        want = oracles.joint_by_enumeration(words, probs, -3, cons.items())
        assert abs(m.joint_probability(cons.items()) - want) <= 1e-12

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=10), st.integers(-5, 5))
    def test_joint_of_block_is_cylinder(self, syms, lo):
        m = MarkovChain(np.array([[0.9, 0.1], [0.2, 0.8]]))
        cons = [(lo + i, a) for i, a in enumerate(syms)]
        assert m.joint_probability(cons) == m.cylinder_probability(Cylinder(lo, syms))

    def test_exponential_decay(self, markov):
        alpha = decay_rate(markov) - 1e-12
        for length in range(1, 9):
            words, _ = oracles.markov_word_probs(markov.P.tolist(), markov.pi.tolist(), length)
            for w in words:
                assert markov.cylinder_probability(Cylinder(0, w)) <= math.exp(-alpha * (length - 1))

    def test_geometric_marginals(self, geometric):
        assert math.isclose(geometric.cylinder_probability(Cylinder(0, [2])), 0.4 * 0.6**2)


class TestSampling:
    def test_coin_frequency(self, coin):
        w = coin.sample(0, 99999, RngSeed(11))
        z = (np.mean(w.symbols == 0) - 0.5) / math.sqrt(0.25 / 1e5)
        assert abs(z) < 4

    def test_markov_frequency(self, markov):
        w = markov.sample(-10**4, 10**4, RngSeed(2))
        # the chain's integrated autocorrelation time for this indicator is (1 + 0.7) / (1 - 0.7)
        var = (2 / 9) * (1.7 / 0.3) / w.symbols.size
        assert abs(np.mean(w.symbols == 0) - 2 / 3) < 4 * math.sqrt(var)

    def test_gauss_digit_frequency(self):
        g = GaussDigits()
        digits = np.concatenate([g.sample(0, 4999, RngSeed(5, s)).symbols for s in range(20)])
        p = math.log2(4 / 3)
        assert abs(np.mean(digits == 1) - p) < 4 * math.sqrt(p * (1 - p) / digits.size)

    def test_stationary_joint_frequencies(self, markov):
        # coordinates {-2, 0, 3} over 10^5 independent streams of one seed
        counts = {}
        n = 10**5
        for s in range(n):
            w = markov.sample(-2, 3, RngSeed(9, s))
            key = (w[-2], w[0], w[3])
            counts[key] = counts.get(key, 0) + 1
        for key, c in counts.items():
            p = markov.joint_probability(zip((-2, 0, 3), key))
            assert abs(c / n - p) < 4 * math.sqrt(p * (1 - p) / n)

    def test_reproducible(self, markov):
        a = sample_window(markov, (-5, 50), RngSeed(1, 3))
        b = sample_window(markov, (-5, 50), RngSeed(1, 3))
        c = sample_window(markov, (-5, 50), RngSeed(1, 4))
        assert a == b and a != c

    def test_gauss_window_side(self):
        w = sample_window(GaussDigits(), (0, 10), RngSeed(0))
        assert w.sidedness == ONE_SIDED and w.symbols.min() >= 1


class TestMixing:
    def test_reference_values(self, markov):
        assert math.isclose(phi_exact(markov, 1), PHI_1, rel_tol=1e-12)
        assert math.isclose(psi_exact(markov, 1), PSI_1, rel_tol=1e-12)

    def test_iid_vanish(self, coin, geometric):
        for m in (coin, geometric):
            assert phi_exact(m, 3) == 0 and psi_exact(m, 3) == 0
        assert mixing_oracle_bruteforce(coin, PHI, 2, 2) < 1e-15
        assert mixing_oracle_bruteforce(coin, PSI, 2, 2) < 1e-15

    def test_gauss_unsupported(self):
        with pytest.raises(UnsupportedFeatureError):
            phi_exact(GaussDigits(), 1)

    def test_oracle_reference(self, markov):
        assert abs(mixing_oracle_bruteforce(markov, PSI, 1, 1) - PSI_1) < 1e-10
        assert abs(mixing_oracle_bruteforce(markov, PHI, 3, 3) - phi_exact(markov, 3)) < 1e-10

    def test_oracle_guard(self, markov):
        with pytest.raises(ResourceError):
            mixing_oracle_bruteforce(markov, PHI, 5, 20)

    def test_psi_geometric_decay(self, markov):
        lam = markov.second_eigenvalue_modulus()
        assert math.isclose(lam, 0.7)
        prof = mixing_profile(markov, PSI, 30)
        vals = [prof.values[k] for k in range(1, 31)]
        for a, b in zip(vals, vals[1:]):
            assert b <= lam * a + 1e-9
        partial = np.cumsum(vals)
        tails = partial[-1] - partial[:-1]
        assert all(t <= v * lam / (1 - lam) + 1e-9 for t, v in zip(tails, vals[:-1]))

    def test_profile_invariants(self):
        with pytest.raises(ValidationError):
            MixingProfile(PHI, {1: 0.1, 2: 0.3})
        with pytest.raises(ValidationError):
            MixingProfile(PHI, {1: 1.5})

"""The numba kernels and their numpy twins must agree bit for bit."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bclab import kernels as K
from bclab.processes import IIDFinite, IIDGeometric, MarkovChain
from bclab.rng import RngSeed

pytestmark = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")

seeds = st.integers(0, 2**32)


def _iid_source(seed, m):
    probs = np.arange(1, m + 1, dtype=float)
    return IIDFinite(probs / probs.sum()).source(RngSeed(seed))


def _window_source(seed, lo, hi):
    w = MarkovChain(np.array([[0.9, 0.1], [0.2, 0.8]])).sample(lo, hi, RngSeed(seed))
    return w.source()


def _sources(seed):
    return [_iid_source(seed, 2), _iid_source(seed, 5), _iid_source(seed, 40),
            IIDGeometric(0.3).source(RngSeed(seed)), _window_source(seed, -300, 5000)]


def test_flag_is_read_from_environment(monkeypatch):
    monkeypatch.setenv("BCLAB_DISABLE_NUMBA", "1")
    assert K._flag_disabled()
    monkeypatch.setenv("BCLAB_DISABLE_NUMBA", "0")
    assert not K._flag_disabled()


def test_uniforms_lie_in_unit_interval():
    u = K.uniforms_np(np.uint64(99), np.arange(-1000, 100000))
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005


def test_raw_hash_frozen():
    # SplitMix64 output for key 0 at counters 1, 2, 3
    got = K.raw64_np(np.uint64(0), np.array([0, 1, 2])).tolist()
    assert got == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


@given(seeds)
def test_fetch_agrees(seed):
    coords = np.arange(-200, 4000, dtype=np.int64)
    for src in _sources(seed):
        a = K.fetch_nb(src[0], src[1], src[2], src[4], src[5], src[6], coords)
        b = K.fetch_np(src, coords)
        assert np.array_equal(a, b)


@given(seeds, st.integers(-50, 0), st.integers(0, 50))
def test_markov_fill_agrees(seed, lo, hi):
    m = MarkovChain(np.array([[0.5, 0.3, 0.2], [0.1, 0.6, 0.3], [0.3, 0.3, 0.4]]))
    key = RngSeed(seed).key()
    a = K.markov_fill_nb(key, m.cum_pi, m.cum_fwd, m.cum_bwd, lo, hi)
    b = K.markov_fill_np(key, m.cum_pi, m.cum_fwd, m.cum_bwd, lo, hi)
    assert np.array_equal(a, b)


def test_markov_windows_are_consistent_restrictions(markov):
    big = markov.sample(-100, 100, RngSeed(3))
    small = markov.sample(-10, 20, RngSeed(3))
    assert np.array_equal(big.block(-10, 20), small.symbols)


def _layout(rng, ell, N, width):
    lo = -rng.integers(0, width, N)
    hi = lo + rng.integers(0, width, N)
    base = np.concatenate([[0], np.cumsum(hi - lo + 1)[:-1]])
    pat = rng.integers(0, 2, (ell, int((hi - lo + 1).sum())))
    return lo.astype(np.int64), hi.astype(np.int64), pat.astype(np.int64), base.astype(np.int64)


@given(seeds, st.integers(1, 3))
def test_shift_hits_agree(seed, ell):
    rng = np.random.default_rng(seed)
    N = 300
    lo, hi, pat, base = _layout(rng, ell, N, 3)
    qv = np.stack([np.arange(1, N + 1) * (i + 1) for i in range(ell)]).astype(np.int64)
    for src in _sources(seed)[:2] + [_window_source(seed, -10, 2000)]:
        mode, omega, w_lo, _, key, cdf, p = src
        a = K.shift_hits_nb(mode, omega, w_lo, key, cdf, p, qv, lo, hi, pat, base)
        b = K.shift_hits_np(mode, omega, w_lo, key, cdf, p, qv, lo, hi, pat, base, chunk=64)
        assert np.array_equal(a, b)


@given(seeds, st.integers(0, 4), st.sampled_from([[[0, 1]], [[0, 1], [0, 2]], [[3, 0, 1]]]))
def test_hitting_scan_agrees(seed, radius, poly):
    coefs = np.array([p + [0] * (3 - len(p)) for p in poly], dtype=np.int64)
    degs = np.array([len(p) - 1 for p in poly], dtype=np.int64)
    rng = np.random.default_rng(seed)
    tpat = rng.integers(0, 2, 2 * radius + 1).astype(np.int64)
    for src in (_iid_source(seed, 2), _window_source(seed, -10, 3000)):
        mode, omega, w_lo, w_hi, key, cdf, p = src
        args = (mode, omega, w_lo, w_hi, key, cdf, p, coefs, degs, tpat, -radius, -radius, radius, 5000)
        a = K.hitting_scan_nb(*args)
        b = K.hitting_scan_np(*args, chunk=97)
        assert tuple(map(int, a)) == tuple(map(int, b))


@given(seeds, st.booleans())
def test_min_radius_scan_agrees(seed, two_sided):
    rng = np.random.default_rng(seed)
    reach = 6
    ell = 2
    targets = rng.integers(0, 2, (ell, 2 * reach + 1)).astype(np.int64)
    center = reach if two_sided else 0
    N = 400
    qv = np.stack([np.arange(1, N + 1), 2 * np.arange(1, N + 1)]).astype(np.int64)
    for src in (_iid_source(seed, 2), _window_source(seed, -10, 700)):
        mode, omega, w_lo, w_hi, key, cdf, p = src
        args = (mode, omega, w_lo, w_hi, key, cdf, p, qv, targets, center, reach, two_sided)
        ra, *ea = K.min_radius_scan_nb(*args)
        rb, *eb = K.min_radius_scan_np(*args, chunk=50)
        assert list(map(int, ea)) == list(map(int, eb))
        stop = int(ea[1]) if int(ea[0]) else N
        assert np.array_equal(ra[:stop], rb[:stop])


def test_geometric_symbols_match_law():
    u = K.uniforms_np(np.uint64(5), np.arange(200000))
    a = K.geometric_symbols_np(0.4, u)
    freq = np.bincount(a, minlength=4)[:4] / a.size
    expect = 0.4 * 0.6 ** np.arange(4)
    assert np.allclose(freq, expect, atol=0.005)


_PROBE = """
import json, numpy as np
from bclab import kernels
from bclab.applications import hitting_time, min_radii
from bclab.engine import CylinderSchedule, nonconventional_sum_shift
from bclab.index import IndexFamily
from bclab.processes import IIDFinite, MarkovChain
from bclab.rng import RngSeed
from bclab.symbolic import Cylinder
coin = IIDFinite.uniform(2)
m = MarkovChain(np.array([[0.9, 0.1], [0.2, 0.8]]))
fam = IndexFamily.linear(1, 2)
w = m.sample(-20, 5000, RngSeed(1))
t = coin.sample(-30, 30, RngSeed(1), substream=1)
print(json.dumps({
    "numba": kernels.shift_hits is kernels.shift_hits_nb,
    "S": nonconventional_sum_shift(w, CylinderSchedule.fixed(Cylinder(0, [0, 0]), ell=2), fam, 2000).total,
    "tau": hitting_time(coin.source(RngSeed(2)), t, fam, 3, cap=10**6).tau,
    "radii": min_radii(coin.source(RngSeed(3)), [t], IndexFamily([[0, 1]]), 300).tolist(),
}))
"""


def test_numpy_fallback_matches_end_to_end():
    def probe(flag):
        env = dict(os.environ, BCLAB_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", _PROBE], env=env, capture_output=True, text=True, check=True)
        return json.loads(res.stdout)

    fast, slow = probe("0"), probe("1")
    assert fast.pop("numba") and not slow.pop("numba")
    assert fast == slow

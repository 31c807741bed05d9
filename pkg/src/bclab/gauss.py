"""Continued-fraction digits under the Gauss measure, with exact arithmetic.

A point x ~ Gauss measure is fixed by a uniform u whose binary expansion is
the stream of 64-bit counter hashes of a key, and x = 2**u - 1. Digits are
read off a dyadic rational bracket around x with integer Euclid steps and
kept only while both ends of the bracket share them, so every emitted digit
is a digit of x itself and longer requests extend shorter ones.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np

from . import kernels

LN2 = math.log(2.0)


def cf_digits(num: int, den: int, limit: int):
    """Continued-fraction digits of num/den in (0, 1); ``(digits, terminated)``."""
    digits = []
    p, q = num, den
    while p and len(digits) < limit:
        a, r = divmod(q, p)
        digits.append(a)
        q, p = p, r
    return digits, p == 0


def _uniform_bits(key, nbits: int) -> int:
    words = kernels.raw64_np(key, np.arange(nbits // 64))
    value = 0
    for w in words.tolist():
        value = (value << 64) | w
    return value


def sample_digits(key, count: int, max_doublings: int = 12) -> np.ndarray:
    """The first ``count`` digits of the Gauss-distributed point attached to ``key``."""
    if count <= 0:
        return np.zeros(0, dtype=np.int64)
    # q_n grows like exp(1.19 n), so about 3.5 bits per digit certify; 4 leaves slack.
    nbits = 64 * math.ceil((4 * count + 192) / 64)
    for _ in range(max_doublings):
        U = _uniform_bits(key, nbits)
        with mpmath.workprec(nbits + 96):
            u = mpmath.ldexp(mpmath.mpf(U), -nbits)
            x = mpmath.power(2, u) - 1
            X = int(mpmath.floor(mpmath.ldexp(x, nbits)))
        den = 1 << nbits
        if X - 1 > 0 and X + 2 < den:
            lo, lo_end = cf_digits(X - 1, den, count + 1)
            hi, hi_end = cf_digits(X + 2, den, count + 1)
            usable = min(len(lo) - (1 if lo_end else 0), len(hi) - (1 if hi_end else 0))
            common = 0
            for a, b in zip(lo[:usable], hi[:usable]):
                if a != b:
                    break
                common += 1
            if common >= count:
                return np.asarray(lo[:count], dtype=np.int64)
        nbits *= 2
    raise RuntimeError("could not certify continued-fraction digits")  # pragma: no cover


def convergents(digits):
    """Final two convergent pairs ((p_n, q_n), (p_{n-1}, q_{n-1})) of [0; a1, ..., an]."""
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    for a in digits:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
    return (p, q), (p_prev, q_prev)


def log_prefix_measure(digits) -> float:
    """Natural log of the Gauss measure of the fundamental interval of ``digits``.

    The interval has endpoints p_n/q_n and (p_n+p_{n-1})/(q_n+q_{n-1}); its
    measure is |log2((1+x1)/(1+x2))|, evaluated from exact integers.
    """
    digits = [int(a) for a in digits]
    if not digits:
        return 0.0
    (p, q), (pp, qp) = convergents(digits)
    num = (q + p) * (q + qp)
    den = q * (q + qp + p + pp)
    diff = abs(num - den)
    small = min(num, den)
    # |ln(num/den)| = log1p(diff/small); int/int division is correctly rounded
    r = diff / small
    if r > 1e-9:
        return math.log(math.log1p(r)) - math.log(LN2)
    return math.log(diff) - math.log(small) + math.log1p(-r / 2) - math.log(LN2)


def entropy_reference() -> float:
    """Entropy of the Gauss map by quadrature of (1/ln2) * int_0^1 2|ln x|/(1+x) dx."""
    from scipy import integrate

    value, _ = integrate.quad(lambda x: -2.0 * math.log(x) / (1.0 + x), 0.0, 1.0, limit=200)
    return value / LN2

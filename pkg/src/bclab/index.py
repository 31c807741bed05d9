"""Polynomial index families q_1..q_ell and checkers for their counting assumptions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvariantViolation, ResourceError, ValidationError

DEFAULT_HORIZON = 10**6
_INT64_SAFE = 2**62


# -- integer polynomial helpers (coefficients low degree first) -------------


def _trim(coefs) -> Tuple[int, ...]:
    c = [int(a) for a in coefs]
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c) if c else (0,)


def poly_eval(coefs, n: int) -> int:
    acc = 0
    for a in reversed(coefs):
        acc = acc * n + a
    return acc


def poly_sub(a, b) -> Tuple[int, ...]:
    size = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(size)])


def degree(coefs) -> int:
    c = _trim(coefs)
    return 0 if len(c) == 1 else len(c) - 1


def forward_difference(coefs) -> Tuple[int, ...]:
    """Coefficients of p(n+1) - p(n)."""
    c = _trim(coefs)
    shifted = [0] * len(c)
    # p(n+1) = sum a_k (n+1)^k, expand binomially
    from math import comb

    for k, a in enumerate(c):
        for j in range(k + 1):
            shifted[j] += a * comb(k, j)
    return poly_sub(shifted, c)


def cauchy_bound(coefs) -> int:
    """Integer B with every real root of the polynomial strictly below B in modulus."""
    c = _trim(coefs)
    if len(c) == 1:
        return 0
    lead = abs(c[-1])
    return 1 + max(-(-abs(a) // lead) for a in c[:-1])


def increasing_from(coefs) -> int:
    """Smallest n0 >= 0 such that p is strictly increasing on the integers n >= n0.

    Needs a positive leading coefficient and degree >= 1. Beyond the Cauchy
    bound of the forward difference its sign is the leading sign, so only the
    integers below that bound are inspected.
    """
    c = _trim(coefs)
    if degree(c) < 1 or c[-1] <= 0:
        raise ValidationError(f"polynomial {list(c)} is not eventually increasing")
    diff = forward_difference(c)
    bound = cauchy_bound(diff)
    n0 = bound
    while n0 > 0 and poly_eval(diff, n0 - 1) > 0:
        n0 -= 1
    return n0


def _abs_bound(coefs, n: int) -> int:
    return sum(abs(a) * n**k for k, a in enumerate(coefs))


@dataclass(frozen=True)
class IndexFamily:
    """Polynomials q_1..q_ell with integer coefficients, low degree first.

    ``IndexFamily([[0, 1], [0, 0, 1]])`` is the pair (n, n^2).
    """

    polys: Tuple[Tuple[int, ...], ...]

    def __init__(self, polys):
        if not polys:
            raise ValidationError("an index family needs at least one polynomial")
        object.__setattr__(self, "polys", tuple(_trim(p) for p in polys))

    @classmethod
    def linear(cls, *slopes) -> "IndexFamily":
        return cls([[0, s] for s in slopes])

    @property
    def ell(self) -> int:
        return len(self.polys)

    def to_list(self) -> List[List[int]]:
        return [list(p) for p in self.polys]

    def evaluate(self, i: int, n: int) -> int:
        """q_i(n) for 1 <= i <= ell, exact."""
        if not 1 <= i <= self.ell:
            raise ValidationError(f"index i={i} outside 1..{self.ell}")
        if n < 0:
            raise ValidationError("n must be nonnegative")
        v = poly_eval(self.polys[i - 1], int(n))
        if v < 0:
            raise InvariantViolation(f"q_{i}({n}) = {v} is negative")
        return v

    def values(self, ns) -> np.ndarray:
        """int64 array of shape (ell, len(ns)); raises if any value is negative or too large."""
        ns = np.asarray(ns, dtype=np.int64)
        top = int(ns.max()) if ns.size else 0
        for p in self.polys:
            if _abs_bound(p, max(top, 1)) >= _INT64_SAFE:
                raise ResourceError(f"index values overflow 64-bit coordinates at n={top}")
        out = np.empty((self.ell, ns.size), dtype=np.int64)
        for i, p in enumerate(self.polys):
            acc = np.zeros(ns.size, dtype=np.int64)
            for a in reversed(p):
                acc = acc * ns + a
            out[i] = acc
        if ns.size and out.min() < 0:
            i, j = np.argwhere(out < 0)[0]
            raise InvariantViolation(f"q_{i + 1}({int(ns[j])}) = {int(out[i, j])} is negative")
        return out

    def coefficient_array(self) -> Tuple[np.ndarray, np.ndarray]:
        """(coefs, degrees) padded for the in-kernel Horner evaluation."""
        width = max(len(p) for p in self.polys)
        coefs = np.zeros((self.ell, width), dtype=np.int64)
        for i, p in enumerate(self.polys):
            coefs[i, : len(p)] = p
        return coefs, np.array([len(p) - 1 for p in self.polys], dtype=np.int64)

    def max_value_bound(self, n_max: int) -> int:
        return max(_abs_bound(p, n_max) for p in self.polys)

    def nonnegative_witness(self) -> Optional[Tuple[int, int]]:
        """(i, n) with q_i(n) < 0, or None when every q_i is nonnegative on all n >= 0.

        Decidable: beyond the Cauchy root bound the sign is that of the leading
        coefficient.
        """
        for i, p in enumerate(self.polys, start=1):
            if len(p) > 1 and p[-1] < 0:
                n = cauchy_bound(p)
                while poly_eval(p, n) >= 0:
                    n += 1
                return i, n
            for n in range(cauchy_bound(p) + 1):
                if poly_eval(p, n) < 0:
                    return i, n
            if len(p) == 1 and p[0] < 0:
                return i, 0
        return None


def q_min(family: IndexFamily, n: int) -> int:
    """min over i != j of |q_i(n) - q_j(n)|."""
    if family.ell < 2:
        raise ValidationError("q_min needs at least two index functions")
    vals = [poly_eval(p, n) for p in family.polys]
    return min(abs(a - b) for k, a in enumerate(vals) for b in vals[k + 1:])


def delta_semimetric(family: IndexFamily, m: int, n: int) -> int:
    """min over i, j of |q_i(m) - q_j(n)|."""
    if m < 1 or n < 1:
        raise ValidationError("delta is defined on positive integers")
    a = [poly_eval(p, m) for p in family.polys]
    b = [poly_eval(p, n) for p in family.polys]
    return min(abs(x - y) for x in a for y in b)


def q_min_values(family: IndexFamily, ns) -> np.ndarray:
    vals = family.values(ns)
    best = None
    for i in range(family.ell):
        for j in range(i + 1, family.ell):
            d = np.abs(vals[i] - vals[j])
            best = d if best is None else np.minimum(best, d)
    if best is None:
        raise ValidationError("q_min needs at least two index functions")
    return best


def delta_values(family: IndexFamily, m: int, ns) -> np.ndarray:
    """delta(m, n) for an array of n."""
    vals = family.values(ns)
    qm = family.values([m])[:, 0]
    return np.abs(vals[None, :, :] - qm[:, None, None]).min(axis=(0, 1))


@dataclass
class AssumptionReport:
    """Outcome of one counting-assumption check.

    ``K_i`` is the largest solution count seen on ``[0, horizon]``;
    ``K_bound`` is the algebraic certificate (the degrees of the polynomials
    involved bound every count). ``K_ii`` is the exact number of pairs
    n > m >= 0 with max_i q_i(n) <= max_i q_i(m).
    """

    horizon: int
    verdict: bool
    K_i: Optional[int] = None
    K_bound: Optional[int] = None
    K_ii: Optional[int] = None
    certified: bool = False
    witness: Optional[dict] = None
    detail: dict = field(default_factory=dict)

    @property
    def K(self) -> Optional[int]:
        vals = [v for v in (self.K_i, self.K_ii) if v is not None]
        return max(vals) if vals else None

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "verdict": "pass" if self.verdict else "fail",
            "K_i": self.K_i,
            "K_bound": self.K_bound,
            "K_ii": self.K_ii,
            "certified": self.certified,
            "witness": self.witness,
            "detail": self.detail,
        }


def _value_table(p, horizon: int):
    ns = np.arange(horizon + 1, dtype=np.int64)
    if _abs_bound(p, max(horizon, 1)) < _INT64_SAFE:
        acc = np.zeros(ns.size, dtype=np.int64)
        for a in reversed(p):
            acc = acc * ns + a
        return acc
    return np.array([poly_eval(p, n) for n in range(horizon + 1)], dtype=object)


def _monotone_tail(p) -> int:
    """n0 beyond which p is strictly monotone on the integers (either direction)."""
    lead_sign = 1 if p[-1] > 0 else -1
    return increasing_from(tuple(lead_sign * a for a in p))


def _fail(horizon, witness, **kw):
    return AssumptionReport(horizon=horizon, verdict=False, witness=witness, **kw)


def check_assumption_i(family: IndexFamily, horizon: int = DEFAULT_HORIZON) -> AssumptionReport:
    """Solution counts of q_i(n) - q_j(n) = k together with q_i(n) = k.

    For each ordered pair i != j and every k realized on ``[0, horizon]``,
    counts the n in that range solving at least one equation. The tail beyond
    ``horizon`` is certified once every polynomial involved is strictly
    monotone past ``horizon``; a nonconstant polynomial of degree d takes any
    value at most d times, which gives ``K_bound``.
    """
    if horizon < 1:
        raise ValidationError("horizon must be positive")
    neg = family.nonnegative_witness()
    if neg is not None:
        return _fail(horizon, {"reason": "negative-value", "i": neg[0], "n": neg[1]})
    for i, p in enumerate(family.polys, start=1):
        if degree(p) == 0:
            return _fail(horizon, {"reason": "constant-polynomial", "i": i})
    for i in range(family.ell):
        for j in range(i + 1, family.ell):
            if degree(poly_sub(family.polys[i], family.polys[j])) == 0:
                return _fail(horizon, {"reason": "constant-difference", "pair": [i + 1, j + 1],
                                       "difference": poly_sub(family.polys[i], family.polys[j])[0]})

    tables = [_value_table(p, horizon) for p in family.polys]
    tails = [_monotone_tail(p) for p in family.polys]
    best = 0
    best_at = None
    bound = 0
    if family.ell == 1:
        uq, cq = np.unique(tables[0], return_counts=True)
        best = int(cq.max())
        best_at = {"k": int(uq[np.argmax(cq)])}
        bound = degree(family.polys[0])
    for i in range(family.ell):
        for j in range(family.ell):
            if i == j:
                continue
            dpoly = poly_sub(family.polys[i], family.polys[j])
            tails.append(_monotone_tail(dpoly))
            d = tables[i] - tables[j]
            ud, cd = np.unique(d, return_counts=True)
            uq, cq = np.unique(tables[i], return_counts=True)
            keys, inv = np.unique(np.concatenate([ud, uq]), return_inverse=True)
            totals = np.bincount(inv, weights=np.concatenate([cd, cq])).astype(np.int64)
            # n solving both equations (q_j(n) = 0) were counted twice
            for n in np.flatnonzero(tables[j] == 0):
                totals[np.searchsorted(keys, tables[i][n])] -= 1
            top = int(np.argmax(totals))
            if totals[top] > best:
                best = int(totals[top])
                best_at = {"pair": [i + 1, j + 1], "k": int(keys[top])}
            bound = max(bound, degree(dpoly) + degree(family.polys[i]))
    certified = max(tails) <= horizon
    return AssumptionReport(horizon=horizon, verdict=certified, K_i=int(best), K_bound=int(bound),
                            certified=certified,
                            witness=None if certified else {"reason": "uncertified-tail",
                                                            "monotone_from": max(tails)},
                            detail={"argmax": best_at, "monotone_from": max(tails)})


def check_assumption_ii(family: IndexFamily, horizon: int = DEFAULT_HORIZON) -> AssumptionReport:
    """Count pairs n > m >= 0 with max_i q_i(n) <= max_i q_i(m).

    Past n0, where every q_i strictly increases, no pair with m >= n0
    violates; pairs with m < n0 need max q(n) <= V = max over [0, n0) of
    max q, which fails from the first n1 >= n0 with max q(n1) > V on. So all
    violations have n < n1, and the count is exact when n1 - 1 <= horizon.
    """
    if horizon < 1:
        raise ValidationError("horizon must be positive")
    neg = family.nonnegative_witness()
    if neg is not None:
        return _fail(horizon, {"reason": "negative-value", "i": neg[0], "n": neg[1]})
    if any(degree(p) == 0 for p in family.polys):
        return _fail(horizon, {"reason": "constant-polynomial"})
    n0 = max(increasing_from(p) for p in family.polys)

    def qmax(n):
        return max(poly_eval(p, n) for p in family.polys)

    V = max((qmax(n) for n in range(n0)), default=-1)
    n1 = n0
    while qmax(n1) <= V:
        n1 += 1
    last = min(n1 - 1, horizon)
    Q = np.array([qmax(n) for n in range(last + 1)], dtype=object)
    count = 0
    examples = []
    for n in range(1, last + 1):
        viol = np.flatnonzero(Q[:n] >= Q[n])
        count += viol.size
        for m in viol[: max(0, 5 - len(examples))]:
            examples.append([int(m), n])
    certified = n1 - 1 <= horizon
    return AssumptionReport(
        horizon=horizon,
        verdict=certified,
        K_ii=count,
        certified=certified,
        witness=None if certified else {"reason": "uncertified-tail", "n1": n1},
        detail={"n0": n0, "n1": n1, "example_pairs": examples},
    )


def check_assumption(family: IndexFamily, horizon: int = DEFAULT_HORIZON) -> AssumptionReport:
    """Both parts together; K is the larger of the two counts."""
    r1 = check_assumption_i(family, horizon)
    r2 = check_assumption_ii(family, horizon)
    return AssumptionReport(
        horizon=horizon,
        verdict=r1.verdict and r2.verdict,
        K_i=r1.K_i,
        K_bound=r1.K_bound,
        K_ii=r2.K_ii,
        certified=r1.certified and r2.certified,
        witness=r1.witness or r2.witness,
        detail={"i": r1.detail, "ii": r2.detail},
    )

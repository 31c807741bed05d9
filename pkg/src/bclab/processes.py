"""Stationary process models with exact cylinder kernels and mixing coefficients."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from . import gauss, kernels
from .errors import (
    InvariantViolation,
    ModelError,
    ResourceError,
    UnsupportedFeatureError,
    ValidationError,
)
from .rng import RngSeed
from .symbolic import ONE_SIDED, TWO_SIDED, Alphabet, Cylinder, SymbolWindow

ROW_TOL = 1e-12
ORACLE_LIMIT = 10**8


def _constraint_map(constraints) -> Optional[Dict[int, int]]:
    """Coordinate -> symbol, or None if two constraints clash."""
    out: Dict[int, int] = {}
    for coord, sym in constraints:
        coord, sym = int(coord), int(sym)
        if out.setdefault(coord, sym) != sym:
            return None
    return out


class ProcessModel:
    """A shift-invariant law on sequences with exact cylinder probabilities."""

    kind = "abstract"
    alphabet: Alphabet
    one_sided_only = False

    # subclasses provide these
    def cylinder_probability(self, cyl: Cylinder) -> float:
        raise NotImplementedError

    def log_cylinder_probability(self, cyl: Cylinder) -> float:
        raise NotImplementedError

    def joint_probability(self, constraints) -> float:
        raise NotImplementedError

    def sample(self, lo: int, hi: int, seed: RngSeed, substream: int = 0,
               sidedness: Optional[str] = None) -> SymbolWindow:
        raise NotImplementedError

    def entropy(self) -> float:
        raise UnsupportedFeatureError(f"no closed-form entropy for {self.kind}")

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def is_iid(self) -> bool:
        return False

    def check_side(self, lo: int, hi: int, sidedness: str) -> None:
        if lo > hi:
            raise ValidationError(f"empty range [{lo}, {hi}]")
        if sidedness == ONE_SIDED and lo != 0:
            raise ValidationError("one-sided windows start at coordinate 0")
        if sidedness == TWO_SIDED and not (lo <= 0 <= hi):
            raise ValidationError("two-sided windows must contain coordinate 0")
        if sidedness == TWO_SIDED and self.one_sided_only:
            raise ModelError(f"{self.kind} is a one-sided model")

    def _check_symbols(self, symbols):
        self.alphabet.validate(symbols)


class _IID(ProcessModel):
    """Shared machinery of the iid models: a counter-hash source regenerates any coordinate."""

    @property
    def is_iid(self) -> bool:
        return True

    def log_marginal(self, symbols) -> np.ndarray:
        raise NotImplementedError

    def cylinder_probability(self, cyl: Cylinder) -> float:
        self._check_symbols(cyl.constraints)
        p = 1.0
        for a in cyl.constraints.tolist():
            p *= self.marginal(a)
        return p

    def log_cylinder_probability(self, cyl: Cylinder) -> float:
        self._check_symbols(cyl.constraints)
        return float(np.sum(self.log_marginal(cyl.constraints)))

    def joint_probability(self, constraints) -> float:
        cmap = _constraint_map(constraints)
        if cmap is None:
            return 0.0
        self._check_symbols(list(cmap.values()))
        p = 1.0
        for coord in sorted(cmap):
            p *= self.marginal(cmap[coord])
        return p

    def source(self, seed: RngSeed, substream: int = 0):
        raise NotImplementedError

    def sample(self, lo, hi, seed, substream=0, sidedness=None):
        sidedness = sidedness or TWO_SIDED
        self.check_side(lo, hi, sidedness)
        syms = kernels.fetch(self.source(seed, substream), np.arange(lo, hi + 1, dtype=np.int64))
        return SymbolWindow(syms, lo, sidedness)


@dataclass(frozen=True, eq=False)
class IIDFinite(_IID):
    probs: np.ndarray
    kind = "iid-finite"

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).reshape(-1)
        if p.size < 2:
            raise ModelError("an iid model needs at least two symbols")
        if np.any(p <= 0):
            raise ModelError("every symbol probability must be strictly positive")
        if abs(p.sum() - 1.0) > ROW_TOL:
            raise ModelError(f"probabilities sum to {p.sum()!r}, not 1")
        if p.max() >= 1.0:
            raise ModelError("the largest symbol probability must be below 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        cdf = np.cumsum(p)
        cdf[-1] = 1.0
        cdf.setflags(write=False)
        object.__setattr__(self, "cdf", cdf)
        object.__setattr__(self, "alphabet", Alphabet(p.size))

    @classmethod
    def uniform(cls, size: int = 2) -> "IIDFinite":
        return cls(np.full(size, 1.0 / size))

    def marginal(self, a: int) -> float:
        return float(self.probs[a])

    def log_marginal(self, symbols):
        return np.log(self.probs[np.asarray(symbols, dtype=np.int64)])

    def source(self, seed, substream=0):
        return (kernels.MODE_IID, np.zeros(1, dtype=np.int64), 0, 0, seed.key(substream), self.cdf, 0.0)

    def entropy(self) -> float:
        return float(-np.sum(self.probs * np.log(self.probs)))

    def to_dict(self):
        return {"kind": self.kind, "probs": self.probs.tolist()}


@dataclass(frozen=True)
class IIDGeometric(_IID):
    """iid symbols with P([a]) = p (1-p)^a on the countable alphabet."""

    p: float
    kind = "iid-geometric"

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ModelError("geometric parameter must lie in (0, 1)")
        object.__setattr__(self, "alphabet", Alphabet(None))

    def marginal(self, a: int) -> float:
        return self.p * (1.0 - self.p) ** int(a)

    def log_marginal(self, symbols):
        return math.log(self.p) + np.asarray(symbols, dtype=float) * math.log1p(-self.p)

    def source(self, seed, substream=0):
        return (kernels.MODE_GEOMETRIC, np.zeros(1, dtype=np.int64), 0, 0, seed.key(substream),
                np.ones(1), float(self.p))

    def entropy(self) -> float:
        # -sum p q^a (ln p + a ln q) = -ln p - (q/p) ln q
        q = 1.0 - self.p
        return -math.log(self.p) - q / self.p * math.log(q)

    def to_dict(self):
        return {"kind": self.kind, "p": float(self.p)}


def _is_primitive(P: np.ndarray) -> bool:
    n = P.shape[0]
    A = (P > 0).astype(np.int64)
    M = A.copy()
    for _ in range(n * n):
        if M.all():
            return True
        M = np.minimum(M @ A, 1)
    return bool(M.all())


def stationary_distribution(transition) -> np.ndarray:
    """Stationary vector of an irreducible aperiodic row-stochastic matrix."""
    P = np.array(transition, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
        raise ModelError("transition matrix must be square")
    if np.any(P < 0):
        raise ModelError("transition probabilities must be nonnegative")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > ROW_TOL):
        raise ModelError("rows must sum to 1 within 1e-12")
    if not _is_primitive(P):
        raise ModelError("chain is reducible or periodic (no strictly positive power)")
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    # one refinement step against the residual
    A2 = A.copy()
    r = b - A2 @ pi
    pi = pi + np.linalg.solve(A2, r)
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    if np.max(np.abs(pi @ P - pi)) > ROW_TOL:
        raise ModelError("stationary vector residual exceeds 1e-12")  # pragma: no cover
    return pi


@dataclass(frozen=True, eq=False)
class MarkovChain(ProcessModel):
    """Stationary finite-state Markov chain with transition matrix ``P``."""

    P: np.ndarray
    kind = "markov"
    _powers: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        pi = stationary_distribution(P)
        if P.shape[0] < 2:
            raise ModelError("a Markov chain needs at least two states")
        if pi.max() >= 1.0 or pi.min() <= 0.0:
            raise ModelError("every state must carry positive stationary mass below 1")
        P.setflags(write=False)
        pi.setflags(write=False)
        rev = (P.T * pi[None, :]) / pi[:, None]
        rev = rev / rev.sum(axis=1, keepdims=True)
        for name, value in (
            ("P", P),
            ("pi", pi),
            ("reversed", rev),
            ("cum_pi", _cum(pi)),
            ("cum_fwd", _cum(P)),
            ("cum_bwd", _cum(rev)),
            ("alphabet", Alphabet(P.shape[0])),
        ):
            object.__setattr__(self, name, value)
        self._powers[1] = P

    @property
    def states(self) -> int:
        return self.P.shape[0]

    def power(self, k: int) -> np.ndarray:
        """P^k by repeated squaring; requested powers are cached."""
        if k < 0:
            raise ValidationError("negative matrix power")
        if k == 0:
            return np.eye(self.states)
        cached = self._powers.get(k)
        if cached is not None:
            return cached
        result = None
        base = self.P
        e = k
        sq = 1
        while e:
            if e & 1:
                result = base if result is None else result @ base
            e >>= 1
            if e:
                sq *= 2
                nxt = self._powers.get(sq)
                if nxt is None:
                    nxt = base @ base
                    self._powers[sq] = nxt
                base = nxt
        self._powers[k] = result
        return result

    def second_eigenvalue_modulus(self) -> float:
        ev = np.sort(np.abs(np.linalg.eigvals(self.P)))[::-1]
        return float(ev[1])

    def cylinder_probability(self, cyl):
        self._check_symbols(cyl.constraints)
        a = cyl.constraints.tolist()
        p = float(self.pi[a[0]])
        for x, y in zip(a, a[1:]):
            p *= self.P[x, y]
        return float(p)

    def log_cylinder_probability(self, cyl):
        self._check_symbols(cyl.constraints)
        a = cyl.constraints
        with np.errstate(divide="ignore"):
            return float(np.log(self.pi[a[0]]) + np.sum(np.log(self.P[a[:-1], a[1:]])))

    def joint_probability(self, constraints):
        cmap = _constraint_map(constraints)
        if cmap is None:
            return 0.0
        if not cmap:
            return 1.0
        coords = sorted(cmap)
        syms = [cmap[c] for c in coords]
        self._check_symbols(syms)
        p = float(self.pi[syms[0]])
        for c0, c1, a, b in zip(coords, coords[1:], syms, syms[1:]):
            p *= self.power(c1 - c0)[a, b]
        return float(p)

    def sample(self, lo, hi, seed, substream=0, sidedness=None):
        sidedness = sidedness or TWO_SIDED
        self.check_side(lo, hi, sidedness)
        syms = kernels.markov_fill(seed.key(substream), self.cum_pi, self.cum_fwd, self.cum_bwd,
                                   int(lo), int(hi))
        return SymbolWindow(syms, lo, sidedness)

    def entropy(self) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(self.P > 0, np.log(np.where(self.P > 0, self.P, 1.0)), 0.0)
        return float(-np.sum(self.pi[:, None] * self.P * logs))

    def to_dict(self):
        return {"kind": self.kind, "P": self.P.tolist()}


def _cum(arr):
    c = np.cumsum(np.asarray(arr, dtype=float), axis=-1)
    c[..., -1] = 1.0
    c.setflags(write=False)
    return c


@dataclass(frozen=True)
class GaussDigits(ProcessModel):
    """Continued-fraction digits of a Gauss-distributed point; one-sided.

    Coordinate j holds the digit a_{j+1}; symbols are the positive integers.
    """

    kind = "gauss-digits"
    one_sided_only = True

    def __post_init__(self):
        object.__setattr__(self, "alphabet", Alphabet(None))

    def _check_symbols(self, symbols):
        arr = np.asarray(symbols)
        if arr.size and arr.min() < 1:
            raise ValidationError("continued-fraction digits are positive integers")

    def log_cylinder_probability(self, cyl):
        if cyl.lo < 0:
            raise ValidationError("Gauss-digit cylinders live on nonnegative coordinates")
        self._check_symbols(cyl.constraints)
        # stationarity: a block on [l, r] has the measure of the same block on [0, r-l]
        return gauss.log_prefix_measure(cyl.constraints.tolist())

    def cylinder_probability(self, cyl):
        return math.exp(self.log_cylinder_probability(cyl))

    def joint_probability(self, constraints):
        cmap = _constraint_map(constraints)
        if cmap is None:
            return 0.0
        if not cmap:
            return 1.0
        coords = sorted(cmap)
        if coords[-1] - coords[0] + 1 != len(coords):
            raise UnsupportedFeatureError("Gauss-digit joint probabilities need a contiguous block")
        return self.cylinder_probability(Cylinder(coords[0], [cmap[c] for c in coords]))

    def sample(self, lo, hi, seed, substream=0, sidedness=None):
        sidedness = sidedness or ONE_SIDED
        self.check_side(lo, hi, sidedness)
        return SymbolWindow(gauss.sample_digits(seed.key(substream), hi + 1), 0, ONE_SIDED)

    def to_dict(self):
        return {"kind": self.kind}


def model_from_dict(data: dict) -> ProcessModel:
    kind = data.get("kind")
    try:
        if kind == "iid-finite":
            return IIDFinite(data["probs"])
        if kind == "iid-geometric":
            return IIDGeometric(float(data["p"]))
        if kind == "markov":
            return MarkovChain(data["P"])
    except (KeyError, TypeError) as exc:
        raise ModelError(f"{kind} model is missing or has a malformed field: {exc}") from None
    if kind == "gauss-digits":
        return GaussDigits()
    raise ValidationError(f"unknown model kind {kind!r}")


# -- module-level operations -------------------------------------------------


def sample_window(model: ProcessModel, rng_range: Tuple[int, int], seed: RngSeed,
                  sidedness: Optional[str] = None, substream: int = 0) -> SymbolWindow:
    lo, hi = rng_range
    return model.sample(int(lo), int(hi), seed, substream=substream, sidedness=sidedness)


def cylinder_probability(model: ProcessModel, cyl: Cylinder) -> float:
    return model.cylinder_probability(cyl)


def joint_cylinder_probability(model: ProcessModel, constraints: Iterable[Tuple[int, int]]) -> float:
    return model.joint_probability(constraints)


# -- mixing coefficients ------------------------------------------------------

PHI = "phi"
PSI = "psi"


@dataclass(frozen=True)
class MixingProfile:
    kind: str
    values: Dict[int, float]
    provenance: str = "exact-formula"

    def __post_init__(self):
        if self.kind not in (PHI, PSI):
            raise ValidationError(f"unknown coefficient kind {self.kind!r}")
        ks = sorted(self.values)
        vals = [self.values[k] for k in ks]
        if any(v < 0 for v in vals) or (self.kind == PHI and any(v > 1 + 1e-12 for v in vals)):
            raise InvariantViolation("mixing coefficients out of range")
        for a, b in zip(vals, vals[1:]):
            if b > a + 1e-12:
                raise InvariantViolation("mixing coefficients must be non-increasing in k")


def _require_exact(model):
    if isinstance(model, GaussDigits):
        raise UnsupportedFeatureError("no exact mixing coefficients for Gauss digits; use the oracle")


def phi_exact(model: ProcessModel, k: int) -> float:
    """phi(k); for a chain, max_a (1/2) sum_b |P^k(a, b) - pi_b|."""
    _require_exact(model)
    if k < 1:
        raise ValidationError("gap k must be positive")
    if model.is_iid:
        return 0.0
    D = np.abs(model.power(k) - model.pi[None, :])
    return float(0.5 * D.sum(axis=1).max())


def psi_exact(model: ProcessModel, k: int) -> float:
    """psi(k); for a chain, max_{a,b} |P^k(a, b) / pi_b - 1|."""
    _require_exact(model)
    if k < 1:
        raise ValidationError("gap k must be positive")
    if model.is_iid:
        return 0.0
    return float(np.abs(model.power(k) / model.pi[None, :] - 1.0).max())


def mixing_profile(model: ProcessModel, kind: str, k_max: int) -> MixingProfile:
    fn = phi_exact if kind == PHI else psi_exact
    return MixingProfile(kind, {k: fn(model, k) for k in range(1, k_max + 1)})


def _word_probabilities(model, span: int) -> np.ndarray:
    """Probabilities of all words of length ``span``, by direct path products.

    Deliberately avoids matrix powers and the cylinder kernels it checks.
    """
    if isinstance(model, MarkovChain):
        init, trans = model.pi, model.P
    elif isinstance(model, IIDFinite):
        init = model.probs
        trans = np.tile(model.probs, (model.probs.size, 1))
    else:
        raise UnsupportedFeatureError("brute-force enumeration needs a finite alphabet")
    size = init.size
    probs = np.empty((size,) * span)
    for word in itertools.product(range(size), repeat=span):
        p = init[word[0]]
        for x, y in zip(word, word[1:]):
            p *= trans[x, y]
        probs[word] = p
    return probs


def mixing_oracle_bruteforce(model: ProcessModel, kind: str, k: int, max_len: int) -> float:
    """Supremum over past cylinders ending at 0 and future events starting at k.

    Past events are cylinders of length 1..max_len on ``[1-L, 0]``. For psi the
    future events are cylinders of length 1..max_len on ``[k, k+L-1]``; for
    phi they are arbitrary unions of such cylinders, whose supremum is the sum
    of positive parts. The answer is a lower bound on the true coefficient and
    equals it for Markov chains.
    """
    if kind not in (PHI, PSI):
        raise ValidationError(f"unknown coefficient kind {kind!r}")
    if not model.alphabet.finite:
        raise UnsupportedFeatureError("the oracle enumerates a finite alphabet")
    size = model.alphabet.size
    span = 2 * max_len + k - 1
    if size ** (2 * max_len) > ORACLE_LIMIT or size**span > ORACLE_LIMIT:
        raise ResourceError(f"enumeration of {size}^{span} words exceeds {ORACLE_LIMIT}")
    words = _word_probabilities(model, span)
    best = 0.0
    for lp in range(1, max_len + 1):
        for lf in range(1, max_len + 1):
            # axes: [0, max_len) past (coordinate 0 last), then gap, then future block
            drop_front = tuple(range(max_len - lp))
            keep = words.sum(axis=drop_front) if drop_front else words
            # now axes: lp past, k-1 gap, max_len future
            gap_axes = tuple(range(lp, lp + k - 1))
            tail_axes = tuple(range(lp + k - 1 + lf, lp + k - 1 + max_len))
            joint = keep.sum(axis=gap_axes + tail_axes) if gap_axes + tail_axes else keep
            joint = joint.reshape(size**lp, size**lf)
            p_past = joint.sum(axis=1)
            p_fut = joint.sum(axis=0)
            mask = p_past > 0
            if kind == PSI:
                outer = np.outer(p_past, p_fut)
                ok = outer > 0
                val = np.abs(joint[ok] / outer[ok] - 1.0).max()
            else:
                cond = joint[mask] / p_past[mask, None] - p_fut[None, :]
                val = np.clip(cond, 0.0, None).sum(axis=1).max()
            best = max(best, float(val))
    return best


def decay_rate(model: ProcessModel) -> float:
    """A rate alpha with P(C) <= exp(-alpha (r - l)) for every cylinder on [l, r].

    Markov: -ln max_{a,b} P(a,b); iid: -ln max_a P([a]).
    """
    if isinstance(model, MarkovChain):
        return -math.log(float(model.P.max()))
    if isinstance(model, IIDFinite):
        return -math.log(float(model.probs.max()))
    if isinstance(model, IIDGeometric):
        return -math.log(model.p)
    raise UnsupportedFeatureError(f"no decay rate for {model.kind}")

"""Entropy, the maximal log-distance statistic M_N and multiple hitting times."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import gauss, kernels
from .engine import checkpoints
from .errors import (CoordinateRangeError, InsufficientDataError, ResolutionError, ResourceError,
                     UnsupportedFeatureError, ValidationError)
from .index import IndexFamily
from .processes import GaussDigits, ProcessModel
from .rng import RngSeed
from .symbolic import ONE_SIDED, TWO_SIDED, Cylinder, DistanceParams, SymbolWindow

DEFAULT_CAP = 10**8
MIN_RECORDS = 30
MIN_RADII = 3
RESIDENT_LIMIT = 10**8

# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


def entropy_exact(model: ProcessModel) -> float:
    """Entropy rate in nats of an iid or Markov model."""
    if isinstance(model, GaussDigits):
        raise UnsupportedFeatureError(
            "no closed form for gauss-digits here; use entropy_smb or gauss.entropy_reference")
    return model.entropy()


@dataclass
class EntropyReport:
    radius: int
    divisor: str
    estimates: np.ndarray
    exact_h: Optional[float] = None
    seeds: List[dict] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.estimates))

    @property
    def stderr(self) -> float:
        n = self.estimates.size
        return float(np.std(self.estimates, ddof=1) / math.sqrt(n)) if n > 1 else math.nan

    def to_dict(self) -> dict:
        return {"radius": self.radius, "divisor": self.divisor, "exact_h": self.exact_h,
                "mean": self.mean, "stderr": self.stderr, "estimates": self.estimates.tolist(),
                "seeds": self.seeds}


def smb_estimate(model: ProcessModel, target: SymbolWindow, radius: int) -> float:
    """-(1/|divisor|) ln P(C_r(target)); the divisor is 2r two-sided and r one-sided."""
    if radius < 1:
        raise ValidationError("radius must be positive")
    logp = model.log_cylinder_probability(Cylinder.around(target, radius))
    if not math.isfinite(logp):
        raise AssertionError("sampled target has a zero-probability cylinder")
    div = radius if target.sidedness == ONE_SIDED else 2 * radius
    return -logp / div


def entropy_smb(model: ProcessModel, radius: int, seeds: int, base_seed: int = 0,
                sidedness: Optional[str] = None) -> EntropyReport:
    """SMB estimates at one radius over ``seeds`` independently sampled targets."""
    side = sidedness or (ONE_SIDED if model.one_sided_only else TWO_SIDED)
    lo = 0 if side == ONE_SIDED else -radius
    est = np.empty(seeds)
    used = []
    for s in range(seeds):
        rs = RngSeed(base_seed, s)
        target = model.sample(lo, radius, rs, sidedness=side)
        est[s] = smb_estimate(model, target, radius)
        used.append(rs.as_dict())
    try:
        exact = entropy_exact(model)
    except UnsupportedFeatureError:
        exact = None
    return EntropyReport(radius, "r" if side == ONE_SIDED else "2r", est, exact, used)


def gauss_entropy_reference() -> float:
    return gauss.entropy_reference()


# ---------------------------------------------------------------------------
# M_N
# ---------------------------------------------------------------------------


def _source(obj):
    if isinstance(obj, SymbolWindow):
        return obj.source(), obj
    return obj, None


@dataclass
class MaxLogTrace:
    checkpoints: np.ndarray
    values: np.ndarray
    gamma: float
    radii: np.ndarray = field(repr=False)

    @property
    def final(self) -> float:
        return float(self.values[-1])

    def normalized(self) -> np.ndarray:
        """M_N / ln N (NaN at N = 1)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.checkpoints > 1, self.values / np.log(self.checkpoints), np.nan)


def min_radii(source, targets: Sequence[SymbolWindow], family: IndexFamily, N: int) -> np.ndarray:
    """Per n <= N, min over i of the disagreement radius of T^{q_i(n)} w against target i."""
    targets = list(targets)
    if len(targets) != family.ell:
        raise ValidationError(f"need {family.ell} targets, got {len(targets)}")
    side = targets[0].sidedness
    if any(t.sidedness != side for t in targets):
        raise ValidationError("targets must share sidedness")
    two_sided = side == TWO_SIDED
    reach = min(t.hi for t in targets)
    if two_sided:
        reach = min(reach, min(-t.lo for t in targets))
    if reach < 0:
        raise ValidationError("targets must contain coordinate 0")
    start = -reach if two_sided else 0
    tmat = np.stack([t.block(start, reach) for t in targets]).astype(np.int64)
    center = reach if two_sided else 0
    src, window = _source(source)
    if window is not None and window.sidedness != side:
        raise ValidationError("window and targets must share sidedness")
    qv = family.values(np.arange(1, N + 1))
    mode, omega, w_lo, w_hi, key, cdf, p = src
    radii, err, n_err, i_err = kernels.min_radius_scan(
        mode, omega, w_lo, w_hi, key, cdf, p, qv, tmat, center, reach, two_sided)
    if err == kernels.ERR_UNRESOLVED:
        raise ResolutionError(
            f"n={int(n_err) + 1}, i={int(i_err) + 1}: shifted sequence agrees with its target "
            f"up to radius {reach}; the log-distance is unresolved")
    if err == kernels.ERR_WINDOW:
        raise CoordinateRangeError(
            f"n={int(n_err) + 1}, i={int(i_err) + 1}: comparison runs past the window edge",
            missing=(int(n_err) + 1, int(i_err) + 1))
    return radii


def max_log_distance(source, targets: Sequence[SymbolWindow], family: IndexFamily, N: int,
                     params: DistanceParams = DistanceParams(),
                     points: Optional[np.ndarray] = None) -> MaxLogTrace:
    """Running maximum over n <= N of min_i gamma * radius(T^{q_i(n)} w, target_i)."""
    radii = min_radii(source, targets, family, N)
    running = np.maximum.accumulate(params.gamma * radii)
    pts = checkpoints(N) if points is None else np.asarray(points, dtype=np.int64)
    return MaxLogTrace(pts, running[pts - 1], params.gamma, radii)


# ---------------------------------------------------------------------------
# hitting times
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HittingTimeRecord:
    n: int
    tau: Optional[int]
    cap: int
    seed: Optional[int] = None
    stream: Optional[int] = None

    def __post_init__(self):
        if self.tau is not None and not 1 <= self.tau <= self.cap:
            raise ValidationError(f"tau={self.tau} outside [1, cap={self.cap}]")

    @property
    def censored(self) -> bool:
        return self.tau is None

    def as_row(self) -> dict:
        return {"n": self.n, "tau": "" if self.tau is None else self.tau,
                "censored": int(self.censored), "cap": self.cap, "seed": self.seed, "stream": self.stream}


def hitting_time(source, target: SymbolWindow, family: IndexFamily, radius: int,
                 cap: int = DEFAULT_CAP, seed: Optional[RngSeed] = None) -> HittingTimeRecord:
    """First k in 1..cap with T^{q_i(k)} w in C_radius(target) for every i; censored past cap."""
    if radius < 0:
        raise ValidationError("radius must be nonnegative")
    if cap < 1:
        raise ValidationError("cap must be positive")
    lo = 0 if target.sidedness == ONE_SIDED else -radius
    target.require(lo, radius)
    tpat = target.block(lo, radius).astype(np.int64)
    src, window = _source(source)
    coefs, degs = family.coefficient_array()
    if family.max_value_bound(cap) + radius >= 2**62:
        raise ResourceError("index values at the cap overflow 64-bit coordinates")
    mode, omega, w_lo, w_hi, key, cdf, p = src
    tau, err, k_err = kernels.hitting_scan(mode, omega, w_lo, w_hi, key, cdf, p, coefs, degs,
                                           tpat, lo, lo, radius, cap)
    if err == kernels.ERR_WINDOW:
        raise ResolutionError(
            f"window [{window.lo}, {window.hi}] ends before k={int(k_err)}; "
            f"cover up to max_i q_i(cap) + {radius}")
    return HittingTimeRecord(radius, None if tau < 0 else int(tau), int(cap),
                             None if seed is None else seed.seed, None if seed is None else seed.stream)


def hitting_pair(model: ProcessModel, family: IndexFamily, max_radius: int, cap: int, seed: RngSeed,
                 sidedness: Optional[str] = None, resident_limit: int = RESIDENT_LIMIT):
    """(source, target) for one replicate: w on substream 0, the target on substream 1."""
    side = sidedness or (ONE_SIDED if model.one_sided_only else TWO_SIDED)
    t_lo = 0 if side == ONE_SIDED else -max_radius
    target = model.sample(t_lo, max_radius, seed, substream=1, sidedness=side)
    if model.is_iid:
        return model.source(seed, 0), target
    hi = family.max_value_bound(cap) + max_radius
    lo = 0 if side == ONE_SIDED else -max_radius
    if hi - lo + 1 > resident_limit:
        raise ResourceError(f"window of {hi - lo + 1} symbols exceeds resident limit {resident_limit}")
    return model.sample(lo, hi, seed, substream=0, sidedness=side), target


def simulate_hitting(model: ProcessModel, family: IndexFamily, radii: Sequence[int], pairs: int,
                     base_seed: int = 0, cap: int = DEFAULT_CAP, sidedness: Optional[str] = None,
                     streams: Optional[Sequence[int]] = None) -> List[HittingTimeRecord]:
    """Hitting records for every radius on each replicate pair; one pair serves all radii."""
    radii = [int(r) for r in radii]
    out = []
    for s in (range(pairs) if streams is None else streams):
        rs = RngSeed(base_seed, s)
        src, target = hitting_pair(model, family, max(radii), cap, rs, sidedness)
        for r in radii:
            out.append(hitting_time(src, target, family, r, cap, rs))
    return out


@dataclass
class ExponentFit:
    slope: float
    stderr: float
    intercept: float
    radii: List[int]
    means: List[float]
    counts: List[int]
    censored: dict
    excluded: List[int]
    target: Optional[float] = None

    def to_dict(self) -> dict:
        return {"slope": self.slope, "stderr": self.stderr, "intercept": self.intercept,
                "target": self.target, "radii": self.radii, "mean_log_tau": self.means,
                "uncensored": self.counts, "censored": self.censored, "excluded_radii": self.excluded}


def exponent_fit(records: Sequence[HittingTimeRecord], min_records: int = MIN_RECORDS,
                 target: Optional[float] = None) -> ExponentFit:
    """Least-squares slope of the mean of ln tau against the radius n."""
    by_radius = {}
    censored = {}
    for rec in records:
        by_radius.setdefault(rec.n, [])
        censored.setdefault(rec.n, 0)
        if rec.censored:
            censored[rec.n] += 1
        else:
            by_radius[rec.n].append(math.log(rec.tau))
    usable = sorted(n for n, v in by_radius.items() if len(v) >= min_records)
    excluded = sorted(n for n in by_radius if n not in usable)
    if len(usable) < MIN_RADII:
        raise InsufficientDataError(
            f"{len(usable)} radii have >= {min_records} uncensored records; need {MIN_RADII}")
    x = np.array(usable, dtype=float)
    y = np.array([np.mean(by_radius[n]) for n in usable])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    dof = len(x) - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else math.nan
    return ExponentFit(float(slope), stderr, float(intercept), usable, y.tolist(),
                       [len(by_radius[n]) for n in usable], {str(k): v for k, v in sorted(censored.items())},
                       excluded, target)


def hitting_exponent(model: ProcessModel, family: IndexFamily, one_sided: bool = False) -> float:
    """The limit of (1/n) ln tau: 2 l h, or l h for one-sided sequences."""
    return (1 if one_sided else 2) * family.ell * entropy_exact(model)

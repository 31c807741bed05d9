"""Nonconventional sums S_N and E_N, their diagnostics, and cylinder schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from .errors import ResolutionError, ResourceError, ValidationError
from .index import IndexFamily
from .processes import ProcessModel
from .rng import RngSeed
from .symbolic import ONE_SIDED, TWO_SIDED, Cylinder, SymbolWindow

SYMBOL_BUDGET = 10**9
RESIDENT_LIMIT = 10**8
PAIR_LIMIT = 2000
CHECKPOINT_RATIO = 1.2
DEFAULT_EPSILON = 0.5
DEFAULT_ENVELOPE_C = 20.0


def checkpoints(N: int, ratio: float = CHECKPOINT_RATIO) -> np.ndarray:
    """Geometric checkpoints ceil(ratio**j) up to N, always ending at N."""
    pts = set()
    j = 0
    while True:
        v = math.ceil(ratio**j)
        if v > N:
            break
        pts.add(v)
        j += 1
    pts.add(N)
    return np.array(sorted(pts), dtype=np.int64)


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------


class CylinderSchedule:
    """Per-n families C_n^(1..ell), all defined on one interval Lambda_n.

    Three generators: a fixed cylinder tuple used for every n; a radius
    schedule r_n = floor(beta ln n) of cylinders around target sequences; an
    explicit map n -> cylinders.
    """

    FIXED = "fixed-cylinder"
    RADIUS = "radius-schedule"
    EXPLICIT = "explicit-list"

    def __init__(self, kind, ell, *, cylinders=None, beta=None, targets=None, entries=None,
                 sidedness=TWO_SIDED):
        self.kind = kind
        self.ell = int(ell)
        self.cylinders_fixed = cylinders
        self.beta = beta
        self.targets = targets
        self.entries = entries
        self.sidedness = sidedness

    @classmethod
    def fixed(cls, cylinders: Union[Cylinder, Sequence[Cylinder]], ell: Optional[int] = None) -> "CylinderSchedule":
        if isinstance(cylinders, Cylinder):
            cylinders = [cylinders] * (ell or 1)
        cylinders = list(cylinders)
        ell = len(cylinders) if ell is None else ell
        if not cylinders or len(cylinders) != ell:
            raise ValidationError(f"need {ell} cylinders, got {len(cylinders)}")
        _same_interval(cylinders)
        return cls(cls.FIXED, ell, cylinders=cylinders)

    @classmethod
    def radius_schedule(cls, beta: float, targets: Sequence[SymbolWindow]) -> "CylinderSchedule":
        targets = list(targets)
        if not targets:
            raise ValidationError("a radius schedule needs target sequences")
        if not beta > 0:
            raise ValidationError("beta must be positive")
        side = targets[0].sidedness
        if any(t.sidedness != side for t in targets):
            raise ValidationError("targets must share sidedness")
        return cls(cls.RADIUS, len(targets), beta=float(beta), targets=targets, sidedness=side)

    @classmethod
    def explicit(cls, entries: Dict[int, Sequence[Cylinder]]) -> "CylinderSchedule":
        if not entries:
            raise ValidationError("empty explicit schedule")
        entries = {int(n): list(c) for n, c in entries.items()}
        ells = {len(c) for c in entries.values()}
        if len(ells) != 1:
            raise ValidationError("every n needs the same number of cylinders")
        for n, cyls in entries.items():
            _same_interval(cyls, n)
        return cls(cls.EXPLICIT, ells.pop(), entries=entries)

    def radius(self, n: int) -> int:
        return int(math.floor(self.beta * math.log(n)))

    def radii(self, N: int) -> np.ndarray:
        x = self.beta * np.log(np.arange(1, N + 1, dtype=np.float64))
        r = np.floor(x).astype(np.int64)
        # numpy's log may differ from math.log in the last ulp; redo the near-integer cases
        for i in np.flatnonzero(np.abs(x - np.rint(x)) < 1e-9):
            r[i] = self.radius(int(i) + 1)
        return r

    def interval(self, n: int) -> Tuple[int, int]:
        if self.kind == self.FIXED:
            return self.cylinders_fixed[0].interval
        if self.kind == self.RADIUS:
            r = self.radius(n)
            return (0 if self.sidedness == ONE_SIDED else -r, r)
        return self._entry(n)[0].interval

    def cylinders(self, n: int) -> List[Cylinder]:
        if self.kind == self.FIXED:
            return list(self.cylinders_fixed)
        if self.kind == self.RADIUS:
            r = self.radius(n)
            return [Cylinder.around(t, r) for t in self.targets]
        return list(self._entry(n))

    def _entry(self, n):
        try:
            return self.entries[n]
        except KeyError:
            raise ValidationError(f"explicit schedule is not defined at n={n}") from None

    def intervals(self, N: int) -> Tuple[np.ndarray, np.ndarray]:
        if self.kind == self.FIXED:
            l, r = self.cylinders_fixed[0].interval
            return np.full(N, l, dtype=np.int64), np.full(N, r, dtype=np.int64)
        if self.kind == self.RADIUS:
            r = self.radii(N)
            lo = np.zeros(N, dtype=np.int64) if self.sidedness == ONE_SIDED else -r
            return lo, r
        iv = [self._entry(n)[0].interval for n in range(1, N + 1)]
        return (np.array([a for a, _ in iv], dtype=np.int64), np.array([b for _, b in iv], dtype=np.int64))

    def layout(self, N: int):
        """Kernel layout (lo, hi, pat, base) for n = 1..N.

        The constraint of C_n^(i) at coordinate j is ``pat[i, base[n-1] + j - lo[n-1]]``.
        """
        lo, hi = self.intervals(N)
        if self.kind == self.FIXED:
            pat = np.stack([c.constraints for c in self.cylinders_fixed]).astype(np.int64)
            return lo, hi, pat, np.zeros(N, dtype=np.int64)
        if self.kind == self.RADIUS:
            reach = min(t.hi for t in self.targets)
            if self.sidedness == TWO_SIDED:
                reach = min(reach, min(-t.lo for t in self.targets))
            need = int(hi.max()) if N else 0
            if need > reach:
                raise ResolutionError(f"targets reach radius {reach}, schedule needs {need}")
            start = 0 if self.sidedness == ONE_SIDED else -reach
            pat = np.stack([t.block(start, reach) for t in self.targets]).astype(np.int64)
            return lo, hi, pat, lo - start
        rows = [[] for _ in range(self.ell)]
        base = np.empty(N, dtype=np.int64)
        offset = 0
        for n in range(1, N + 1):
            cyls = self._entry(n)
            base[n - 1] = offset
            for i, c in enumerate(cyls):
                rows[i].append(c.constraints)
            offset += len(cyls[0])
        pat = np.stack([np.concatenate(r) for r in rows]).astype(np.int64)
        return lo, hi, pat, base

    def to_dict(self) -> dict:
        if self.kind == self.FIXED:
            c = self.cylinders_fixed
            return {"kind": "fixed", "interval": list(c[0].interval),
                    "constraints": [x.constraints.tolist() for x in c]}
        if self.kind == self.RADIUS:
            return {"kind": "radius", "beta": self.beta, "sidedness": self.sidedness}
        return {"kind": "explicit", "entries": {
            str(n): {"interval": list(c[0].interval), "constraints": [x.constraints.tolist() for x in c]}
            for n, c in sorted(self.entries.items())}}


def _same_interval(cyls, n=None):
    ivs = {c.interval for c in cyls}
    if len(ivs) != 1:
        where = f" at n={n}" if n is not None else ""
        raise ValidationError(f"all cylinders of one n must share their interval{where}")


# ---------------------------------------------------------------------------
# E_N
# ---------------------------------------------------------------------------


def expected_terms(model: ProcessModel, schedule: CylinderSchedule, N: int) -> np.ndarray:
    """prod_i P(C_n^(i)) for n = 1..N."""
    if schedule.kind == CylinderSchedule.FIXED:
        val = 1.0
        for c in schedule.cylinders_fixed:
            val *= model.cylinder_probability(c)
        return np.full(N, val)
    if schedule.kind == CylinderSchedule.RADIUS:
        radii = schedule.radii(N)
        by_radius = {}
        for r in np.unique(radii).tolist():
            val = 1.0
            for t in schedule.targets:
                val *= model.cylinder_probability(Cylinder.around(t, r))
            by_radius[r] = val
        return np.array([by_radius[r] for r in radii.tolist()])
    out = np.empty(N)
    for n in range(1, N + 1):
        val = 1.0
        for c in schedule.cylinders(n):
            val *= model.cylinder_probability(c)
        out[n - 1] = val
    return out


def expected_sum_shift(model: ProcessModel, schedule: CylinderSchedule, N: int) -> float:
    """E_N = sum_{n<=N} prod_i P(C_n^(i))."""
    return float(np.cumsum(expected_terms(model, schedule, N))[-1])


# ---------------------------------------------------------------------------
# S_N, shift setup
# ---------------------------------------------------------------------------


def _source(src):
    if isinstance(src, SymbolWindow):
        return src.source(), src
    return src, None


def required_range(schedule: CylinderSchedule, family: IndexFamily, N: int) -> Tuple[int, int]:
    """Coordinates touched by S_N: [min_n,i q_i(n) + l_n, max_n,i q_i(n) + r_n]."""
    lo, hi = schedule.intervals(N)
    qv = family.values(np.arange(1, N + 1))
    return int((qv + lo[None, :]).min()), int((qv + hi[None, :]).max())


@dataclass
class SumTrace:
    total: int
    checkpoints: np.ndarray
    values: np.ndarray
    hits: np.ndarray = field(repr=False)


def shift_hits(source, schedule: CylinderSchedule, family: IndexFamily, N: int,
               budget: int = SYMBOL_BUDGET) -> np.ndarray:
    """Boolean array: whether T^{q_i(n)} w lies in C_n^(i) for every i, n = 1..N."""
    if family.ell != schedule.ell:
        raise ValidationError(f"family has {family.ell} functions, schedule {schedule.ell} cylinders")
    src, window = _source(source)
    lo, hi, pat, base = schedule.layout(N)
    symbols = int((hi - lo + 1).sum()) * family.ell
    if symbols > budget:
        raise ResourceError(f"run touches {symbols} symbols, budget is {budget}")
    qv = family.values(np.arange(1, N + 1))
    if window is not None:
        need_lo = int((qv + lo[None, :]).min())
        need_hi = int((qv + hi[None, :]).max())
        if not window.covers(need_lo, need_hi):
            raise ResolutionError(
                f"window [{window.lo}, {window.hi}] too small; S_N needs [{need_lo}, {need_hi}]")
    mode, omega, w_lo, _w_hi, key, cdf, p = src
    return kernels.shift_hits(mode, omega, w_lo, key, cdf, p, qv, lo, hi, pat, base)


def nonconventional_sum_shift(source, schedule: CylinderSchedule, family: IndexFamily, N: int,
                              points: Optional[np.ndarray] = None) -> SumTrace:
    """S_N = #{n <= N : T^{q_i(n)} w in C_n^(i) for all i}, with the checkpoint trace.

    ``source`` is a SymbolWindow or the counter source of an iid model.
    """
    hits = shift_hits(source, schedule, family, N)
    cum = np.cumsum(hits, dtype=np.int64)
    pts = checkpoints(N) if points is None else np.asarray(points, dtype=np.int64)
    return SumTrace(int(cum[-1]), pts, cum[pts - 1], hits)


def trajectory_source(model: ProcessModel, schedule: CylinderSchedule, family: IndexFamily, N: int,
                      seed: RngSeed, substream: int = 0, resident_limit: int = RESIDENT_LIMIT):
    """Counter source for iid models, otherwise a materialized window of the needed range."""
    if model.is_iid:
        return model.source(seed, substream)
    lo, hi = required_range(schedule, family, N)
    side = ONE_SIDED if model.one_sided_only else TWO_SIDED
    lo = 0 if side == ONE_SIDED else min(lo, 0)
    hi = max(hi, 0)
    if lo < 0 and side == ONE_SIDED:
        raise ResolutionError("one-sided model cannot supply negative coordinates")
    if hi - lo + 1 > resident_limit:
        raise ResourceError(f"window of {hi - lo + 1} symbols exceeds resident limit {resident_limit}")
    return model.sample(lo, hi, seed, substream=substream, sidedness=side)


# ---------------------------------------------------------------------------
# S_N, events setup
# ---------------------------------------------------------------------------


def cylinder_events(source, cyl: Cylinder) -> Callable[[np.ndarray], np.ndarray]:
    """Indicator of Gamma_j = T^{-j} C as a function of an index array j."""
    src, window = _source(source)

    def indicator(js):
        js = np.asarray(js, dtype=np.int64)
        if window is not None and js.size:
            window.require(int(js.min()) + cyl.lo, int(js.max()) + cyl.hi)
        ok = np.ones(js.size, dtype=bool)
        for t, a in enumerate(cyl.constraints.tolist()):
            ok &= kernels.fetch(src, js + cyl.lo + t) == a
        return ok

    return indicator


def nonconventional_sum_events(indicators, family: IndexFamily, N: int,
                               points: Optional[np.ndarray] = None) -> SumTrace:
    """S_N = sum_{n<=N} prod_i 1(Gamma_{q_i(n)}).

    ``indicators`` is a boolean array indexed by event number, or a callable
    mapping an index array to booleans.
    """
    qv = family.values(np.arange(1, N + 1))
    if callable(indicators):
        vals = [np.asarray(indicators(qv[i]), dtype=bool) for i in range(family.ell)]
    else:
        ind = np.asarray(indicators, dtype=bool)
        top = int(qv.max())
        if top >= ind.size:
            from .errors import CoordinateRangeError

            raise CoordinateRangeError(f"indicator for event {top} missing (have 0..{ind.size - 1})",
                                       missing=(ind.size, top))
        vals = [ind[qv[i]] for i in range(family.ell)]
    hits = np.logical_and.reduce(vals)
    cum = np.cumsum(hits, dtype=np.int64)
    pts = checkpoints(N) if points is None else np.asarray(points, dtype=np.int64)
    return SumTrace(int(cum[-1]), pts, cum[pts - 1], hits)


def expected_sum_events(probabilities, family: IndexFamily, N: int) -> np.ndarray:
    """Cumulative E_N = sum_n prod_i P(Gamma_{q_i(n)}) for n = 1..N."""
    qv = family.values(np.arange(1, N + 1))
    if callable(probabilities):
        terms = np.prod([np.asarray(probabilities(qv[i]), dtype=float) for i in range(family.ell)], axis=0)
    else:
        pr = np.asarray(probabilities, dtype=float)
        terms = np.prod([pr[qv[i]] for i in range(family.ell)], axis=0)
    return np.cumsum(terms)


# ---------------------------------------------------------------------------
# convergence reports
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("N", "S_N", "E_N", "ratio", "gap", "envelope_ref", "seed", "stream")


def envelope_reference(E, epsilon: float = DEFAULT_EPSILON):
    """E^{1/2} (ln E)^{3/2 + epsilon}; NaN where ln E <= 1."""
    E = np.asarray(E, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ref = np.sqrt(E) * np.log(E) ** (1.5 + epsilon)
    return np.where(E > math.e, ref, np.nan)


@dataclass
class ConvergenceReport:
    N: np.ndarray
    S: np.ndarray
    E: np.ndarray
    epsilon: float = DEFAULT_EPSILON
    seed: Optional[int] = None
    stream: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.N = np.asarray(self.N, dtype=np.int64)
        self.S = np.asarray(self.S, dtype=np.int64)
        self.E = np.asarray(self.E, dtype=float)

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.E > 0, self.S / self.E, np.nan)

    @property
    def gap(self) -> np.ndarray:
        return np.abs(self.S - self.E)

    @property
    def envelope(self) -> np.ndarray:
        return envelope_reference(self.E, self.epsilon)

    @property
    def final_ratio(self) -> float:
        return float(self.ratio[-1])

    def rows(self):
        for n, s, e, r, g, env in zip(self.N.tolist(), self.S.tolist(), self.E.tolist(),
                                      self.ratio.tolist(), self.gap.tolist(), self.envelope.tolist()):
            yield {"N": n, "S_N": s, "E_N": e, "ratio": r, "gap": g, "envelope_ref": env,
                   "seed": self.seed, "stream": self.stream}


def convergence_report(model: ProcessModel, schedule: CylinderSchedule, family: IndexFamily, N: int,
                       source, epsilon: float = DEFAULT_EPSILON, seed: Optional[RngSeed] = None,
                       points: Optional[np.ndarray] = None) -> ConvergenceReport:
    trace = nonconventional_sum_shift(source, schedule, family, N, points)
    E = np.cumsum(expected_terms(model, schedule, N))[trace.checkpoints - 1]
    return ConvergenceReport(trace.checkpoints, trace.values, E, epsilon,
                             seed=None if seed is None else seed.seed,
                             stream=None if seed is None else seed.stream)


def envelope_check(report: ConvergenceReport, C: float = DEFAULT_ENVELOPE_C,
                   epsilon: Optional[float] = None) -> float:
    """Fraction of checkpoints (with E_N > e) where |S_N - E_N| > C E_N^{1/2} (ln E_N)^{3/2+eps}."""
    eps = report.epsilon if epsilon is None else epsilon
    env = envelope_reference(report.E, eps)
    ok = ~np.isnan(env)
    if not ok.any():
        return 0.0
    viol = report.gap[ok] > C * env[ok]
    return float(viol.mean())


# ---------------------------------------------------------------------------
# exact correlation diagnostics
# ---------------------------------------------------------------------------


def gamma_constraints(schedule: CylinderSchedule, family: IndexFamily, n: int):
    """Constraints of Gamma_n = intersection over i of T^{-q_i(n)} C_n^(i)."""
    out = []
    for i, cyl in enumerate(schedule.cylinders(n), start=1):
        q = family.evaluate(i, n)
        out.extend((q + c, a) for c, a in cyl.items())
    return out


def intersection_terms(model, schedule, family, N, start: int = 1) -> np.ndarray:
    """P(Gamma_n) for n = start..N, exact."""
    return np.array([model.joint_probability(gamma_constraints(schedule, family, n))
                     for n in range(start, N + 1)])


def expected_intersection_sum(model, schedule, family, N) -> float:
    """sum_{n<=N} P(Gamma_n): the exact mean of S_N."""
    return float(np.sum(intersection_terms(model, schedule, family, N)))


@dataclass
class PairCorrelation:
    lhs: float
    rhs: float

    @property
    def constant(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else math.inf


def pair_correlation_sum(model, schedule, family, M: int, N: int, limit: int = PAIR_LIMIT) -> PairCorrelation:
    """sum_{m,n=M..N} (P(G_m & G_n) - P(G_m)P(G_n)) against sum_{n=M..N} P(G_n)."""
    if not 1 <= M <= N:
        raise ValidationError("need 1 <= M <= N")
    if N - M + 1 > limit:
        raise ResourceError(f"{N - M + 1} indices exceed the pair limit {limit}")
    cons = [gamma_constraints(schedule, family, n) for n in range(M, N + 1)]
    probs = np.array([model.joint_probability(c) for c in cons])
    lhs = float(np.sum(probs - probs**2))
    cross = 0.0
    for a in range(len(cons)):
        ca = cons[a]
        for b in range(a + 1, len(cons)):
            cross += model.joint_probability(ca + cons[b]) - probs[a] * probs[b]
    return PairCorrelation(float(lhs + 2.0 * cross), float(probs.sum()))


def intersection_vs_product_gap(model, schedule, family, N: int) -> np.ndarray:
    """Partial sums of |P(Gamma_n) - prod_i P(C_n^(i))| for n = 1..N."""
    if family.ell < 2:
        raise ValidationError("the gap is defined for ell >= 2")
    inter = intersection_terms(model, schedule, family, N)
    prod = expected_terms(model, schedule, N)
    return np.cumsum(np.abs(inter - prod))


# ---------------------------------------------------------------------------
# nesting
# ---------------------------------------------------------------------------

RIGHT_NESTED = "right-D-nested"
NESTED = "D-nested"


@dataclass(frozen=True)
class NestingVerdict:
    mode: str
    D: int
    holds: bool
    witness: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise ValidationError("a failed nesting verdict carries a witness")


def verify_nesting(schedule: CylinderSchedule, mode: str, D: int, N: int) -> NestingVerdict:
    """Check Lambda_m nested in Lambda_n (slack D) for every m < n <= N.

    Right-nested: r_m < r_n + D. Nested: also l_m > l_n - D. Prefix extremes
    make the all-pairs check linear; the witness is the violating pair with
    the smallest n, m the earliest index attaining the prefix extreme.
    """
    if mode not in (RIGHT_NESTED, NESTED):
        raise ValidationError(f"unknown nesting mode {mode!r}")
    if D <= 0:
        raise ValidationError("D must be positive")
    lo, hi = schedule.intervals(N)
    run_hi = np.maximum.accumulate(hi)
    arg_hi = _prefix_arg(hi, np.greater)
    run_lo = np.minimum.accumulate(lo)
    arg_lo = _prefix_arg(lo, np.less)
    for k in range(1, N):
        if run_hi[k - 1] >= hi[k] + D:
            return NestingVerdict(mode, D, False, (int(arg_hi[k - 1]) + 1, k + 1))
        if mode == NESTED and run_lo[k - 1] <= lo[k] - D:
            return NestingVerdict(mode, D, False, (int(arg_lo[k - 1]) + 1, k + 1))
    return NestingVerdict(mode, D, True)


def _prefix_arg(values, better):
    arg = np.zeros(values.size, dtype=np.int64)
    best = 0
    for k in range(values.size):
        if better(values[k], values[best]):
            best = k
        arg[k] = best
    return arg

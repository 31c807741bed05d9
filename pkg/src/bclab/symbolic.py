"""Alphabets, symbol windows, cylinders and the logarithmic distance."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import CoordinateRangeError, ResolutionError, ValidationError

TWO_SIDED = "two-sided"
ONE_SIDED = "one-sided"
SIDEDNESS = (TWO_SIDED, ONE_SIDED)


@dataclass(frozen=True)
class Alphabet:
    """Finite alphabet ``0..size-1``, or the countable alphabet of all nonnegative integers."""

    size: Optional[int] = None

    def __post_init__(self):
        if self.size is not None and self.size < 2:
            raise ValidationError("a finite alphabet needs at least two symbols")

    @property
    def finite(self) -> bool:
        return self.size is not None

    def validate(self, symbols) -> None:
        arr = np.asarray(symbols)
        if arr.size == 0:
            return
        if arr.min() < 0 or (self.size is not None and arr.max() >= self.size):
            bad = arr[(arr < 0) | ((arr >= self.size) if self.size is not None else False)]
            raise ValidationError(f"symbol {bad.flat[0]} is not in {self}")

    def __str__(self):
        return f"{{0..{self.size - 1}}}" if self.finite else "{0,1,2,...}"


def _check_side(sidedness):
    if sidedness not in SIDEDNESS:
        raise ValidationError(f"sidedness must be one of {SIDEDNESS}, got {sidedness!r}")


@dataclass(frozen=True, eq=False)
class SymbolWindow:
    """Symbols of a sequence on the integer interval ``[lo, hi]``.

    One-sided windows live on nonnegative coordinates. The symbol array is
    stored read-only.
    """

    symbols: np.ndarray
    lo: int = 0
    sidedness: str = TWO_SIDED

    def __post_init__(self):
        _check_side(self.sidedness)
        arr = np.array(self.symbols, dtype=np.int64).reshape(-1)
        if arr.size == 0:
            raise ValidationError("a window holds at least one coordinate")
        if arr.min() < 0:
            raise ValidationError("symbols are nonnegative integers")
        if self.sidedness == ONE_SIDED and self.lo < 0:
            raise ValidationError("one-sided windows cannot hold negative coordinates")
        arr.setflags(write=False)
        object.__setattr__(self, "symbols", arr)
        object.__setattr__(self, "lo", int(self.lo))

    @property
    def hi(self) -> int:
        return self.lo + self.symbols.size - 1

    @property
    def range(self):
        return (self.lo, self.hi)

    def __len__(self):
        return self.symbols.size

    def covers(self, lo: int, hi: int) -> bool:
        return self.lo <= lo and hi <= self.hi

    def require(self, lo: int, hi: int) -> None:
        if not self.covers(lo, hi):
            raise CoordinateRangeError(
                f"window [{self.lo}, {self.hi}] does not cover [{lo}, {hi}]", missing=(lo, hi)
            )

    def __getitem__(self, coord: int) -> int:
        self.require(coord, coord)
        return int(self.symbols[coord - self.lo])

    def block(self, lo: int, hi: int) -> np.ndarray:
        """Symbols on ``[lo, hi]`` as a read-only view."""
        self.require(lo, hi)
        return self.symbols[lo - self.lo: hi - self.lo + 1]

    def shifted(self, t: int) -> "SymbolWindow":
        """The window of ``T^t`` applied to this sequence: new coordinate i is old i + t."""
        if t < 0:
            raise ValidationError("shift powers are nonnegative")
        lo = self.lo - t
        arr = self.symbols
        if self.sidedness == ONE_SIDED and lo < 0:
            if -lo >= arr.size:
                raise CoordinateRangeError("shift leaves no coordinates in a one-sided window")
            arr = arr[-lo:]
            lo = 0
        return SymbolWindow(arr, lo, self.sidedness)

    def source(self):
        """Kernel source tuple reading this window."""
        return (kernels.MODE_WINDOW, self.symbols, self.lo, self.hi, np.uint64(0), _EMPTY_CDF, 0.0)

    def __eq__(self, other):
        if not isinstance(other, SymbolWindow):
            return NotImplemented
        return (self.lo == other.lo and self.sidedness == other.sidedness
                and np.array_equal(self.symbols, other.symbols))

    def __repr__(self):
        return f"SymbolWindow([{self.lo}, {self.hi}], {self.sidedness}, {self.symbols.size} symbols)"


_EMPTY_CDF = np.ones(1)


@dataclass(frozen=True, eq=False)
class Cylinder:
    """Sequences with prescribed symbols ``constraints`` on ``[lo, hi]``."""

    lo: int
    constraints: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.constraints, dtype=np.int64).reshape(-1)
        if arr.size == 0:
            raise ValidationError("a cylinder constrains at least one coordinate")
        if arr.min() < 0:
            raise ValidationError("cylinder symbols are nonnegative integers")
        arr.setflags(write=False)
        object.__setattr__(self, "constraints", arr)
        object.__setattr__(self, "lo", int(self.lo))

    @classmethod
    def on(cls, lo: int, hi: int, constraints: Sequence[int]) -> "Cylinder":
        if len(constraints) != hi - lo + 1:
            raise ValidationError(
                f"interval [{lo}, {hi}] needs {hi - lo + 1} constraints, got {len(constraints)}"
            )
        return cls(lo, constraints)

    @classmethod
    def around(cls, window: SymbolWindow, radius: int) -> "Cylinder":
        """The radius-``radius`` cylinder of ``window``'s sequence (|j| <= radius, or 0..radius one-sided)."""
        lo = 0 if window.sidedness == ONE_SIDED else -radius
        return cls(lo, window.block(lo, radius))

    @property
    def hi(self) -> int:
        return self.lo + self.constraints.size - 1

    @property
    def interval(self):
        return (self.lo, self.hi)

    def items(self):
        return [(self.lo + t, int(a)) for t, a in enumerate(self.constraints)]

    def __len__(self):
        return self.constraints.size

    def __eq__(self, other):
        if not isinstance(other, Cylinder):
            return NotImplemented
        return self.lo == other.lo and np.array_equal(self.constraints, other.constraints)

    def __hash__(self):
        return hash((self.lo, self.constraints.tobytes()))

    def __repr__(self):
        return f"Cylinder([{self.lo}, {self.hi}], {self.constraints.tolist()})"


@dataclass(frozen=True)
class DistanceParams:
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValidationError("gamma must be positive")


def cylinder_contains(window: SymbolWindow, cyl: Cylinder, shift_power: int = 0) -> bool:
    """Whether ``T^shift_power`` of the windowed sequence lies in ``cyl``."""
    if shift_power < 0:
        raise ValidationError("shift powers are nonnegative")
    block = window.block(cyl.lo + shift_power, cyl.hi + shift_power)
    return bool(np.array_equal(block, cyl.constraints))


def disagreement_radius(w1: SymbolWindow, w2: SymbolWindow) -> Optional[int]:
    """Smallest i >= 0 with a disagreement at i or -i; ``None`` when unresolved.

    For one-sided windows only coordinates i >= 0 are compared. ``None``
    ("exhausted") means the windows agree as far as both reach, so the true
    radius (possibly infinite) is beyond the available data.
    """
    if w1.sidedness != w2.sidedness:
        raise ValidationError("windows must share sidedness")
    lo, hi = max(w1.lo, w2.lo), min(w1.hi, w2.hi)
    if lo > hi or not (lo <= 0 <= hi):
        raise ValidationError(f"windows share no range around coordinate 0 ([{lo}, {hi}])")
    a = w1.block(lo, hi)
    b = w2.block(lo, hi)
    diff = a != b
    pos = diff[-lo:]
    first_pos = int(np.argmax(pos)) if pos.any() else None
    first_neg = None
    if w1.sidedness == TWO_SIDED:
        neg = diff[: -lo + 1][::-1]
        first_neg = int(np.argmax(neg)) if neg.any() else None
        reach = min(hi, -lo)
    else:
        reach = hi
    cands = [c for c in (first_pos, first_neg) if c is not None]
    if not cands:
        return None
    m = min(cands)
    if m > reach:
        # a disagreement on the longer side only: the shorter side is unknown
        # at radii reach+1..m-1, so any of them could be the true answer.
        return None if m > reach + 1 else m
    return m


def log_distance_phi(w1: SymbolWindow, w2: SymbolWindow, params: DistanceParams = DistanceParams()) -> float:
    """``-ln d(w1, w2) = gamma * disagreement radius``."""
    m = disagreement_radius(w1, w2)
    if m is None:
        raise ResolutionError("windows agree on their whole common range; supply wider windows")
    return params.gamma * m


def distance(w1: SymbolWindow, w2: SymbolWindow, params: DistanceParams = DistanceParams()) -> float:
    return float(np.exp(-log_distance_phi(w1, w2, params)))

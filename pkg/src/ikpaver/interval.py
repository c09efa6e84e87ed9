"""Closed real intervals and axis-aligned interval boxes.

Bounds are rounded outward with the error-free helpers in ``_rounding`` so
that ``op([x], [y])`` always contains ``op(x, y)`` for every ``x in [x]``,
``y in [y]``.  Instances are immutable.
"""
from __future__ import annotations

import enum
import math
from typing import Iterable, Sequence

import numpy as np

from . import _rounding as rnd

__all__ = [
    "Interval",
    "IntervalBox",
    "BisectionRule",
    "UnsplittableBoxError",
    "interval_add",
    "interval_sub",
    "interval_mul",
    "interval_div",
    "interval_sqr",
    "interval_sqrt",
    "interval_sin",
    "interval_cos",
    "interval_atan2",
    "atan2_arc",
    "box_width",
    "box_bisect",
    "box_inflate",
    "select_split_index",
]

PI_LO = math.pi
PI_HI = math.nextafter(math.pi, math.inf)
TWO_PI_LO = 2.0 * PI_LO
TWO_PI_HI = 2.0 * PI_HI
HALF_PI_LO = 0.5 * PI_LO
HALF_PI_HI = 0.5 * PI_HI


def _widen(lo: float, hi: float, ulps: int = 2) -> tuple[float, float]:
    for _ in range(ulps):
        lo = math.nextafter(lo, -math.inf)
        hi = math.nextafter(hi, math.inf)
    return lo, hi


class Interval:
    """A closed interval ``[lo, hi]``, or the empty set."""

    __slots__ = ("_lo", "_hi")

    def __init__(self, lo: float, hi: float | None = None):
        if hi is None:
            hi = lo
        lo = float(lo)
        hi = float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval bounds must not be NaN")
        if lo > hi and not (lo == math.inf and hi == -math.inf):
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    @classmethod
    def empty(cls) -> "Interval":
        return cls(math.inf, -math.inf)

    @classmethod
    def entire(cls) -> "Interval":
        return cls(-math.inf, math.inf)

    @property
    def lo(self) -> float:
        return self._lo

    @property
    def hi(self) -> float:
        return self._hi

    @property
    def is_empty(self) -> bool:
        return self._lo > self._hi

    @property
    def width(self) -> float:
        if self.is_empty:
            raise ValueError("width of an empty interval")
        return self._hi - self._lo

    @property
    def mid(self) -> float:
        if self.is_empty:
            raise ValueError("midpoint of an empty interval")
        if math.isinf(self._lo) or math.isinf(self._hi):
            if self._lo == -self._hi:
                return 0.0
            return self._lo if math.isinf(self._hi) else self._hi
        m = 0.5 * (self._lo + self._hi)
        return min(max(m, self._lo), self._hi)

    def contains(self, x: float) -> bool:
        return self._lo <= x <= self._hi

    def __contains__(self, x: float) -> bool:
        return self.contains(x)

    def is_subset(self, other: "Interval") -> bool:
        if self.is_empty:
            return True
        return other._lo <= self._lo and self._hi <= other._hi

    def intersect(self, other: "Interval") -> "Interval":
        lo = max(self._lo, other._lo)
        hi = min(self._hi, other._hi)
        if lo > hi:
            return Interval.empty()
        return Interval(lo, hi)

    def hull(self, other: "Interval") -> "Interval":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Interval(min(self._lo, other._lo), max(self._hi, other._hi))

    def inflate(self, delta: float) -> "Interval":
        if delta < 0:
            raise ValueError("inflation must be non-negative")
        if self.is_empty:
            return self
        return Interval(rnd.sub_down(self._lo, delta), rnd.add_up(self._hi, delta))

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        if self.is_empty and other.is_empty:
            return True
        return self._lo == other._lo and self._hi == other._hi

    def __hash__(self):
        return hash((self._lo, self._hi))

    def __repr__(self):
        if self.is_empty:
            return "Interval.empty()"
        return f"Interval({self._lo!r}, {self._hi!r})"

    def __iter__(self):
        yield self._lo
        yield self._hi

    def __neg__(self):
        if self.is_empty:
            return self
        return Interval(-self._hi, -self._lo)

    def __add__(self, other):
        return interval_add(self, _as_interval(other))

    __radd__ = __add__

    def __sub__(self, other):
        return interval_sub(self, _as_interval(other))

    def __rsub__(self, other):
        return interval_sub(_as_interval(other), self)

    def __mul__(self, other):
        return interval_mul(self, _as_interval(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return interval_div(self, _as_interval(other))

    def __rtruediv__(self, other):
        return interval_div(_as_interval(other), self)

    def sqr(self) -> "Interval":
        return interval_sqr(self)

    def sqrt(self) -> "Interval":
        return interval_sqrt(self)


def _as_interval(x) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval(x, x)


def interval_add(a: Interval, b: Interval) -> Interval:
    if a.is_empty or b.is_empty:
        return Interval.empty()
    return Interval(rnd.add_down(a.lo, b.lo), rnd.add_up(a.hi, b.hi))


def interval_sub(a: Interval, b: Interval) -> Interval:
    if a.is_empty or b.is_empty:
        return Interval.empty()
    return Interval(rnd.sub_down(a.lo, b.hi), rnd.sub_up(a.hi, b.lo))


def interval_mul(a: Interval, b: Interval) -> Interval:
    if a.is_empty or b.is_empty:
        return Interval.empty()
    pairs = ((a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi))
    lo = min(rnd.mul_down(x, y) for x, y in pairs)
    hi = max(rnd.mul_up(x, y) for x, y in pairs)
    return Interval(lo, hi)


def interval_div(a: Interval, b: Interval) -> Interval:
    """Quotient hull; a divisor containing zero yields the whole line."""
    if a.is_empty or b.is_empty:
        return Interval.empty()
    if b.lo <= 0.0 <= b.hi:
        if b.lo == 0.0 and b.hi == 0.0:
            return Interval.empty()
        return Interval.entire()
    pairs = ((a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi))
    lo = min(rnd.div_down(x, y) for x, y in pairs)
    hi = max(rnd.div_up(x, y) for x, y in pairs)
    return Interval(lo, hi)


def interval_sqr(a: Interval) -> Interval:
    if a.is_empty:
        return a
    if a.lo >= 0.0:
        return Interval(rnd.sqr_down(a.lo), rnd.sqr_up(a.hi))
    if a.hi <= 0.0:
        return Interval(rnd.sqr_down(a.hi), rnd.sqr_up(a.lo))
    return Interval(0.0, max(rnd.sqr_up(a.lo), rnd.sqr_up(a.hi)))


def interval_sqrt(a: Interval) -> Interval:
    """Square root of the non-negative part of ``a``."""
    if a.is_empty or a.hi < 0.0:
        return Interval.empty()
    return Interval(rnd.sqrt_down(max(a.lo, 0.0)), rnd.sqrt_up(a.hi))


def _may_contain_multiple(lo: float, hi: float, offset_lo: float, offset_hi: float, step_lo: float,
                          step_hi: float, parity: int | None) -> bool:
    # Does [lo, hi] possibly contain offset + k*step for an integer k (of given parity)?
    k_min = math.floor((lo - offset_hi) / step_lo) - 1
    k_max = math.ceil((hi - offset_lo) / step_lo) + 1
    for k in range(k_min, k_max + 1):
        if parity is not None and k % 2 != parity:
            continue
        if k >= 0:
            t_lo, t_hi = offset_lo + k * step_lo, offset_hi + k * step_hi
        else:
            t_lo, t_hi = offset_lo + k * step_hi, offset_hi + k * step_lo
        t_lo, t_hi = _widen(t_lo, t_hi, 4)
        if t_hi >= lo and t_lo <= hi:
            return True
    return False


def interval_cos(a: Interval) -> Interval:
    if a.is_empty:
        return a
    if math.isinf(a.lo) or math.isinf(a.hi) or a.hi - a.lo >= TWO_PI_LO:
        return Interval(-1.0, 1.0)
    c1, c2 = math.cos(a.lo), math.cos(a.hi)
    lo, hi = _widen(min(c1, c2), max(c1, c2))
    if _may_contain_multiple(a.lo, a.hi, 0.0, 0.0, PI_LO, PI_HI, 0):
        hi = 1.0
    if _may_contain_multiple(a.lo, a.hi, 0.0, 0.0, PI_LO, PI_HI, 1):
        lo = -1.0
    return Interval(max(lo, -1.0), min(hi, 1.0))


def interval_sin(a: Interval) -> Interval:
    if a.is_empty:
        return a
    if math.isinf(a.lo) or math.isinf(a.hi) or a.hi - a.lo >= TWO_PI_LO:
        return Interval(-1.0, 1.0)
    s1, s2 = math.sin(a.lo), math.sin(a.hi)
    lo, hi = _widen(min(s1, s2), max(s1, s2))
    # maxima at pi/2 + 2k*pi, minima at pi/2 + (2k+1)*pi
    if _may_contain_multiple(a.lo, a.hi, HALF_PI_LO, HALF_PI_HI, PI_LO, PI_HI, 0):
        hi = 1.0
    if _may_contain_multiple(a.lo, a.hi, HALF_PI_LO, HALF_PI_HI, PI_LO, PI_HI, 1):
        lo = -1.0
    return Interval(max(lo, -1.0), min(hi, 1.0))


def _corner_angles(y: Interval, x: Interval) -> list[float]:
    return [math.atan2(yy, xx) for yy in (y.lo, y.hi) for xx in (x.lo, x.hi)]


def interval_atan2(y: Interval, x: Interval) -> Interval:
    """Quadrant-aware enclosure of ``atan2(y, x)`` with values in ``[-pi, pi]``.

    Boxes that contain the origin, or that straddle the negative x axis, give
    the full range.
    """
    if y.is_empty or x.is_empty:
        return Interval.empty()
    if x.lo <= 0.0 <= x.hi and y.lo <= 0.0 <= y.hi:
        return Interval(-PI_HI, PI_HI)
    if x.lo < 0.0 and y.lo < 0.0 <= y.hi:
        return Interval(-PI_HI, PI_HI)
    angles = _corner_angles(y, x)
    lo, hi = _widen(min(angles), max(angles))
    return Interval(max(lo, -PI_HI), min(hi, PI_HI))


def atan2_arc(ylo: float, yhi: float, xlo: float, xhi: float) -> tuple[float, float]:
    """Angular arc ``[lo, hi]`` swept by the box ``[y] x [x]``.

    ``lo`` lies in ``(-pi, pi]`` and ``hi`` may exceed ``pi`` when the box
    straddles the negative x axis, so the arc is always contiguous and
    exactly as wide as the box's angular extent.  A box containing the
    origin gives the full circle ``(-pi, pi]``.
    """
    if xlo <= 0.0 <= xhi and ylo <= 0.0 <= yhi:
        return -PI_HI, PI_HI
    ref = math.atan2(0.5 * (ylo + yhi), 0.5 * (xlo + xhi))
    deltas = []
    for yy in (ylo, yhi):
        for xx in (xlo, xhi):
            d = math.atan2(yy, xx) - ref
            if d > math.pi:
                d -= 2.0 * math.pi
            elif d < -math.pi:
                d += 2.0 * math.pi
            deltas.append(d)
    lo, hi = _widen(ref + min(deltas), ref + max(deltas), 4)
    if lo <= -math.pi:
        lo += 2.0 * math.pi
        hi += 2.0 * math.pi
    elif lo > math.pi:
        lo -= 2.0 * math.pi
        hi -= 2.0 * math.pi
    return lo, hi


class BisectionRule(enum.Enum):
    ROUND_ROBIN = "rr"
    LARGEST_FIRST = "lf"


class UnsplittableBoxError(ValueError):
    pass


class IntervalBox:
    """An n-dimensional box stored as two read-only float arrays."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = np.array(lo, dtype=float)
        hi = lo.copy() if hi is None else np.array(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-D arrays of equal length")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("IntervalBox is immutable")

    @classmethod
    def from_intervals(cls, intervals: Iterable[Interval]) -> "IntervalBox":
        ivs = list(intervals)
        return cls([iv.lo for iv in ivs], [iv.hi for iv in ivs])

    @classmethod
    def empty(cls, n: int) -> "IntervalBox":
        return cls(np.full(n, math.inf), np.full(n, -math.inf))

    def __len__(self) -> int:
        return self.lo.shape[0]

    def __getitem__(self, i: int) -> Interval:
        if self.lo[i] > self.hi[i]:
            return Interval.empty()
        return Interval(self.lo[i], self.hi[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, IntervalBox):
            return NotImplemented
        if self.is_empty and other.is_empty:
            return len(self) == len(other)
        return np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))

    def __repr__(self):
        if self.is_empty:
            return f"IntervalBox.empty({len(self)})"
        parts = ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in zip(self.lo, self.hi))
        return f"IntervalBox({parts})"

    @property
    def is_empty(self) -> bool:
        return bool(np.any(self.lo > self.hi))

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    def width(self) -> float:
        return box_width(self)

    def mid(self) -> np.ndarray:
        return np.clip(0.5 * (self.lo + self.hi), self.lo, self.hi)

    def volume(self) -> float:
        if self.is_empty:
            return 0.0
        return float(np.prod(self.hi - self.lo))

    def contains(self, point, tol: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(self.lo - tol <= p) and np.all(p <= self.hi + tol))

    def is_subset(self, other: "IntervalBox", tol: float = 0.0) -> bool:
        if self.is_empty:
            return True
        return bool(np.all(other.lo - tol <= self.lo) and np.all(self.hi <= other.hi + tol))

    def intersects(self, other: "IntervalBox") -> bool:
        return bool(np.all(np.maximum(self.lo, other.lo) <= np.minimum(self.hi, other.hi)))

    def intersect(self, other: "IntervalBox") -> "IntervalBox":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            return IntervalBox.empty(len(self))
        return IntervalBox(lo, hi)

    def hull(self, other: "IntervalBox") -> "IntervalBox":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return IntervalBox(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def inflate(self, delta: float) -> "IntervalBox":
        return box_inflate(self, delta)

    def bisect(self, rule: BisectionRule = BisectionRule.LARGEST_FIRST, depth: int = 0,
               min_width: float = 0.0) -> tuple["IntervalBox", "IntervalBox"]:
        return box_bisect(self, rule, depth, min_width)


def box_width(b: IntervalBox) -> float:
    if b.is_empty:
        raise ValueError("width of an empty box is undefined")
    if len(b) == 0:
        return 0.0
    return float(np.max(b.hi - b.lo))


def select_split_index(widths: np.ndarray, rule: BisectionRule, depth: int = 0,
                       min_width: float = 0.0) -> int:
    """Index of the component to split.

    Round-Robin starts at ``depth mod n`` and moves cyclically to the first
    component at least ``min_width`` wide; Largest-First takes the widest
    component (lowest index on ties).
    """
    n = widths.shape[0]
    if n == 0 or not np.any(widths > 0.0):
        raise UnsplittableBoxError("unsplittable box: every component is degenerate")
    if rule is BisectionRule.LARGEST_FIRST:
        return int(np.argmax(widths))
    start = depth % n
    threshold = max(min_width, 0.0)
    for k in range(n):
        i = (start + k) % n
        if widths[i] > 0.0 and widths[i] >= threshold:
            return i
    return int(np.argmax(widths))


def box_bisect(b: IntervalBox, rule: BisectionRule = BisectionRule.LARGEST_FIRST, depth: int = 0,
               min_width: float = 0.0) -> tuple[IntervalBox, IntervalBox]:
    if b.is_empty:
        raise ValueError("cannot bisect an empty box")
    i = select_split_index(b.hi - b.lo, rule, depth, min_width)
    return split_at(b, i)


def split_at(b: IntervalBox, i: int, value: float | None = None) -> tuple[IntervalBox, IntervalBox]:
    lo, hi = b.lo, b.hi
    m = b[i].mid if value is None else value
    left_hi = hi.copy()
    left_hi[i] = m
    right_lo = lo.copy()
    right_lo[i] = m
    return IntervalBox(lo, left_hi), IntervalBox(right_lo, hi)


def box_inflate(b: IntervalBox, delta: float) -> IntervalBox:
    if delta < 0:
        raise ValueError("inflation must be non-negative")
    if b.is_empty or delta == 0:
        return b
    lo = np.array([rnd.sub_down(x, delta) for x in b.lo])
    hi = np.array([rnd.add_up(x, delta) for x in b.hi])
    return IntervalBox(lo, hi)


def box_from_pairs(pairs: Sequence[Sequence[float]]) -> IntervalBox:
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    return IntervalBox(arr[:, 0], arr[:, 1])

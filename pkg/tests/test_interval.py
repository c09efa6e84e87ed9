import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from ikpaver.interval import (
    BisectionRule,
    Interval,
    IntervalBox,
    UnsplittableBoxError,
    atan2_arc,
    box_bisect,
    box_inflate,
    box_width,
    interval_add,
    interval_atan2,
    interval_cos,
    interval_div,
    interval_mul,
    interval_sin,
    interval_sqr,
    interval_sqrt,
    interval_sub,
)

RR = BisectionRule.ROUND_ROBIN
LF = BisectionRule.LARGEST_FIRST

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def intervals(draw, lo=-1e6, hi=1e6):
    a = draw(st.floats(lo, hi, allow_nan=False))
    b = draw(st.floats(lo, hi, allow_nan=False))
    return Interval(min(a, b), max(a, b))


@st.composite
def interval_and_point(draw, lo=-1e6, hi=1e6):
    iv = draw(intervals(lo, hi))
    t = draw(st.floats(0.0, 1.0))
    x = iv.lo + t * (iv.hi - iv.lo)
    return iv, min(max(x, iv.lo), iv.hi)


# -- worked examples -----------------------------------------------------------

def test_add_examples():
    assert interval_add(Interval(1, 2), Interval(3, 4)) == Interval(4, 6)
    assert interval_add(Interval(0, 0), Interval(-2.5, 7.25)) == Interval(-2.5, 7.25)
    assert interval_add(Interval(-1, 1), Interval(-1, 1)) == Interval(-2, 2)


def test_mul_examples():
    assert interval_mul(Interval(-1, 2), Interval(3, 4)) == Interval(-4, 8)
    assert interval_mul(Interval(0, 0), Interval(-5, 5)) == Interval(0, 0)
    assert interval_mul(Interval(-2, -1), Interval(-3, -2)) == Interval(2, 6)


def test_width_examples():
    assert box_width(IntervalBox([0, 0], [1, 0.5])) == 1.0
    assert box_width(IntervalBox([2, 3], [2, 3])) == 0.0
    assert box_width(IntervalBox([-1, -1, 0], [1, 1, 3])) == 3.0
    with pytest.raises(ValueError):
        box_width(IntervalBox.empty(2))


def test_bisect_examples():
    a, b = box_bisect(IntervalBox([0, 0], [4, 1]), LF)
    assert a == IntervalBox([0, 0], [2, 1])
    assert b == IntervalBox([2, 0], [4, 1])
    a, _ = box_bisect(IntervalBox([0, 0], [1, 1]), RR, depth=0)
    assert a.hi[0] == 0.5 and a.hi[1] == 1.0
    a, _ = box_bisect(IntervalBox([5, 0], [5, 2]), LF)
    assert a == IntervalBox([5, 0], [5, 1])


def test_round_robin_cycles_with_depth():
    box = IntervalBox([0, 0, 0], [1, 1, 1])
    for depth in range(6):
        a, _ = box_bisect(box, RR, depth=depth)
        assert np.flatnonzero(a.hi != box.hi).tolist() == [depth % 3]


def test_largest_first_ties_take_lowest_index():
    a, _ = box_bisect(IntervalBox([0, 0, 0], [1, 2, 2]), LF)
    assert a.hi.tolist() == [1, 1, 2]


def test_unsplittable():
    with pytest.raises(UnsplittableBoxError, match="unsplittable"):
        box_bisect(IntervalBox([1, 2], [1, 2]), LF)


def test_inflate_examples():
    assert box_inflate(IntervalBox([0], [1]), 0.5) == IntervalBox([-0.5], [1.5])
    box = IntervalBox([0.1, -3], [0.7, 2])
    assert box_inflate(box, 0.0) == box
    out = box_inflate(IntervalBox([2], [2]), 0.1)
    assert out.lo[0] <= 1.9 <= out.lo[0] + 1e-15 and out.hi[0] - 1e-15 <= 2.1 <= out.hi[0]
    with pytest.raises(ValueError):
        box_inflate(box, -1.0)


def test_empty_is_distinct_from_degenerate():
    e = Interval.empty()
    assert e.is_empty and not Interval(3, 3).is_empty
    assert e != Interval(3, 3)
    assert interval_add(e, Interval(1, 2)).is_empty
    assert interval_mul(Interval(1, 2), e).is_empty
    assert IntervalBox([0, 1], [1, 0]).is_empty


def test_division_by_zero_containing_interval_is_entire():
    assert interval_div(Interval(1, 2), Interval(-1, 1)) == Interval.entire()
    assert interval_div(Interval(1, 2), Interval(0, 0)).is_empty


def test_sin_cos_hit_extrema():
    assert interval_sin(Interval(1.0, 2.0)).hi == 1.0
    assert interval_cos(Interval(3.0, 3.5)).lo == -1.0
    c = interval_cos(Interval(-0.1, 0.1))
    assert c.hi == 1.0 and c.lo <= math.cos(0.1)


def test_atan2_arc_straddling_negative_axis():
    lo, hi = atan2_arc(-0.1, 0.1, -1.0, -0.9)
    assert -math.pi < lo <= math.pi and hi > math.pi
    assert hi - lo < 0.25
    assert atan2_arc(-1, 1, -1, 1) == (-math.nextafter(math.pi, 4), math.nextafter(math.pi, 4))


# -- exact rounding against rational arithmetic ----------------------------------

@given(intervals(), intervals())
def test_add_sub_mul_contain_exact_endpoint_results(a, b):
    ex = {
        "add": (interval_add(a, b), [Fraction(x) + Fraction(y) for x in a for y in b]),
        "sub": (interval_sub(a, b), [Fraction(x) - Fraction(y) for x in a for y in b]),
        "mul": (interval_mul(a, b), [Fraction(x) * Fraction(y) for x in a for y in b]),
    }
    for name, (r, vals) in ex.items():
        assert Fraction(r.lo) <= min(vals), name
        assert Fraction(r.hi) >= max(vals), name
        # tight: at most one ulp of slack on each side
        assert r.lo >= math.nextafter(float(min(vals)), -math.inf), name
        assert r.hi <= math.nextafter(float(max(vals)), math.inf), name


@given(intervals(), intervals(1e-3, 1e6))
def test_div_contains_exact_quotients(a, b):
    r = interval_div(a, b)
    for x in a:
        for y in b:
            q = Fraction(x) / Fraction(y)
            assert Fraction(r.lo) <= q <= Fraction(r.hi)


@given(intervals(0.0, 1e6))
def test_sqrt_bounds_are_exact(a):
    r = interval_sqrt(a)
    assert Fraction(r.lo) ** 2 <= Fraction(a.lo)
    assert Fraction(r.hi) ** 2 >= Fraction(a.hi)


# -- containment fuzzing -----------------------------------------------------------

def _random_intervals(rng, n, scale):
    c = rng.uniform(-scale, scale, n)
    w = rng.exponential(scale / 4, n) * (rng.random(n) < 0.9)
    return c - w, c + w


def _points(rng, lo, hi, k):
    t = rng.random((lo.shape[0], k))
    return np.clip(lo[:, None] + t * (hi - lo)[:, None], lo[:, None], hi[:, None])


BINARY = {
    "add": (interval_add, np.add),
    "sub": (interval_sub, np.subtract),
    "mul": (interval_mul, np.multiply),
    "div": (interval_div, np.divide),
}


@pytest.mark.parametrize("name", sorted(BINARY))
def test_binary_containment_fuzz(name):
    # 2000 interval pairs x 50 sampled points = 1e5 samples
    op, f = BINARY[name]
    rng = np.random.default_rng(11)
    alo, ahi = _random_intervals(rng, 2000, 10.0)
    blo, bhi = _random_intervals(rng, 2000, 10.0)
    xs, ys = _points(rng, alo, ahi, 50), _points(rng, blo, bhi, 50)
    for k in range(2000):
        r = op(Interval(alo[k], ahi[k]), Interval(blo[k], bhi[k]))
        with np.errstate(all="ignore"):
            v = f(xs[k], ys[k])
        v = v[np.isfinite(v)]
        assert np.all((r.lo <= v) & (v <= r.hi)), (k, r)


UNARY = {
    "sqr": (interval_sqr, np.square, 10.0),
    "sqrt": (interval_sqrt, np.sqrt, 10.0),
    "sin": (interval_sin, np.sin, 8.0),
    "cos": (interval_cos, np.cos, 8.0),
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_containment_fuzz(name):
    op, f, scale = UNARY[name]
    rng = np.random.default_rng(12)
    lo, hi = _random_intervals(rng, 2000, scale)
    if name == "sqrt":
        lo, hi = np.abs(lo), np.abs(lo) + (hi - lo)
    xs = _points(rng, lo, hi, 50)
    for k in range(2000):
        r = op(Interval(lo[k], hi[k]))
        v = f(xs[k])
        assert np.all((r.lo <= v) & (v <= r.hi)), (k, r)


def test_atan2_containment_fuzz():
    rng = np.random.default_rng(13)
    ylo, yhi = _random_intervals(rng, 2000, 2.0)
    xlo, xhi = _random_intervals(rng, 2000, 2.0)
    ys, xs = _points(rng, ylo, yhi, 50), _points(rng, xlo, xhi, 50)
    for k in range(2000):
        r = interval_atan2(Interval(ylo[k], yhi[k]), Interval(xlo[k], xhi[k]))
        v = np.arctan2(ys[k], xs[k])
        assert np.all((r.lo <= v) & (v <= r.hi)), k
        # the arc form agrees modulo 2*pi
        alo, ahi = atan2_arc(ylo[k], yhi[k], xlo[k], xhi[k])
        shifted = alo + np.mod(v - alo, 2 * math.pi)
        assert np.all(shifted <= ahi + 1e-15), k


# -- inclusion monotonicity ----------------------------------------------------------

@st.composite
def nested(draw):
    outer = draw(intervals(-100, 100))
    s = sorted(draw(st.lists(st.floats(0, 1), min_size=2, max_size=2)))
    lo = outer.lo + s[0] * (outer.hi - outer.lo)
    hi = outer.lo + s[1] * (outer.hi - outer.lo)
    lo, hi = min(max(lo, outer.lo), outer.hi), min(max(hi, outer.lo), outer.hi)
    return Interval(min(lo, hi), max(lo, hi)), outer


@given(nested(), nested())
@example((Interval(0.0, 2.225073858507e-311), Interval(0.0, 1.0)),
         (Interval(0.0, 2.225073858507e-311), Interval(0.0, 1.0)))
def test_inclusion_monotone_binary(ap, bp):
    (a, a2), (b, b2) = ap, bp
    for op in (interval_add, interval_sub, interval_mul, interval_div):
        assert op(a, b).is_subset(op(a2, b2))


@given(nested())
# underflow once pushed the lower bound of a tiny square below zero
@example((Interval(-1.8319504784234409e-249, -1.8319504784234409e-249),
          Interval(-1.8319504784234409e-249, 0.0)))
def test_inclusion_monotone_unary(ap):
    a, a2 = ap
    for op in (interval_sqr, interval_sin, interval_cos):
        assert op(a).is_subset(op(a2))
    if a2.lo >= 0:
        assert interval_sqrt(a).is_subset(interval_sqrt(a2))


@given(interval_and_point(-50, 50), interval_and_point(-50, 50))
def test_point_in_operand_gives_point_in_result(ax, by):
    (a, x), (b, y) = ax, by
    assert x * y in interval_mul(a, b)
    assert x + y in interval_add(a, b)
    assert x - y in interval_sub(a, b)


# -- boxes ---------------------------------------------------------------------------

@st.composite
def boxes(draw, n=None):
    n = n or draw(st.integers(1, 5))
    ivs = [draw(intervals(-10, 10)) for _ in range(n)]
    return IntervalBox.from_intervals(ivs)


@given(boxes(), st.sampled_from([RR, LF]), st.integers(0, 10))
def test_bisection_partitions_parent(box, rule, depth):
    if not np.any(box.widths > 0):
        return
    a, b = box_bisect(box, rule, depth)
    assert a.hull(b) == box
    i = int(np.flatnonzero(a.hi != box.hi)[0])
    assert a.hi[i] == b.lo[i]
    assert np.array_equal(np.delete(a.lo, i), np.delete(box.lo, i))
    half = 0.5 * box.widths[i]
    ulp = math.ulp(max(abs(box.lo[i]), abs(box.hi[i])))
    assert abs(a.widths[i] - half) <= ulp and abs(b.widths[i] - half) <= ulp


@given(boxes(), st.floats(0, 5))
def test_inflate_contains_original(box, d):
    out = box_inflate(box, d)
    assert box.is_subset(out)
    assert np.all(out.widths >= box.widths + 2 * d - 1e-12)


@given(boxes(3), boxes(3))
def test_intersection_and_hull(a, b):
    h = a.hull(b)
    assert a.is_subset(h) and b.is_subset(h)
    i = a.intersect(b)
    assert i.is_empty != a.intersects(b)
    if not i.is_empty:
        assert i.is_subset(a) and i.is_subset(b)


def test_values_are_immutable():
    iv = Interval(0, 1)
    with pytest.raises(AttributeError):
        iv.lo = 3
    box = IntervalBox([0], [1])
    with pytest.raises(ValueError):
        box.lo[0] = 5

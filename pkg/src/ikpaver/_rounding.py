"""Directed rounding for IEEE doubles without touching the FPU mode.

Every helper returns the correctly rounded-down (``*_down``) or rounded-up
(``*_up``) value of the exact real result, using error-free transformations
(TwoSum, Dekker's TwoProduct) to decide whether the round-to-nearest result
needs to move by one ulp. Results are bit-identical to hardware directed
rounding for finite, non-underflowing operands; in the subnormal range the
result is widened by one ulp, but never across zero when the sign of the
exact result is known.

All functions are jitted so the contraction kernels can inline them; they are
also callable from plain Python.
"""
import math

from numba import njit

_SPLITTER = 134217729.0  # 2**27 + 1
_TINY = 2.0**-960
_INF = math.inf


@njit(cache=True)
def next_down(x):
    return math.nextafter(x, -_INF)


@njit(cache=True)
def next_up(x):
    return math.nextafter(x, _INF)


@njit(cache=True)
def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


@njit(cache=True)
def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


@njit(cache=True)
def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


@njit(cache=True)
def add_down(a, b):
    s, e = two_sum(a, b)
    if e < 0.0:
        return next_down(s)
    return s


@njit(cache=True)
def add_up(a, b):
    s, e = two_sum(a, b)
    if e > 0.0:
        return next_up(s)
    return s


@njit(cache=True)
def sub_down(a, b):
    return add_down(a, -b)


@njit(cache=True)
def sub_up(a, b):
    return add_up(a, -b)


@njit(cache=True)
def mul_down(a, b):
    # 0 * inf is 0 in interval arithmetic
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if math.isinf(p):
        if math.isinf(a) or math.isinf(b):
            return p
        return p if p < 0.0 else 1.7976931348623157e308
    if abs(p) < _TINY:
        # the widening must not cross zero when the sign of the result is known
        if (a > 0.0) == (b > 0.0):
            return max(next_down(p), 0.0)
        return next_down(p)
    p, e = two_prod(a, b)
    if e < 0.0:
        return next_down(p)
    return p


@njit(cache=True)
def mul_up(a, b):
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if math.isinf(p):
        if math.isinf(a) or math.isinf(b):
            return p
        return p if p > 0.0 else -1.7976931348623157e308
    if abs(p) < _TINY:
        if (a > 0.0) != (b > 0.0):
            return min(next_up(p), 0.0)
        return next_up(p)
    p, e = two_prod(a, b)
    if e > 0.0:
        return next_up(p)
    return p


@njit(cache=True)
def _div_residual_sign(a, b, q):
    # sign of (a/b - q), exact while q*b does not underflow
    p, e = two_prod(q, b)
    r = (a - p) - e
    if r == 0.0:
        return 0
    if (r > 0.0) == (b > 0.0):
        return 1
    return -1


@njit(cache=True)
def div_down(a, b):
    if a != 0.0 and b != 0.0 and (a > 0.0) == (b > 0.0):
        return max(_div_down(a, b), 0.0)
    return _div_down(a, b)


@njit(cache=True)
def div_up(a, b):
    if a != 0.0 and b != 0.0 and (a > 0.0) != (b > 0.0):
        return min(_div_up(a, b), 0.0)
    return _div_up(a, b)


@njit(cache=True)
def _div_down(a, b):
    q = a / b
    if math.isinf(q) or math.isinf(a) or math.isinf(b) or q == 0.0:
        if q == 0.0 and a != 0.0 and not math.isinf(b):
            return next_down(q)
        return q
    if abs(q) < _TINY or abs(a) < _TINY:
        return next_down(q)
    if _div_residual_sign(a, b, q) < 0:
        return next_down(q)
    return q


@njit(cache=True)
def _div_up(a, b):
    q = a / b
    if math.isinf(q) or math.isinf(a) or math.isinf(b) or q == 0.0:
        if q == 0.0 and a != 0.0 and not math.isinf(b):
            return next_up(q)
        return q
    if abs(q) < _TINY or abs(a) < _TINY:
        return next_up(q)
    if _div_residual_sign(a, b, q) > 0:
        return next_up(q)
    return q


@njit(cache=True)
def sqrt_down(a):
    if a <= 0.0:
        return 0.0
    s = math.sqrt(a)
    if math.isinf(s):
        return s
    if a < _TINY:
        return next_down(s)
    p, e = two_prod(s, s)
    if (a - p) - e < 0.0:
        return next_down(s)
    return s


@njit(cache=True)
def sqrt_up(a):
    if a <= 0.0:
        return 0.0
    s = math.sqrt(a)
    if math.isinf(s):
        return s
    if a < _TINY:
        return next_up(s)
    p, e = two_prod(s, s)
    if (a - p) - e > 0.0:
        return next_up(s)
    return s


@njit(cache=True)
def sqr_down(a):
    return mul_down(a, a)


@njit(cache=True)
def sqr_up(a):
    return mul_up(a, a)

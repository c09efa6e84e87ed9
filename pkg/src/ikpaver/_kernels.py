"""Jitted forward-backward (HC4-style) propagation over flat constraint tables.

A constraint is ``sum_t coef_t * m_t(x) in [rhs_lo, rhs_hi]`` where each
monomial ``m_t`` is ``x_i`` (kind 0), ``x_i**2`` (kind 1) or ``x_i * x_j``
(kind 2).  Boxes are passed as two float arrays and updated in place.
"""
import math

import numpy as np
from numba import njit

from ._rounding import (
    add_down,
    add_up,
    div_down,
    div_up,
    mul_down,
    mul_up,
    sqr_down,
    sqrt_down,
    sqrt_up,
    sub_down,
    sub_up,
)

LINEAR = 0
SQUARE = 1
BILINEAR = 2

_INF = math.inf


@njit(cache=True)
def _imul(alo, ahi, blo, bhi):
    p1 = mul_down(alo, blo)
    p2 = mul_down(alo, bhi)
    p3 = mul_down(ahi, blo)
    p4 = mul_down(ahi, bhi)
    lo = min(min(p1, p2), min(p3, p4))
    q1 = mul_up(alo, blo)
    q2 = mul_up(alo, bhi)
    q3 = mul_up(ahi, blo)
    q4 = mul_up(ahi, bhi)
    hi = max(max(q1, q2), max(q3, q4))
    return lo, hi


@njit(cache=True)
def _iscale(c, alo, ahi):
    if c >= 0.0:
        return mul_down(c, alo), mul_up(c, ahi)
    return mul_down(c, ahi), mul_up(c, alo)


@njit(cache=True)
def _iunscale(c, alo, ahi):
    # [a] / c for a non-zero scalar c
    if c > 0.0:
        return div_down(alo, c), div_up(ahi, c)
    return div_down(ahi, c), div_up(alo, c)


@njit(cache=True)
def _isqr(alo, ahi):
    if alo >= 0.0:
        return sqr_down(alo), mul_up(ahi, ahi)
    if ahi <= 0.0:
        return sqr_down(ahi), mul_up(alo, alo)
    return 0.0, max(mul_up(alo, alo), mul_up(ahi, ahi))


@njit(cache=True)
def _term_forward(kind, c, i, j, lo, hi):
    if kind == 0:
        return _iscale(c, lo[i], hi[i])
    if kind == 1:
        slo, shi = _isqr(lo[i], hi[i])
        return _iscale(c, slo, shi)
    plo, phi = _imul(lo[i], hi[i], lo[j], hi[j])
    return _iscale(c, plo, phi)


@njit(cache=True)
def _hull_with_rays(xlo, xhi, a, b):
    # x intersected with (-inf, a] U [b, +inf), returned as a hull; empty -> lo > hi
    left_ok = xlo <= a
    right_ok = xhi >= b
    if left_ok and right_ok:
        return xlo, xhi
    if left_ok:
        return xlo, min(xhi, a)
    if right_ok:
        return max(xlo, b), xhi
    return _INF, -_INF


@njit(cache=True)
def _div_narrow(xlo, xhi, qlo, qhi, ylo, yhi):
    """Narrow [x] to {x : x*y in [q] for some y in [y]}."""
    if ylo > 0.0 or yhi < 0.0:
        d1 = div_down(qlo, ylo)
        d2 = div_down(qlo, yhi)
        d3 = div_down(qhi, ylo)
        d4 = div_down(qhi, yhi)
        u1 = div_up(qlo, ylo)
        u2 = div_up(qlo, yhi)
        u3 = div_up(qhi, ylo)
        u4 = div_up(qhi, yhi)
        lo = min(min(d1, d2), min(d3, d4))
        hi = max(max(u1, u2), max(u3, u4))
        return max(xlo, lo), min(xhi, hi)
    if qlo <= 0.0 <= qhi:
        return xlo, xhi
    if ylo == 0.0 and yhi == 0.0:
        return _INF, -_INF
    if qlo > 0.0:
        if ylo == 0.0:
            return max(xlo, div_down(qlo, yhi)), xhi
        if yhi == 0.0:
            return xlo, min(xhi, div_up(qlo, ylo))
        return _hull_with_rays(xlo, xhi, div_up(qlo, ylo), div_down(qlo, yhi))
    # qhi < 0
    if ylo == 0.0:
        return xlo, min(xhi, div_up(qhi, yhi))
    if yhi == 0.0:
        return max(xlo, div_down(qhi, ylo)), xhi
    return _hull_with_rays(xlo, xhi, div_up(qhi, yhi), div_down(qhi, ylo))


@njit(cache=True)
def _sqr_narrow(xlo, xhi, qlo, qhi):
    """Narrow [x] to {x : x**2 in [q]}."""
    if qhi < 0.0:
        return _INF, -_INF
    r_hi = sqrt_up(qhi)
    r_lo = sqrt_down(qlo) if qlo > 0.0 else 0.0
    # x in [-r_hi, -r_lo] U [r_lo, r_hi]
    nlo = max(xlo, -r_hi)
    nhi = min(xhi, -r_lo)
    plo = max(xlo, r_lo)
    phi = min(xhi, r_hi)
    neg_ok = nlo <= nhi
    pos_ok = plo <= phi
    if neg_ok and pos_ok:
        return nlo, phi
    if neg_ok:
        return nlo, nhi
    if pos_ok:
        return plo, phi
    return _INF, -_INF


@njit(cache=True)
def revise(k, lo, hi, cstart, kind, coef, vi, vj, rhs_lo, rhs_hi, tlo, thi, plo, phi):
    """Forward-backward pass of constraint ``k``; False when proven infeasible.

    ``tlo/thi`` and ``plo/phi`` are scratch arrays at least as long as the
    longest constraint plus one.
    """
    s = cstart[k]
    e = cstart[k + 1]
    n = e - s
    for t in range(n):
        a, b = _term_forward(kind[s + t], coef[s + t], vi[s + t], vj[s + t], lo, hi)
        tlo[t] = a
        thi[t] = b
    # prefix sums: p[t] = sum of terms before t
    plo[0] = 0.0
    phi[0] = 0.0
    for t in range(n):
        plo[t + 1] = add_down(plo[t], tlo[t])
        phi[t + 1] = add_up(phi[t], thi[t])
    total_lo = plo[n]
    total_hi = phi[n]
    if total_lo > rhs_hi[k] or total_hi < rhs_lo[k]:
        return False
    slo = 0.0
    shi = 0.0
    for t in range(n - 1, -1, -1):
        # rest = prefix[t] + suffix
        rlo = add_down(plo[t], slo)
        rhi = add_up(phi[t], shi)
        nlo = max(tlo[t], sub_down(rhs_lo[k], rhi))
        nhi = min(thi[t], sub_up(rhs_hi[k], rlo))
        if nlo > nhi:
            return False
        kd = kind[s + t]
        c = coef[s + t]
        i = vi[s + t]
        if nlo > tlo[t] or nhi < thi[t]:
            qlo, qhi = _iunscale(c, nlo, nhi)
            if kd == 0:
                xlo = max(lo[i], qlo)
                xhi = min(hi[i], qhi)
                if xlo > xhi:
                    return False
                lo[i] = xlo
                hi[i] = xhi
            elif kd == 1:
                xlo, xhi = _sqr_narrow(lo[i], hi[i], qlo, qhi)
                if xlo > xhi:
                    return False
                lo[i] = xlo
                hi[i] = xhi
            else:
                j = vj[s + t]
                xlo, xhi = _div_narrow(lo[i], hi[i], qlo, qhi, lo[j], hi[j])
                if xlo > xhi:
                    return False
                lo[i] = xlo
                hi[i] = xhi
                ylo, yhi = _div_narrow(lo[j], hi[j], qlo, qhi, lo[i], hi[i])
                if ylo > yhi:
                    return False
                lo[j] = ylo
                hi[j] = yhi
        # suffix accumulates the original forward enclosure of term t
        slo = add_down(slo, tlo[t])
        shi = add_up(shi, thi[t])
    return True


@njit(cache=True)
def contract_fixpoint(lo, hi, cstart, kind, coef, vi, vj, rhs_lo, rhs_hi, max_rounds, min_rel,
                      scratch):
    """Sweep all constraints until no width drops by more than ``min_rel``.

    The box from before that last, negligible sweep is the one returned, so
    contracting the result again changes nothing.  Returns
    ``(feasible, rounds)``; on infeasibility the box contents are
    unspecified.
    """
    m = cstart.shape[0] - 1
    nv = lo.shape[0]
    tlo = scratch[0]
    thi = scratch[1]
    plo = scratch[2]
    phi = scratch[3]
    before = scratch[4]
    keep_lo = scratch[5]
    keep_hi = scratch[6]
    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        for v in range(nv):
            before[v] = hi[v] - lo[v]
            keep_lo[v] = lo[v]
            keep_hi[v] = hi[v]
        for k in range(m):
            if not revise(k, lo, hi, cstart, kind, coef, vi, vj, rhs_lo, rhs_hi, tlo, thi, plo, phi):
                return False, rounds
        progress = False
        for v in range(nv):
            w0 = before[v]
            if w0 > 0.0 and (w0 - (hi[v] - lo[v])) > min_rel * w0:
                progress = True
                break
        if not progress:
            for v in range(nv):
                lo[v] = keep_lo[v]
                hi[v] = keep_hi[v]
            break
    return True, rounds


@njit(cache=True)
def residuals(x, cstart, kind, coef, vi, vj, rhs_lo, rhs_hi, out):
    """Point evaluation: distance of each constraint value from its rhs."""
    m = cstart.shape[0] - 1
    for k in range(m):
        acc = 0.0
        for t in range(cstart[k], cstart[k + 1]):
            kd = kind[t]
            if kd == 0:
                acc += coef[t] * x[vi[t]]
            elif kd == 1:
                acc += coef[t] * x[vi[t]] * x[vi[t]]
            else:
                acc += coef[t] * x[vi[t]] * x[vj[t]]
        if acc < rhs_lo[k]:
            out[k] = rhs_lo[k] - acc
        elif acc > rhs_hi[k]:
            out[k] = acc - rhs_hi[k]
        else:
            out[k] = 0.0
    return out


@njit(cache=True)
def fd_jacobian(x, step, cstart, kind, coef, vi, vj, out):
    """Central finite differences of the constraint left-hand sides."""
    m = cstart.shape[0] - 1
    n = x.shape[0]
    xp = x.copy()
    for i in range(n):
        for sgn in (1.0, -1.0):
            xp[i] = x[i] + sgn * step
            for k in range(m):
                acc = 0.0
                for t in range(cstart[k], cstart[k + 1]):
                    kd = kind[t]
                    if kd == 0:
                        acc += coef[t] * xp[vi[t]]
                    elif kd == 1:
                        acc += coef[t] * xp[vi[t]] * xp[vi[t]]
                    else:
                        acc += coef[t] * xp[vi[t]] * xp[vj[t]]
                if sgn > 0.0:
                    out[k, i] = acc
                else:
                    out[k, i] = (out[k, i] - acc) / (2.0 * step)
        xp[i] = x[i]
    return out


def make_scratch(max_terms: int, nvars: int) -> np.ndarray:
    size = max(max_terms + 1, nvars, 1)
    return np.zeros((7, size))

"""Joint angles from link frames, at point level and over rotation boxes.

For joint ``i`` the relative transform of its two links is
``F_i^-1 F_{i+1} = exp(xi_i theta_i) Z_i`` with ``Z_i`` the zero-angle
transform, so ``exp(xi_i theta_i) = F_i^-1 F_{i+1} Z_i^-1`` and the angle is
read off the rotation about the joint axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._rounding import add_down, add_up, mul_down, mul_up
from .interval import atan2_arc
from .transforms import inv_transform, is_rigid, perpendicular_frame, twist_coordinates

__all__ = [
    "OffManifoldError",
    "TwistCoordinate",
    "JointIntervalVector",
    "relative_transform",
    "recover_angle",
    "recover_theta",
    "recover_joint_box",
    "JointRecovery",
    "arc_hull",
]

TWO_PI = 2.0 * math.pi
OFF_MANIFOLD_TOL = 1e-4


class OffManifoldError(ValueError):
    pass


@dataclass(frozen=True)
class TwistCoordinate:
    omega: np.ndarray
    v: np.ndarray
    frame: int

    @classmethod
    def for_joint(cls, spec, frame: int) -> "TwistCoordinate":
        w, v = twist_coordinates(spec.axis, spec.point)
        return cls(w, v, frame)


@dataclass(frozen=True, eq=False)
class JointIntervalVector:
    """Per-joint angular arcs ``[lo, hi]``.

    ``lo`` lies in ``(-pi, pi]``; ``hi`` exceeds ``pi`` only for arcs that
    cross the branch cut, which are flagged in ``wraps``.
    """

    lo: np.ndarray
    hi: np.ndarray

    @property
    def wraps(self) -> np.ndarray:
        return self.hi > math.pi

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def mid(self) -> np.ndarray:
        m = 0.5 * (self.lo + self.hi)
        return np.where(m > math.pi, m - TWO_PI, m)

    def __len__(self):
        return self.lo.shape[0]

    def contains(self, theta, tol: float = 0.0) -> bool:
        """Membership modulo 2*pi."""
        th = np.asarray(theta, dtype=float)
        w = self.widths
        d = th - self.lo
        d = d - TWO_PI * np.round((d - 0.5 * w) / TWO_PI)
        return bool(np.all((d >= -tol) & (d <= w + tol)))

    def intersects_limits(self, lower, upper) -> bool:
        return bool(np.all(arcs_meet_limits(self.lo, self.hi, np.asarray(lower), np.asarray(upper))))

    def touches_limit(self, lower, upper, tol: float) -> np.ndarray:
        """Joints whose arc comes within ``tol`` of a (finite, non-periodic) limit."""
        lower = np.asarray(lower)
        upper = np.asarray(upper)
        full_turn = (upper - lower) >= TWO_PI - 1e-9
        out = np.zeros(len(self), dtype=bool)
        for k in (-1, 0, 1):
            a = self.lo + k * TWO_PI
            b = self.hi + k * TWO_PI
            out |= (a <= lower + tol) & (b >= lower - tol)
            out |= (a <= upper + tol) & (b >= upper - tol)
        return out & ~full_turn

    def to_list(self) -> list:
        return [[float(a), float(b)] for a, b in zip(self.lo, self.hi)]


def arcs_meet_limits(lo, hi, lower, upper) -> np.ndarray:
    """Per joint: does the arc ``[lo, hi]`` (mod 2*pi) meet ``[lower, upper]``?"""
    hit = np.zeros(np.broadcast(lo, lower).shape, dtype=bool)
    for k in (-2, -1, 0, 1, 2):
        hit |= (lo + k * TWO_PI <= upper) & (hi + k * TWO_PI >= lower)
    return hit


def arc_hull(los, his) -> JointIntervalVector:
    """Smallest arcs (per joint) covering every row of ``los/his``, for nearby arcs."""
    los = np.atleast_2d(np.asarray(los, dtype=float))
    his = np.atleast_2d(np.asarray(his, dtype=float))
    c = 0.5 * (los + his)
    shift = TWO_PI * np.round((c - c[0]) / TWO_PI)
    lo = np.min(los - shift, axis=0)
    hi = np.max(his - shift, axis=0)
    k = np.ceil((lo - math.pi) / TWO_PI)  # bring lo into (-pi, pi]
    return JointIntervalVector(lo - k * TWO_PI, hi - k * TWO_PI)


def relative_transform(Fi, Fi1, tol: float = 1e-6) -> np.ndarray:
    if not (is_rigid(Fi, tol) and is_rigid(Fi1, tol)):
        raise OffManifoldError("relative_transform needs orthonormal rigid transforms")
    return inv_transform(Fi) @ Fi1


def recover_angle(rel, spec, tol: float = OFF_MANIFOLD_TOL) -> float:
    """Angle in ``(-pi, pi]`` with ``exp(xi theta) = rel @ zero_transform^-1``."""
    E = np.asarray(rel) @ inv_transform(spec.zero_transform)
    M = E[:3, :3]
    d = spec.axis
    if np.max(np.abs(M @ d - d)) > tol:
        raise OffManifoldError("off-manifold transform: rotation is not about the joint axis")
    if np.max(np.abs(E[:3, 3] - (np.eye(3) - M) @ spec.point)) > tol:
        raise OffManifoldError("off-manifold transform: axis does not pass through the joint point")
    c = 0.5 * (np.trace(M) - 1.0)
    vee = 0.5 * np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])
    s = float(np.dot(d, vee))
    theta = math.atan2(s, c)
    return math.pi if theta <= -math.pi else theta


def recover_theta(model, frames) -> np.ndarray:
    """Joint vector from the link frames ``F_0..F_n``."""
    return np.array([recover_angle(relative_transform(frames[i], frames[i + 1]), j)
                     for i, j in enumerate(model.joints)])


@njit(cache=True)
def _imat_vec(Rlo, Rhi, v, out_lo, out_hi):
    for r in range(3):
        slo = 0.0
        shi = 0.0
        for c in range(3):
            x = v[c]
            if x >= 0.0:
                a = mul_down(Rlo[r, c], x)
                b = mul_up(Rhi[r, c], x)
            else:
                a = mul_down(Rhi[r, c], x)
                b = mul_up(Rlo[r, c], x)
            slo = add_down(slo, a)
            shi = add_up(shi, b)
        out_lo[r] = slo
        out_hi[r] = shi


@njit(cache=True)
def _idot(alo, ahi, blo, bhi):
    slo = 0.0
    shi = 0.0
    for r in range(3):
        p1 = mul_down(alo[r], blo[r])
        p2 = mul_down(alo[r], bhi[r])
        p3 = mul_down(ahi[r], blo[r])
        p4 = mul_down(ahi[r], bhi[r])
        q1 = mul_up(alo[r], blo[r])
        q2 = mul_up(alo[r], bhi[r])
        q3 = mul_up(ahi[r], blo[r])
        q4 = mul_up(ahi[r], bhi[r])
        slo = add_down(slo, min(min(p1, p2), min(p3, p4)))
        shi = add_up(shi, max(max(q1, q2), max(q3, q4)))
    return slo, shi


@njit(cache=True)
def _sin_cos_boxes(Rlo, Rhi, E1, E2, F1, out):
    """out[i] = (s_lo, s_hi, c_lo, c_hi) for each joint i.

    ``Rlo/Rhi`` are (n+1, 3, 3) interval link rotations; the cosine is
    ``(R_i e1) . (R_{i+1} f1)`` and the sine ``(R_i e2) . (R_{i+1} f1)``.
    """
    n = E1.shape[0]
    alo = np.empty(3)
    ahi = np.empty(3)
    blo = np.empty(3)
    bhi = np.empty(3)
    glo = np.empty(3)
    ghi = np.empty(3)
    for i in range(n):
        _imat_vec(Rlo[i], Rhi[i], E1[i], alo, ahi)
        _imat_vec(Rlo[i], Rhi[i], E2[i], blo, bhi)
        _imat_vec(Rlo[i + 1], Rhi[i + 1], F1[i], glo, ghi)
        clo, chi = _idot(alo, ahi, glo, ghi)
        slo, shi = _idot(blo, bhi, glo, ghi)
        out[i, 0] = slo
        out[i, 1] = shi
        out[i, 2] = clo
        out[i, 3] = chi
    return out


class JointRecovery:
    """Precomputed per-joint frames for recovering joint arcs from boxes."""

    def __init__(self, system):
        self.system = system
        model = system.model
        n = model.n
        self.n = n
        self.E1 = np.empty((n, 3))
        self.E2 = np.empty((n, 3))
        self.F1 = np.empty((n, 3))
        for i, j in enumerate(model.joints):
            e1, e2 = perpendicular_frame(j.axis)
            self.E1[i] = e1
            self.E2[i] = e2
            self.F1[i] = j.zero_transform[:3, :3].T @ e1
        self._Rlo = np.empty((n + 1, 3, 3))
        self._Rhi = np.empty((n + 1, 3, 3))
        for k in range(n + 1):
            R = system.fixed_rotation(k)
            if R is not None:
                self._Rlo[k] = R
                self._Rhi[k] = R
        if system.ee_partial:
            self._Rlo[n, :, 2] = system.target.z_axis
            self._Rhi[n, :, 2] = system.target.z_axis
        self._out = np.empty((n, 4))

    def _load(self, lo, hi):
        s = self.system
        for k in s.free_links:
            off = s.link_offset(k)
            self._Rlo[k] = lo[off:off + 9].reshape(3, 3, order="F")
            self._Rhi[k] = hi[off:off + 9].reshape(3, 3, order="F")
        if s.ee_partial:
            off = s.link_offset(self.n)
            self._Rlo[self.n, :, :2] = lo[off:off + 6].reshape(3, 2, order="F")
            self._Rhi[self.n, :, :2] = hi[off:off + 6].reshape(3, 2, order="F")

    def sin_cos(self, lo, hi) -> np.ndarray:
        self._load(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        return _sin_cos_boxes(self._Rlo, self._Rhi, self.E1, self.E2, self.F1, self._out).copy()

    def __call__(self, lo, hi) -> JointIntervalVector:
        sc = self.sin_cos(lo, hi)
        arcs = [atan2_arc(s_lo, s_hi, c_lo, c_hi) for s_lo, s_hi, c_lo, c_hi in sc]
        return JointIntervalVector(np.array([a for a, _ in arcs]), np.array([b for _, b in arcs]))


def recover_joint_box(box, system, model=None) -> JointIntervalVector:
    """Conservative joint arcs for every rotation point in ``box``."""
    if model is not None and model is not system.model:
        raise ValueError("model does not match the constraint system")
    return JointRecovery(system)(box.lo, box.hi)

"""Serial-chain robot models and the rotation-component constraint system.

Link frames are numbered ``0..n``: frame 0 is the fixed base, frame ``n`` is
the last link (the end-effector link).  Joint ``i`` connects frame ``i`` to
frame ``i + 1``; its axis and axis point are expressed in frame ``i`` and
``zero_transform`` is the pose of frame ``i + 1`` relative to frame ``i`` at
``theta_i = 0``, so that::

    F[i + 1] = F[i] @ exp(xi_i theta_i) @ zero_transform_i

The unknowns of the constraint system are the rotation matrix columns
``u, v, w`` of every link whose orientation is not fixed by the base or the
target.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .contractor import Constraint, ContractionOperator, DimensionMismatch, Expr, Var
from .interval import Interval, IntervalBox
from .transforms import inv_transform, is_rigid, make_transform, revolute_exp

__all__ = [
    "ModelError",
    "JointSpec",
    "RobotModel",
    "PoseTarget",
    "ConstraintSystem",
    "forward_kinematics",
    "build_constraint_system",
    "residual",
    "load_model",
    "load_target",
    "bundled_model",
    "BUNDLED_MODELS",
]

FULL_POSE = "full_pose"
POSITION_AND_Z = "position_and_z_axis"
MODES = (FULL_POSE, POSITION_AND_Z)

UNIT_TOL = 1e-9
# Equalities are enforced to this absolute slack so that rounding in model and
# target data cannot make an over-determined system spuriously infeasible.
EQUALITY_SLACK = 1e-10

_MODEL_DIR = Path(__file__).parent / "models"
BUNDLED_MODELS = ("planar2r", "planar3r", "ur5", "iiwa")


class ModelError(ValueError):
    pass


def _vec3(x, what: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise ModelError(f"{what} must be a finite 3-vector, got {x!r}")
    return a


@dataclass(frozen=True, eq=False)
class JointSpec:
    axis: np.ndarray
    point: np.ndarray
    limits: Interval
    zero_transform: np.ndarray
    # axis and axis point expressed in the child frame, derived at load time
    axis_next: np.ndarray = field(init=False, repr=False)
    point_next: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        axis = _vec3(self.axis, "joint axis")
        point = _vec3(self.point, "joint point")
        if abs(np.linalg.norm(axis) - 1.0) > UNIT_TOL:
            raise ModelError(f"joint axis {axis} is not a unit vector")
        lim = self.limits if isinstance(self.limits, Interval) else Interval(*self.limits)
        if not (lim.lo >= -2 * math.pi - 1e-12 and lim.hi <= 2 * math.pi + 1e-12 and lim.lo < lim.hi):
            raise ModelError(f"joint limits {tuple(lim)} must satisfy -2pi <= lo < hi <= 2pi")
        Z = np.asarray(self.zero_transform, dtype=float)
        if not is_rigid(Z):
            raise ModelError("joint zero_transform is not a rigid transform")
        Zi = inv_transform(Z)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "limits", lim)
        object.__setattr__(self, "zero_transform", Z)
        object.__setattr__(self, "axis_next", Zi[:3, :3] @ axis)
        object.__setattr__(self, "point_next", Zi[:3, :3] @ point + Zi[:3, 3])

    def motion(self, theta: float) -> np.ndarray:
        """Relative transform of the child link, ``exp(xi theta) @ zero_transform``."""
        return revolute_exp(self.axis, self.point, theta) @ self.zero_transform


@dataclass(frozen=True, eq=False)
class RobotModel:
    joints: tuple
    base_frame: np.ndarray = field(default_factory=lambda: np.eye(4))
    ee_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    name: str = ""

    def __post_init__(self):
        joints = tuple(self.joints)
        if not joints:
            raise ModelError("a robot needs at least one joint")
        base = np.asarray(self.base_frame, dtype=float)
        if not is_rigid(base):
            raise ModelError("base_frame is not a rigid transform")
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "base_frame", base)
        object.__setattr__(self, "ee_offset", _vec3(self.ee_offset, "ee_offset"))

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def lower(self) -> np.ndarray:
        return np.array([j.limits.lo for j in self.joints])

    @property
    def upper(self) -> np.ndarray:
        return np.array([j.limits.hi for j in self.joints])

    def within_limits(self, theta, tol: float = 0.0) -> bool:
        th = np.asarray(theta, dtype=float)
        return bool(np.all(th >= self.lower - tol) and np.all(th <= self.upper + tol))

    def link_frames(self, theta) -> list[np.ndarray]:
        th = np.asarray(theta, dtype=float)
        if th.shape != (self.n,):
            raise DimensionMismatch(f"theta has shape {th.shape}, expected ({self.n},)")
        frames = [self.base_frame]
        for j, q in zip(self.joints, th):
            frames.append(frames[-1] @ j.motion(q))
        return frames

    def ee_pose(self, last_frame: np.ndarray) -> np.ndarray:
        return last_frame @ make_transform(t=self.ee_offset)

    def forward_kinematics(self, theta) -> np.ndarray:
        return self.ee_pose(self.link_frames(theta)[-1])

    def jacobian(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """EE pose and the 6 x n geometric Jacobian (linear rows first), world frame."""
        frames = self.link_frames(theta)
        T = self.ee_pose(frames[-1])
        p = T[:3, 3]
        J = np.empty((6, self.n))
        for i, j in enumerate(self.joints):
            F = frames[i]
            w = F[:3, :3] @ j.axis
            q = F[:3, :3] @ j.point + F[:3, 3]
            J[:3, i] = np.cross(w, p - q)
            J[3:, i] = w
        return T, J

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base_frame": _transform_to_dict(self.base_frame),
            "joints": [
                {
                    "axis": j.axis.tolist(),
                    "point": j.point.tolist(),
                    "limits": [j.limits.lo, j.limits.hi],
                    "zero_transform": _transform_to_dict(j.zero_transform),
                }
                for j in self.joints
            ],
            "ee_offset": self.ee_offset.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RobotModel":
        try:
            joints = [
                JointSpec(
                    axis=j["axis"],
                    point=j["point"],
                    limits=tuple(j["limits"]),
                    zero_transform=_transform_from_dict(j["zero_transform"]),
                )
                for j in data["joints"]
            ]
            base = _transform_from_dict(data["base_frame"]) if "base_frame" in data else np.eye(4)
            return cls(joints, base, data.get("ee_offset", [0.0, 0.0, 0.0]), data.get("name", ""))
        except KeyError as exc:
            raise ModelError(f"robot model is missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ModelError):
                raise
            raise ModelError(f"malformed robot model: {exc}") from None

    @classmethod
    def from_dh(cls, d: Sequence[float], a: Sequence[float], alpha: Sequence[float],
                limits: Sequence[tuple], name: str = "") -> "RobotModel":
        """Standard Denavit-Hartenberg chain (every joint about its frame's z axis)."""
        joints = []
        for di, ai, al, lim in zip(d, a, alpha, limits):
            ca, sa = math.cos(al), math.sin(al)
            Z = np.array([[1.0, 0.0, 0.0, ai], [0.0, ca, -sa, 0.0], [0.0, sa, ca, di], [0, 0, 0, 1.0]])
            joints.append(JointSpec((0.0, 0.0, 1.0), (0.0, 0.0, 0.0), tuple(lim), Z))
        return cls(joints, np.eye(4), np.zeros(3), name)


def _transform_to_dict(T) -> dict:
    return {"t": T[:3, 3].tolist(), "R": T[:3, :3].reshape(-1).tolist()}


def _transform_from_dict(d: dict) -> np.ndarray:
    R = np.asarray(d["R"], dtype=float)
    if R.size != 9:
        raise ModelError("rotation must have 9 row-major entries")
    return make_transform(R.reshape(3, 3), _vec3(d["t"], "translation"))


def forward_kinematics(model: RobotModel, theta) -> np.ndarray:
    return model.forward_kinematics(theta)


@dataclass(frozen=True, eq=False)
class PoseTarget:
    mode: str
    position: np.ndarray
    rotation: np.ndarray | None = None
    z_axis: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ModelError(f"unknown target mode {self.mode!r}")
        object.__setattr__(self, "position", _vec3(self.position, "target position"))
        if self.mode == FULL_POSE:
            if self.rotation is None:
                raise ModelError("full_pose target needs a rotation")
            R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
            if not is_rigid(make_transform(R)):
                raise ModelError("target rotation is not orthonormal")
            object.__setattr__(self, "rotation", R)
        else:
            if self.z_axis is None:
                raise ModelError("position_and_z_axis target needs a z_axis")
            w = _vec3(self.z_axis, "target z_axis")
            if abs(np.linalg.norm(w) - 1.0) > UNIT_TOL:
                raise ModelError("target z_axis is not a unit vector")
            object.__setattr__(self, "z_axis", w)

    @classmethod
    def from_transform(cls, T, mode: str = FULL_POSE) -> "PoseTarget":
        T = np.asarray(T, dtype=float)
        if mode == FULL_POSE:
            return cls(FULL_POSE, T[:3, 3], rotation=T[:3, :3])
        z = T[:3, 2] / np.linalg.norm(T[:3, 2])
        return cls(POSITION_AND_Z, T[:3, 3], z_axis=z)

    @classmethod
    def position_z(cls, position, z_axis=(0.0, 0.0, 1.0)) -> "PoseTarget":
        return cls(POSITION_AND_Z, position, z_axis=z_axis)

    def to_dict(self) -> dict:
        out = {"mode": self.mode, "position": self.position.tolist()}
        if self.mode == FULL_POSE:
            out["rotation"] = self.rotation.reshape(-1).tolist()
        else:
            out["z_axis"] = self.z_axis.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PoseTarget":
        try:
            mode = data["mode"]
            if mode == FULL_POSE:
                return cls(mode, data["position"], rotation=data["rotation"])
            return cls(mode, data["position"], z_axis=data["z_axis"])
        except KeyError as exc:
            raise ModelError(f"pose target is missing field {exc}") from None

    def pose_error(self, T) -> tuple[float, float]:
        """(position error, orientation error) of an EE pose against the target."""
        T = np.asarray(T)
        dp = float(np.linalg.norm(self.position - T[:3, 3]))
        if self.mode == FULL_POSE:
            from .transforms import rotation_log

            return dp, float(np.linalg.norm(rotation_log(self.rotation @ T[:3, :3].T)))
        z = T[:3, 2]
        return dp, float(math.atan2(np.linalg.norm(np.cross(z, self.z_axis)), float(np.dot(z, self.z_axis))))


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """Equations over link rotation components for one model/target pair."""

    model: RobotModel
    target: PoseTarget
    variables: tuple
    constraints: tuple
    free_links: tuple  # frame indices whose full rotation is unknown
    ee_partial: bool  # last frame has unknown u, v columns
    operator: ContractionOperator = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.variables)

    @property
    def initial_box(self) -> IntervalBox:
        return IntervalBox(-np.ones(self.dim), np.ones(self.dim))

    def link_offset(self, k: int) -> int | None:
        """Offset of frame ``k``'s first unknown component, or None if fixed."""
        if k in self.free_links:
            return 9 * self.free_links.index(k)
        if self.ee_partial and k == self.model.n:
            return 9 * len(self.free_links)
        return None

    def fixed_rotation(self, k: int) -> np.ndarray | None:
        if k == 0:
            return self.model.base_frame[:3, :3]
        if k == self.model.n and self.target.mode == FULL_POSE:
            return self.target.rotation
        return None

    def rotations_at(self, x) -> list[np.ndarray]:
        """Link rotations ``R_0..R_n`` encoded by point ``x``."""
        x = np.asarray(x, dtype=float)
        out = []
        for k in range(self.model.n + 1):
            R = self.fixed_rotation(k)
            if R is None:
                off = self.link_offset(k)
                if k == self.model.n and self.ee_partial:
                    R = np.column_stack([x[off:off + 3], x[off + 3:off + 6], self.target.z_axis])
                else:
                    R = x[off:off + 9].reshape(3, 3, order="F")
            out.append(R)
        return out

    def point_from_frames(self, frames) -> np.ndarray:
        """Rotation-component point for a list of link frames ``F_0..F_n``."""
        x = np.empty(self.dim)
        for k in self.free_links:
            off = self.link_offset(k)
            x[off:off + 9] = frames[k][:3, :3].reshape(-1, order="F")
        if self.ee_partial:
            off = self.link_offset(self.model.n)
            R = frames[self.model.n][:3, :3]
            x[off:off + 3] = R[:, 0]
            x[off + 3:off + 6] = R[:, 1]
        return x

    def point_from_theta(self, theta) -> np.ndarray:
        return self.point_from_frames(self.model.link_frames(theta))

    def residuals(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"point has {x.size} components, system has {self.dim}")
        return np.array([abs(c.expr.evaluate(x) - c.rhs) for c in self.constraints])

    def residual(self, x) -> float:
        r = self.residuals(x)
        return float(np.max(r)) if r.size else 0.0

    def jacobian(self, x, step: float = 1e-6) -> np.ndarray:
        """Central finite-difference Jacobian of the constraint values."""
        return self.operator.jacobian(x, step)


def residual(system: ConstraintSystem, point) -> float:
    return system.residual(point)


def _dedupe(constraints: list[Constraint]) -> list[Constraint]:
    seen = set()
    out = []
    for c in constraints:
        if c.is_trivial:
            out.append(c)
            continue
        key = tuple((m, round(v, 12)) for m, v in c.key()[:-1]) + (round(c.key()[-1], 12),)
        if key in seen:
            continue
        seen.add(key)
        out.append(c)
    return out


def build_constraint_system(model: RobotModel, target: PoseTarget, slack: float = EQUALITY_SLACK,
                            max_rounds: int = 10, min_relative_reduction: float = 0.01) -> ConstraintSystem:
    if not isinstance(model, RobotModel):
        raise ModelError("model must be a RobotModel")
    n = model.n
    ee_partial = target.mode == POSITION_AND_Z
    free_links = tuple(range(1, n))
    names: list[str] = []
    for k in free_links:
        names += [f"R{k}.{col}.{ax}" for col in "uvw" for ax in "xyz"]
    if ee_partial:
        names += [f"R{n}.{col}.{ax}" for col in "uv" for ax in "xyz"]

    # symbolic rotations: R[k][row][col] is an Expr or a float
    R: list = []
    for k in range(n + 1):
        if k == 0:
            R.append(model.base_frame[:3, :3].tolist())
        elif k < n:
            off = 9 * (k - 1)
            R.append([[Var(off + 3 * c + r) for c in range(3)] for r in range(3)])
        elif ee_partial:
            off = 9 * (n - 1)
            R.append([[Var(off + 3 * c + r) if c < 2 else float(target.z_axis[r]) for c in range(3)]
                      for r in range(3)])
        else:
            R.append(target.rotation.tolist())

    def matvec(Rk, v):
        return [sum((Expr.lift(Rk[r][c]) * float(v[c]) for c in range(3)), Expr()) for r in range(3)]

    def col(Rk, c):
        return [Expr.lift(Rk[r][c]) for r in range(3)]

    raw: list[Constraint] = []

    def add(lhs: Expr, rhs: float, label: str):
        c = Constraint.equation(lhs, rhs, label)
        if c.is_trivial:
            if abs(c.rhs) > 1e-9:
                raise ModelError(f"target is inconsistent with the fixed links ({label})")
            return
        raw.append(c)

    # joint axis transfer: R_{i+1} d_i^{(i+1)} = R_i d_i^{(i)}
    for i, j in enumerate(model.joints):
        lhs = matvec(R[i + 1], j.axis_next)
        rhs = matvec(R[i], j.axis)
        for r, ax in enumerate("xyz"):
            add(lhs[r] - rhs[r], 0.0, f"axis[{i}].{ax}")

    # position closure through all joint axis points
    base_R = model.base_frame[:3, :3]
    r1 = model.base_frame[:3, 3] + base_R @ model.joints[0].point
    acc = [Expr() for _ in range(3)]
    for k in range(1, n):
        seg = model.joints[k].point - model.joints[k - 1].point_next
        v = matvec(R[k], seg)
        acc = [a + b for a, b in zip(acc, v)]
    tail = matvec(R[n], model.joints[n - 1].point_next - model.ee_offset)
    acc = [a - b for a, b in zip(acc, tail)]
    for r, ax in enumerate("xyz"):
        add(acc[r], float(target.position[r] - r1[r]), f"position.{ax}")

    # orthonormality of every link with unknown components
    links = list(free_links) + ([n] if ee_partial else [])
    for k in links:
        u, v, w = col(R[k], 0), col(R[k], 1), col(R[k], 2)
        dot = lambda a, b: a[0] * b[0] + a[1] * b[1] + a[2] * b[2]  # noqa: E731
        add(dot(u, u), 1.0, f"R{k}.|u|")
        add(dot(v, v), 1.0, f"R{k}.|v|")
        add(dot(w, w), 1.0, f"R{k}.|w|")
        add(dot(u, v), 0.0, f"R{k}.u.v")
        add(dot(u, w), 0.0, f"R{k}.u.w")
        add(dot(v, w), 0.0, f"R{k}.v.w")
        cross = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
        for r, ax in enumerate("xyz"):
            add(cross[r] - w[r], 0.0, f"R{k}.uxv=w.{ax}")

    constraints = _dedupe(raw)
    if slack > 0:
        constraints = [Constraint(c.expr, c.rhs, c.label, slack) for c in constraints]
    op = ContractionOperator.from_constraints(constraints, len(names), max_rounds, min_relative_reduction)
    return ConstraintSystem(model, target, tuple(names), tuple(constraints), free_links, ee_partial, op)


def load_model(path) -> RobotModel:
    data = _read_json(path)
    try:
        return RobotModel.from_dict(data)
    except (ModelError, TypeError, ValueError) as exc:
        raise ModelError(f"{path}: {exc}") from None


def load_target(path) -> PoseTarget:
    data = _read_json(path)
    try:
        return PoseTarget.from_dict(data)
    except (ModelError, TypeError, ValueError) as exc:
        raise ModelError(f"{path}: {exc}") from None


def _read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def bundled_model(name: str) -> RobotModel:
    if name not in BUNDLED_MODELS:
        raise ModelError(f"no bundled model named {name!r}; choose from {BUNDLED_MODELS}")
    return load_model(_MODEL_DIR / f"{name}.json")

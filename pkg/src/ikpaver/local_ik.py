"""Damped least-squares instantaneous IK with random restarts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .robot import FULL_POSE, PoseTarget, RobotModel, build_constraint_system
from .transforms import rotation_log

__all__ = ["LocalIkConfig", "LocalIkResult", "NotConverged", "solve_local", "calc_new_sol"]


class NotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class LocalIkConfig:
    max_iterations: int = 200
    pose_tolerance: float = 1e-6
    damping_lambda: float = 1e-3
    max_restarts: int = 50
    rng_seed: int = 0
    max_step: float = 0.5  # rad, per iteration

    def __post_init__(self):
        if self.pose_tolerance <= 0:
            raise ValueError("pose_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class LocalIkResult:
    theta: np.ndarray
    iterations: int
    position_error: float
    orientation_error: float


def _error(target: PoseTarget, T: np.ndarray, J: np.ndarray):
    dp = target.position - T[:3, 3]
    if target.mode == FULL_POSE:
        dw = rotation_log(target.rotation @ T[:3, :3].T)
        return np.concatenate([dp, dw]), J
    z = T[:3, 2]
    axis = np.cross(z, target.z_axis)
    s = np.linalg.norm(axis)
    c = float(np.dot(z, target.z_axis))
    ang = np.arctan2(s, c)
    dw = axis * (ang / s) if s > 1e-15 else (np.zeros(3) if c > 0 else np.array([np.pi, 0.0, 0.0]))
    # rotation about the current z axis does not move it
    P = np.eye(3) - np.outer(z, z)
    Jr = J.copy()
    Jr[3:] = P @ J[3:]
    return np.concatenate([dp, P @ dw]), Jr


def _project(theta, lower, upper, full_turn):
    """Clamp to the limits; joints with a full turn of travel wrap instead."""
    inside = (theta >= lower) & (theta <= upper)
    wrapped = lower + np.mod(theta - lower, 2.0 * np.pi)
    return np.where(inside, theta, np.where(full_turn, wrapped, np.clip(theta, lower, upper)))


def solve_local(model: RobotModel, target: PoseTarget, seed_theta, cfg: LocalIkConfig = LocalIkConfig()
                ) -> LocalIkResult:
    """Converge from ``seed_theta`` to a joint vector reaching ``target``.

    Iterates are projected onto the joint limits. Raises :class:`NotConverged`
    if the pose error is still above tolerance after ``max_iterations``.
    """
    lower, upper = model.lower, model.upper
    full_turn = upper - lower >= 2.0 * np.pi
    theta = _project(np.asarray(seed_theta, dtype=float), lower, upper, full_turn)
    lam2 = cfg.damping_lambda**2
    for it in range(cfg.max_iterations + 1):
        T, J = model.jacobian(theta)
        e, Je = _error(target, T, J)
        pos_err = float(np.linalg.norm(e[:3]))
        rot_err = float(np.linalg.norm(e[3:]))
        if pos_err < cfg.pose_tolerance and rot_err < cfg.pose_tolerance:
            return LocalIkResult(theta, it, pos_err, rot_err)
        if it == cfg.max_iterations:
            break
        A = Je @ Je.T + lam2 * np.eye(6)
        step = Je.T @ np.linalg.solve(A, e)
        norm = np.linalg.norm(step)
        if norm > cfg.max_step:
            step *= cfg.max_step / norm
        theta = _project(theta + step, lower, upper, full_turn)
    raise NotConverged(f"not converged after {cfg.max_iterations} iterations "
                       f"(position error {pos_err:.3g}, orientation error {rot_err:.3g})")


def calc_new_sol(model: RobotModel, target: PoseTarget, solutions, cfg: LocalIkConfig = LocalIkConfig(),
                 rng: np.random.Generator | None = None, system=None, restarts: int | None = None
                 ) -> tuple[bool, np.ndarray | None]:
    """Look for a converged joint vector whose rotation point is not yet explored.

    ``solutions`` must provide ``contains_point(x) -> bool`` over
    rotation-component points (a :class:`SolutionSet` or the live search
    state).  Seeds are uniform within the joint limits.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    if system is None:
        system = build_constraint_system(model, target)
    lower, upper = model.lower, model.upper
    for _ in range(cfg.max_restarts if restarts is None else restarts):
        seed = rng.uniform(lower, upper)
        try:
            res = solve_local(model, target, seed, cfg)
        except NotConverged:
            continue
        x = system.point_from_theta(res.theta)
        if not solutions.contains_point(x):
            return True, res.theta
    return False, None

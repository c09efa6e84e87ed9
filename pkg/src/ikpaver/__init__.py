"""Interval branch-and-bound inverse kinematics.

Encloses every joint configuration that reaches a pose target in boxes of
width below epsilon, optionally guided by a numerical local-IK heuristic,
and orders one-dimensional solution sets into self-motion curves.
"""
from .interval import BisectionRule, Interval, IntervalBox
from .local_ik import LocalIkConfig, NotConverged, calc_new_sol, solve_local
from .paving import CurveSet, SelfMotionCurve, finalize_curves, insert_box
from .recovery import JointIntervalVector, recover_joint_box, recover_theta
from .robot import (
    BUNDLED_MODELS,
    ModelError,
    PoseTarget,
    RobotModel,
    build_constraint_system,
    bundled_model,
    forward_kinematics,
    load_model,
    load_target,
)
from .solver import (
    RunReport,
    SolutionSet,
    SolverConfig,
    Strategy,
    continue_manifold,
    explore_manifold,
    solve_heuristic,
    solve_vanilla,
)

__all__ = [
    "BisectionRule", "Interval", "IntervalBox",
    "LocalIkConfig", "NotConverged", "calc_new_sol", "solve_local",
    "CurveSet", "SelfMotionCurve", "finalize_curves", "insert_box",
    "JointIntervalVector", "recover_joint_box", "recover_theta",
    "BUNDLED_MODELS", "ModelError", "PoseTarget", "RobotModel", "build_constraint_system",
    "bundled_model", "forward_kinematics", "load_model", "load_target",
    "RunReport", "SolutionSet", "SolverConfig", "Strategy",
    "continue_manifold", "explore_manifold", "solve_heuristic", "solve_vanilla",
]

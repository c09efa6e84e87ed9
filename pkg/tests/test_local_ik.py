import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ikpaver.local_ik import LocalIkConfig, NotConverged, calc_new_sol, solve_local
from ikpaver.robot import PoseTarget, build_constraint_system, residual
from ikpaver.solver import SolutionSet, SolverConfig, solve_vanilla

from conftest import wrap
from oracles import planar2r_ik


def test_converges_to_closed_form_solution(planar2r, target_2r):
    res = solve_local(planar2r, target_2r, np.array([0.1, 1.4]))
    oracle = planar2r_ik(1.0, 1.0)
    assert any(np.all(np.abs(wrap(res.theta - o)) < 1e-6) for o in oracle)
    assert np.all(np.abs(wrap(res.theta - [0.0, math.pi / 2])) < 1e-6)
    assert res.position_error < 1e-6


def test_exact_seed_is_a_fixed_point(planar2r, target_2r):
    seed = np.array([math.pi / 2, -math.pi / 2])
    res = solve_local(planar2r, target_2r, seed)
    assert res.iterations <= 1
    assert np.allclose(res.theta, seed, atol=1e-6)


def test_unreachable_target_fails(planar2r):
    with pytest.raises(NotConverged, match="not converged"):
        solve_local(planar2r, PoseTarget.position_z((3.0, 0.0, 0.0)), np.array([0.2, 0.1]))


def test_config_validation():
    with pytest.raises(ValueError):
        LocalIkConfig(pose_tolerance=0.0)
    with pytest.raises(ValueError):
        LocalIkConfig(max_iterations=0)


@given(st.lists(st.floats(-math.pi, math.pi), min_size=6, max_size=6))
def test_full_pose_convergence_is_feasible(theta0):
    from ikpaver import bundled_model

    ur5 = bundled_model("ur5")
    target = PoseTarget.from_transform(ur5.forward_kinematics(theta0))
    # seed near the answer so convergence is expected; the check is on what a success means
    seed = np.clip(np.array(theta0) + 0.05, ur5.lower, ur5.upper)
    cfg = LocalIkConfig()
    try:
        res = solve_local(ur5, target, seed, cfg)
    except NotConverged:
        return
    pos, rot = target.pose_error(ur5.forward_kinematics(res.theta))
    assert pos < cfg.pose_tolerance and rot < cfg.pose_tolerance
    assert ur5.within_limits(res.theta)
    s = build_constraint_system(ur5, target)
    assert residual(s, s.point_from_theta(res.theta)) < 10 * cfg.pose_tolerance


def test_position_and_z_mode(iiwa):
    rng = np.random.default_rng(0)
    th = rng.uniform(iiwa.lower, iiwa.upper) * 0.5
    target = PoseTarget.from_transform(iiwa.forward_kinematics(th), "position_and_z_axis")
    ok, theta = calc_new_sol(iiwa, target, SolutionSet(0.05), LocalIkConfig(rng_seed=1))
    assert ok
    pos, ang = target.pose_error(iiwa.forward_kinematics(theta))
    assert pos < 1e-6 and ang < 1e-6
    assert iiwa.within_limits(theta)


def test_empty_set_gives_feasible_point(planar3r, target_3r):
    ok, theta = calc_new_sol(planar3r, target_3r, SolutionSet(0.05))
    assert ok
    s = build_constraint_system(planar3r, target_3r)
    assert residual(s, s.point_from_theta(theta)) < 1e-5


def test_deterministic_replay(planar3r, target_3r):
    def run():
        rng = np.random.default_rng(7)
        out = []
        for _ in range(5):
            ok, th = calc_new_sol(planar3r, target_3r, SolutionSet(0.05), LocalIkConfig(), rng=rng)
            out.append((ok, None if th is None else th.tobytes()))
        return out

    assert run() == run()


def test_fully_covered_manifold_gives_failure(planar2r, target_2r):
    s = build_constraint_system(planar2r, target_2r)
    sols = solve_vanilla(s, planar2r, SolverConfig(epsilon=0.01))
    assert sols.cluster_count == 2
    ok, theta = calc_new_sol(planar2r, target_2r, sols, LocalIkConfig(max_restarts=20), system=s)
    assert not ok and theta is None


def test_novelty(planar3r, target_3r):
    s = build_constraint_system(planar3r, target_3r)
    sols = solve_vanilla(s, planar3r, SolverConfig(epsilon=0.05, max_accepted=40))
    rng = np.random.default_rng(3)
    for _ in range(10):
        ok, theta = calc_new_sol(planar3r, target_3r, sols, LocalIkConfig(), rng=rng, system=s)
        if ok:
            x = s.point_from_theta(theta)
            assert not any(b.box.contains(x) for b in sols)

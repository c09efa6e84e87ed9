"""Self-motion of a redundant planar 3R arm.

With three joints and a two-dimensional position target the solutions form
curves.  The heuristic solver seeds the search with local IK, walks along the
curve with manifold continuation and orders the accepted boxes as it goes.
Stopping early returns a valid partial answer.
"""
import numpy as np

from ikpaver import PoseTarget, SolverConfig, build_constraint_system, bundled_model, solve_heuristic

model = bundled_model("planar3r")
target = PoseTarget.position_z((0.5, 0.0, 0.0))
system = build_constraint_system(model, target)

for budget in (0.5, None):
    cfg = SolverConfig(epsilon=0.05, exploration_strategy="mc", time_budget=budget, rng_seed=1)
    curves = solve_heuristic(system, model, target, cfg)
    rep = curves.report
    label = "unbounded" if budget is None else f"{budget} s"
    print(f"budget {label}: {rep.accepted} boxes, {len(curves)} curves, stopped by {rep.termination}")
    for c in curves.ordered():
        print(f"  curve {c.id}: {len(c)} boxes, ends {c.ends}")

# walk one full loop and watch the first joint sweep around
loop = curves.curve_boxes(curves.ordered()[0])
theta1 = np.unwrap([b.joints.mid[0] for b in loop])
print(f"joint 1 travels {np.ptp(theta1):.2f} rad along the first loop")

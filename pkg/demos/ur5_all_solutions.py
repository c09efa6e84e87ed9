"""All inverse kinematics solutions of a UR5 pose, and how epsilon trades
box width against run time."""
import time

import numpy as np

from ikpaver import PoseTarget, SolverConfig, build_constraint_system, bundled_model, solve_vanilla

model = bundled_model("ur5")
theta = np.array([0.4, -1.1, 1.3, -0.6, 1.2, 0.3])
target = PoseTarget.from_transform(model.forward_kinematics(theta))
system = build_constraint_system(model, target)

for eps in (0.05, 0.01, 0.001):
    t0 = time.perf_counter()
    sols = solve_vanilla(system, model, SolverConfig(epsilon=eps))
    widths = np.concatenate([b.joints.widths for b in sols])
    print(f"eps {eps:<6} {sols.cluster_count} solutions, {len(sols):3d} boxes, "
          f"mean joint width {widths.mean():.2e} rad, {time.perf_counter() - t0:.2f} s")

print("the generating configuration is enclosed:", any(b.joints.contains(theta, 1e-9) for b in sols))

"""A planar 2R arm reaching (1, 1): elbow up and elbow down.

Vanilla branch and bound over link-rotation components finds every IK
solution; the accepted boxes fall into two clusters, one per elbow pose.
"""
import math

from ikpaver import PoseTarget, SolverConfig, build_constraint_system, bundled_model, solve_vanilla

model = bundled_model("planar2r")
target = PoseTarget.position_z((1.0, 1.0, 0.0))
system = build_constraint_system(model, target)

sols = solve_vanilla(system, model, SolverConfig(epsilon=0.01))
print(f"{len(sols)} boxes in {sols.cluster_count} clusters ({sols.report.wall_time:.2f} s)")

labels = sols.clusters()
for c in range(sols.cluster_count):
    members = [b for b, l in zip(sols, labels) if l == c]
    mid = members[0].joints.mid
    print(f"cluster {c}: {len(members)} boxes near theta = ({mid[0]:+.4f}, {mid[1]:+.4f})")

# the closed-form answers are (0, pi/2) and (pi/2, -pi/2)
for ref in ((0.0, math.pi / 2), (math.pi / 2, -math.pi / 2)):
    print(ref, "enclosed:", any(b.joints.contains(ref, 1e-9) for b in sols))

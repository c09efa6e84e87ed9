import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from ikpaver.contractor import (
    Constraint,
    ContractionOperator,
    DimensionMismatch,
    Var,
    contract,
    contract_single,
    sqr,
)
from ikpaver.interval import IntervalBox
from ikpaver.robot import build_constraint_system, PoseTarget

from oracles import enclosing_box, random_exact_system

x, y = Var(0), Var(1)


def op(*cons, dim=2, **kw):
    return ContractionOperator.from_constraints(cons, dim, **kw)


def test_square_root_forced():
    out = contract(op(Constraint.equation(sqr(x), 4.0), dim=1), IntervalBox([0], [10]))
    assert out.lo[0] <= 2.0 <= out.hi[0]
    assert out.widths[0] < 1e-12


def test_linear_pair():
    out = contract(op(Constraint.equation(x + y, 1.0)), IntervalBox([0, 0.5], [1, 2]))
    assert out == IntervalBox([0, 0.5], [0.5, 1])


def test_product_infeasible():
    out = contract(op(Constraint.equation(x * y, 1.0)), IntervalBox([2, 2], [3, 3]))
    assert out.is_empty


def test_single_unit_norm():
    out = contract_single(Constraint.equation(sqr(x), 1.0), IntervalBox([0.5], [2]))
    assert out.lo[0] <= 1.0 <= out.hi[0] and out.widths[0] < 1e-12


def test_orthogonality_fixed_point():
    u1, u2, v1, v2 = (Var(i) for i in range(4))
    c = Constraint.equation(u1 * v1 + u2 * v2, 0.0)
    box = IntervalBox([-1] * 4, [1] * 4)
    assert contract_single(c, box) == box
    forced = contract_single(c, IntervalBox([1, 0, -1, -1], [1, 0, 1, 1]))
    assert forced.lo[2] == 0.0 and forced.hi[2] == 0.0
    assert forced.lo[3] == -1 and forced.hi[3] == 1


def test_constraint_taxonomy():
    assert Constraint.equation(x + 2 * y, 3).kind == "linear"
    assert Constraint.equation(sqr(x) + y, 3).kind == "quadratic"
    assert Constraint.equation(x * y - x, 3).kind == "bilinear"


def test_dimension_errors():
    with pytest.raises(DimensionMismatch):
        op(Constraint.equation(Var(3), 0.0), dim=2)
    with pytest.raises(DimensionMismatch):
        contract(op(Constraint.equation(x, 0.0)), IntervalBox([0], [1]))


def _soundness_trials(n, seed):
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(n):
        dim = int(rng.integers(1, 7))
        p, cons = random_exact_system(rng, dim, int(rng.integers(1, 6)))
        lo, hi = enclosing_box(rng, p)
        o = op(*cons, dim=dim, max_rounds=int(rng.integers(1, 20)))
        out = contract(o, IntervalBox(lo, hi))
        if out.is_empty or not out.contains(p):
            violations += 1
    return violations


def test_soundness_random_systems():
    assert _soundness_trials(2000, 5) == 0


def test_soundness_on_ik_systems(ur5):
    rng = np.random.default_rng(3)
    for _ in range(200):
        theta = rng.uniform(-np.pi, np.pi, ur5.n)
        target = PoseTarget.from_transform(ur5.forward_kinematics(theta))
        system = build_constraint_system(ur5, target)
        p = system.point_from_theta(theta)
        lo = np.maximum(p - rng.uniform(0, 0.5, p.shape), -1.0)
        hi = np.minimum(p + rng.uniform(0, 0.5, p.shape), 1.0)
        out = contract(system.operator, IntervalBox(lo, hi))
        assert not out.is_empty and out.contains(p)


@given(st.integers(0, 2**32 - 1))
def test_contractance(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 5))
    _, cons = random_exact_system(rng, dim, 3)
    # an arbitrary box, not necessarily containing the solution point
    c = rng.uniform(-4, 4, dim)
    w = rng.uniform(0, 3, dim)
    box = IntervalBox(c - w, c + w)
    out = contract(op(*cons, dim=dim), box)
    assert out.is_empty or out.is_subset(box)


@given(st.integers(0, 2**32 - 1))
@example(175201780)  # a further sweep used to shrink by 4%
def test_idempotent_up_to_tolerance(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 5))
    p, cons = random_exact_system(rng, dim, 3)
    lo, hi = enclosing_box(rng, p)
    o = op(*cons, dim=dim, max_rounds=10_000, min_relative_reduction=0.01)
    once = contract(o, IntervalBox(lo, hi))
    twice = contract(o, once)
    w1, w2 = once.widths, twice.widths
    shrink = np.where(w1 > 0, (w1 - w2) / np.where(w1 > 0, w1, 1), 0.0)
    assert np.all(shrink <= 0.01 + 1e-12)


def test_operator_is_reentrant():
    p = np.array([0.5, -0.25])
    o = op(Constraint.equation(x * y, float(p[0] * p[1])), Constraint.equation(x + y, float(p.sum())))
    box = IntervalBox([-2, -2], [2, 2])
    assert contract(o, box) == contract(o, box)

"""Interval branch-and-bound over rotation components, with local-IK seeding.

The search tree is shared by both solvers.  Internal nodes record their split
(dimension, value) and their two children, leaves record a box and a status.
Processing a node is a pure function of its box and depth, so the final
partition of the initial box does not depend on the order in which nodes are
visited; the heuristics only change that order.
"""
from __future__ import annotations

import enum
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .adjacency import adjacency_pairs, arcs_adjacent, components
from .interval import BisectionRule, IntervalBox, select_split_index
from .local_ik import LocalIkConfig, calc_new_sol
from .recovery import JointIntervalVector, JointRecovery, arc_hull

__all__ = [
    "Strategy",
    "SolverConfig",
    "SearchNode",
    "SolutionBox",
    "SolutionSet",
    "RunReport",
    "SearchState",
    "solve_vanilla",
    "solve_heuristic",
    "explore_manifold",
    "continue_manifold",
    "manifold_regions",
    "search_buffer",
]

UNEXPLORED, EMPTY, SOLUTION, SPLIT, PRUNED = range(5)
STATUS_NAMES = ("unexplored", "empty", "solution", "split", "pruned")

EXHAUSTED = "exhausted"
BUDGET = "budget"
EARLY_MC = "early-MC"


class Strategy(str, enum.Enum):
    DFS = "dfs"
    MC = "mc"


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 0.01
    time_budget: float | None = None  # seconds; None is unbounded
    bisection_rule: BisectionRule = BisectionRule.ROUND_ROBIN
    exploration_strategy: Strategy = Strategy.DFS
    max_rounds: int = 10
    min_relative_reduction: float = 0.01
    rng_seed: int = 0
    local_ik: LocalIkConfig = field(default_factory=LocalIkConfig)
    # DFS keeps popping while the top of the stack is at most this many epsilons wide
    dfs_locality: float = 8.0
    # stop as soon as continuation and local IK both run dry (MC only)
    early_termination: bool = False
    novelty_tol: float = 1e-6
    tangent_step: float = 1e-6
    max_accepted: int | None = None
    # accepted boxes are re-paved down to refine_ratio * epsilon to tighten
    # their joint arcs; boxes refuted there are discarded (0 disables)
    refine_ratio: float = 0.125
    refine_max_nodes: int = 4000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.time_budget is not None and self.time_budget < 0:
            raise ValueError("time_budget must be non-negative")
        if not 0.0 <= self.refine_ratio < 1.0:
            raise ValueError("refine_ratio must lie in [0, 1)")
        object.__setattr__(self, "bisection_rule", BisectionRule(self.bisection_rule))
        object.__setattr__(self, "exploration_strategy", Strategy(self.exploration_strategy))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bisection_rule"] = self.bisection_rule.value
        d["exploration_strategy"] = self.exploration_strategy.value
        return d


@dataclass(frozen=True)
class SearchNode:
    id: int
    box: IntervalBox | None
    depth: int
    parent: int
    status: str


@dataclass(eq=False)
class SolutionBox:
    box: IntervalBox
    joints: JointIntervalVector | None
    node: int = -1
    curve_id: int | None = None

    def key(self) -> tuple:
        return tuple(self.box.lo.tolist()) + tuple(self.box.hi.tolist())


class SolutionSet:
    """Accepted boxes in acceptance order, with joint-space clustering."""

    def __init__(self, epsilon: float):
        self.epsilon = epsilon
        self.boxes: list[SolutionBox] = []
        self.budget_exhausted = False
        self.report: RunReport | None = None
        self._cache: dict = {}

    def add(self, sb: SolutionBox):
        self.boxes.append(sb)
        self._cache.clear()

    def __len__(self):
        return len(self.boxes)

    def __iter__(self):
        return iter(self.boxes)

    def __getitem__(self, i) -> SolutionBox:
        return self.boxes[i]

    def _arrays(self, name):
        if name not in self._cache:
            if name == "rot":
                lo = np.array([b.box.lo for b in self.boxes]).reshape(len(self), -1)
                hi = np.array([b.box.hi for b in self.boxes]).reshape(len(self), -1)
            else:
                lo = np.array([b.joints.lo for b in self.boxes]).reshape(len(self), -1)
                hi = np.array([b.joints.hi for b in self.boxes]).reshape(len(self), -1)
            self._cache[name] = (lo, hi)
        return self._cache[name]

    def rotation_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self._arrays("rot")

    def joint_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self._arrays("joint")

    def keys(self) -> set:
        return {b.key() for b in self.boxes}

    def contains_point(self, x, tol: float = 1e-6) -> bool:
        # the default tolerance matches the local IK's pose tolerance, so a
        # converged point next to a box that already encloses it is not "new"
        if not self.boxes:
            return False
        lo, hi = self.rotation_arrays()
        x = np.asarray(x, dtype=float)
        return bool(np.any(np.all((lo - tol <= x) & (x <= hi + tol), axis=1)))

    def contains_theta(self, theta, inflate: float = 0.0) -> bool:
        if not self.boxes:
            return False
        lo, hi = self.joint_arrays()
        th = np.asarray(theta, dtype=float)
        return bool(np.any(arcs_adjacent(lo, hi, th[None, :], th[None, :], 0.5 * inflate)))

    def clusters(self) -> np.ndarray:
        """Cluster label per box: transitive joint-space adjacency after ``epsilon`` inflation."""
        if "labels" not in self._cache:
            lo, hi = self.joint_arrays()
            self._cache["labels"] = components(len(self), adjacency_pairs(lo, hi, self.epsilon))
        return self._cache["labels"]

    @property
    def cluster_count(self) -> int:
        labels = self.clusters()
        return int(labels.max()) + 1 if labels.size else 0

    def mean_joint_width(self) -> float:
        if not self.boxes:
            return 0.0
        lo, hi = self.joint_arrays()
        return float(np.mean(hi - lo))


@dataclass
class RunReport:
    config: dict
    mode: str
    termination: str = EXHAUSTED
    wall_time: float = 0.0
    phase_times: dict = field(default_factory=dict)
    contracted: int = 0
    bisected: int = 0
    discarded: int = 0
    accepted: int = 0
    remaining: int = 0
    nodes_created: int = 0
    local_ik_calls: int = 0
    local_ik_successes: int = 0
    early_termination_time: float | None = None
    solutions: int = 0
    clusters: int = 0
    curves: int | None = None
    mean_joint_width: float | None = None
    max_joint_width: float | None = None
    mean_midpoint_position_error: float | None = None
    mean_midpoint_orientation_error: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _full_turn(model) -> bool:
    return bool(np.all(model.upper - model.lower >= 2.0 * math.pi - 1e-9))


class SearchState:
    """Search tree, LIFO buffer of unexplored leaves, and accepted solutions.

    ``system`` needs ``operator`` and ``initial_box``; a ``model`` (taken
    from ``system.model`` when present) enables joint recovery and limit
    pruning.
    """

    def __init__(self, system, cfg: SolverConfig, model=None, on_accept=None):
        self.system = system
        self.cfg = cfg
        self.model = model if model is not None else getattr(system, "model", None)
        self.op = system.operator.with_params(cfg.max_rounds, cfg.min_relative_reduction)
        self.scratch = self.op.scratch()
        self.refined = 0
        self.refuted = 0
        self.eps = cfg.epsilon
        self.recovery = JointRecovery(system) if self.model is not None else None
        self.limited = self.model is not None and not _full_turn(self.model)
        self.on_accept = on_accept

        self.parent: list[int] = []
        self.depth: list[int] = []
        self.status: list[int] = []
        self.split_dim: list[int] = []
        self.split_val: list[float] = []
        self.child: list[int] = []  # id of the left child; the right one is child + 1
        self.lo: list = []
        self.hi: list = []
        self.stack: list[int] = []

        self.solutions = SolutionSet(cfg.epsilon)
        self.contracted = 0
        self.bisected = 0
        self.discarded = 0
        self.unexplored = 0
        self.start = time.perf_counter()
        self.deadline = math.inf if cfg.time_budget is None else self.start + cfg.time_budget
        self.stopped_by_budget = False

        box = system.initial_box
        self.push(self._new_node(np.array(box.lo), np.array(box.hi), -1, 0))

    # -- bookkeeping -----------------------------------------------------
    def _new_node(self, lo, hi, parent, depth) -> int:
        self.parent.append(parent)
        self.depth.append(depth)
        self.status.append(UNEXPLORED)
        self.split_dim.append(-1)
        self.split_val.append(math.nan)
        self.child.append(-1)
        self.lo.append(lo)
        self.hi.append(hi)
        self.unexplored += 1
        return len(self.status) - 1

    @property
    def n_nodes(self) -> int:
        return len(self.status)

    def node(self, i: int) -> SearchNode:
        box = IntervalBox(self.lo[i], self.hi[i]) if self.lo[i] is not None else None
        return SearchNode(i, box, self.depth[i], self.parent[i], STATUS_NAMES[self.status[i]])

    def push(self, i: int):
        self.stack.append(i)

    def _clean_top(self):
        st = self.stack
        while st and self.status[st[-1]] != UNEXPLORED:
            st.pop()

    def peek(self) -> int | None:
        self._clean_top()
        return self.stack[-1] if self.stack else None

    def pop(self) -> int | None:
        self._clean_top()
        return self.stack.pop() if self.stack else None

    @property
    def buffer_empty(self) -> bool:
        return self.unexplored == 0

    def buffered(self) -> list[int]:
        return [i for i in dict.fromkeys(self.stack) if self.status[i] == UNEXPLORED]

    def expired(self) -> bool:
        if self.cfg.max_accepted is not None and len(self.solutions) >= self.cfg.max_accepted:
            self.stopped_by_budget = True
            return True
        if time.perf_counter() >= self.deadline:
            self.stopped_by_budget = True
            return True
        return False

    def cell_width(self, i: int) -> float:
        return float(np.max(self.hi[i] - self.lo[i])) if self.lo[i].size else 0.0

    # -- node processing -------------------------------------------------
    def _recover(self, lo, hi) -> JointIntervalVector:
        return self.recovery(lo, hi)

    def _certify(self, lo, hi) -> JointIntervalVector | None:
        """Joint arcs of an accepted box, tightened over a local sub-paving.

        Returns None if the sub-paving proves the box holds no solution.  If
        the node budget runs out the arcs of the whole box are used.
        """
        target = self.cfg.refine_ratio * self.eps
        if target <= 0.0:
            return self._recover(lo, hi)
        self.refined += 1
        op, scratch = self.op, self.scratch
        rule = self.cfg.bisection_rule
        todo = [(lo.copy(), hi.copy(), 0)]
        arcs_lo, arcs_hi = [], []
        budget = self.cfg.refine_max_nodes
        while todo:
            budget -= 1
            if budget < 0:
                return self._recover(lo, hi)
            a, b, depth = todo.pop()
            if not op.contract_arrays(a, b, scratch):
                continue
            w = b - a
            if float(np.max(w)) < target:
                j = self._recover(a, b)
                arcs_lo.append(j.lo)
                arcs_hi.append(j.hi)
                continue
            d = select_split_index(w, rule, depth, target)
            v = 0.5 * (a[d] + b[d])
            b1 = b.copy()
            b1[d] = v
            a2 = a.copy()
            a2[d] = v
            todo.append((a, b1, depth + 1))
            todo.append((a2, b, depth + 1))
        if not arcs_lo:
            self.refuted += 1
            return None
        return arc_hull(arcs_lo, arcs_hi)

    def process(self, i: int) -> SolutionBox | None:
        """Contract node ``i``; discard, accept or split it."""
        if self.status[i] != UNEXPLORED:
            raise ValueError(f"node {i} is not unexplored")
        lo = self.lo[i].copy()
        hi = self.hi[i].copy()
        self.contracted += 1
        self.unexplored -= 1
        if not self.op.contract_arrays(lo, hi, self.scratch):
            return self._discard(i, EMPTY)
        w = hi - lo
        accept = lo.size == 0 or float(np.max(w)) < self.eps
        joints = None
        if self.recovery is not None and accept:
            joints = self._certify(lo, hi)
            if joints is None:
                return self._discard(i, EMPTY)
        elif self.limited:
            joints = self._recover(lo, hi)
        if joints is not None:
            if self.limited and not joints.intersects_limits(self.model.lower, self.model.upper):
                return self._discard(i, PRUNED)
        if accept:
            self.status[i] = SOLUTION
            self.lo[i] = lo
            self.hi[i] = hi
            sb = SolutionBox(IntervalBox(lo, hi), joints, i)
            self.solutions.add(sb)
            if self.on_accept is not None:
                self.on_accept(sb)
            return sb
        d = select_split_index(w, self.cfg.bisection_rule, self.depth[i], self.eps)
        v = 0.5 * (lo[d] + hi[d])
        left_hi = hi.copy()
        left_hi[d] = v
        right_lo = lo.copy()
        right_lo[d] = v
        depth = self.depth[i] + 1
        a = self._new_node(lo, left_hi, i, depth)
        b = self._new_node(right_lo, hi, i, depth)
        self.status[i] = SPLIT
        self.split_dim[i] = d
        self.split_val[i] = v
        self.child[i] = a
        self.lo[i] = self.hi[i] = None
        self.bisected += 1
        self.push(b)
        self.push(a)
        return None

    def _discard(self, i, status):
        self.status[i] = status
        self.lo[i] = self.hi[i] = None
        self.discarded += 1
        return None

    # -- tree queries ----------------------------------------------------
    def locate(self, x, tol: float = 0.0) -> tuple[int, str]:
        """Leaf reached by ``x`` and what is known there.

        ``"unexplored"`` and ``"solution"`` require ``x`` to lie (within
        ``tol``) in the leaf's box; ``"outside"`` means contraction already
        cut the region around ``x`` away.
        """
        i = 0
        status, dim, val, child = self.status, self.split_dim, self.split_val, self.child
        while status[i] == SPLIT:
            i = child[i] if x[dim[i]] < val[i] else child[i] + 1
        s = status[i]
        if s in (UNEXPLORED, SOLUTION):
            inside = bool(np.all(self.lo[i] - tol <= x) and np.all(x <= self.hi[i] + tol))
            return i, STATUS_NAMES[s] if inside else "outside"
        return i, STATUS_NAMES[s]

    def contains_point(self, x) -> bool:
        """Is ``x`` in explored territory (solved, proven empty or pruned)?"""
        return self.locate(np.asarray(x, dtype=float), self.cfg.novelty_tol)[1] != "unexplored"

    def query(self, qlo, qhi, want=(UNEXPLORED,)) -> list[int]:
        """Leaves with a status in ``want`` whose box meets ``[qlo, qhi]``."""
        out = []
        todo = [0]
        status, dim, val, child = self.status, self.split_dim, self.split_val, self.child
        while todo:
            i = todo.pop()
            s = status[i]
            if s == SPLIT:
                d = dim[i]
                if qhi[d] >= val[i]:
                    todo.append(child[i] + 1)
                if qlo[d] <= val[i]:
                    todo.append(child[i])
            elif s in want:
                if np.all(self.lo[i] <= qhi) and np.all(qlo <= self.hi[i]):
                    out.append(i)
        return out

    def report(self, mode: str) -> RunReport:
        return RunReport(
            config=self.cfg.to_dict(),
            mode=mode,
            contracted=self.contracted,
            bisected=self.bisected,
            discarded=self.discarded,
            accepted=len(self.solutions),
            remaining=self.unexplored,
            nodes_created=self.n_nodes,
        )


# -- search building blocks -----------------------------------------------------

def search_buffer(state: SearchState) -> list[SolutionBox]:
    """Pop one buffered node and process it."""
    i = state.pop()
    if i is None:
        return []
    sb = state.process(i)
    return [sb] if sb is not None else []


def _dfs_neighbourhood(state: SearchState) -> list[SolutionBox]:
    out = []
    limit = state.cfg.dfs_locality * state.eps
    while not state.expired():
        i = state.peek()
        if i is None or state.cell_width(i) > limit:
            break
        out += search_buffer(state)
    return out


def _overlap(state: SearchState, region: IntervalBox, skip: int) -> float:
    w = region.widths
    nd = w > 0
    total = 0.0
    for j in state.query(region.lo, region.hi, (SOLUTION,)):
        if j == skip:
            continue
        inter = np.minimum(state.hi[j], region.hi) - np.maximum(state.lo[j], region.lo)
        total += float(np.prod(np.clip(inter[nd], 0.0, None) / w[nd]))
    return total


def manifold_regions(sol: SolutionBox, state: SearchState) -> tuple[list[IntervalBox], bool]:
    """Boxes where the curve through ``sol`` should continue.

    The tangent is the right singular vector of the smallest singular value
    of the constraint Jacobian at the box midpoint.  Returns the shifted
    box(es) and whether the tangent was reliable; without a reliable tangent
    the box inflated by epsilon is returned instead.
    """
    box = sol.box
    eps = state.eps
    jac = getattr(state.system, "jacobian", None)
    tangent = None
    if jac is not None and len(box) >= 2:
        J = jac(box.mid(), state.cfg.tangent_step)
        if J.shape[0] >= J.shape[1]:
            _, s, vt = np.linalg.svd(J)
            if s[0] > 0 and s[-2] >= 1e-4 * s[0]:
                tangent = vt[-1]
    if tangent is None:
        return [box.inflate(eps)], False
    shift = eps * tangent
    fwd = IntervalBox(box.lo + shift, box.hi + shift)
    bwd = IntervalBox(box.lo - shift, box.hi - shift)
    of = _overlap(state, fwd, sol.node)
    ob = _overlap(state, bwd, sol.node)
    if abs(of - ob) <= 1e-12 * max(of, ob, 1.0):
        return [fwd, bwd], True
    return ([fwd] if of < ob else [bwd]), True


def continue_manifold(sol: SolutionBox, state: SearchState) -> int | None:
    """A buffered node meeting the continuation box of ``sol``, or None."""
    regions, _ = manifold_regions(sol, state)
    for r in regions:
        hits = state.query(r.lo, r.hi)
        if hits:
            return hits[0]
    return None


def _mc_walk(state: SearchState, start: SolutionBox) -> list[SolutionBox]:
    out = []
    frontier = [start]
    while frontier and not state.expired():
        sol = frontier.pop()
        regions, _ = manifold_regions(sol, state)
        for r in regions:
            while not state.expired():
                hits = state.query(r.lo, r.hi)
                if not hits:
                    break
                sb = state.process(hits[0])
                if sb is not None:
                    out.append(sb)
                    frontier.append(sb)
    return out


def explore_manifold(seed_theta, strategy: Strategy | str, state: SearchState) -> list[SolutionBox]:
    """Descend to the seed, bisect towards it until accepted, then explore around it."""
    strategy = Strategy(strategy)
    x = state.system.point_from_theta(seed_theta)
    tol = state.cfg.novelty_tol
    i, kind = state.locate(x, tol)
    if kind == "solution":
        return [next(b for b in state.solutions if b.node == i)]
    if kind != "unexplored":
        return []
    first = None
    while not state.expired():
        first = state.process(i)
        if state.status[i] != SPLIT:
            break
        c = state.child[i]
        i = c if x[state.split_dim[i]] < state.split_val[i] else c + 1
        if not (np.all(state.lo[i] - tol <= x) and np.all(x <= state.hi[i] + tol)):
            break  # the seed was contracted away
    if first is None:
        return []
    if strategy is Strategy.DFS:
        return [first] + _dfs_neighbourhood(state)
    return [first] + _mc_walk(state, first)


# -- drivers ---------------------------------------------------------------

def _summarize(state: SearchState, report: RunReport, target=None):
    sols = state.solutions
    report.wall_time = time.perf_counter() - state.start
    report.solutions = len(sols)
    report.remaining = state.unexplored
    report.accepted = len(sols)
    report.contracted = state.contracted
    report.bisected = state.bisected
    report.discarded = state.discarded
    report.nodes_created = state.n_nodes
    if state.model is not None and len(sols):
        report.clusters = sols.cluster_count
        lo, hi = sols.joint_arrays()
        report.mean_joint_width = float(np.mean(hi - lo))
        report.max_joint_width = float(np.max(hi - lo))
        if target is not None:
            errs = np.array([target.pose_error(state.model.forward_kinematics(b.joints.mid)) for b in sols])
            report.mean_midpoint_position_error = float(np.mean(errs[:, 0]))
            report.mean_midpoint_orientation_error = float(np.mean(errs[:, 1]))
    sols.report = report
    sols.budget_exhausted = report.termination == BUDGET


def solve_vanilla(system, model=None, cfg: SolverConfig = SolverConfig(), state: SearchState | None = None
                  ) -> SolutionSet:
    """Plain contract/bisect loop over the LIFO buffer."""
    if state is None:
        state = SearchState(system, cfg, model)
    report = state.report("vanilla")
    while True:
        if state.expired():
            report.termination = BUDGET
            break
        i = state.pop()
        if i is None:
            report.termination = EXHAUSTED
            break
        state.process(i)
    _summarize(state, report, getattr(system, "target", None))
    return state.solutions


def solve_heuristic(system, model=None, target=None, cfg: SolverConfig = SolverConfig(), on_accept=None):
    """Local-IK seeded search; returns the finalized :class:`CurveSet`.

    After a failed seed search the next ``2**k`` iterations (``k`` failures
    in a row) only work the buffer, so an exhausted local solver does not
    dominate the run.
    """
    from .paving import CurveSet, finalize_curves

    model = model if model is not None else system.model
    target = target if target is not None else system.target
    curves = CurveSet(cfg.epsilon, model)

    def accept(sb):
        curves.insert_box(sb)
        if on_accept is not None:
            on_accept(sb)

    state = SearchState(system, cfg, model, on_accept=accept)
    report = state.report("heuristic")
    rng = np.random.default_rng(cfg.rng_seed)
    strategy = cfg.exploration_strategy
    skip = 0
    fails = 0
    walked = False
    t_ik = 0.0
    while True:
        if state.expired():
            report.termination = BUDGET
            break
        if state.buffer_empty:
            report.termination = EXHAUSTED
            break
        if skip == 0:
            t0 = time.perf_counter()
            ok, theta = calc_new_sol(model, target, state, cfg.local_ik, rng, system)
            t_ik += time.perf_counter() - t0
            report.local_ik_calls += 1
            if ok:
                report.local_ik_successes += 1
                fails = 0
                if explore_manifold(theta, strategy, state):
                    walked = True
                continue
            if strategy is Strategy.MC and walked and report.early_termination_time is None:
                report.early_termination_time = time.perf_counter() - state.start
                if cfg.early_termination:
                    report.termination = EARLY_MC
                    break
            fails = min(fails + 1, 16)
            skip = 2**fails
        else:
            skip -= 1
        search_buffer(state)
    report.phase_times["local_ik"] = t_ik
    t0 = time.perf_counter()
    finalize_curves(curves, model, state)
    report.phase_times["paving"] = curves.insert_time + time.perf_counter() - t0
    _summarize(state, report, target)
    report.curves = len(curves.curves)
    curves.solutions = state.solutions
    curves.report = report
    curves.state = state
    return curves

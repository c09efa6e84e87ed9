"""Ordering accepted boxes into self-motion curves (1 DoF of redundancy).

Two boxes are adjacent when their joint arcs, each inflated by epsilon,
overlap in every joint (modulo 2*pi).  Curves are grown while the solver
runs; :func:`finalize_curves` rebuilds them from the complete box set so the
result does not depend on the order in which boxes arrived.
"""
from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .adjacency import adjacency_pairs, adjacent_to, arcs_adjacent, components

__all__ = ["OPEN", "LIMIT_CUT", "CLOSED", "SelfMotionCurve", "CurveSet", "insert_box", "finalize_curves"]

log = logging.getLogger(__name__)

OPEN = "open"
LIMIT_CUT = "limit-cut"
CLOSED = "closed"


@dataclass(eq=False)
class SelfMotionCurve:
    id: int
    members: list = field(default_factory=list)  # indices into CurveSet.boxes
    ends: list = field(default_factory=lambda: [OPEN, OPEN])

    @property
    def closed(self) -> bool:
        return self.ends[0] == CLOSED

    def __len__(self):
        return len(self.members)


class CurveSet:
    """Curves plus a pool of boxes that could not be ordered."""

    def __init__(self, epsilon: float, model=None):
        self.epsilon = epsilon
        self.model = model
        self.boxes: list = []
        self.curves: dict[int, SelfMotionCurve] = {}
        self.pool: list[int] = []
        self.owner: list[int] = []  # curve id per box, -1 when pooled
        self.diagnostics: list[str] = []
        self.insert_time = 0.0
        self.finalized = False
        self._next_id = 0
        self._lo = np.zeros((0, 0))
        self._hi = np.zeros((0, 0))
        # set by the solver
        self.solutions = None
        self.report = None
        self.state = None

    # -- storage ---------------------------------------------------------
    def _store(self, sb) -> int:
        k = len(self.boxes)
        n = sb.joints.lo.shape[0]
        if self._lo.shape[0] <= k:
            cap = max(64, 2 * self._lo.shape[0])
            lo = np.zeros((cap, n))
            hi = np.zeros((cap, n))
            if k:
                lo[:k] = self._lo[:k]
                hi[:k] = self._hi[:k]
            self._lo, self._hi = lo, hi
        self._lo[k] = sb.joints.lo
        self._hi[k] = sb.joints.hi
        self.boxes.append(sb)
        self.owner.append(-1)
        return k

    def joint_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        k = len(self.boxes)
        return self._lo[:k], self._hi[:k]

    def neighbours(self, k: int) -> np.ndarray:
        lo, hi = self.joint_arrays()
        adj = adjacent_to(lo, hi, lo[k], hi[k], self.epsilon)
        return adj[adj != k]

    def adjacent(self, a: int, b: int) -> bool:
        lo, hi = self.joint_arrays()
        return bool(arcs_adjacent(lo[a], hi[a], lo[b], hi[b], self.epsilon))

    def _new_curve(self, members) -> SelfMotionCurve:
        c = SelfMotionCurve(self._next_id, list(members))
        self._next_id += 1
        self.curves[c.id] = c
        for k in members:
            self.owner[k] = c.id
        return c

    def _to_pool(self, k: int, why: str):
        self.owner[k] = -1
        self.pool.append(k)
        self.diagnostics.append(f"box {k}: {why}")

    # -- public views ----------------------------------------------------
    def __len__(self):
        return len(self.curves)

    def ordered(self) -> list[SelfMotionCurve]:
        return [self.curves[i] for i in sorted(self.curves)]

    def curve_boxes(self, c: SelfMotionCurve) -> list:
        return [self.boxes[k] for k in c.members]

    def partition(self) -> set:
        """Curves as unordered sets of box keys (for order-independence checks)."""
        return {frozenset(self.boxes[k].key() for k in c.members) for c in self.curves.values()}

    def insert_box(self, sb) -> "CurveSet":
        return insert_box(self, sb)


def insert_box(curves: CurveSet, sb) -> CurveSet:
    """Attach ``sb`` to the curve end(s) it touches, or start a curve."""
    t0 = time.perf_counter()
    k = curves._store(sb)
    adj = curves.neighbours(k)
    touched: dict[int, set] = {}
    pooled_neighbour = False
    for j in adj.tolist():
        cid = curves.owner[j]
        if cid < 0:
            pooled_neighbour = True
            continue
        c = curves.curves[cid]
        ends = touched.setdefault(cid, set())
        if c.closed:
            ends.add("interior")
        elif j == c.members[0]:
            ends.add(0)
        elif j == c.members[-1]:
            ends.add(1)
        else:
            ends.add("interior-only")
    # a curve touched only away from its ends
    for cid, ends in touched.items():
        if ends <= {"interior-only", "interior"}:
            curves._to_pool(k, f"adjacent to the interior of curve {cid}")
            curves.insert_time += time.perf_counter() - t0
            return curves
    if len(touched) == 0:
        curves._new_curve([k])
        if pooled_neighbour:
            curves.diagnostics.append(f"box {k}: new curve next to pooled boxes")
    elif len(touched) == 1:
        (cid, ends), = touched.items()
        c = curves.curves[cid]
        if 0 in ends and 1 in ends and len(c) >= 3:
            c.members.append(k)
            c.ends = [CLOSED, CLOSED]
            curves.diagnostics.append(f"box {k}: closed curve {cid} into a loop")
        elif 1 in ends:
            c.members.append(k)
        else:
            c.members.insert(0, k)
        curves.owner[k] = cid
    elif len(touched) == 2:
        (ca, ea), (cb, eb) = sorted(touched.items())
        a, b = curves.curves[ca], curves.curves[cb]
        left = a.members if 1 in ea else a.members[::-1]
        right = b.members if 0 in eb else b.members[::-1]
        a.members = left + [k] + right
        for j in a.members:
            curves.owner[j] = ca
        del curves.curves[cb]
    else:
        curves._to_pool(k, f"adjacent to {len(touched)} curves")
    curves.insert_time += time.perf_counter() - t0
    return curves


# -- final rebuild -------------------------------------------------------------

def _bfs(start: int, nbrs: dict) -> dict:
    dist = {start: 0}
    q = deque([start])
    while q:
        u = q.popleft()
        for v in nbrs[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def _farthest(dist: dict, rank: dict) -> int:
    return max(dist, key=lambda v: (dist[v], -rank[v]))


def _chain(comp: list, nbrs: dict, rank: dict, adjacent) -> tuple[list, list]:
    """Order one component into a chain; returns (chain, leftovers).

    The walk starts at a pseudo-peripheral box and always steps to the
    unvisited neighbour with the fewest unvisited neighbours of its own, so
    it sweeps across the band of boxes instead of racing along it.
    """
    first = min(comp, key=rank.__getitem__)
    start = _farthest(_bfs(first, nbrs), rank)
    dist = _bfs(start, nbrs)
    chain = [start]
    seen = {start}

    def free(v):
        return sum(1 for u in nbrs[v] if u not in seen)

    while True:
        cand = [v for v in nbrs[chain[-1]] if v not in seen]
        if not cand:
            break
        live = [v for v in cand if free(v) > 0] or cand
        nxt = min(live, key=lambda v: (free(v), dist[v], rank[v]))
        chain.append(nxt)
        seen.add(nxt)
    left = sorted((v for v in comp if v not in seen), key=rank.__getitem__)
    progress = True
    while left and progress:
        progress = False
        rest = []
        for v in left:
            for p in range(len(chain) - 1):
                if adjacent(v, chain[p]) and adjacent(v, chain[p + 1]):
                    chain.insert(p + 1, v)
                    break
            else:
                if adjacent(v, chain[-1]):
                    chain.append(v)
                elif adjacent(v, chain[0]):
                    chain.insert(0, v)
                else:
                    rest.append(v)
                    continue
            progress = True
        left = rest
    return chain, left


def _close_loop(chain: list, nbrs: dict, rank: dict, adjacent, depth: int = 6, width: int = 64):
    """Rotate the tail of the chain (Posa rotations) until its ends meet, if they can."""
    frontier = [chain]
    seen = {chain[-1]}
    for _ in range(depth):
        grown = []
        for path in frontier:
            pos = {v: i for i, v in enumerate(path)}
            for q in sorted(nbrs[path[-1]], key=rank.__getitem__):
                p = pos[q]
                if p >= len(path) - 2:
                    continue
                cand = path[:p + 1] + path[p + 1:][::-1]
                if adjacent(cand[-1], cand[0]):
                    return cand
                if cand[-1] not in seen:
                    seen.add(cand[-1])
                    grown.append(cand)
        frontier = grown[:width]
        if not frontier:
            break
    return None


def _touches_frontier(state, boxes) -> bool:
    """Does any box meet a leaf the search never processed?"""
    for sb in boxes:
        pad = 1e-9 * (1.0 + np.abs(sb.box.lo))
        if state.query(sb.box.lo - pad, sb.box.hi + pad):
            return True
    return False


def finalize_curves(curves: CurveSet, model=None, state=None) -> CurveSet:
    """Rebuild curves from all stored boxes and mark their ends.

    Each connected component of the adjacency graph becomes one curve, walked
    from a pseudo-peripheral box; boxes that do not fit between two
    consecutive chain members go to the pool.  Ends are ``closed`` when the
    chain wraps around, ``limit-cut`` when the end box touches a joint limit
    within epsilon and ``open`` otherwise.

    With the search ``state`` of a truncated run, a component that borders
    unexplored cells may continue there, so it is never reported closed even
    if its two ends happen to be adjacent.
    """
    model = model if model is not None else curves.model
    state = state if state is not None else curves.state
    truncated = state is not None and state.unexplored > 0
    m = len(curves.boxes)
    lo, hi = curves.joint_arrays()
    pairs = adjacency_pairs(lo, hi, curves.epsilon)
    nbrs: dict[int, list] = {k: [] for k in range(m)}
    for a, b in pairs.tolist():
        nbrs[a].append(b)
        nbrs[b].append(a)
    pairset = {(a, b) for a, b in pairs.tolist()}

    def adjacent(a, b):
        return (min(a, b), max(a, b)) in pairset

    # canonical rank of each box, independent of arrival order
    keys = [sb.key() for sb in curves.boxes]
    order = sorted(range(m), key=keys.__getitem__)
    rank = {k: r for r, k in enumerate(order)}
    labels = components(m, pairs)
    comps: dict[int, list] = {}
    for k in order:
        comps.setdefault(int(labels[k]), []).append(k)

    curves.curves = {}
    curves.pool = []
    curves.owner = [-1] * m
    curves._next_id = 0
    for sb in curves.boxes:
        sb.curve_id = None
    for comp in sorted(comps.values(), key=lambda c: rank[c[0]]):
        chain, left = _chain(comp, nbrs, rank, adjacent)
        c = curves._new_curve(chain)
        for v in left:
            curves._to_pool(v, f"not orderable within curve {c.id}")
        cut_short = truncated and _touches_frontier(state, [curves.boxes[k] for k in comp])
        closed = not cut_short and len(chain) >= 3 and adjacent(chain[0], chain[-1])
        if not closed and not cut_short and len(chain) >= 3:
            loop = _close_loop(chain, nbrs, rank, adjacent)
            if loop is not None:
                c.members = chain = loop
                closed = True
        if closed:
            c.ends = [CLOSED, CLOSED]
        else:
            c.ends = [_end_marker(curves.boxes[chain[0]], model, curves.epsilon),
                      _end_marker(curves.boxes[chain[-1]], model, curves.epsilon)]
        for v in chain:
            curves.boxes[v].curve_id = c.id
    curves.finalized = True
    if curves.pool:
        log.debug("%d boxes left in the pool", len(curves.pool))
    return curves


def _end_marker(sb, model, eps) -> str:
    if model is not None and np.any(sb.joints.touches_limit(model.lower, model.upper, eps)):
        return LIMIT_CUT
    return OPEN

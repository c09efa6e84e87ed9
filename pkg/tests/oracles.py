"""Independent reference computations used by the test suite.

Nothing here calls into the solver; the helpers only use numpy, scipy and
closed-form kinematics.
"""
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ikpaver.contractor import Constraint, Expr, Var


# -- exactly satisfiable polynomial systems -----------------------------------------

def dyadic(rng, size, scale=4.0, bits=6):
    """Random numbers on a 2**-bits grid; their low-degree products are exact floats."""
    q = 2.0 ** bits
    return np.round(rng.uniform(-scale, scale, size) * q) / q


def random_exact_system(rng, dim, m):
    """``m`` random linear/quadratic/bilinear equations satisfied exactly by a dyadic point."""
    p = dyadic(rng, dim)
    cons = []
    for _ in range(m):
        e = Expr()
        for _ in range(rng.integers(1, 4)):
            c = float(dyadic(rng, 1, 2.0, 3)[0]) or 1.0
            i, j = (int(v) for v in rng.integers(0, dim, 2))
            kind = rng.integers(0, 3)
            if kind == 0:
                e = e + c * Var(i)
            elif kind == 1:
                e = e + c * Var(i) * Var(i)
            else:
                e = e + c * Var(i) * Var(j)
        if not e.terms:
            e = Var(0)
        # every product of dyadics here has < 53 significant bits, so this is exact
        rhs = e.evaluate(p)
        cons.append(Constraint.equation(e, rhs))
    return p, cons


def enclosing_box(rng, p, max_width=4.0):
    below = rng.uniform(0, max_width, p.shape) * (rng.random(p.shape) < 0.9)
    above = rng.uniform(0, max_width, p.shape) * (rng.random(p.shape) < 0.9)
    return p - below, p + above


# -- planar arms ------------------------------------------------------------------

def planar_fk(theta, links=None):
    """End-effector (x, y) of a planar arm; ``theta`` has shape (..., n)."""
    theta = np.asarray(theta, dtype=float)
    links = np.ones(theta.shape[-1]) if links is None else np.asarray(links)
    cum = np.cumsum(theta, axis=-1)
    return np.sum(links * np.cos(cum), axis=-1), np.sum(links * np.sin(cum), axis=-1)


def planar2r_ik(x, y, l1=1.0, l2=1.0):
    """Both closed-form solutions of the planar 2R arm (empty if out of reach)."""
    c2 = (x * x + y * y - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    if abs(c2) > 1:
        return []
    out = []
    for s2 in (math.sqrt(1 - c2 * c2), -math.sqrt(1 - c2 * c2)):
        t2 = math.atan2(s2, c2)
        t1 = math.atan2(y, x) - math.atan2(l2 * s2, l1 + l2 * c2)
        out.append(np.array([math.remainder(t1, 2 * math.pi), t2]))
    return out


def planar3r_grid(px, py, step=0.01, tol=1e-3, limits=None):
    """All grid points (step ``step``) of the 3R arm with position error below ``tol``.

    Returns ``(points, index, n, err)``: joint values, integer grid
    coordinates, cells per axis and position errors.  The grid spans
    [-pi, pi) per joint, clipped to ``limits``.
    """
    n = int(round(2 * math.pi / step))
    axis = -math.pi + step * np.arange(n)
    t2, t3 = np.meshgrid(axis, axis, indexing="ij")
    c2, s2 = np.cos(t2), np.sin(t2)
    c23, s23 = np.cos(t2 + t3), np.sin(t2 + t3)
    # position in the frame of link 1: (1 + c2 + c23, s2 + s23)
    ax, ay = 1 + c2 + c23, s2 + s23
    pts, idx, err = [], [], []
    for i, t1 in enumerate(axis):
        if limits is not None and not (limits[0][0] <= t1 <= limits[0][1]):
            continue
        c1, s1 = math.cos(t1), math.sin(t1)
        ex = c1 * ax - s1 * ay - px
        ey = s1 * ax + c1 * ay - py
        e2 = ex * ex + ey * ey
        hit = np.argwhere(e2 < tol * tol)
        for j, k in hit:
            pts.append((t1, axis[j], axis[k]))
            idx.append((i, j, k))
            err.append(math.sqrt(e2[j, k]))
    pts = np.array(pts).reshape(-1, 3)
    idx = np.array(idx, dtype=np.int64).reshape(-1, 3)
    err = np.array(err)
    if limits is not None:
        lo = np.array([lim[0] for lim in limits])
        hi = np.array([lim[1] for lim in limits])
        keep = np.all((pts >= lo) & (pts <= hi), axis=1)
        pts, idx, err = pts[keep], idx[keep], err[keep]
    return pts, idx, n, err


def grid_components(idx, n, periodic=True):
    """26-connected components of the grid cells ``idx`` (integer coordinates).

    Two cells touch when their coordinates differ by at most one in every
    axis, modulo ``n`` when ``periodic``.
    """
    if len(idx) == 0:
        return 0, np.zeros(0, dtype=np.int64)
    tree = cKDTree(idx.astype(float), boxsize=float(n) if periodic else None)
    pairs = tree.query_pairs(1.5, p=np.inf, output_type="ndarray")
    return _components(len(idx), pairs)


def _components(m, pairs):
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
    return connected_components(g, directed=False)


def point_components(pts, radius):
    """Connected components of points under periodic max-norm distance < radius."""
    tree = cKDTree(np.mod(pts, 2 * math.pi), boxsize=2 * math.pi)
    pairs = tree.query_pairs(radius, p=np.inf, output_type="ndarray")
    return _components(len(pts), pairs)


def in_joint_boxes(points, lo, hi, inflate):
    """Mask of points inside at least one (periodic) joint box inflated by ``inflate``."""
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo) + inflate
    tree = cKDTree(np.mod(c, 2 * math.pi), boxsize=2 * math.pi)
    r = float(np.max(h)) if len(h) else 0.0
    out = np.zeros(len(points), dtype=bool)
    if not len(h):
        return out
    for k, cand in enumerate(tree.query_ball_point(np.mod(points, 2 * math.pi), r, p=np.inf)):
        if cand:
            d = np.abs((points[k] - c[cand] + math.pi) % (2 * math.pi) - math.pi)
            out[k] = bool(np.any(np.all(d <= h[cand], axis=1)))
    return out

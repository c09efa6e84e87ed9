"""Adjacency of joint arcs (modulo 2*pi) and connected components."""
from __future__ import annotations

import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

TWO_PI = 2.0 * math.pi


def wrap(d):
    """Reduce angles to ``[-pi, pi)``."""
    return np.mod(np.asarray(d) + math.pi, TWO_PI) - math.pi


def arcs_adjacent(alo, ahi, blo, bhi, eps: float) -> np.ndarray:
    """Do the arcs, each inflated by ``eps``, overlap in every joint?

    Broadcasts over leading axes; the last axis is the joint index.
    """
    ca = 0.5 * (alo + ahi)
    cb = 0.5 * (blo + bhi)
    reach = 0.5 * (ahi - alo) + 0.5 * (bhi - blo) + 2.0 * eps
    d = np.abs(wrap(cb - ca))
    return np.all(d <= reach, axis=-1)


def adjacent_to(lo: np.ndarray, hi: np.ndarray, qlo, qhi, eps: float) -> np.ndarray:
    """Indices of rows of ``(lo, hi)`` adjacent to the single arc vector ``(qlo, qhi)``."""
    if lo.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(arcs_adjacent(lo, hi, qlo[None, :], qhi[None, :], eps))


def adjacency_pairs(lo: np.ndarray, hi: np.ndarray, eps: float) -> np.ndarray:
    """All index pairs ``(i, j)``, ``i < j``, of mutually adjacent arc vectors."""
    m = lo.shape[0]
    if m < 2:
        return np.zeros((0, 2), dtype=np.int64)
    mid = np.mod(0.5 * (lo + hi), TWO_PI)
    mid[mid >= TWO_PI] = 0.0
    half = 0.5 * (hi - lo)
    r = 2.0 * float(np.max(half)) + 2.0 * eps
    if r >= math.pi:
        cand = np.array(np.triu_indices(m, 1)).T
    else:
        tree = cKDTree(mid, boxsize=TWO_PI)
        cand = tree.query_pairs(r * (1 + 1e-12), p=np.inf, output_type="ndarray")
    if cand.shape[0] == 0:
        return np.zeros((0, 2), dtype=np.int64)
    i, j = cand[:, 0], cand[:, 1]
    ok = arcs_adjacent(lo[i], hi[i], lo[j], hi[j], eps)
    out = np.sort(cand[ok], axis=1)
    return out[np.lexsort((out[:, 1], out[:, 0]))]


def components(m: int, pairs: np.ndarray) -> np.ndarray:
    """Component label per node, numbered by first appearance."""
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
    _, labels = connected_components(g, directed=False)
    # relabel so that labels follow the order of first occurrence
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(np.argsort(first))
    return order[labels].astype(np.int64)

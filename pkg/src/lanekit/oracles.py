"""Brute-force reference implementations for small inputs.

These trade speed for obviousness: plain Python loops, exhaustive
enumeration, no shared code with the production paths beyond input
conventions.  Tests compare the fast implementations against them exactly.
"""

import itertools
import math

import numpy as np

MAX_ASSIGNMENT_SIDE = 7
MAX_PATH_NODES = 12


def _iou(a, b):
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def oracle_nms(boxes, scores, iou_thresh):
    """Greedy suppression, one pairwise IoU at a time."""
    boxes = [tuple(float(v) for v in b) for b in boxes]
    scores = [float(s) for s in scores]
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i], i))
    keep = []
    for i in order:
        if all(_iou(boxes[i], boxes[k]) <= iou_thresh for k in keep):
            keep.append(i)
    return keep


def oracle_assignment(cost):
    """Exhaustive matching: max cardinality, then min cost, then smallest
    sorted pair list.  Returns sorted (row, col) pairs; infinite entries are
    unmatchable.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    rows, cols = cost.shape
    if rows > MAX_ASSIGNMENT_SIDE or cols > MAX_ASSIGNMENT_SIDE:
        raise ValueError(f"oracle_assignment is limited to "
                         f"{MAX_ASSIGNMENT_SIDE}x{MAX_ASSIGNMENT_SIDE}, got {cost.shape}")
    if rows == 0 or cols == 0:
        return []

    best_key = None
    best_pairs = []
    if rows <= cols:
        candidates = ((tuple(zip(range(rows), perm)))
                      for perm in itertools.permutations(range(cols), rows))
    else:
        candidates = ((tuple(zip(perm, range(cols))))
                      for perm in itertools.permutations(range(rows), cols))
    for cand in candidates:
        pairs = sorted((r, c) for r, c in cand if math.isfinite(cost[r, c]))
        total = sum(cost[r, c] for r, c in pairs)
        key = (-len(pairs), total, pairs)
        if best_key is None or key < best_key:
            best_key = key
            best_pairs = pairs
    return best_pairs


def oracle_paths(adjacency, threshold, start, end):
    """Best start-to-end simple path by exhaustive enumeration.

    Edges exist where adjacency exceeds ``threshold``; a path's cost is the
    sum of (1 - adjacency) over its edges.  Returns (path, cost), preferring
    lower cost then lexicographically smaller path, or None when the nodes
    are disconnected.
    """
    adj = np.asarray(adjacency, dtype=float)
    n = len(adj)
    if n > MAX_PATH_NODES:
        raise ValueError(f"oracle_paths is limited to {MAX_PATH_NODES} nodes, got {n}")
    if n == 0:
        return None
    if start == end:
        return [start], 0.0

    best = None
    stack = [(start, [start], 0.0)]
    while stack:
        node, path, cost = stack.pop()
        for nxt in range(n):
            if adj[node, nxt] <= threshold or nxt in path:
                continue
            nxt_cost = cost + (1.0 - adj[node, nxt])
            nxt_path = path + [nxt]
            if nxt == end:
                key = (nxt_cost, nxt_path)
                if best is None or key < best:
                    best = key
            else:
                stack.append((nxt, nxt_path, nxt_cost))
    if best is None:
        return None
    return best[1], best[0]

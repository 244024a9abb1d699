"""Keypoint proposal selection and point non-maximum suppression.

Proposals are grid cells with foreground scores; the top-N by score become
candidate keypoints, each refined by a lateral offset ``dx`` and a height
``z``.  PointNMS turns every refined point into an axis-aligned integer box
(scale factor ``r``, side lengths ``r * thresh_x`` by ``r * thresh_y``) and
runs greedy box suppression at IoU 0.1, so that of several proposals aimed at
the same target only the most confident survives.
"""

from dataclasses import dataclass, replace

import numpy as np

# Below this box count, suppression runs on a precomputed pairwise IoU
# matrix; above it, memory favors the incremental loop.
_PAIRWISE_LIMIT = 2048


@dataclass(frozen=True, eq=False)
class Keypoint:
    """One lane keypoint proposal anchored at a grid cell.

    ``x``/``y`` are the anchor's lateral/longitudinal position in meters;
    the refined lateral position is ``x + dx``.  ``fg_score`` is the
    foreground probability from the score map; ``class_scores`` holds
    per-category probabilities.
    """

    grid_index: tuple[int, int]
    x: float
    y: float
    dx: float = 0.0
    z: float = 0.0
    fg_score: float = 0.0
    class_scores: np.ndarray = None

    def __post_init__(self):
        scores = np.atleast_1d(np.asarray(
            self.class_scores if self.class_scores is not None else [], dtype=float))
        if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
            raise ValueError("class_scores must lie in [0, 1]")
        if not 0.0 <= self.fg_score <= 1.0:
            raise ValueError("fg_score must lie in [0, 1]")
        object.__setattr__(self, "class_scores", scores)
        object.__setattr__(self, "grid_index", (int(self.grid_index[0]), int(self.grid_index[1])))

    @property
    def refined_x(self):
        return self.x + self.dx

    @property
    def confidence(self):
        """Max class score; falls back to fg_score before classification."""
        if self.class_scores.size == 0:
            return self.fg_score
        return float(self.class_scores.max())

    @property
    def category(self):
        return int(np.argmax(self.class_scores)) if self.class_scores.size else 0


@dataclass(frozen=True, eq=False)
class ProposalSet:
    """Ordered keypoint proposals, ``repeats_n`` of them per intended target."""

    keypoints: tuple
    repeats_n: int = 1

    def __post_init__(self):
        if self.repeats_n < 1:
            raise ValueError("repeats_n must be >= 1")
        object.__setattr__(self, "keypoints", tuple(self.keypoints))

    def __len__(self):
        return len(self.keypoints)

    def __iter__(self):
        return iter(self.keypoints)

    def __getitem__(self, i):
        return self.keypoints[i]

    @property
    def refined_xy(self):
        """(N, 2) refined lateral and longitudinal positions."""
        return np.array([[k.refined_x, k.y] for k in self.keypoints]).reshape(-1, 2)

    @property
    def confidences(self):
        return np.array([k.confidence for k in self.keypoints])

    def subset(self, indices):
        return ProposalSet(keypoints=tuple(self.keypoints[i] for i in indices),
                           repeats_n=self.repeats_n)


def select_topn_proposals(score_map, grid, n):
    """Picks the ``n`` highest-scoring grid cells as keypoint proposals.

    Ties break by (row, col) lexicographic order.  Each proposal takes its
    position from the grid; until a classifier runs, the cell score stands in
    as a single pseudo-class so confidence-based ops work unchanged.
    """
    scores = np.asarray(score_map, dtype=float)
    if scores.shape != (grid.rows, grid.cols):
        raise ValueError(f"score map shape {scores.shape} does not match grid "
                         f"({grid.rows}, {grid.cols})")
    if not 0 <= n <= scores.size:
        raise ValueError(f"n must be in [0, {scores.size}], got {n}")
    flat = scores.reshape(-1)
    order = np.argsort(-flat, kind="stable")[:n]
    keypoints = []
    for idx in order:
        row, col = divmod(int(idx), grid.cols)
        x, y = grid.positions[row, col]
        keypoints.append(Keypoint(grid_index=(row, col), x=float(x), y=float(y),
                                  fg_score=float(flat[idx]),
                                  class_scores=np.array([flat[idx]])))
    return ProposalSet(keypoints=tuple(keypoints))


def apply_offsets(proposals, dx, z):
    """Attaches per-proposal lateral offsets and heights; anchors stay put."""
    dx = np.asarray(dx, dtype=float)
    z = np.asarray(z, dtype=float)
    if dx.shape != (len(proposals),) or z.shape != (len(proposals),):
        raise ValueError(f"offset arrays must have length {len(proposals)}, "
                         f"got dx {dx.shape} and z {z.shape}")
    updated = tuple(replace(k, dx=float(d), z=float(h))
                    for k, d, h in zip(proposals, dx, z))
    return ProposalSet(keypoints=updated, repeats_n=proposals.repeats_n)


def round_half_away(values):
    """Rounds to the nearest integer, halves away from zero."""
    values = np.asarray(values, dtype=float)
    return np.trunc(values + np.copysign(0.5, values)).astype(np.int64)


def build_nms_boxes(points_xy, thresh_x, thresh_y, r=10):
    """Integer boxes of size (r*thresh_x, r*thresh_y) centered at r*point."""
    pts = np.asarray(points_xy, dtype=float).reshape(-1, 2)
    x1 = round_half_away(pts[:, 0] * r - (r / 2.0) * thresh_x)
    x2 = round_half_away(pts[:, 0] * r + (r / 2.0) * thresh_x)
    y1 = round_half_away(pts[:, 1] * r - (r / 2.0) * thresh_y)
    y2 = round_half_away(pts[:, 1] * r + (r / 2.0) * thresh_y)
    return np.stack([x1, y1, x2, y2], axis=1)


def box_nms(boxes, scores, iou_thresh):
    """Greedy box suppression in descending score order, ties by index.

    A box is kept iff its IoU with every previously kept box is at or below
    ``iou_thresh``.  Areas are plain side products; zero-area overlap counts
    as IoU 0.  Returns kept indices in the order they were kept.
    """
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (len(boxes),):
        raise ValueError(f"need one score per box, got {scores.shape} for {len(boxes)} boxes")
    if len(boxes) == 0:
        return np.empty(0, dtype=np.int64)
    if np.any(boxes[:, 0] > boxes[:, 2]) or np.any(boxes[:, 1] > boxes[:, 3]):
        raise ValueError("boxes must satisfy x1 <= x2 and y1 <= y2")

    order = np.argsort(-scores, kind="stable")
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])

    if len(boxes) <= _PAIRWISE_LIMIT:
        # Precompute which pairs conflict, then sweep once: a box is skipped
        # exactly when it conflicts with some already-kept box, so marking
        # every conflict of a kept box is equivalent to the incremental form.
        # Row blocks through reused scratch buffers keep the working set in
        # cache; the elementwise formulas match the incremental path bitwise.
        n = len(boxes)
        x1, y1, x2, y2 = (np.ascontiguousarray(boxes[:, i]) for i in range(4))
        conflicts = np.empty((n, n), dtype=bool)
        block = min(64, n)
        iw = np.empty((block, n))
        ih = np.empty((block, n))
        tmp = np.empty((block, n))
        with np.errstate(invalid="ignore"):
            for s in range(0, n, block):
                e = min(s + block, n)
                inter, height, scratch = iw[:e - s], ih[:e - s], tmp[:e - s]
                np.minimum(x2[s:e, np.newaxis], x2[np.newaxis, :], out=inter)
                np.maximum(x1[s:e, np.newaxis], x1[np.newaxis, :], out=scratch)
                inter -= scratch
                np.clip(inter, 0.0, None, out=inter)
                np.minimum(y2[s:e, np.newaxis], y2[np.newaxis, :], out=height)
                np.maximum(y1[s:e, np.newaxis], y1[np.newaxis, :], out=scratch)
                height -= scratch
                np.clip(height, 0.0, None, out=height)
                inter *= height                   # intersection area
                np.add(areas[s:e, np.newaxis], areas[np.newaxis, :], out=scratch)
                scratch -= inter                  # union
                # union >= inter always, so union == 0 forces inter == 0;
                # the 0/0 NaN compares False, the defined zero-union IoU 0.
                inter /= scratch
                np.greater(inter, iou_thresh, out=conflicts[s:e])
        suppressed = np.zeros(n, dtype=bool)
        keep = []
        for idx in order:
            if suppressed[idx]:
                continue
            keep.append(int(idx))
            suppressed |= conflicts[idx]
        return np.asarray(keep, dtype=np.int64)

    keep = []
    for idx in order:
        if keep:
            kept = boxes[keep]
            iw = np.minimum(kept[:, 2], boxes[idx, 2]) - np.maximum(kept[:, 0], boxes[idx, 0])
            ih = np.minimum(kept[:, 3], boxes[idx, 3]) - np.maximum(kept[:, 1], boxes[idx, 1])
            inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
            union = areas[keep] + areas[idx] - inter
            iou = np.divide(inter, union, out=np.zeros_like(inter), where=union > 0)
            if np.any(iou > iou_thresh):
                continue
        keep.append(int(idx))
    return np.asarray(keep, dtype=np.int64)


def point_nms(points_xy, scores, thresh_x, thresh_y, r=10, iou_thresh=0.1):
    """Point suppression via box construction; returns kept indices by score."""
    if thresh_x <= 0 or thresh_y <= 0 or r <= 0:
        raise ValueError("thresh_x, thresh_y and r must be positive")
    boxes = build_nms_boxes(points_xy, thresh_x, thresh_y, r)
    return box_nms(boxes, scores, iou_thresh)


def default_nms_thresholds(grid):
    """Suppression window derived from grid geometry.

    Lateral: twice the widest per-row column spacing, so neighbors aimed at
    the same target collide.  Longitudinal: half the smallest row gap, which
    keeps suppression strictly within a row.
    """
    widest = max(grid.lateral_spacing(i) for i in range(grid.rows))
    return 2.0 * widest, 0.5 * float(grid.row_spacing.min())

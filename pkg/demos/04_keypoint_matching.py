"""Constrained assignment of proposals to ground-truth keypoints.

Cost is lambda_dist * |refined - gt| + lambda_cls * (1 - p_category), but a
pair is only feasible when the refined point is within 1 m, the anchor
within 2 m, and both sit on the same grid row.  With duplication (n=2) each
ground truth can absorb two proposals; connection targets then chain the
one-to-one matching along each lane.
"""

import numpy as np

from lanekit import (GroundTruthKeypoint, Keypoint, build_connection_targets,
                     build_cost_matrix, match_keypoints)

CAT = 1
scores = np.zeros(3)
scores[CAT] = 0.9

gts = [GroundTruthKeypoint(lane_id=0, order_in_lane=i, x=0.5 * i, y=5.0 + 5.0 * i,
                           category=CAT, row=i)
       for i in range(3)]

props = [
    Keypoint(grid_index=(0, 3), x=0.2, y=5.0, dx=0.25, fg_score=0.9, class_scores=scores),
    Keypoint(grid_index=(0, 4), x=0.8, y=5.0, dx=-0.35, fg_score=0.8, class_scores=scores),
    Keypoint(grid_index=(1, 4), x=0.6, y=10.0, dx=0.0, fg_score=0.9, class_scores=scores),
    Keypoint(grid_index=(1, 9), x=3.2, y=10.0, dx=-2.6, fg_score=0.9, class_scores=scores),
    Keypoint(grid_index=(2, 5), x=1.1, y=15.0, dx=-0.05, fg_score=0.7, class_scores=scores),
]

costs = build_cost_matrix(props, gts)
print("cost matrix (inf = infeasible):")
for i, row in enumerate(costs.costs):
    cells = " ".join(f"{v:8.3f}" if np.isfinite(v) else "     inf" for v in row)
    print(f"  proposal {i}: {cells}")
print("proposal 3 fails the 2 m anchor constraint even though its refined")
print("point lands 0.1 m from gt 1\n")

strongest = match_keypoints(props, gts, strongest=True)
print(f"strongest (one-to-one) pairs: {strongest.pairs}")

dup = match_keypoints(props, gts, repeats_n=2)
print(f"duplicated (n=2) pairs:       {dup.pairs}")
print("gt 0 now holds both nearby proposals; gt 1 still gets only the one")
print("feasible candidate\n")

targets = build_connection_targets(strongest, gts, size=len(props))
src, dst = np.nonzero(targets)
print(f"connection targets from the one-to-one matching: "
      f"{[(int(a), int(b)) for a, b in zip(src, dst)]}")
print("each matched proposal points at the matched proposal of the next")
print("ground-truth keypoint in its lane")

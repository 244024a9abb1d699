"""Lane-level evaluation: the 75% rule, thresholds, and near/far errors.

Everything is resampled onto a shared 1 m longitudinal grid (1..100 m).  A
prediction is admissible for a GT lane only if at least 75% of the GT's valid
samples fall within the distance threshold; admissible pairs are then matched
one-to-one by mean distance.
"""

import numpy as np

from lanekit import GroundTruthLane, LaneRecord, evaluate

YS = np.arange(1.0, 101.0)


def straight(offset_x, z=0.0, confidence=1.0):
    pts = np.column_stack([np.full_like(YS, offset_x), YS, np.full_like(YS, z)])
    return LaneRecord(points=pts, confidence=confidence)


gt = [GroundTruthLane(straight(0.0).points)]

# -- the 75% rule is a hard cliff ------------------------------------------
for bad in (25, 26):
    x = np.zeros_like(YS)
    x[:bad] = 5.0                       # way outside any threshold
    pred = LaneRecord(points=np.column_stack([x, YS, np.zeros_like(YS)]))
    report = evaluate([pred], gt, thresholds=(1.5,))[0]
    frac = (100 - bad) / 100
    print(f"{frac:.0%} of samples inside 1.5 m -> F1 = {report.f1:.1f}")

# -- tighter thresholds only remove matches --------------------------------
shifted = straight(0.8)                 # inside 1.5 m everywhere, outside 0.5 m
for report in evaluate([shifted], gt, thresholds=(1.5, 0.5)):
    print(f"uniform 0.8 m offset at threshold {report.threshold} m: F1 = {report.f1:.1f}")

# -- matched pairs feed the error statistics, split at 40 m ----------------
x = np.where(YS < 40.0, 0.12, 0.40)
pred = LaneRecord(points=np.column_stack([x, YS, np.full_like(YS, 0.05)]))
report = evaluate([pred], gt, thresholds=(1.5,))[0]
print(f"\nx error near/far = {report.x_err_near:.2f}/{report.x_err_far:.2f} m, "
      f"z error = {report.z_err_near:.2f} m")

# -- AP sweeps confidence cutoffs, so a timid false positive costs less ----
gt2 = [GroundTruthLane(straight(0.0).points), GroundTruthLane(straight(4.0).points)]
preds = [straight(0.0, confidence=0.9), straight(4.0, confidence=0.9),
         straight(-6.0, confidence=0.1)]
report = evaluate(preds, gt2, thresholds=(1.5,))[0]
print(f"low-confidence spurious lane: precision = {report.precision:.2f}, "
      f"AP = {report.ap:.2f}")

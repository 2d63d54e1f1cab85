"""Walk through the trial protocol and score simulated placements.

A trial has three phases: search until first contact, reconstruct for a
20 s green countdown, then pick and place under a 120 s blue countdown.
Placement is scored as planar centroid distance d (cm) and long-axis
angle alpha (deg, folded by the rectangle's half-turn symmetry) against
a target 22 cm from the object's start. Sessions aggregate to mean/std
rows with failures counted as "k/n".

Run from the repository root:  python demos/03_trial_protocol_and_scoring.py
"""

import math

import numpy as np

from touchrecon import RigidPose2D, TrialResult, placement_error, summarize
from touchrecon.simulate import TrialTimeline

# --- one trial through the phase machine --------------------------------
timeline = TrialTimeline()
print("phase:", timeline.phase)
timeline = timeline.tick(4.2).first_contact()
print(f"phase: {timeline.phase}  (green timer {timeline.green_remaining:.0f} s)")
timeline = timeline.tick(20.0)
print(f"phase: {timeline.phase}  (blue timer {timeline.blue_remaining:.0f} s)")
timeline = timeline.tick(13.5).placed()
print(f"phase: {timeline.phase}  outcome={timeline.outcome}  total {timeline.t_s:.1f} s")

# --- score a session of noisy placements --------------------------------
TARGET_OFFSET_M = 0.22  # target marker distance from the object's start
target = RigidPose2D(x=TARGET_OFFSET_M, y=0.0, yaw=0.0)
rng = np.random.default_rng(3)

trials = []
for k in range(5):
    placed = RigidPose2D(
        x=TARGET_OFFSET_M + rng.normal(0.0, 0.02),
        y=rng.normal(0.0, 0.02),
        yaw=rng.normal(0.0, math.radians(6.0)),
    )
    err = placement_error(placed, target)
    trials.append(TrialResult(error=err, time_s=float(rng.uniform(14.0, 20.0))))
    print(f"trial {k + 1}: d = {err.d_cm:5.2f} cm   alpha = {err.alpha_deg:5.2f} deg")
trials.append(TrialResult(error=None, time_s=140.0))  # one blue-timer timeout
print("trial 6: failure (blue timer expired)")

s = summarize(trials)
print(f"\nsession summary over {s.n_trials} trials")
print(f"  position    {s.pos_mean_cm:5.2f} +/- {s.pos_std_cm:4.2f} cm")
print(f"  orientation {s.ori_mean_deg:5.2f} +/- {s.ori_std_deg:4.2f} deg")
print(f"  time        {s.time_mean_s:5.2f} +/- {s.time_std_s:4.2f} s")
print(f"  failures    {s.failures}")

# A flipped rectangle is still correctly placed: alpha folds to 0.
flipped = RigidPose2D(x=TARGET_OFFSET_M, y=0.0, yaw=math.pi)
print(f"\nhalf-turn placement scores alpha = "
      f"{placement_error(flipped, target).alpha_deg:.1f} deg")

"""Predict and correct one head track with the constant-velocity filter."""

import numpy as np

from parttrack.core import Detection, MotionModel, PartType, TargetState
from parttrack.motion import coast, detection_log_likelihood, predict, update

model = MotionModel(tau=1.0, q_d=0.5, r=4.0)

# a head at (100, 50) moving right at 3 px/frame, state is [x, vx, y, vy]
state = TargetState(0, PartType.HEAD, [100.0, 3.0, 50.0, 0.0], np.diag([4.0, 1.0, 4.0, 1.0]))

pred = predict(state, model)
print("predicted mean", pred.predicted_mean.round(3))
print("innovation covariance\n", pred.innovation_covariance.round(3))

# two candidate detections, one near the prediction and one far off
near = Detection.from_center(0, 1, PartType.HEAD, 103.5, 49.0, 12, 12, 0.9)
far = Detection.from_center(1, 1, PartType.HEAD, 140.0, 80.0, 12, 12, 0.9)
for d in (near, far):
    print(f"log-likelihood of {d.center}: {detection_log_likelihood(pred, d):.3f}")

post = update(state, near, model)
print("posterior mean", post.mean.round(3))
print("posterior variance shrinks:", np.diag(post.covariance).round(3), "<", np.diag(pred.predicted_covariance).round(3))

# without a detection the track coasts and its uncertainty grows
lost = state
for _ in range(3):
    lost = coast(lost, model)
print("after 3 coasted frames:", lost.mean.round(3), "var x", round(float(lost.covariance[0, 0]), 3))

"""A tour of the nonparametric building blocks.

Shows the bandwidth rule, the kernel risk-set mean, both conditional
hazard estimators, and the sliced mean-difference curve on a small
simulated sample, with sanity checks against known limits.
"""

import numpy as np

import survdr
from survdr.kernels import build_plan

ds, truth = survdr.generate(survdr.SimSetting(id=1, p=6, n=300, seed=21))
b = truth.b_true

plan = build_plan(ds, b)
print("projection bandwidth:", np.round(plan.h, 4))
print("slice width / time bandwidth:", round(plan.slice_w, 4),
      "/", round(plan.time_bandwidth, 4))

cm = survdr.cond_mean_risk(ds, b, plan)
print("\nkernel risk-set mean, first 3 rows:")
print(np.round(cm[:3], 3))

hz = survdr.hazard_exact(ds, b, plan)
print(f"\nexact hazard table: {hz.values.shape[0]} event times x "
      f"{hz.values.shape[1]} subjects")
print("increments at the first 5 event times (subject 0):",
      np.round(hz.values[:5, 0], 4))

# a flat kernel washes out the projection: increments become 1 / #at-risk
flat = build_plan(ds, b, h=np.array([1e8]))
hz_flat = survdr.hazard_exact(ds, b, flat)
risk_sizes = np.array([(ds.y >= t).sum() for t in hz_flat.times[:5]])
print("flat-kernel increments:", np.round(hz_flat.values[:5, 0], 4),
      "= 1 /", risk_sizes)

grid = np.quantile(ds.y, [0.2, 0.4, 0.6])
sm = survdr.hazard_smoothed(ds, b, plan, grid)
print("\nsmoothed hazard rate on a central grid (median subject):",
      np.round(np.median(sm.values, axis=1), 3))

curve = survdr.slice_curve(ds)
print("\nsliced mean-difference curve, first 3 rows:")
print(np.round(curve.phi[:3], 3))
print("(row = mean X of just-failed minus mean X of at-risk; a direction"
      " proportional to the target at every time)")

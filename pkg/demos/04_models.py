"""
Time and memory models
======================

Closed-form predictions, and fitting their constants to measurements.
"""

from sortbench.models import ModelParams, Measurement, bubble_time, calibrate, memory_model, nlogn_time

params = ModelParams(c_comp=2e-9, c_init=1e-3, c_msg=5e-4, c_byte=1e-8)
for m in (1, 2, 4, 8, 16, 32, 64):
    print(f"m={m:2d}  bubble {bubble_time(2e5, m, 1, params):8.3f} s   "
          f"merge {nlogn_time('merge', 6e6, m, 2, params):6.3f} s")

print("memory for 1e6 elements:", {a: memory_model(a, 10**6) for a in ("bubble", "merge", "quick")})

# fit the constants back from points the model itself produced
points = [Measurement(n, m, k, bubble_time(n, m, k, params))
          for n in (1e4, 4e4) for m in (1, 2, 4, 8) for k in (1, 2)]
fit = calibrate("bubble", points)
print("recovered:", fit.params)
print("largest relative residual:", abs(fit.relative_residuals).max())

"""
Step-size tuning toward a target acceptance rate
================================================

Starts from a deliberately tiny step, lets the multiplicative controller
climb until the windowed acceptance rate settles at the 85% target, then
runs a production chain at the tuned step.
"""

import numpy as np

from amagold import (DoubleWell, GaussianNoiseGradient, SamplerConfig,
                     TunerSchedule, run_chain, trace_to_csv, tune_step_size)

model = GaussianNoiseGradient(DoubleWell(), noise_scale=1.0)
config = SamplerConfig(epsilon=0.01, beta=0.25, inner_steps=10)

schedule = TunerSchedule(total_rounds=20000)
epsilon, trace = tune_step_size(config, model, schedule, seed=1)

print("window  epsilon   acceptance")
for window, eps, acc in trace[::10] + trace[-1:]:
    print(f"{window:6d}  {eps:8.5f}  {acc:.3f}")
print(f"tuned step size: {epsilon:.5f}")
trace_to_csv(trace, "tuning_trace.csv")

# sample at the tuned step and confirm the acceptance rate carried over
tuned = SamplerConfig(epsilon=epsilon, beta=0.25, inner_steps=10)
chain = run_chain("amagold", tuned, model, rounds=20000, burn_in=2000, seed=2)
print(f"production chain acceptance={chain.acceptance_rate:.3f} "
      f"mean={np.mean(chain.samples):+.3f}")

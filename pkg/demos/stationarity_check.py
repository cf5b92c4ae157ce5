"""
Stationarity as a property test
===============================

If the target density really is stationary for the chain, walkers drawn
exactly from it must still look like exact draws after any number of
rounds. This drives thousands of independent single-walker chains a few
rounds each and compares the final cloud to a fresh exact sample with a
two-sample KS test, for the reversible and skew-reversible variants.
"""

import numpy as np
from scipy import stats

from amagold import (DoubleWell, GaussianNoiseGradient, SamplerConfig,
                     advance_ensemble, analytic_density)

base = DoubleWell()
model = GaussianNoiseGradient(base, noise_scale=1.0)
config = SamplerConfig(epsilon=0.2, beta=0.25, inner_steps=10)

# exact draws come from a fine quadrature grid via inverse-CDF sampling
grid = analytic_density(base.potential, (-8.0, 7.0), 4096)
walkers = 2000
seeds = np.random.SeedSequence(0).spawn(2)
start = grid.sample(walkers, np.random.default_rng(seeds[0]))
reference = grid.sample(walkers, np.random.default_rng(seeds[1]))

print(f"{walkers} walkers, 10 rounds each")
for kind in ("amagold", "amagold-skew"):
    final = advance_ensemble(kind, config, model, start, rounds=10, seed=0)
    ks = stats.ks_2samp(final[:, 0], reference)
    print(f"{kind:13s} KS statistic={ks.statistic:.4f} p={ks.pvalue:.3f}")

# a p-value above any reasonable significance level means the walkers are
# indistinguishable from exact draws; try sghmc here instead and the test
# fails decisively at this step size

"""Amortized Metropolis-adjusted second-order stochastic-gradient MCMC.

The package centers on AMAGOLD: inner leapfrog rounds driven by stochastic
gradients with a friction term, closed by an exact Metropolis-Hastings
correction whose ratio is accumulated along the trajectory. SGHMC, exact
HMC, and full-batch L2MC drivers share the same round layout for direct
comparison.
"""

from .ama_core import (GaussianRandomWalkKernel, Involution, MomentumFlip,
                       PathRecord, ProposalKernel, StochasticLeapfrogKernel,
                       amortized_mh_round, log_accept_reversible,
                       log_accept_reversible_stepwise, log_accept_skew,
                       momentum_flip, run_amortized_proposal)
from .dataio import (RunReport, load_dataset, read_run_report, read_samples,
                     write_run_report, write_samples)
from .diagnostics import (GridDensity, analytic_density, histogram_density,
                          moments, parameter_mse, symmetric_kl)
from .energy_models import (Dataset, Dist1, Dist2, DoubleWell, EnergyModel,
                            GaussianNoiseGradient, GradientNoiseRecord,
                            LogisticRegression, full_batch_view)
from .errors import (AmagoldError, ConfigError, ContractError, DomainError,
                     NumericalError, ParseError, TuningFailure, UsageError)
from .experiment import ExperimentConfig, main, parse_args, run_experiment
from .sampler_core import (PhaseState, RoundRecord, SampleSet, SamplerConfig,
                           advance_ensemble, amagold_round, hmc_round,
                           inverse_reparameterize, reparameterize,
                           replay_reverse, round_stream, run_chain,
                           sghmc_round)
from .tuning import TunerSchedule, next_epsilon, trace_to_csv, tune_step_size

__version__ = "0.1.0"

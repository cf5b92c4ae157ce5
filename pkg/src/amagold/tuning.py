"""Step-size tuning toward a target acceptance rate during burn-in."""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, TuningFailure
from .sampler_core import PhaseState, amagold_round, round_stream


@dataclass
class TunerSchedule:
    """Windowed multiplicative adaptation of the step size.

    After each window of rounds the step size moves by
    exp(gain * (acceptance - target)), clamped to [eps_min, eps_max].
    """

    target: float = 0.85
    window: int = 200
    gain: float = 0.5
    eps_min: float = 1e-6
    eps_max: float = 1.0
    total_rounds: int = 10000

    def __post_init__(self):
        if not 0.0 < self.target < 1.0:
            raise ConfigError("target must lie strictly between 0 and 1")
        if self.window < 1:
            raise ConfigError("window must be at least 1")
        if self.gain <= 0:
            raise ConfigError("gain must be positive")
        if not 0 < self.eps_min < self.eps_max:
            raise ConfigError("need 0 < eps_min < eps_max")
        if self.total_rounds < self.window:
            raise ConfigError("total_rounds must cover at least one window")

    @property
    def n_windows(self):
        return self.total_rounds // self.window


def next_epsilon(epsilon, acceptance, schedule):
    """One tuner update: multiplicative move toward the target, clamped."""
    out = epsilon * math.exp(schedule.gain * (acceptance - schedule.target))
    return min(max(out, schedule.eps_min), schedule.eps_max)


def tune_step_size(config, model, schedule=None, seed=0, initial_position=None):
    """Adapt the step size with AMAGOLD rounds; returns (epsilon, trace).

    trace holds one (window, epsilon, acceptance) triple per window, with
    epsilon as used during that window. The chain state carries across
    windows. Raises TuningFailure if a window at eps_min accepts nothing,
    since the step size cannot shrink further.
    """
    if schedule is None:
        schedule = TunerSchedule()
    eps = min(max(config.epsilon, schedule.eps_min), schedule.eps_max)

    d = model.dim
    theta = np.zeros(d) if initial_position is None else \
        np.atleast_1d(np.asarray(initial_position, dtype=float))
    init_rng = round_stream(seed, 0)
    r = math.sqrt(config.sigma2) * init_rng.standard_normal(d)
    state = PhaseState(theta, r)

    trace = []
    round_index = 1
    for w in range(schedule.n_windows):
        cfg = replace(config, epsilon=eps)
        accepted = 0
        for _ in range(schedule.window):
            state, record = amagold_round(cfg, state, model,
                                          round_stream(seed, round_index))
            round_index += 1
            accepted += record.outcome == "accepted"
        acceptance = accepted / schedule.window
        trace.append((w, eps, acceptance))
        if acceptance == 0.0 and eps <= schedule.eps_min:
            raise TuningFailure(
                f"no acceptance at the minimum step size {schedule.eps_min}",
                trace=trace)
        eps = next_epsilon(eps, acceptance, schedule)
    return eps, trace


def trace_to_csv(trace, path):
    """Write a tuning trace as CSV with columns window, epsilon, acceptance."""
    with open(path, "w") as fh:
        fh.write("window,epsilon,acceptance\n")
        for w, eps, acc in trace:
            fh.write(f"{w},{eps:.17g},{acc:.17g}\n")

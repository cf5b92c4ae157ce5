"""Amortized Metropolis-Hastings over multi-step proposal paths.

A proposal kernel advances a state one step and reports the log transition
density of any step given its recorded randomness. A path of T steps is
accepted or rejected as a whole, with the correction ratio accumulated in
log space: either the reversible form (product of reverse over forward step
densities times the endpoint density ratio) or the skew form, which runs the
reverse path through an involution such as momentum flip.
"""

import math

import numpy as np

from .errors import ContractError, NumericalError
from .sampler_core import PhaseState

LOG_2PI = math.log(2.0 * math.pi)


def _is_finite_state(x):
    if isinstance(x, PhaseState):
        return bool(np.all(np.isfinite(x.theta)) and np.all(np.isfinite(x.r)))
    return bool(np.all(np.isfinite(np.asarray(x, dtype=float))))


class ProposalKernel:
    """One-step proposal contract.

    sample(x, rng) returns (next_state, zeta) where zeta captures everything
    random about the step. log_density(x, y, zeta) returns the log density of
    moving x -> y given zeta, and -inf when that move is impossible.
    """

    def sample(self, x, rng):
        raise NotImplementedError

    def log_density(self, x, y, zeta):
        raise NotImplementedError


class GaussianRandomWalkKernel(ProposalKernel):
    """Isotropic Gaussian random walk; zeta is unused (the step has no side draws)."""

    def __init__(self, scale=1.0):
        if scale <= 0:
            raise ContractError("scale must be positive")
        self.scale = float(scale)

    def sample(self, x, rng):
        x = np.asarray(x, dtype=float)
        return x + self.scale * rng.standard_normal(x.shape), None

    def log_density(self, x, y, zeta):
        z = (np.asarray(y, dtype=float) - np.asarray(x, dtype=float)) / self.scale
        d = z.size
        return float(-0.5 * (z @ z) - d * (0.5 * LOG_2PI + math.log(self.scale)))


class StochasticLeapfrogKernel(ProposalKernel):
    """One friction leapfrog step as a proposal on phase states.

    The step is half drift, symmetric friction kick with a stochastic
    gradient and injected noise, half drift; zeta is the gradient noise
    record. Conditioned on zeta the only randomness is the injected noise,
    so the step density is the Gaussian density of the noise that maps x to
    y, times the (1 + epsilon beta)^d change of variables from noise to new
    momentum. Requires beta > 0; at beta = 0 the step is deterministic given
    zeta and has no density.
    """

    def __init__(self, config, model, position_tol=1e-9):
        if config.beta <= 0:
            raise ContractError("the leapfrog kernel needs beta > 0")
        self.config = config
        self.model = model
        self.position_tol = float(position_tol)

    def _to_v(self, r):
        return r * (self.config.epsilon / self.config.sigma2)

    def _to_r(self, v):
        return v * (self.config.sigma2 / self.config.epsilon)

    def sample(self, x, rng):
        cfg = self.config
        h, b = cfg.h, cfg.b
        v = self._to_v(x.r)
        mid = x.theta + 0.5 * v
        g, zeta = self.model.stochastic_gradient(mid, rng)
        eta_v = math.sqrt(4.0 * h * b) * rng.standard_normal(v.shape)
        v_new = ((1.0 - b) * v - h * g + eta_v) / (1.0 + b)
        return PhaseState(mid + 0.5 * v_new, self._to_r(v_new)), zeta

    def log_density(self, x, y, zeta):
        cfg = self.config
        h, b = cfg.h, cfg.b
        v = self._to_v(x.r)
        v_new = self._to_v(y.r)
        mid = x.theta + 0.5 * v
        # y must sit on the drift manifold; the tolerance absorbs rounding
        if not np.allclose(y.theta, mid + 0.5 * v_new, rtol=0.0,
                           atol=self.position_tol):
            return float("-inf")
        g = self.model.replay_stochastic_gradient(mid, zeta)
        eta_v = (1.0 + b) * v_new - (1.0 - b) * v + h * g
        var = 4.0 * h * b
        d = eta_v.size
        logpdf = -0.5 * float(eta_v @ eta_v) / var - 0.5 * d * math.log(2.0 * math.pi * var)
        return logpdf + d * math.log1p(b)


class Involution:
    """Self-inverse state map used by the skew acceptance ratio."""

    def apply(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.apply(x)


def momentum_flip(state):
    """Negate the momentum of a phase state; applying twice is the identity."""
    return PhaseState(state.theta, -state.r)


class MomentumFlip(Involution):
    def apply(self, x):
        return momentum_flip(x)


class PathRecord:
    """A proposal path: T+1 states and the T per-step randomness records."""

    def __init__(self, states, zetas):
        if len(states) != len(zetas) + 1 or len(zetas) < 1:
            raise ContractError("need T+1 states and T records with T >= 1")
        self.states = list(states)
        self.zetas = list(zetas)

    @property
    def steps(self):
        return len(self.zetas)

    @property
    def initial(self):
        return self.states[0]

    @property
    def proposal(self):
        return self.states[-1]


def run_amortized_proposal(kernel, x, steps, rng):
    """Advance `steps` kernel steps from x and trace the whole path."""
    if steps < 1:
        raise ContractError("steps must be at least 1")
    states = [x]
    zetas = []
    for t in range(steps):
        nxt, zeta = kernel.sample(states[-1], rng)
        if not _is_finite_state(nxt):
            raise NumericalError(f"proposal step {t} produced non-finite state")
        states.append(nxt)
        zetas.append(zeta)
    return PathRecord(states, zetas)


def _guard(total):
    # any non-finite accumulated ratio means "propose nothing": force reject
    return total if math.isfinite(total) or total == float("-inf") else float("-inf")


def log_accept_reversible(path, kernel, log_pi):
    """Log of the whole-path reversible ratio.

    log pi(y) - log pi(x) plus the summed log density gap between the
    reversed and forward steps. Non-finite intermediate values collapse to
    -inf (reject) rather than raise.
    """
    total = log_pi(path.proposal) - log_pi(path.initial)
    for t in range(path.steps):
        a, b = path.states[t], path.states[t + 1]
        total += kernel.log_density(b, a, path.zetas[t])
        total -= kernel.log_density(a, b, path.zetas[t])
    return _guard(total)


def log_accept_reversible_stepwise(path, kernel, log_pi):
    """Same ratio accumulated per step, grouping each step with its density gap."""
    total = 0.0
    for t in range(path.steps):
        a, b = path.states[t], path.states[t + 1]
        total += log_pi(b) - log_pi(a)
        total += kernel.log_density(b, a, path.zetas[t])
        total -= kernel.log_density(a, b, path.zetas[t])
    return _guard(total)


def log_accept_skew(path, kernel, log_pi, involution):
    """Log of the skew ratio: the reverse path runs through the involution.

    log pi(inv(y)) - log pi(x) plus, per step, the log density of
    inv(x_{t+1}) -> inv(x_t) minus that of x_t -> x_{t+1}, sharing each
    step's randomness record.
    """
    total = log_pi(involution(path.proposal)) - log_pi(path.initial)
    for t in range(path.steps):
        a, b = path.states[t], path.states[t + 1]
        total += kernel.log_density(involution(b), involution(a), path.zetas[t])
        total -= kernel.log_density(a, b, path.zetas[t])
    return _guard(total)


def amortized_mh_round(kernel, x, steps, log_pi, rng, involution=None):
    """One amortized M-H round: propose a path, accept or reject it whole.

    Accepts with probability min(1, exp(ratio)). On rejection the reversible
    chain stays at x; the skew chain moves to involution(x). Returns
    (new_state, accepted, log_ratio).
    """
    path = run_amortized_proposal(kernel, x, steps, rng)
    if involution is None:
        ratio = log_accept_reversible(path, kernel, log_pi)
    else:
        ratio = log_accept_skew(path, kernel, log_pi, involution)
    la = min(0.0, ratio)
    accept = la >= 0.0 or rng.random() < math.exp(la)
    if accept:
        return path.proposal, True, ratio
    if involution is None:
        return x, False, ratio
    return involution(x), False, ratio

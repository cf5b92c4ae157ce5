"""Sampling rounds and chain drivers: AMAGOLD, SGHMC, HMC, and the L2MC view.

All rounds are computed in reformulated variables v = (epsilon / sigma2) r,
h = epsilon^2 / sigma2, b = epsilon * beta. A config built from (h, b) runs
bit-identically to one built from the matching (epsilon, beta) because both
store h and b and the round arithmetic never touches epsilon directly.

Randomness discipline: round i of a chain with seed s uses its own
Philox stream keyed by (s, i), with i = 0 reserved for initialization.
Within an AMAGOLD round the draw order is: momentum resample (if enabled),
the whole noise block eta (skipped entirely when beta = 0), the per-step
gradient randomness, then one uniform for the accept decision. HMC rounds
draw the resample and the uniform; SGHMC rounds draw no uniform.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .energy_models import full_batch_view
from .errors import ConfigError, ContractError, DomainError

CHAIN_KINDS = ("amagold", "amagold-skew", "sghmc", "hmc", "l2mc")


def reparameterize(epsilon, sigma2, beta):
    """Map (epsilon, sigma2, beta) to the reformulated pair (h, b)."""
    if epsilon <= 0 or sigma2 <= 0 or beta < 0:
        raise ConfigError("need epsilon > 0, sigma2 > 0, beta >= 0")
    return epsilon * epsilon / sigma2, epsilon * beta


def inverse_reparameterize(h, b, sigma2):
    """Recover (epsilon, beta) from (h, b) at a given sigma2."""
    if h <= 0 or b < 0 or sigma2 <= 0:
        raise ConfigError("need h > 0, b >= 0, sigma2 > 0")
    epsilon = math.sqrt(h * sigma2)
    return epsilon, b / epsilon


@dataclass
class PhaseState:
    """Position and physical momentum; both finite vectors of equal length."""

    theta: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        self.r = np.atleast_1d(np.asarray(self.r, dtype=float))
        if self.theta.shape != self.r.shape or self.theta.ndim != 1:
            raise ContractError("theta and r must be 1D arrays of equal length")
        if not (np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.r))):
            raise DomainError("phase state contains non-finite entries")


@dataclass
class SamplerConfig:
    """Round parameters shared by every sampler kind.

    domain, when set, is a (lower, upper) box; proposals outside it are
    rejected with a momentum flip. minibatch_size, when set, is pushed onto
    models that support minibatches at chain setup.
    """

    epsilon: float
    sigma2: float = 1.0
    beta: float = 0.0
    inner_steps: int = 10
    resample_momentum: bool = True
    domain: tuple | None = None
    minibatch_size: int | None = None

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError("epsilon must be positive and finite")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ConfigError("sigma2 must be positive and finite")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ConfigError("beta must be non-negative and finite")
        if int(self.inner_steps) != self.inner_steps or self.inner_steps < 1:
            raise ConfigError("inner_steps must be a positive integer")
        self.inner_steps = int(self.inner_steps)
        if self.epsilon * self.beta >= 1.0:
            raise ConfigError("epsilon * beta must stay below 1")
        if self.minibatch_size is not None and self.minibatch_size < 1:
            raise ConfigError("minibatch_size must be at least 1")
        if self.domain is not None:
            lo = np.atleast_1d(np.asarray(self.domain[0], dtype=float))
            hi = np.atleast_1d(np.asarray(self.domain[1], dtype=float))
            if lo.shape != hi.shape or not np.all(lo < hi):
                raise ConfigError("domain must be a (lower, upper) box with lower < upper")
            self.domain = (lo, hi)
        self.h = self.epsilon * self.epsilon / self.sigma2
        self.b = self.epsilon * self.beta

    @classmethod
    def from_reparameterized(cls, h, b, sigma2=1.0, **kwargs):
        """Build a config directly from (h, b); rounds use these values verbatim."""
        epsilon, beta = inverse_reparameterize(h, b, sigma2)
        cfg = cls(epsilon=epsilon, sigma2=sigma2, beta=beta, **kwargs)
        cfg.h = float(h)
        cfg.b = float(b)
        return cfg

    def to_dict(self):
        dom = None
        if self.domain is not None:
            dom = [self.domain[0].tolist(), self.domain[1].tolist()]
        return {
            "epsilon": self.epsilon,
            "sigma2": self.sigma2,
            "beta": self.beta,
            "inner_steps": self.inner_steps,
            "resample_momentum": self.resample_momentum,
            "domain": dom,
            "minibatch_size": self.minibatch_size,
        }


def _config_with(cfg, **changes):
    # replace() recomputes h and b; keep them verbatim when the physical
    # parameters did not change, so from_reparameterized configs survive.
    new = replace(cfg, **changes)
    if not {"epsilon", "sigma2", "beta"} & set(changes):
        new.h = cfg.h
        new.b = cfg.b
    return new


@dataclass(eq=False)
class RoundRecord:
    """Full trace of one round, enough to replay it or its time reversal.

    positions[t] is the position where gradient t was taken (positions[T] is
    the proposal), momenta[t] is the half-step momentum entering step t, and
    noises[t] is the injected friction noise, all in physical units.
    """

    kind: str
    config: SamplerConfig
    initial_theta: np.ndarray
    initial_r: np.ndarray
    positions: np.ndarray
    momenta: np.ndarray
    noises: np.ndarray | None
    gradient_records: list
    rho: np.ndarray | None
    proposal_theta: np.ndarray | None
    proposal_r: np.ndarray | None
    u_initial: float | None
    u_proposal: float | None
    log_accept: float | None
    uniform: float | None
    outcome: str
    numerical_failure: bool = False


@dataclass(eq=False)
class SampleSet:
    """Retained positions and bookkeeping from one chain run."""

    samples: np.ndarray
    kind: str
    config: SamplerConfig
    seed: int
    rounds: int
    burn_in: int
    accepted: int
    rejected: int
    out_of_domain: int
    numerical_failures: int
    final_state: PhaseState

    @property
    def acceptance_rate(self):
        return self.accepted / self.rounds


def round_stream(seed, index):
    """Independent generator for round `index` of the chain with `seed`."""
    key = ((int(seed) & 0xFFFFFFFFFFFFFFFF) << 64) | int(index)
    return np.random.Generator(np.random.Philox(key=key))


def _in_domain(cfg, theta):
    if cfg.domain is None:
        return True
    lo, hi = cfg.domain
    return bool(np.all(theta >= lo) & np.all(theta <= hi))


def _accepts(log_a, uniform):
    # accept with probability min(1, exp(log_a)); exp underflow is harmless
    la = min(0.0, log_a)
    return la >= 0.0 or uniform < math.exp(la)


def _amagold_core(model, cfg, theta, v, u_pot, rng, collect,
                  eta_v=None, zetas=None, uniform=None):
    """One AMAGOLD round in (theta, v) variables.

    Returns (theta, v, u_pot, outcome, numerical_failure, info). info is None
    unless collect is set. eta_v, zetas and uniform, when given, replace the
    corresponding draws (eta_v in v units).
    """
    steps = cfg.inner_steps
    d = theta.shape[0]
    h, b = cfg.h, cfg.b

    if cfg.resample_momentum:
        v = math.sqrt(h) * rng.standard_normal(d)
    v_in = v
    if eta_v is None:
        if b > 0.0:
            eta_v = math.sqrt(4.0 * h * b) * rng.standard_normal((steps, d))
        else:
            eta_v = np.zeros((steps, d))
    replay = zetas is not None

    info = None
    if collect:
        info = {
            "positions": np.empty((steps + 1, d)),
            "v_trace": np.empty((steps + 1, d)),
            "eta_v": np.array(eta_v, dtype=float),
            "zetas": [],
            "rho_trace": np.empty(steps + 1),
        }

    rho = 0.0
    failed = False
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        th = theta + 0.5 * v
        try:
            for t in range(steps):
                if t:
                    th = th + v
                if replay:
                    zeta = zetas[t]
                    g = model.replay_stochastic_gradient(th, zeta)
                else:
                    g, zeta = model.stochastic_gradient(th, rng)
                v_new = ((1.0 - b) * v - h * g + eta_v[t]) / (1.0 + b)
                rho += 0.5 * float(g @ (v + v_new))
                if collect:
                    info["positions"][t] = th
                    info["v_trace"][t] = v
                    info["zetas"].append(zeta)
                    info["rho_trace"][t] = rho - 0.5 * float(g @ (v + v_new))
                v = v_new
            th_star = th + 0.5 * v
        except DomainError:
            # the trajectory left the representable range mid-round
            failed = True
            th_star = np.full(d, np.nan)

    u_star = None
    log_a = None
    if u_pot is None and not failed:
        u_pot = model.potential(theta)
    if not failed:
        failed = not (np.all(np.isfinite(th_star)) and np.all(np.isfinite(v)))
    if not failed:
        u_star = model.potential(th_star)
        log_a = u_pot - u_star + rho
        failed = not math.isfinite(log_a)

    u = rng.random() if uniform is None else float(uniform)

    if failed:
        outcome = "rejected"
    elif not _in_domain(cfg, th_star):
        outcome = "out_of_domain"
    elif _accepts(log_a, u):
        outcome = "accepted"
    else:
        outcome = "rejected"

    if collect:
        info["positions"][steps] = th_star if not failed else np.nan
        info["v_trace"][steps] = v
        info["rho_trace"][steps] = rho
        info["proposal_theta"] = th_star
        info["proposal_v"] = v
        info["log_accept"] = log_a
        info["uniform"] = u
        info["u_initial"] = u_pot
        info["u_proposal"] = u_star

    if outcome == "accepted":
        return th_star, v, u_star, outcome, False, info
    return theta, -v_in, u_pot, outcome, failed, info


def _sghmc_core(model, cfg, theta, v, u_pot, rng, collect,
                eta_v=None, zetas=None, uniform=None):
    """One SGHMC round: no accept step, gradient taken after each position move."""
    steps = cfg.inner_steps
    d = theta.shape[0]
    h, b = cfg.h, cfg.b

    if cfg.resample_momentum:
        v = math.sqrt(h) * rng.standard_normal(d)
    v_in = v
    if eta_v is None:
        if b > 0.0:
            eta_v = math.sqrt(4.0 * h * b) * rng.standard_normal((steps, d))
        else:
            eta_v = np.zeros((steps, d))
    replay = zetas is not None

    info = None
    if collect:
        info = {
            "positions": np.empty((steps + 1, d)),
            "v_trace": np.empty((steps + 1, d)),
            "eta_v": np.array(eta_v, dtype=float),
            "zetas": [],
        }
        info["positions"][0] = theta
        info["v_trace"][0] = v

    failed = False
    th = theta
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        try:
            for t in range(steps):
                th = th + v
                if replay:
                    zeta = zetas[t]
                    g = model.replay_stochastic_gradient(th, zeta)
                else:
                    g, zeta = model.stochastic_gradient(th, rng)
                v = v - h * g - 2.0 * b * v + eta_v[t]
                if collect:
                    info["positions"][t + 1] = th
                    info["v_trace"][t + 1] = v
                    info["zetas"].append(zeta)
        except DomainError:
            failed = True

    if not failed:
        failed = not (np.all(np.isfinite(th)) and np.all(np.isfinite(v)))

    if collect:
        info["proposal_theta"] = th if not failed else None
        info["proposal_v"] = v if not failed else None
        info["log_accept"] = None
        info["uniform"] = None
        info["u_initial"] = None
        info["u_proposal"] = None

    if failed:
        return theta, -v_in, u_pot, "rejected", True, info
    if not _in_domain(cfg, th):
        return theta, -v_in, u_pot, "out_of_domain", False, info
    return th, v, None, "accepted", False, info


def _hmc_core(model, cfg, theta, v, u_pot, rng, collect,
              eta_v=None, zetas=None, uniform=None):
    """One exact-gradient HMC round with the same position-first leapfrog layout.

    Momentum is always resampled and friction is ignored; the accept test
    uses the full Hamiltonian.
    """
    steps = cfg.inner_steps
    d = theta.shape[0]
    h = cfg.h

    v = math.sqrt(h) * rng.standard_normal(d)
    v_in = v
    kin_in = 0.5 * float(v @ v) / h

    info = None
    if collect:
        info = {
            "positions": np.empty((steps + 1, d)),
            "v_trace": np.empty((steps + 1, d)),
            "eta_v": None,
            "zetas": [],
        }

    failed = False
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        th = theta + 0.5 * v
        try:
            for t in range(steps):
                if t:
                    th = th + v
                g = model.gradient(th)
                if collect:
                    info["positions"][t] = th
                    info["v_trace"][t] = v
                v = v - h * g
            th_star = th + 0.5 * v
        except DomainError:
            failed = True
            th_star = np.full(d, np.nan)

    u_star = None
    log_a = None
    if u_pot is None and not failed:
        u_pot = model.potential(theta)
    if not failed:
        failed = not (np.all(np.isfinite(th_star)) and np.all(np.isfinite(v)))
    if not failed:
        u_star = model.potential(th_star)
        log_a = (u_pot + kin_in) - (u_star + 0.5 * float(v @ v) / h)
        failed = not math.isfinite(log_a)

    u = rng.random() if uniform is None else float(uniform)

    if failed:
        outcome = "rejected"
    elif not _in_domain(cfg, th_star):
        outcome = "out_of_domain"
    elif _accepts(log_a, u):
        outcome = "accepted"
    else:
        outcome = "rejected"

    if collect:
        info["positions"][steps] = th_star if not failed else np.nan
        info["v_trace"][steps] = v
        info["proposal_theta"] = th_star
        info["proposal_v"] = v
        info["log_accept"] = log_a
        info["uniform"] = u
        info["u_initial"] = u_pot
        info["u_proposal"] = u_star

    if outcome == "accepted":
        return th_star, v, u_star, outcome, False, info
    return theta, -v_in, u_pot, outcome, failed, info


_CORES = {
    "amagold": _amagold_core,
    "sghmc": _sghmc_core,
    "hmc": _hmc_core,
}


def _make_record(kind, cfg, theta0, info):
    v2r = cfg.sigma2 / cfg.epsilon
    noises = None
    if info["eta_v"] is not None:
        noises = info["eta_v"] * v2r
    prop_th = info["proposal_theta"]
    prop_v = info["proposal_v"]
    return RoundRecord(
        kind=kind,
        config=cfg,
        initial_theta=np.array(theta0),
        initial_r=info["v_trace"][0] * v2r,
        positions=info["positions"],
        momenta=info["v_trace"] * v2r,
        noises=noises,
        gradient_records=info["zetas"],
        rho=info.get("rho_trace"),
        proposal_theta=None if prop_th is None else np.array(prop_th),
        proposal_r=None if prop_v is None else prop_v * v2r,
        u_initial=info["u_initial"],
        u_proposal=info["u_proposal"],
        log_accept=info["log_accept"],
        uniform=info["uniform"],
        outcome=info["outcome"],
        numerical_failure=info["numerical_failure"],
    )


def _run_round(kind, config, state, model, rng, eta_override, zeta_override,
               uniform_override):
    if model.dim != state.theta.shape[0]:
        raise ContractError("state dimension does not match the model")
    r2v = config.epsilon / config.sigma2
    eta_v = None
    if eta_override is not None:
        eta_v = np.asarray(eta_override, dtype=float) * r2v
        if eta_v.shape != (config.inner_steps, model.dim):
            raise ContractError("eta override must have shape (inner_steps, dim)")
    if rng is None:
        if config.resample_momentum or (eta_v is None and config.beta > 0) \
                or zeta_override is None or uniform_override is None:
            raise ContractError("rng is required unless every draw is overridden")
        rng = round_stream(0, 0)  # never consumed
    core = _CORES[kind]
    theta, v, _, outcome, failed, info = core(
        model, config, state.theta, state.r * r2v, None, rng, True,
        eta_v=eta_v, zetas=zeta_override, uniform=uniform_override)
    info["outcome"] = outcome
    info["numerical_failure"] = failed
    record = _make_record(kind, config, state.theta, info)
    if outcome != "accepted" and not config.resample_momentum:
        # exact flip of the caller's momentum, no unit round trip
        new_state = PhaseState(state.theta, -state.r)
    else:
        new_state = PhaseState(theta, v * (config.sigma2 / config.epsilon))
    return new_state, record


def amagold_round(config, state, model, rng=None, *, eta_override=None,
                  zeta_override=None, uniform_override=None):
    """Run one AMAGOLD round from `state`; returns (new_state, RoundRecord).

    Overrides inject the friction noise (physical units, shape (T, d)), the
    gradient noise records, and the accept uniform in place of fresh draws.
    """
    return _run_round("amagold", config, state, model, rng,
                      eta_override, zeta_override, uniform_override)


def sghmc_round(config, state, model, rng=None, *, eta_override=None,
                zeta_override=None):
    """Run one SGHMC round (no accept step); returns (new_state, RoundRecord)."""
    if rng is None and (config.resample_momentum or eta_override is None
                        or zeta_override is None):
        raise ContractError("rng is required unless every draw is overridden")
    r2v = config.epsilon / config.sigma2
    eta_v = None
    if eta_override is not None:
        eta_v = np.asarray(eta_override, dtype=float) * r2v
        if eta_v.shape != (config.inner_steps, model.dim):
            raise ContractError("eta override must have shape (inner_steps, dim)")
    if rng is None:
        rng = round_stream(0, 0)  # never consumed
    theta, v, _, outcome, failed, info = _sghmc_core(
        model, config, state.theta, state.r * r2v, None, rng, True,
        eta_v=eta_v, zetas=zeta_override)
    info["outcome"] = outcome
    info["numerical_failure"] = failed
    record = _make_record("sghmc", config, state.theta, info)
    if outcome != "accepted" and not config.resample_momentum:
        new_state = PhaseState(state.theta, -state.r)
    else:
        new_state = PhaseState(theta, v * (config.sigma2 / config.epsilon))
    return new_state, record


def hmc_round(config, state, model, rng):
    """Run one exact HMC round; returns (new_state, RoundRecord)."""
    theta, v, _, outcome, failed, info = _hmc_core(
        model, config, state.theta, state.r * (config.epsilon / config.sigma2),
        None, rng, True)
    info["outcome"] = outcome
    info["numerical_failure"] = failed
    record = _make_record("hmc", config, state.theta, info)
    new_state = PhaseState(theta, v * (config.sigma2 / config.epsilon))
    return new_state, record


def replay_reverse(record, model):
    """Replay the time reversal of a recorded AMAGOLD round.

    Starts from the proposal with flipped momentum, feeds the gradient
    records in reverse order, and injects the noise sequence under which the
    symmetric friction kick retraces the forward momenta with opposite sign:
    eta'_t = eta_s - 2 epsilon beta (r_{s-1/2} + r_{s+1/2}) with s = T-1-t.
    Returns the reverse RoundRecord.
    """
    if record.kind != "amagold":
        raise ContractError("only AMAGOLD rounds can be reversed")
    if record.numerical_failure or record.proposal_theta is None:
        raise ContractError("cannot reverse a failed round")
    cfg = _config_with(record.config, resample_momentum=False)
    steps = cfg.inner_steps
    eb = cfg.epsilon * cfg.beta
    noises = record.noises
    momenta = record.momenta
    eta_rev = np.empty_like(noises)
    for t in range(steps):
        s = steps - 1 - t
        eta_rev[t] = noises[s] - 2.0 * eb * (momenta[s] + momenta[s + 1])
    zetas_rev = list(reversed(record.gradient_records))
    start = PhaseState(record.proposal_theta, -record.proposal_r)
    _, rev = amagold_round(cfg, start, model, rng=None, eta_override=eta_rev,
                           zeta_override=zetas_rev,
                           uniform_override=record.uniform)
    return rev


def _prepare(kind, config, model):
    if kind not in CHAIN_KINDS:
        raise ConfigError(f"unknown chain kind {kind!r}; choose from {CHAIN_KINDS}")
    cfg = config
    if cfg.minibatch_size is not None:
        if not hasattr(model, "with_minibatch"):
            raise ConfigError("config sets minibatch_size but the model has no minibatches")
        model = model.with_minibatch(cfg.minibatch_size)
    if kind == "amagold-skew":
        cfg = _config_with(cfg, resample_momentum=False)
        kind = "amagold"
    elif kind == "l2mc":
        model = full_batch_view(model)
        kind = "amagold"
    elif kind == "hmc":
        if cfg.beta != 0.0:
            raise ConfigError("hmc ignores friction; set beta to 0")
    return kind, cfg, model


def run_chain(kind, config, model, rounds, burn_in=0, seed=0,
              initial_position=None):
    """Run `rounds` rounds and retain one position per round after burn-in.

    kind is one of "amagold", "amagold-skew" (no momentum resampling),
    "sghmc", "hmc", or "l2mc" (AMAGOLD on the exact full-batch view of the
    model). Deterministic given (kind, config, model, rounds, seed).
    """
    if rounds < 1:
        raise ConfigError("rounds must be at least 1")
    if not 0 <= burn_in < rounds:
        raise ConfigError("burn_in must satisfy 0 <= burn_in < rounds")
    kind, cfg, model = _prepare(kind, config, model)
    d = model.dim

    if initial_position is None:
        theta = np.zeros(d)
    else:
        theta = np.atleast_1d(np.asarray(initial_position, dtype=float)).copy()
        if theta.shape != (d,):
            raise ContractError("initial_position does not match the model dimension")
        if not np.all(np.isfinite(theta)):
            raise DomainError("initial_position contains non-finite entries")

    init_rng = round_stream(seed, 0)
    v = math.sqrt(cfg.h) * init_rng.standard_normal(d)

    core = _CORES[kind]
    samples = np.empty((rounds - burn_in, d))
    counts = {"accepted": 0, "rejected": 0, "out_of_domain": 0}
    failures = 0
    u_pot = None
    for i in range(1, rounds + 1):
        rng = round_stream(seed, i)
        theta, v, u_pot, outcome, failed, _ = core(
            model, cfg, theta, v, u_pot, rng, False)
        counts[outcome] += 1
        failures += failed
        if i > burn_in:
            samples[i - burn_in - 1] = theta

    final = PhaseState(theta, v * (cfg.sigma2 / cfg.epsilon))
    return SampleSet(
        samples=samples, kind=kind, config=cfg, seed=int(seed), rounds=rounds,
        burn_in=burn_in, accepted=counts["accepted"],
        rejected=counts["rejected"], out_of_domain=counts["out_of_domain"],
        numerical_failures=failures, final_state=final)


def advance_ensemble(kind, config, model, positions, rounds, seed=0):
    """Advance independent walkers `rounds` rounds each; returns final positions.

    Walker w runs its own chain seeded from SeedSequence(seed) child w, so
    the ensemble is embarrassingly parallel and reproducible.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim == 1:
        positions = positions[:, None]
    if positions.ndim != 2 or positions.shape[1] != model.dim:
        raise ContractError("positions must have shape (walkers, dim)")
    seeds = np.random.SeedSequence(int(seed)).generate_state(
        positions.shape[0], dtype=np.uint64)
    out = np.empty_like(positions)
    for w in range(positions.shape[0]):
        chain = run_chain(kind, config, model, rounds, burn_in=rounds - 1,
                          seed=int(seeds[w]), initial_position=positions[w])
        out[w] = chain.samples[-1]
    return out

"""Energy models: exact potentials, exact gradients, and replayable stochastic gradients.

Every model works with the negative log density U (the potential) up to an
additive constant. Stochastic gradients return a noise record that, replayed
at the same position, reproduces the same gradient estimate bit for bit.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigError, ContractError, DomainError


@dataclass(eq=False)
class GradientNoiseRecord:
    """What was random in one stochastic gradient evaluation.

    kind is "exact" (no noise), "gauss" (value holds the additive noise
    vector), or "minibatch" (value holds the drawn example indices).
    """

    kind: str
    value: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "gauss", "minibatch"):
            raise ContractError(f"unknown noise record kind {self.kind!r}")
        if self.kind == "exact" and self.value is not None:
            raise ContractError("exact records carry no value")
        if self.kind != "exact" and self.value is None:
            raise ContractError(f"{self.kind!r} records need a value")


class EnergyModel:
    """Base contract: potential(theta), gradient(theta), stochastic_gradient(theta, rng).

    Subclasses set ``dim``. The default stochastic gradient is the exact
    gradient with an "exact" record and consumes no randomness, so exact
    models can be driven by the same sampler code paths.
    """

    dim = None

    def _check_theta(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.dim,):
            raise ContractError(
                f"theta has shape {theta.shape}, model expects ({self.dim},)")
        if not np.all(np.isfinite(theta)):
            raise DomainError("theta contains non-finite entries")
        return theta

    def potential(self, theta):
        raise NotImplementedError

    def gradient(self, theta):
        raise NotImplementedError

    def stochastic_gradient(self, theta, rng):
        return self.gradient(theta), GradientNoiseRecord("exact")

    def replay_stochastic_gradient(self, theta, record):
        if record.kind != "exact":
            raise ContractError(
                f"model {type(self).__name__} cannot replay {record.kind!r} records")
        return self.gradient(theta)


class DoubleWell(EnergyModel):
    """1D quartic with two unequal wells: U(x) = (x+4)(x+1)(x-1)(x-3)/14 + 0.5.

    U - 0.5 has roots at -4, -1, 1 and 3; the deep well sits near -2.9 and
    the shallow one near 2.2.
    """

    dim = 1

    def potential(self, theta):
        x = self._check_theta(theta)[0]
        return float((x + 4.0) * (x + 1.0) * (x - 1.0) * (x - 3.0) / 14.0 + 0.5)

    def gradient(self, theta):
        x = self._check_theta(theta)[0]
        return np.array([(4.0 * x**3 + 3.0 * x**2 - 26.0 * x - 1.0) / 14.0])


class Dist1(EnergyModel):
    """2D banana-shaped density: z1 | z2 ~ N(z2^2/4, 1) and z2 ~ N(0, scale).

    scale is the variance of z2; the default 4 gives marginal moments
    E[z1] = 1, Var[z1] = 3, E[z2] = 0, Var[z2] = 4.
    """

    dim = 2

    def __init__(self, scale=4.0):
        if scale <= 0:
            raise ConfigError("scale must be positive")
        self.scale = float(scale)

    def potential(self, theta):
        z1, z2 = self._check_theta(theta)
        resid = z1 - z2 * z2 / 4.0
        return float(0.5 * resid * resid + z2 * z2 / (2.0 * self.scale))

    def gradient(self, theta):
        z1, z2 = self._check_theta(theta)
        resid = z1 - z2 * z2 / 4.0
        return np.array([resid, z2 / self.scale - 0.5 * z2 * resid])

    def sample(self, n, rng):
        """Draw exactly from the target (for reference moments in tests)."""
        z2 = np.sqrt(self.scale) * rng.standard_normal(n)
        z1 = z2 * z2 / 4.0 + rng.standard_normal(n)
        return np.column_stack([z1, z2])


class Dist2(EnergyModel):
    """Even two-component Gaussian mixture, covariances [[2, 1.8], [1.8, 2]] and its mirror.

    Both components are zero mean, so the mixture has mean 0 and covariance
    [[2, 0], [0, 2]].
    """

    dim = 2

    def __init__(self):
        cov = np.array([[2.0, 1.8], [1.8, 2.0]])
        self._prec_a = np.linalg.inv(cov)
        self._prec_b = np.linalg.inv(cov * np.array([[1.0, -1.0], [-1.0, 1.0]]))

    def _exponents(self, z):
        qa = -0.5 * float(z @ self._prec_a @ z)
        qb = -0.5 * float(z @ self._prec_b @ z)
        return qa, qb

    def potential(self, theta):
        z = self._check_theta(theta)
        qa, qb = self._exponents(z)
        # components share the determinant, so it drops into the constant
        return float(-np.logaddexp(qa, qb))

    def gradient(self, theta):
        z = self._check_theta(theta)
        qa, qb = self._exponents(z)
        wa = expit(qa - qb)
        return wa * (self._prec_a @ z) + (1.0 - wa) * (self._prec_b @ z)

    def sample(self, n, rng):
        """Draw exactly from the mixture (for reference moments in tests)."""
        cov_a = np.linalg.inv(self._prec_a)
        la = np.linalg.cholesky(cov_a)
        out = rng.standard_normal((n, 2)) @ la.T
        flip = rng.random(n) < 0.5
        out[flip, 1] *= -1.0  # mirrored component
        return out


class GaussianNoiseGradient(EnergyModel):
    """Wraps a model so stochastic gradients are grad U plus scaled white noise."""

    def __init__(self, base, noise_scale=1.0):
        if noise_scale < 0:
            raise ConfigError("noise_scale must be non-negative")
        self.base = base
        self.dim = base.dim
        self.noise_scale = float(noise_scale)

    def potential(self, theta):
        return self.base.potential(theta)

    def gradient(self, theta):
        return self.base.gradient(theta)

    def stochastic_gradient(self, theta, rng):
        noise = self.noise_scale * rng.standard_normal(self.dim)
        return self.base.gradient(theta) + noise, GradientNoiseRecord("gauss", noise)

    def replay_stochastic_gradient(self, theta, record):
        if record.kind != "gauss":
            raise ContractError("wrapped model replays only 'gauss' records")
        return self.base.gradient(theta) + record.value


@dataclass
class Dataset:
    """Binary classification data with labels in {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray
    column_means: np.ndarray | None = None
    column_scales: np.ndarray | None = None
    constant_columns: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ContractError("features must be a non-empty 2D array")
        if self.labels.shape != (self.features.shape[0],):
            raise ContractError("labels must match the number of rows")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ContractError("labels must be -1 or +1")
        if not np.all(np.isfinite(self.features)):
            raise DomainError("features contain non-finite entries")

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def p(self):
        return self.features.shape[1]


class LogisticRegression(EnergyModel):
    """Bayesian logistic regression posterior as an energy.

    U(theta) = sum_i log(1 + exp(-y_i x_i.theta)) + |theta|^2 / (2 prior_variance).
    Minibatch gradients scale the data term by n/m and keep the full prior term.
    """

    def __init__(self, dataset, prior_variance=10.0, minibatch_size=None):
        if prior_variance <= 0:
            raise ConfigError("prior_variance must be positive")
        if minibatch_size is not None:
            if minibatch_size < 1:
                raise ConfigError("minibatch_size must be at least 1")
            if minibatch_size > dataset.n:
                raise ConfigError(
                    f"minibatch_size {minibatch_size} exceeds dataset size {dataset.n}")
        self.dataset = dataset
        self.prior_variance = float(prior_variance)
        self.minibatch_size = minibatch_size
        self.dim = dataset.p
        # rows of y_i * x_i; every U and gradient term goes through these
        self._yx = dataset.labels[:, None] * dataset.features

    def potential(self, theta):
        theta = self._check_theta(theta)
        z = self._yx @ theta
        prior = theta @ theta / (2.0 * self.prior_variance)
        return float(np.logaddexp(0.0, -z).sum() + prior)

    def gradient(self, theta):
        theta = self._check_theta(theta)
        z = self._yx @ theta
        return -(self._yx.T @ expit(-z)) + theta / self.prior_variance

    def _minibatch_gradient(self, theta, indices):
        rows = self._yx[indices]
        z = rows @ theta
        scale = self.dataset.n / len(indices)
        return -scale * (rows.T @ expit(-z)) + theta / self.prior_variance

    def stochastic_gradient(self, theta, rng):
        theta = self._check_theta(theta)
        m = self.minibatch_size
        if m is None:
            return self.gradient(theta), GradientNoiseRecord("exact")
        if m == self.dataset.n:
            # full-batch minibatch: natural order, no draw, exactly grad U
            indices = np.arange(self.dataset.n)
        else:
            indices = rng.choice(self.dataset.n, size=m, replace=False)
        return (self._minibatch_gradient(theta, indices),
                GradientNoiseRecord("minibatch", indices))

    def replay_stochastic_gradient(self, theta, record):
        theta = self._check_theta(theta)
        if record.kind == "exact":
            return self.gradient(theta)
        if record.kind == "minibatch":
            return self._minibatch_gradient(theta, record.value)
        raise ContractError("dataset model replays 'exact' or 'minibatch' records")

    def with_minibatch(self, minibatch_size):
        """Copy of this model with a different minibatch size (None = full batch)."""
        return LogisticRegression(self.dataset, self.prior_variance, minibatch_size)


def full_batch_view(model):
    """Exact-gradient view of a model: unwrap noise wrappers, force full batch."""
    if isinstance(model, GaussianNoiseGradient):
        return full_batch_view(model.base)
    if isinstance(model, LogisticRegression) and model.minibatch_size is not None:
        return model.with_minibatch(None)
    return model

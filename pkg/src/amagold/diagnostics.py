"""Grid densities, divergence and moment diagnostics for 1D and 2D targets."""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError

MASS_TOL = 1e-9
KL_FLOOR = 1e-10


def _normalize_bounds(bounds):
    arr = np.asarray(bounds, dtype=float)
    if arr.ndim == 1 and arr.shape == (2,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] not in (1, 2):
        raise ContractError("bounds must be (lo, hi) or ((lo, hi), (lo, hi))")
    if not np.all(np.isfinite(arr)) or not np.all(arr[:, 0] < arr[:, 1]):
        raise ContractError("bounds must be finite with lo < hi")
    return tuple((float(lo), float(hi)) for lo, hi in arr)


def _normalize_bins(bins, ndim):
    if np.isscalar(bins):
        bins = (int(bins),) * ndim
    bins = tuple(int(b) for b in bins)
    if len(bins) != ndim or any(b < 1 for b in bins):
        raise ContractError("bins must be positive, one count per dimension")
    return bins


@dataclass(eq=False)
class GridDensity:
    """Probability masses on a regular 1D or 2D grid.

    mass is non-negative and sums to 1; spill counts source samples that fell
    outside the bounds and were clamped into edge cells.
    """

    bounds: tuple
    bins: tuple
    mass: np.ndarray
    spill: int = 0

    def __post_init__(self):
        self.bounds = _normalize_bounds(self.bounds)
        self.bins = _normalize_bins(self.bins, len(self.bounds))
        self.mass = np.asarray(self.mass, dtype=float)
        if self.mass.shape != self.bins:
            raise ContractError(f"mass shape {self.mass.shape} does not match bins {self.bins}")
        if np.any(self.mass < 0) or not np.all(np.isfinite(self.mass)):
            raise ContractError("mass must be finite and non-negative")
        if abs(self.mass.sum() - 1.0) > MASS_TOL:
            raise ContractError("mass must sum to 1")

    @property
    def ndim(self):
        return len(self.bounds)

    def edges(self, axis=0):
        lo, hi = self.bounds[axis]
        return np.linspace(lo, hi, self.bins[axis] + 1)

    def centers(self, axis=0):
        e = self.edges(axis)
        return 0.5 * (e[:-1] + e[1:])

    def same_grid(self, other):
        return self.bounds == other.bounds and self.bins == other.bins

    def sample(self, n, rng):
        """Draw n points, piecewise uniform within cells. 1D grids only."""
        if self.ndim != 1:
            raise ContractError("sampling is implemented for 1D grids")
        edges = self.edges(0)
        cum = np.concatenate([[0.0], np.cumsum(self.mass)])
        cum[-1] = 1.0
        u = rng.random(n)
        idx = np.searchsorted(cum, u, side="right") - 1
        idx = np.clip(idx, 0, self.bins[0] - 1)
        cell_mass = self.mass[idx]
        frac = np.where(cell_mass > 0, (u - cum[idx]) / np.where(cell_mass > 0, cell_mass, 1.0), 0.5)
        width = edges[1] - edges[0]
        return edges[idx] + frac * width

    def to_csv(self, path):
        with open(path, "w") as fh:
            if self.ndim == 1:
                fh.write("center,mass\n")
                for c, m in zip(self.centers(0), self.mass):
                    fh.write(f"{c:.17g},{m:.17g}\n")
            else:
                fh.write("center_0,center_1,mass\n")
                c0 = self.centers(0)
                c1 = self.centers(1)
                for i in range(self.bins[0]):
                    for j in range(self.bins[1]):
                        fh.write(f"{c0[i]:.17g},{c1[j]:.17g},{self.mass[i, j]:.17g}\n")


def histogram_density(samples, bounds, bins):
    """Empirical grid density of samples; out-of-bounds points clamp to edge cells."""
    bounds = _normalize_bounds(bounds)
    ndim = len(bounds)
    bins = _normalize_bins(bins, ndim)
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.ndim != 2 or samples.shape[1] != ndim:
        raise ContractError("samples must have shape (n,) or (n, ndim)")
    if samples.shape[0] < 1:
        raise ContractError("need at least one sample")
    if not np.all(np.isfinite(samples)):
        raise DomainError("samples contain non-finite values")

    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    outside = np.any((samples < lo) | (samples > hi), axis=1)
    spill = int(outside.sum())
    clamped = np.clip(samples, lo, hi)
    counts, _ = np.histogramdd(clamped, bins=bins, range=bounds)
    mass = counts / samples.shape[0]
    if ndim == 1:
        mass = mass.reshape(bins)
    return GridDensity(bounds=bounds, bins=bins, mass=mass, spill=spill)


def analytic_density(potential, bounds, bins):
    """Grid density proportional to exp(-U) at cell centers.

    Invariant to additive constants in U by construction (the minimum is
    subtracted before exponentiating).
    """
    bounds = _normalize_bounds(bounds)
    ndim = len(bounds)
    bins = _normalize_bins(bins, ndim)
    grid = GridDensity(bounds=bounds, bins=bins,
                       mass=np.full(bins, 1.0 / np.prod(bins)))
    if ndim == 1:
        u = np.array([potential(np.array([c])) for c in grid.centers(0)])
    else:
        c0 = grid.centers(0)
        c1 = grid.centers(1)
        u = np.empty(bins)
        for i in range(bins[0]):
            for j in range(bins[1]):
                u[i, j] = potential(np.array([c0[i], c1[j]]))
    if not np.all(np.isfinite(u)):
        raise DomainError("potential is non-finite on the grid")
    mass = np.exp(-(u - u.min()))
    mass /= mass.sum()
    return GridDensity(bounds=bounds, bins=bins, mass=mass)


def symmetric_kl(p, q, floor=KL_FLOOR):
    """Symmetrized KL divergence between two densities on the same grid.

    Both mass arrays are floored at `floor` and renormalized, so empty cells
    contribute a large but finite penalty.
    """
    if not isinstance(p, GridDensity) or not isinstance(q, GridDensity):
        raise ContractError("symmetric_kl expects two GridDensity objects")
    if not p.same_grid(q):
        raise ContractError("densities live on different grids")
    pm = np.maximum(p.mass, floor)
    qm = np.maximum(q.mass, floor)
    pm = pm / pm.sum()
    qm = qm / qm.sum()
    return float(np.sum((pm - qm) * (np.log(pm) - np.log(qm))))


def moments(samples):
    """Sample mean and covariance (ddof=1); cov is (d, d) even for 1D input."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ContractError("moments need at least two samples")
    mean = samples.mean(axis=0)
    cov = np.atleast_2d(np.cov(samples, rowvar=False, ddof=1))
    return mean, cov


def parameter_mse(estimate, reference):
    """Mean squared error between two parameter vectors."""
    a = np.atleast_1d(np.asarray(estimate, dtype=float))
    b = np.atleast_1d(np.asarray(reference, dtype=float))
    if a.shape != b.shape:
        raise ContractError("estimate and reference must have the same shape")
    diff = a - b
    return float(diff @ diff / a.size)

"""Dataset loading, sample dumps, and run reports.

Datasets are text files, one example per line: the label first (+1/-1, or
0/1 which maps to -1/+1), then either dense feature values or sparse
1-based index:value pairs. Lines starting with '#' and blank lines are
skipped. Parse errors carry the 1-based line number.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .energy_models import Dataset
from .errors import ContractError, ParseError

CONSTANT_COLUMN_TOL = 1e-12


def _parse_label(token, lineno):
    try:
        raw = float(token)
    except ValueError:
        raise ParseError(f"line {lineno}: bad label {token!r}") from None
    if raw in (1.0, -1.0):
        return raw
    if raw == 0.0:
        return -1.0
    raise ParseError(f"line {lineno}: label must be -1, 0 or +1, got {token!r}")


def load_dataset(path, standardize=False, intercept=False):
    """Load a labelled dataset; optionally standardize columns and add an intercept.

    Standardization subtracts the column mean and divides by the population
    standard deviation; constant columns keep scale 1 and are listed in
    Dataset.constant_columns. The intercept column of ones, when requested,
    is appended last and never standardized.
    """
    labels = []
    rows = []
    width = 0
    try:
        fh = open(path)
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err.strerror}") from err
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) < 2:
                raise ParseError(f"line {lineno}: need a label and at least one feature")
            labels.append(_parse_label(tokens[0], lineno))
            if ":" in line:
                row = {}
                for tok in tokens[1:]:
                    try:
                        idx_str, val_str = tok.split(":", 1)
                        idx = int(idx_str)
                        val = float(val_str)
                    except ValueError:
                        raise ParseError(f"line {lineno}: bad pair {tok!r}") from None
                    if idx < 1:
                        raise ParseError(f"line {lineno}: indices are 1-based, got {idx}")
                    row[idx - 1] = val
                width = max(width, max(row) + 1)
            else:
                try:
                    row = [float(tok) for tok in tokens[1:]]
                except ValueError:
                    raise ParseError(f"line {lineno}: bad feature value") from None
                width = max(width, len(row))
            rows.append(row)

    if not rows:
        raise ParseError("file holds no data lines")
    features = np.zeros((len(rows), width))
    for i, row in enumerate(rows):
        if isinstance(row, dict):
            for j, val in row.items():
                features[i, j] = val
        else:
            features[i, :len(row)] = row

    means = None
    scales = None
    constant = []
    if standardize:
        means = features.mean(axis=0)
        scales = features.std(axis=0)
        constant = [int(j) for j in np.nonzero(scales <= CONSTANT_COLUMN_TOL)[0]]
        scales = np.where(scales <= CONSTANT_COLUMN_TOL, 1.0, scales)
        features = (features - means) / scales
    if intercept:
        features = np.column_stack([features, np.ones(len(rows))])

    return Dataset(features=features, labels=np.array(labels),
                   column_means=means, column_scales=scales,
                   constant_columns=constant)


def write_samples(sample_set, path):
    """Write retained samples as CSV: absolute round index, then coordinates."""
    samples = sample_set.samples
    d = samples.shape[1]
    header = "round," + ",".join(f"theta_{j}" for j in range(d))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i in range(samples.shape[0]):
            rnd = sample_set.burn_in + 1 + i
            fh.write(str(rnd) + "," + ",".join(f"{x:.17g}" for x in samples[i]) + "\n")


def read_samples(path):
    """Read a samples CSV back; returns (round_indices, samples)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0].astype(int), data[:, 1:]


@dataclass
class RunReport:
    """Everything needed to identify and audit one experiment run."""

    experiment: str
    sampler: str
    model: str
    config: dict
    seed: int
    rounds: int
    burn_in: int
    acceptance_rate: float
    out_of_domain: int = 0
    numerical_failures: int = 0
    duration_seconds: float = 0.0
    dataset: str | None = None
    outputs: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f for f in cls.__dataclass_fields__}
        extra_keys = set(data) - known
        if extra_keys:
            raise ContractError(f"unknown report fields: {sorted(extra_keys)}")
        return cls(**data)


def write_run_report(report, path):
    """Serialize a report as stable JSON (sorted keys, two-space indent)."""
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_run_report(path):
    with open(path) as fh:
        return RunReport.from_dict(json.load(fh))

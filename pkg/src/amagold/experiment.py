"""Experiment driver and command line interface (entry point amagold-exp).

Experiments: run (one chain plus diagnostics), sweep (parallel chains over a
step-size list), tune (step-size adaptation), stationarity (ensemble of
walkers started from the exact target), oracle (long exact chain whose
posterior mean serves as a reference). Every experiment writes a JSON run
report and its artifacts under --out.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .dataio import (RunReport, load_dataset, write_run_report, write_samples)
from .diagnostics import analytic_density, histogram_density, symmetric_kl
from .energy_models import (Dist1, Dist2, DoubleWell, GaussianNoiseGradient,
                            LogisticRegression)
from .errors import AmagoldError, UsageError
from .sampler_core import (CHAIN_KINDS, SamplerConfig, advance_ensemble,
                           run_chain)
from .tuning import TunerSchedule, trace_to_csv, tune_step_size

EXPERIMENTS = ("run", "sweep", "tune", "stationarity", "oracle")
MODELS = ("double-well", "dist1", "dist2", "logreg")

# diagnostic grids per synthetic model: bounds and histogram bins
DEFAULT_GRIDS = {
    "double-well": ((-5.0, 4.0), 900),
    "dist1": (((-4.0, 8.0), (-8.0, 8.0)), (100, 100)),
    "dist2": (((-6.0, 6.0), (-6.0, 6.0)), (100, 100)),
}
STATIONARITY_GRID_BINS = 4096


@dataclass
class ExperimentConfig:
    """Resolved experiment settings; None fields are filled by parse_args."""

    experiment: str = "run"
    sampler: str = "amagold"
    model: str | None = None
    dataset: str | None = None
    epsilon: float = 0.1
    sigma2: float = 1.0
    beta: float | None = None
    inner_steps: int = 10
    rounds: int | None = None
    burn_in: int | None = None
    seed: int = 0
    minibatch: int | None = None
    resample: str = "on"
    target_accept: float = 0.85
    out: str | None = None
    sweep_epsilons: list | None = None
    reference: str | None = None
    noise_scale: float | None = None
    walkers: int = 10000
    print_config: bool = False


def _resolve(cfg):
    if cfg.beta is None:
        cfg.beta = 0.0 if cfg.sampler == "hmc" else 0.25
    if cfg.rounds is None:
        cfg.rounds = {"oracle": 1000000, "stationarity": 20,
                      "tune": 10000}.get(cfg.experiment, 100000)
    if cfg.burn_in is None:
        cfg.burn_in = 0 if cfg.experiment in ("stationarity", "tune") \
            else cfg.rounds // 10
    if cfg.out is None:
        cfg.out = f"runs/{cfg.experiment}_{cfg.model}_{cfg.sampler}_s{cfg.seed}"
    return cfg


def validate(cfg):
    """Collect every configuration problem; raise UsageError naming them all."""
    problems = []
    if cfg.experiment not in EXPERIMENTS:
        problems.append(f"experiment must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
    if cfg.sampler not in CHAIN_KINDS:
        problems.append(f"sampler must be one of {CHAIN_KINDS}, got {cfg.sampler!r}")
    if cfg.model is None:
        problems.append("model is required (--model)")
    elif cfg.model not in MODELS:
        problems.append(f"model must be one of {MODELS}, got {cfg.model!r}")
    if cfg.model == "logreg" and not cfg.dataset:
        problems.append("logreg needs a dataset path (--dataset)")
    if cfg.model in MODELS[:3] and cfg.dataset:
        problems.append("dataset only applies to the logreg model")
    if not cfg.epsilon > 0:
        problems.append("epsilon must be positive")
    if not cfg.sigma2 > 0:
        problems.append("sigma2 must be positive")
    if cfg.beta is not None:
        if cfg.beta < 0:
            problems.append("beta must be non-negative")
        elif cfg.epsilon * cfg.beta >= 1:
            problems.append("epsilon * beta must stay below 1")
        if cfg.sampler == "hmc" and cfg.beta != 0:
            problems.append("hmc ignores friction; leave beta unset or 0")
    if cfg.inner_steps < 1:
        problems.append("inner-steps must be at least 1")
    if cfg.rounds is not None and cfg.rounds < 1:
        problems.append("rounds must be at least 1")
    if cfg.burn_in is not None and cfg.rounds is not None \
            and not 0 <= cfg.burn_in < cfg.rounds:
        problems.append("burn-in must satisfy 0 <= burn-in < rounds")
    if cfg.seed < 0:
        problems.append("seed must be non-negative")
    if cfg.minibatch is not None and cfg.minibatch < 1:
        problems.append("minibatch must be at least 1")
    if cfg.resample not in ("on", "off"):
        problems.append("resample must be 'on' or 'off'")
    if not 0 < cfg.target_accept < 1:
        problems.append("target-accept must lie strictly between 0 and 1")
    if cfg.noise_scale is not None and cfg.noise_scale < 0:
        problems.append("noise-scale must be non-negative")
    if cfg.walkers < 1:
        problems.append("walkers must be at least 1")
    if cfg.experiment == "sweep":
        eps = cfg.sweep_epsilons
        if not eps:
            problems.append("sweep needs --sweep-epsilons")
        elif any(e <= 0 for e in eps) or any(a >= b for a, b in zip(eps, eps[1:])):
            problems.append("sweep-epsilons must be positive and strictly increasing")
        if cfg.model == "logreg" and not cfg.reference:
            problems.append("logreg sweeps need --reference (oracle posterior mean)")
    if cfg.experiment == "stationarity" and cfg.model != "double-well":
        problems.append("stationarity runs on the 1D double-well model")
    if problems:
        raise UsageError("; ".join(problems))
    return cfg


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    p = _Parser(prog="amagold-exp", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with any of the other settings")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--sampler", choices=CHAIN_KINDS)
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--dataset")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--inner-steps", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--minibatch", type=int)
    p.add_argument("--resample", choices=("on", "off"))
    p.add_argument("--target-accept", type=float)
    p.add_argument("--out")
    p.add_argument("--sweep-epsilons",
                   help="comma separated step sizes, strictly increasing")
    p.add_argument("--reference",
                   help="posterior mean CSV used as the error reference")
    p.add_argument("--noise-scale", type=float,
                   help="wrap the model with additive Gaussian gradient noise")
    p.add_argument("--walkers", type=int)
    p.add_argument("--print-config", action="store_true")
    return p


def parse_args(argv=None):
    """Parse flags (and optional JSON config) into a validated ExperimentConfig."""
    args = _build_parser().parse_args(argv)
    settings = {}
    if args.config:
        try:
            with open(args.config) as fh:
                settings.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as err:
            raise UsageError(f"cannot read config file: {err}") from None
        unknown = set(settings) - set(ExperimentConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for key, value in vars(args).items():
        if key == "config" or value is None or value is False:
            continue
        settings[key] = value
    if isinstance(settings.get("sweep_epsilons"), str):
        try:
            settings["sweep_epsilons"] = [
                float(tok) for tok in settings["sweep_epsilons"].split(",") if tok]
        except ValueError:
            raise UsageError("sweep-epsilons must be comma separated numbers") from None
    cfg = ExperimentConfig()
    for key, value in settings.items():
        setattr(cfg, key, value)
    return validate(_resolve(cfg))


def _build_model(cfg):
    if cfg.model == "double-well":
        model = DoubleWell()
    elif cfg.model == "dist1":
        model = Dist1()
    elif cfg.model == "dist2":
        model = Dist2()
    else:
        data = load_dataset(cfg.dataset, standardize=True, intercept=True)
        model = LogisticRegression(data, prior_variance=10.0)
    if cfg.noise_scale is not None:
        model = GaussianNoiseGradient(model, cfg.noise_scale)
    return model


def _sampler_config(cfg):
    return SamplerConfig(
        epsilon=cfg.epsilon, sigma2=cfg.sigma2, beta=cfg.beta,
        inner_steps=cfg.inner_steps,
        resample_momentum=cfg.resample == "on",
        minibatch_size=cfg.minibatch)


def _base_report(cfg, chain, duration):
    return RunReport(
        experiment=cfg.experiment, sampler=cfg.sampler, model=cfg.model,
        config=chain.config.to_dict(), seed=cfg.seed, rounds=cfg.rounds,
        burn_in=cfg.burn_in, acceptance_rate=chain.acceptance_rate,
        out_of_domain=chain.out_of_domain,
        numerical_failures=chain.numerical_failures,
        duration_seconds=duration, dataset=cfg.dataset)


def _grid_diagnostics(cfg, model, samples, outdir, extras, outputs):
    bounds, bins = DEFAULT_GRIDS[cfg.model]
    hist = histogram_density(samples, bounds, bins)
    exact = analytic_density(model.potential, bounds, bins)
    extras["symmetric_kl"] = symmetric_kl(hist, exact)
    extras["spill"] = hist.spill
    hist.to_csv(outdir / "hist_density.csv")
    exact.to_csv(outdir / "analytic_density.csv")
    outputs["hist_density"] = str(outdir / "hist_density.csv")
    outputs["analytic_density"] = str(outdir / "analytic_density.csv")


def _write_posterior_mean(mean, path):
    with open(path, "w") as fh:
        fh.write(",".join(f"theta_{j}" for j in range(len(mean))) + "\n")
        fh.write(",".join(f"{x:.17g}" for x in mean) + "\n")


def _read_posterior_mean(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=1)


def _experiment_run(cfg):
    model = _build_model(cfg)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    chain = run_chain(cfg.sampler, _sampler_config(cfg), model,
                      cfg.rounds, cfg.burn_in, cfg.seed)
    report = _base_report(cfg, chain, time.perf_counter() - start)
    # oracle runs are long and only their posterior mean is consumed
    if cfg.experiment != "oracle":
        write_samples(chain, outdir / "samples.csv")
        report.outputs["samples"] = str(outdir / "samples.csv")
    if cfg.model in DEFAULT_GRIDS:
        _grid_diagnostics(cfg, model, chain.samples, outdir,
                          report.extras, report.outputs)
    else:
        mean = chain.samples.mean(axis=0)
        report.extras["posterior_mean"] = mean.tolist()
        _write_posterior_mean(mean, outdir / "posterior_mean.csv")
        report.outputs["posterior_mean"] = str(outdir / "posterior_mean.csv")
        if cfg.reference:
            ref = _read_posterior_mean(cfg.reference)
            diff = mean - ref
            report.extras["mse"] = float(diff @ diff / diff.size)
    report.outputs["report"] = str(outdir / "report.json")
    write_run_report(report, outdir / "report.json")
    return report


def _experiment_oracle(cfg):
    # long exact full-batch chain; its posterior mean is the sweep reference
    oracle_cfg = replace(cfg, sampler="l2mc", experiment="oracle")
    report = _experiment_run(oracle_cfg)
    return report


def _sweep_point(point_cfg):
    report = _experiment_run(point_cfg)
    metric = "mse" if point_cfg.model == "logreg" else "symmetric_kl"
    return (point_cfg.epsilon, report.extras.get(metric),
            report.acceptance_rate)


def _experiment_sweep(cfg):
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    seeds = np.random.SeedSequence(cfg.seed).generate_state(
        len(cfg.sweep_epsilons), dtype=np.uint64)
    points = []
    for i, eps in enumerate(cfg.sweep_epsilons):
        points.append(replace(
            cfg, experiment="run", epsilon=eps, seed=int(seeds[i]),
            sweep_epsilons=None, out=str(outdir / f"eps_{eps:g}")))
    start = time.perf_counter()
    workers = min(len(points), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, points))
    else:
        rows = [_sweep_point(p) for p in points]
    duration = time.perf_counter() - start
    rows.sort(key=lambda row: row[0])

    metric = "mse" if cfg.model == "logreg" else "symmetric_kl"
    summary = outdir / "summary.csv"
    with open(summary, "w") as fh:
        fh.write(f"epsilon,{metric},acceptance_rate\n")
        for eps, value, acc in rows:
            fh.write(f"{eps:.17g},{value:.17g},{acc:.17g}\n")

    report = RunReport(
        experiment="sweep", sampler=cfg.sampler, model=cfg.model,
        config=_sampler_config(cfg).to_dict(), seed=cfg.seed,
        rounds=cfg.rounds, burn_in=cfg.burn_in, acceptance_rate=float("nan"),
        duration_seconds=duration, dataset=cfg.dataset,
        outputs={"summary": str(summary)},
        extras={"metric": metric, "rows": [list(r) for r in rows]})
    report.outputs["report"] = str(outdir / "report.json")
    write_run_report(report, outdir / "report.json")
    return report


def _experiment_tune(cfg):
    model = _build_model(cfg)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    schedule = TunerSchedule(target=cfg.target_accept, total_rounds=cfg.rounds)
    start = time.perf_counter()
    epsilon, trace = tune_step_size(_sampler_config(cfg), model, schedule,
                                    seed=cfg.seed)
    duration = time.perf_counter() - start
    trace_to_csv(trace, outdir / "tuning_trace.csv")
    report = RunReport(
        experiment="tune", sampler="amagold", model=cfg.model,
        config=_sampler_config(cfg).to_dict(), seed=cfg.seed,
        rounds=cfg.rounds, burn_in=0,
        acceptance_rate=trace[-1][2], duration_seconds=duration,
        dataset=cfg.dataset,
        outputs={"tuning_trace": str(outdir / "tuning_trace.csv")},
        extras={"final_epsilon": epsilon, "windows": len(trace),
                "target": cfg.target_accept})
    report.outputs["report"] = str(outdir / "report.json")
    write_run_report(report, outdir / "report.json")
    return report


def _experiment_stationarity(cfg):
    model = _build_model(cfg)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    bounds, _ = DEFAULT_GRIDS[cfg.model]
    exact = analytic_density(model.potential, bounds, STATIONARITY_GRID_BINS)
    draw_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    fresh_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    initial = exact.sample(cfg.walkers, draw_rng)
    start = time.perf_counter()
    final = advance_ensemble(cfg.sampler, _sampler_config(cfg), model,
                             initial[:, None], cfg.rounds, seed=cfg.seed)
    duration = time.perf_counter() - start
    reference = exact.sample(cfg.walkers, fresh_rng)
    ks = stats.ks_2samp(final[:, 0], reference)
    np.savetxt(outdir / "final_positions.csv", final,
               delimiter=",", header="theta_0", comments="")
    report = RunReport(
        experiment="stationarity", sampler=cfg.sampler, model=cfg.model,
        config=_sampler_config(cfg).to_dict(), seed=cfg.seed,
        rounds=cfg.rounds, burn_in=0, acceptance_rate=float("nan"),
        duration_seconds=duration,
        outputs={"final_positions": str(outdir / "final_positions.csv")},
        extras={"walkers": cfg.walkers, "ks_statistic": float(ks.statistic),
                "p_value": float(ks.pvalue)})
    report.outputs["report"] = str(outdir / "report.json")
    write_run_report(report, outdir / "report.json")
    return report


def run_experiment(cfg):
    """Dispatch one experiment; returns its RunReport."""
    validate(cfg)
    runner = {
        "run": _experiment_run,
        "sweep": _experiment_sweep,
        "tune": _experiment_tune,
        "stationarity": _experiment_stationarity,
        "oracle": _experiment_oracle,
    }[cfg.experiment]
    return runner(cfg)


def main(argv=None):
    try:
        cfg = parse_args(argv)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    if cfg.print_config:
        print(json.dumps(asdict(cfg), sort_keys=True, indent=2))
        return 0
    try:
        report = run_experiment(cfg)
    except AmagoldError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"{cfg.experiment} finished; report: {report.outputs.get('report')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

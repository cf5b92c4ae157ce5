"""CLI parsing and experiment driver tests (small round counts throughout)."""

import json

import numpy as np
import pytest

from amagold import UsageError, parse_args, read_run_report, run_experiment
from amagold.experiment import main


def heart_path():
    from pathlib import Path
    return str(Path(__file__).resolve().parent.parent / "datasets" / "heart.txt")


class TestParseArgs:
    def test_minimal_defaults(self):
        cfg = parse_args(["--model", "double-well"])
        assert cfg.experiment == "run"
        assert cfg.sampler == "amagold"
        assert cfg.beta == 0.25
        assert cfg.rounds == 100000
        assert cfg.burn_in == 10000
        assert cfg.out == "runs/run_double-well_amagold_s0"

    def test_hmc_gets_zero_beta(self):
        cfg = parse_args(["--model", "dist1", "--sampler", "hmc"])
        assert cfg.beta == 0.0

    def test_hmc_with_friction_rejected(self):
        with pytest.raises(UsageError):
            parse_args(["--model", "dist1", "--sampler", "hmc", "--beta", "0.25"])

    def test_all_problems_reported_at_once(self):
        with pytest.raises(UsageError) as err:
            parse_args(["--epsilon", "-1", "--sigma2", "0"])
        message = str(err.value)
        assert "model is required" in message
        assert "epsilon must be positive" in message
        assert "sigma2 must be positive" in message

    def test_unknown_flag(self):
        with pytest.raises(UsageError):
            parse_args(["--model", "double-well", "--frobnicate"])

    def test_config_file_with_cli_override(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"model": "dist1", "epsilon": 0.2,
                                    "rounds": 500}))
        cfg = parse_args(["--config", str(path), "--epsilon", "0.3"])
        assert cfg.model == "dist1"
        assert cfg.epsilon == 0.3
        assert cfg.rounds == 500

    def test_config_file_unknown_key(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"modle": "dist1"}))
        with pytest.raises(UsageError):
            parse_args(["--config", str(path)])

    def test_sweep_epsilons_parsing(self):
        cfg = parse_args(["--model", "double-well", "--experiment", "sweep",
                          "--sweep-epsilons", "0.05,0.1,0.2", "--rounds", "100"])
        assert cfg.sweep_epsilons == [0.05, 0.1, 0.2]

    def test_sweep_epsilons_must_increase(self):
        with pytest.raises(UsageError):
            parse_args(["--model", "double-well", "--experiment", "sweep",
                        "--sweep-epsilons", "0.2,0.1"])

    def test_logreg_needs_dataset(self):
        with pytest.raises(UsageError) as err:
            parse_args(["--model", "logreg"])
        assert "dataset" in str(err.value)

    def test_dataset_only_for_logreg(self):
        with pytest.raises(UsageError):
            parse_args(["--model", "dist1", "--dataset", "x.txt"])

    def test_logreg_sweep_needs_reference(self):
        with pytest.raises(UsageError) as err:
            parse_args(["--model", "logreg", "--dataset", heart_path(),
                        "--experiment", "sweep", "--sweep-epsilons", "0.001,0.002"])
        assert "reference" in str(err.value)


class TestMainEntry:
    def test_print_config(self, capsys):
        code = main(["--model", "double-well", "--print-config"])
        assert code == 0
        printed = json.loads(capsys.readouterr().out)
        assert printed["model"] == "double-well"
        assert printed["beta"] == 0.25

    def test_usage_error_exit_code(self, capsys):
        assert main([]) == 2
        assert "model is required" in capsys.readouterr().err

    def test_runtime_error_exit_code(self, tmp_path, capsys):
        code = main(["--model", "logreg", "--dataset", str(tmp_path / "no.txt"),
                     "--rounds", "10", "--burn-in", "0",
                     "--out", str(tmp_path / "o")])
        assert code == 1

    def test_small_run_via_main(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["--model", "double-well", "--rounds", "300",
                     "--burn-in", "50", "--epsilon", "0.2",
                     "--out", str(out)])
        assert code == 0
        assert (out / "samples.csv").exists()
        assert (out / "report.json").exists()


class TestRunExperiment:
    def test_run_writes_diagnostics(self, tmp_path):
        cfg = parse_args(["--model", "double-well", "--rounds", "400",
                          "--burn-in", "100", "--epsilon", "0.2",
                          "--noise-scale", "1.0", "--out", str(tmp_path / "r")])
        report = run_experiment(cfg)
        assert 0 < report.acceptance_rate <= 1
        assert report.extras["symmetric_kl"] >= 0
        loaded = read_run_report(tmp_path / "r" / "report.json")
        assert loaded == report
        assert (tmp_path / "r" / "hist_density.csv").exists()
        assert (tmp_path / "r" / "analytic_density.csv").exists()

    def test_logreg_run_and_reference_mse(self, tmp_path):
        oracle_out = tmp_path / "oracle"
        cfg = parse_args(["--model", "logreg", "--dataset", heart_path(),
                          "--experiment", "oracle", "--rounds", "300",
                          "--burn-in", "100", "--epsilon", "0.02",
                          "--out", str(oracle_out)])
        report = run_experiment(cfg)
        mean_file = oracle_out / "posterior_mean.csv"
        assert mean_file.exists()
        assert len(report.extras["posterior_mean"]) == 14
        assert report.sampler == "l2mc"

        cfg2 = parse_args(["--model", "logreg", "--dataset", heart_path(),
                           "--rounds", "200", "--burn-in", "50",
                           "--epsilon", "0.02", "--minibatch", "16",
                           "--reference", str(mean_file),
                           "--out", str(tmp_path / "chain")])
        report2 = run_experiment(cfg2)
        assert report2.extras["mse"] >= 0

    def test_sweep_summary_sorted(self, tmp_path):
        cfg = parse_args(["--model", "double-well", "--experiment", "sweep",
                          "--sweep-epsilons", "0.1,0.2", "--rounds", "300",
                          "--burn-in", "50", "--noise-scale", "1.0",
                          "--out", str(tmp_path / "sweep")])
        report = run_experiment(cfg)
        lines = (tmp_path / "sweep" / "summary.csv").read_text().splitlines()
        assert lines[0] == "epsilon,symmetric_kl,acceptance_rate"
        eps = [float(line.split(",")[0]) for line in lines[1:]]
        assert eps == [0.1, 0.2]
        assert (tmp_path / "sweep" / "eps_0.1" / "report.json").exists()
        assert (tmp_path / "sweep" / "eps_0.2" / "report.json").exists()
        assert report.extras["metric"] == "symmetric_kl"

    def test_tune_experiment(self, tmp_path):
        cfg = parse_args(["--model", "double-well", "--experiment", "tune",
                          "--rounds", "400", "--epsilon", "0.01",
                          "--out", str(tmp_path / "tune")])
        report = run_experiment(cfg)
        assert report.extras["final_epsilon"] > 0
        trace = (tmp_path / "tune" / "tuning_trace.csv").read_text().splitlines()
        assert trace[0] == "window,epsilon,acceptance"
        assert len(trace) == 1 + report.extras["windows"]

    def test_stationarity_experiment(self, tmp_path):
        cfg = parse_args(["--model", "double-well", "--experiment",
                          "stationarity", "--walkers", "300", "--rounds", "3",
                          "--epsilon", "0.2", "--out", str(tmp_path / "st")])
        report = run_experiment(cfg)
        assert 0.0 <= report.extras["p_value"] <= 1.0
        positions = np.loadtxt(tmp_path / "st" / "final_positions.csv",
                               skiprows=1)
        assert positions.shape == (300,)

"""Amortized M-H machinery: kernels, path ratios, involution, invariance."""

import math

import numpy as np
import pytest
from scipy import stats

from amagold import (ContractError, Dist1, GaussianNoiseGradient,
                     GaussianRandomWalkKernel, MomentumFlip, NumericalError,
                     PathRecord, PhaseState, SamplerConfig,
                     StochasticLeapfrogKernel, amagold_round,
                     amortized_mh_round, log_accept_reversible,
                     log_accept_reversible_stepwise, log_accept_skew,
                     momentum_flip, round_stream, run_amortized_proposal)


class TestGaussianRandomWalkKernel:
    def test_log_density_matches_scipy(self):
        # oracle: sum of independent normal log pdfs
        kern = GaussianRandomWalkKernel(scale=0.7)
        x = np.array([0.2, -1.0, 3.0])
        y = np.array([0.5, -1.2, 2.2])
        want = stats.norm.logpdf(y, loc=x, scale=0.7).sum()
        assert kern.log_density(x, y, None) == pytest.approx(want, rel=1e-12)

    def test_sample_distribution(self):
        kern = GaussianRandomWalkKernel(scale=2.0)
        rng = np.random.default_rng(3)
        draws = np.array([kern.sample(np.zeros(2), rng)[0] for _ in range(20000)])
        assert draws.mean(axis=0) == pytest.approx([0.0, 0.0], abs=0.06)
        assert draws.std(axis=0, ddof=1) == pytest.approx([2.0, 2.0], rel=0.05)

    def test_bad_scale(self):
        with pytest.raises(ContractError):
            GaussianRandomWalkKernel(scale=0.0)


class TestPathMachinery:
    def test_run_amortized_proposal_shapes(self):
        kern = GaussianRandomWalkKernel()
        path = run_amortized_proposal(kern, np.zeros(2), 5, np.random.default_rng(0))
        assert path.steps == 5
        assert len(path.states) == 6
        assert np.array_equal(path.initial, np.zeros(2))
        assert path.proposal is path.states[-1]

    def test_path_record_validation(self):
        with pytest.raises(ContractError):
            PathRecord([np.zeros(1)], [])
        with pytest.raises(ContractError):
            PathRecord([np.zeros(1), np.zeros(1)], [None, None])

    def test_non_finite_step_raises(self):
        class Exploding(GaussianRandomWalkKernel):
            def sample(self, x, rng):
                return x + np.inf, None

        with pytest.raises(NumericalError):
            run_amortized_proposal(Exploding(), np.zeros(1), 3,
                                   np.random.default_rng(0))

    def test_steps_required(self):
        with pytest.raises(ContractError):
            run_amortized_proposal(GaussianRandomWalkKernel(), np.zeros(1), 0,
                                   np.random.default_rng(0))


def gaussian_log_pi(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * float(x @ x)


class TestAcceptRatios:
    def test_whole_path_equals_stepwise(self):
        # the two groupings of the same product must agree
        kern = GaussianRandomWalkKernel(scale=0.5)
        rng = np.random.default_rng(17)
        for _ in range(50):
            path = run_amortized_proposal(kern, rng.standard_normal(2), 4, rng)
            whole = log_accept_reversible(path, kern, gaussian_log_pi)
            stepwise = log_accept_reversible_stepwise(path, kern, gaussian_log_pi)
            assert whole == pytest.approx(stepwise, abs=1e-12)

    def test_symmetric_kernel_reduces_to_density_ratio(self):
        kern = GaussianRandomWalkKernel(scale=0.8)
        rng = np.random.default_rng(23)
        path = run_amortized_proposal(kern, np.array([0.3]), 6, rng)
        # each step density gap is exactly zero for a symmetric kernel
        for t in range(path.steps):
            a, b = path.states[t], path.states[t + 1]
            assert kern.log_density(a, b, None) == kern.log_density(b, a, None)
        want = gaussian_log_pi(path.proposal) - gaussian_log_pi(path.initial)
        assert log_accept_reversible(path, kern, gaussian_log_pi) == \
            pytest.approx(want, abs=1e-12)

    def test_unsupported_proposal_rejects(self):
        def bounded_log_pi(x):
            return 0.0 if abs(float(x[0])) < 1.0 else float("-inf")

        kern = GaussianRandomWalkKernel(scale=5.0)
        rng = np.random.default_rng(1)
        for _ in range(20):
            path = run_amortized_proposal(kern, np.zeros(1), 3, rng)
            ratio = log_accept_reversible(path, kern, bounded_log_pi)
            if abs(float(path.proposal[0])) >= 1.0:
                assert ratio == float("-inf")


class TestInvolution:
    def test_momentum_flip_is_involution(self):
        state = PhaseState(np.array([1.0, -2.0]), np.array([0.5, 0.0]))
        twice = momentum_flip(momentum_flip(state))
        assert np.array_equal(twice.theta, state.theta)
        assert np.array_equal(twice.r, state.r)

    def test_flip_negates(self):
        state = PhaseState(np.array([1.0]), np.array([0.5]))
        assert momentum_flip(state).r[0] == -0.5

    def test_class_wrapper(self):
        inv = MomentumFlip()
        state = PhaseState(np.zeros(2), np.array([1.0, -1.0]))
        assert np.array_equal(inv(state).r, np.array([-1.0, 1.0]))


class TestStochasticLeapfrogKernel:
    def make_round(self, beta=0.3, steps=6, seed=7):
        model = GaussianNoiseGradient(Dist1(), 1.0)
        cfg = SamplerConfig(epsilon=0.1, sigma2=2.0, beta=beta,
                            inner_steps=steps, resample_momentum=True)
        state = PhaseState(np.array([0.5, -0.2]), np.array([0.3, 0.1]))
        _, record = amagold_round(cfg, state, model, round_stream(seed, 1))
        return model, cfg, record

    def path_from_record(self, cfg, record):
        # integer-time states: position with the half drift undone
        half = 0.5 * cfg.epsilon / cfg.sigma2
        states = [PhaseState(record.initial_theta, record.momenta[0])]
        for t in range(1, cfg.inner_steps):
            states.append(PhaseState(record.positions[t] - half * record.momenta[t],
                                     record.momenta[t]))
        states.append(PhaseState(record.proposal_theta, record.proposal_r))
        return PathRecord(states, record.gradient_records)

    def test_skew_ratio_matches_recorded_round(self):
        # two independent routes to the same acceptance ratio: the recorded
        # rho accumulator versus the generic skew path ratio over the kernel
        for seed in range(5):
            model, cfg, record = self.make_round(seed=seed + 1)
            kern = StochasticLeapfrogKernel(cfg, model)
            path = self.path_from_record(cfg, record)

            def log_pi(s):
                return -model.potential(s.theta) - float(s.r @ s.r) / (2.0 * cfg.sigma2)

            ratio = log_accept_skew(path, kern, log_pi, MomentumFlip())
            assert ratio == pytest.approx(record.log_accept, abs=1e-10)

    def test_off_manifold_density_is_minus_inf(self):
        model, cfg, record = self.make_round()
        kern = StochasticLeapfrogKernel(cfg, model)
        path = self.path_from_record(cfg, record)
        x, y = path.states[0], path.states[1]
        shifted = PhaseState(y.theta + 1e-3, y.r)
        assert kern.log_density(x, shifted, path.zetas[0]) == float("-inf")
        assert kern.log_density(x, y, path.zetas[0]) > float("-inf")

    def test_sample_lands_on_manifold(self):
        model = GaussianNoiseGradient(Dist1(), 1.0)
        cfg = SamplerConfig(epsilon=0.1, sigma2=1.0, beta=0.25, inner_steps=1)
        kern = StochasticLeapfrogKernel(cfg, model)
        rng = np.random.default_rng(9)
        x = PhaseState(np.array([0.2, 0.4]), np.array([-0.3, 0.6]))
        for _ in range(20):
            y, zeta = kern.sample(x, rng)
            assert math.isfinite(kern.log_density(x, y, zeta))

    def test_zero_friction_rejected(self):
        cfg = SamplerConfig(epsilon=0.1, beta=0.0)
        with pytest.raises(ContractError):
            StochasticLeapfrogKernel(cfg, Dist1())


class TestAmortizedRound:
    def test_exact_invariance_under_random_walk(self):
        # walkers drawn from a standard normal stay standard normal after
        # corrected rounds (KS against fresh exact draws)
        rng = np.random.default_rng(2024)
        walkers = rng.standard_normal(2000)
        kern = GaussianRandomWalkKernel(scale=0.9)
        out = np.empty_like(walkers)
        for w in range(walkers.size):
            x = np.array([walkers[w]])
            for _ in range(8):
                x, _, _ = amortized_mh_round(kern, x, 5, gaussian_log_pi, rng)
            out[w] = x[0]
        reference = rng.standard_normal(2000)
        ks = stats.ks_2samp(out, reference)
        assert ks.pvalue > 0.01

    def test_reject_keeps_state_reversible(self):
        def bounded_log_pi(x):
            return 0.0 if abs(float(x[0])) < 0.1 else float("-inf")

        kern = GaussianRandomWalkKernel(scale=10.0)
        rng = np.random.default_rng(4)
        x = np.array([0.0])
        new, accepted, ratio = amortized_mh_round(kern, x, 3, bounded_log_pi, rng)
        assert not accepted and ratio == float("-inf")
        assert np.array_equal(new, x)

    def test_reject_flips_momentum_skew(self):
        model = GaussianNoiseGradient(Dist1(), 1.0)
        # domain-free config but a huge step so rejections happen quickly
        cfg = SamplerConfig(epsilon=0.9, sigma2=1.0, beta=0.5, inner_steps=3)
        kern = StochasticLeapfrogKernel(cfg, model)

        def log_pi(s):
            return -model.potential(s.theta) - 0.5 * float(s.r @ s.r)

        rng = np.random.default_rng(12)
        x = PhaseState(np.array([2.0, -2.0]), np.array([0.7, 0.4]))
        saw_reject = False
        for _ in range(50):
            new, accepted, _ = amortized_mh_round(kern, x, 3, log_pi, rng,
                                                  involution=MomentumFlip())
            if not accepted:
                saw_reject = True
                assert np.array_equal(new.theta, x.theta)
                assert np.array_equal(new.r, -x.r)
            x = new
        assert saw_reject

import math

import numpy as np
import pytest
from scipy import optimize, special, stats

from _oracles import (
    hng_quadrature_cdf,
    hng_quadrature_moments,
    rotation_angle_distribution_prob,
)
from shapealign.core import is_rotation_matrix, rotation_geodesic_distance
from shapealign.distributions import (
    ExactHNGSampler,
    HNGParams,
    NoModeError,
    expfam_normal_approx,
    hng_log_acceptance_ratio,
    hng_log_density_unnorm,
    hng_metropolis_chain,
    hng_metropolis_step,
    hng_mode,
    hng_normal_approx,
    hng_sample_exact,
    sample_rotation_matrix_fisher,
)


class TestHNGParams:
    def test_rejects_nonnormalizable(self):
        with pytest.raises(ValueError):
            HNGParams(2.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            HNGParams(2.0, 0.0, 0.0)

    def test_gamma_case_allowed(self):
        HNGParams(2.0, 0.0, -1.0)

    def test_rejects_bad_r(self):
        with pytest.raises(ValueError):
            HNGParams(0.0, 1.0, 0.0)


class TestLogDensity:
    def test_at_one(self):
        p = HNGParams(3.7, 2.2, 0.9)
        assert hng_log_density_unnorm(1.0, p) == pytest.approx(p.delta - p.nu / 2)

    def test_simple_quadratic(self):
        p = HNGParams(1.0, 1.0, 0.0)
        assert hng_log_density_unnorm(2.0, p) == pytest.approx(-2.0)

    def test_direct_arithmetic(self):
        p = HNGParams(12.5, 2.0, 3.0)
        want = 11.5 * math.log(1.5) - 2.25 + 4.5
        assert hng_log_density_unnorm(1.5, p) == pytest.approx(want, rel=1e-12)

    def test_rejects_nonpositive(self):
        p = HNGParams(2.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            hng_log_density_unnorm(0.0, p)
        with pytest.raises(ValueError):
            hng_log_density_unnorm([1.0, -1.0], p)


class TestMode:
    def test_linear_case(self):
        assert hng_mode(HNGParams(1.0, 1.0, 2.0)) == pytest.approx(2.0)

    def test_sqrt_case(self):
        assert hng_mode(HNGParams(2.0, 1.0, 0.0)) == pytest.approx(1.0)

    def test_against_root_finder(self):
        p = HNGParams(12.5, 2.0, 3.0)

        def score(c):
            return (p.r - 1.0) / c - p.nu * c + p.delta

        want = optimize.brentq(score, 1e-6, 100.0)
        assert hng_mode(p) == pytest.approx(want, rel=1e-12)

    def test_no_mode(self):
        with pytest.raises(NoModeError):
            hng_mode(HNGParams(1.0, 1.0, -1.0))
        with pytest.raises(NoModeError):
            hng_mode(HNGParams(0.5, 1.0, 0.0))

    def test_zero_derivative_at_mode(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p = HNGParams(rng.uniform(1.01, 20), rng.uniform(0.05, 5), rng.uniform(-8, 8))
            s = hng_mode(p)
            h = 1e-6
            deriv = (
                hng_log_density_unnorm(s + h, p) - hng_log_density_unnorm(s - h, p)
            ) / (2 * h)
            assert abs(deriv) < 1e-6 * (1.0 + abs(p.delta))


class TestNormalApprox:
    def test_r_one(self):
        approx = hng_normal_approx(HNGParams(1.0, 1.0, 2.0))
        assert approx.mean == pytest.approx(2.0)
        assert approx.variance == pytest.approx(1.0)

    def test_r_two(self):
        approx = hng_normal_approx(HNGParams(2.0, 1.0, 0.0))
        assert approx.mean == pytest.approx(1.0)
        assert approx.variance == pytest.approx(0.5)

    def test_close_to_quadrature_moments(self):
        p = HNGParams(12.5, 2.0, 3.0)
        mean, var = hng_quadrature_moments(p.r, p.nu, p.delta)
        approx = hng_normal_approx(p)
        assert approx.mean == pytest.approx(mean, rel=0.10)
        assert approx.variance == pytest.approx(var, rel=0.10)


class _FixedRng:
    """Deterministic stand-in driving a single Metropolis step."""

    def __init__(self, increment, uniform):
        self._increment = increment
        self._uniform = uniform

    def standard_normal(self):
        return self._increment

    def random(self):
        return self._uniform


class TestMetropolis:
    def test_acceptance_ratio_formula(self):
        p = HNGParams(1.0, 1.0, 2.0)
        got = hng_log_acceptance_ratio(2.0, 2.5, p)
        assert got == pytest.approx(-0.5 * (6.25 - 4.0) + 2.0 * 0.5)

    def test_zero_move_always_accepts(self):
        p = HNGParams(5.0, 2.0, 3.0)
        nxt, accepted = hng_metropolis_step(2.0, p, _FixedRng(0.0, 1.0 - 1e-12))
        assert accepted and nxt == pytest.approx(2.0)

    def test_nonpositive_proposals_rejected(self):
        p = HNGParams(5.0, 2.0, 3.0)
        nxt, accepted = hng_metropolis_step(0.5, p, _FixedRng(-100.0, 0.5))
        assert not accepted and nxt == 0.5

    def test_long_run_matches_quadrature_cdf(self):
        p = HNGParams(5.0, 2.0, 3.0)
        rng = np.random.default_rng(21)
        kept, rate = hng_metropolis_chain(p, 100_000, rng, thin=10, burnin=1000)
        assert 0.1 < rate < 0.99
        cdf = hng_quadrature_cdf(p.r, p.nu, p.delta)
        assert stats.kstest(kept, cdf).statistic < 0.01

    def test_respects_bounds(self):
        p = HNGParams(5.0, 2.0, 3.0)
        rng = np.random.default_rng(2)
        kept, _ = hng_metropolis_chain(p, 2000, rng, lower=1.0, upper=2.0, init=1.5)
        assert np.all((kept > 1.0) & (kept < 2.0))


class TestExactSampler:
    def test_gamma_special_case_moments(self):
        # nu = 0, delta = -lam reduces to gamma(r, lam)
        p = HNGParams(3.0, 0.0, -2.0)
        rng = np.random.default_rng(4)
        draws = hng_sample_exact(p, rng, size=100_000)
        n = draws.shape[0]
        for moment, want in ((draws.mean(), 1.5), ((draws**2).mean(), 3.0)):
            se = draws.std() / math.sqrt(n) if want == 1.5 else (draws**2).std() / math.sqrt(n)
            assert abs(moment - want) < 4 * se

    def test_half_normal_mean(self):
        p = HNGParams(1.0, 1.0, 0.0)
        rng = np.random.default_rng(5)
        draws = hng_sample_exact(p, rng, size=100_000)
        want = math.sqrt(2.0 / math.pi)
        se = draws.std() / math.sqrt(draws.shape[0])
        assert abs(draws.mean() - want) < 3 * se

    def test_ks_against_quadrature(self):
        p = HNGParams(12.5, 2.0, 3.0)
        rng = np.random.default_rng(6)
        draws = hng_sample_exact(p, rng, size=100_000)
        cdf = hng_quadrature_cdf(p.r, p.nu, p.delta)
        assert stats.kstest(draws, cdf).pvalue > 0.01

    def test_scalar_draw(self):
        p = HNGParams(2.0, 1.0, 0.5)
        val = hng_sample_exact(p, np.random.default_rng(1))
        assert isinstance(val, float) and val > 0

    def test_expected_acceptance_matches_empirical(self):
        for args in ((5.0, 2.0, 3.0), (1.5, 0.5, -5.0)):
            sampler = ExactHNGSampler(HNGParams(*args))
            want = sampler.expected_acceptance()
            assert 0 < want <= 1
            # empirical acceptance: count draws needed for a fixed yield
            rng = np.random.default_rng(8)
            p = sampler.params
            n_prop, n_acc = 0, 0
            for _ in range(200):
                if sampler.kind == "truncated_normal":
                    cand = sampler.mode + rng.standard_normal(500) / math.sqrt(p.nu)
                    cand = cand[cand > 0]
                    u = cand / sampler.mode
                    log_acc = (p.r - 1.0) * (np.log(u) - u + 1.0)
                else:
                    cand = rng.gamma(p.r, 1.0 / sampler.gamma_rate, size=500)
                    log_acc = (
                        -0.5 * p.nu * cand**2
                        + (p.delta + sampler.gamma_rate) * cand
                        - sampler.gamma_log_bound_exponent
                    )
                n_prop += 500
                n_acc += int(np.sum(np.log(rng.random(cand.shape[0])) < log_acc))
            assert n_acc / n_prop == pytest.approx(want, abs=0.02)

    def test_envelope_bound_optimal_by_search(self):
        # bounded 1-D search over the gamma envelope rate confirms the
        # closed-form minimizer used internally
        p = HNGParams(0.8, 1.5, -2.0)
        sampler = ExactHNGSampler(p)
        assert sampler.kind == "gamma"

        def log_k(lam):
            return (
                special.gammaln(p.r)
                - p.r * math.log(lam)
                + max(0.0, p.delta + lam) ** 2 / (2.0 * p.nu)
            )

        res = optimize.minimize_scalar(log_k, bounds=(1e-6, 50.0), method="bounded")
        assert log_k(sampler.gamma_rate) <= res.fun + 1e-9

    def test_metropolis_and_exact_agree_spot(self):
        p = HNGParams(1.5, 0.5, -5.0)
        kept, _ = hng_metropolis_chain(p, 30_000, np.random.default_rng(3), thin=5, burnin=500)
        exact = hng_sample_exact(p, np.random.default_rng(13), size=30_000)
        assert stats.ks_2samp(kept, exact).statistic < 0.02


class TestExpfamApprox:
    def test_gamma_closed_form(self):
        alpha, beta = 7.0, 2.0
        mode = (alpha - 1) / beta
        second = -(alpha - 1) / mode**2  # d^2/dx^2 of (a-1) log x - b x
        approx = expfam_normal_approx(second, mode)
        assert approx.mean == pytest.approx((alpha - 1) / beta)
        assert approx.variance == pytest.approx((alpha - 1) / beta**2)

    def test_von_mises_closed_form(self):
        mu, kappa = 0.7, 3.5
        approx = expfam_normal_approx(-kappa, mu)
        assert approx.mean == pytest.approx(mu)
        assert approx.variance == pytest.approx(1.0 / kappa)

    def test_normal_exact(self):
        mu, var = -1.2, 2.3
        approx = expfam_normal_approx(-1.0 / var, mu)
        assert approx.mean == pytest.approx(mu)
        assert approx.variance == pytest.approx(var)

    def test_rejects_nonnegative_curvature(self):
        with pytest.raises(ValueError):
            expfam_normal_approx(0.0, 1.0)


class TestMatrixFisher:
    def test_invalid_shapes(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_rotation_matrix_fisher(np.zeros((4, 4)), rng)

    def test_uniform_d2_trace_mean(self):
        rng = np.random.default_rng(1)
        total = 0.0
        n = 100_000
        for _ in range(n):
            total += np.trace(sample_rotation_matrix_fisher(np.zeros((2, 2)), rng))
        # tr(A) = 2 cos(theta), uniform theta: mean 0, sd sqrt(2)
        assert abs(total / n) < 3 * math.sqrt(2.0 / n)

    def test_d2_concentrated_matches_von_mises(self):
        kappa = 50.0
        # numeric expansion oracle: tr(F^T A(t)) for F = kappa I equals
        # 2 kappa cos(t), so the angle follows a von Mises with
        # concentration 2 kappa
        f = kappa * np.eye(2)
        thetas = np.linspace(-np.pi, np.pi, 9)
        for t in thetas:
            a = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
            assert np.sum(f * a) == pytest.approx(2 * kappa * np.cos(t), rel=1e-12)
        want_mean_cos = special.iv(1, 2 * kappa) / special.iv(0, 2 * kappa)
        rng = np.random.default_rng(2)
        n = 20_000
        cos_vals = np.empty(n)
        for i in range(n):
            rot = sample_rotation_matrix_fisher(f, rng)
            cos_vals[i] = rot[0, 0]
        se = cos_vals.std() / math.sqrt(n)
        assert abs(cos_vals.mean() - want_mean_cos) < 4 * se
        # circular variance approximately 1/(2 kappa_eff) = 1/(4 kappa)
        assert 1.0 - cos_vals.mean() == pytest.approx(1.0 / (4 * kappa), rel=0.15)

    def test_d3_outputs_valid_rotations(self):
        rng = np.random.default_rng(3)
        f = rng.standard_normal((3, 3)) * 3.0
        rot = sample_rotation_matrix_fisher(f, rng)
        for _ in range(50):
            rot = sample_rotation_matrix_fisher(f, rng, initial=rot)
            assert is_rotation_matrix(rot, tol=1e-9)

    def test_d3_haar_when_f_zero(self):
        rng = np.random.default_rng(4)
        traces = [np.trace(sample_rotation_matrix_fisher(np.zeros((3, 3)), rng)) for _ in range(20_000)]
        # Haar on SO(3): E[tr A] = 1 (angle density (1-cos)/pi)
        traces = np.array(traces)
        se = traces.std() / math.sqrt(traces.shape[0])
        assert abs(traces.mean() - 1.0) < 4 * se

    def test_d3_concentrated_frobenius_fraction(self):
        # oracle: P(||A - I||_F <= 0.1) from the exact angle density
        rng = np.random.default_rng(5)
        for kappa, n_draws, tol in ((100.0, 8000, 0.06), (1500.0, 4000, 0.03)):
            want = rotation_angle_distribution_prob(kappa, 0.1)
            f = kappa * np.eye(3)
            rot = sample_rotation_matrix_fisher(f, rng)
            hits = 0
            for _ in range(n_draws):
                rot = sample_rotation_matrix_fisher(f, rng, initial=rot)
                hits += np.linalg.norm(rot - np.eye(3)) <= 0.1
            assert hits / n_draws == pytest.approx(want, abs=tol)
        # at kappa = 1500 the high-concentration regime holds
        assert rotation_angle_distribution_prob(1500.0, 0.1) > 0.99

    def test_d3_moderate_concentration_against_angle_density(self):
        kappa = 4.0
        want = rotation_angle_distribution_prob(kappa, 1.0)
        rng = np.random.default_rng(6)
        f = kappa * np.eye(3)
        rot = sample_rotation_matrix_fisher(f, rng)
        hits = 0
        n = 20_000
        for _ in range(n):
            rot = sample_rotation_matrix_fisher(f, rng, initial=rot)
            hits += np.linalg.norm(rot - np.eye(3)) <= 1.0
        assert hits / n == pytest.approx(want, abs=0.03)

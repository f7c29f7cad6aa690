import numpy as np
import pytest

from leeway.errors import DomainError
from leeway.inference import (COLUMN_NAMES, ConvergenceError, DesignMatrix, Diagnostics,
                              DidRow, PosteriorDraws, PriorConfig, SingularDesign,
                              acr, build_design, cate, cate_draws, design_row,
                              dose_response_curve, fit_posterior)


def synth_rows(n, beta, noise_sd, rng):
    rows = []
    for i in range(n):
        d0, d1 = rng.uniform(0, 4, 2)
        cov = [rng.uniform(0.3, 0.7), float(rng.integers(2)),
               rng.uniform(0.5, 3.5), float(rng.integers(-2, 3)),
               rng.uniform(-1.0, 3.0), float(rng.integers(2))]
        response = float(design_row(d1 - d0, d0, cov) @ beta + rng.normal(0, noise_sd))
        rows.append(DidRow(f"S{i:02d}", dy0=0.0, dy1=response, d0=d0, d1=d1,
                           dem08=cov[0], south=cov[1], log_seats=cov[2],
                           delta_seats=cov[3], log_corrupt=cov[4], initiative=cov[5]))
    return rows


def constant_effect_beta(effect=0.3):
    beta = np.zeros(16)
    beta[0] = 0.5
    beta[1] = effect
    beta[3] = -0.8
    beta[5] = 0.2
    return beta


def manual_draws(coefficients):
    """Wrap an explicit coefficient matrix as PosteriorDraws for query tests."""
    coefficients = np.asarray(coefficients, dtype=float)[None, :, :]
    sigma = np.ones(coefficients.shape[:2])
    diag = Diagnostics(rhat={}, ess={}, accept_coefficients=(), accept_sigma=())
    return PosteriorDraws(coefficients=coefficients, sigma=sigma,
                          column_names=COLUMN_NAMES, diagnostics=diag)


class TestDesign:
    def test_shape_87_by_16(self):
        rows = synth_rows(87, constant_effect_beta(), 0.01, np.random.default_rng(0))
        design = build_design(rows)
        assert design.X.shape == (87, 16)
        assert design.column_names == COLUMN_NAMES
        assert len(COLUMN_NAMES) == 16

    def test_column_construction(self):
        cov = [0.5, 1.0, 2.0, -1.0, 0.7, 0.0]
        row = design_row(2.0, 1.5, cov)
        assert row[0] == 1.0               # intercept
        assert row[1] == 2.0               # dose change
        assert row[2] == 1.5               # baseline dose
        assert row[9] == 3.0               # dose change x baseline
        assert row[10] == 1.0              # dose change x dem08
        assert row[15] == 0.0              # dose change x initiative

    def test_build_is_deterministic(self):
        rows = synth_rows(10, constant_effect_beta(), 0.01, np.random.default_rng(1))
        a = build_design(rows)
        b = build_design(rows)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_constant_dose_change_flagged(self):
        rows = synth_rows(10, constant_effect_beta(), 0.01, np.random.default_rng(2))
        frozen = [DidRow(r.state_id, r.dy0, r.dy1, d0=1.0, d1=1.0,
                         dem08=r.dem08, south=r.south, log_seats=r.log_seats,
                         delta_seats=r.delta_seats, log_corrupt=r.log_corrupt,
                         initiative=r.initiative) for r in rows]
        with pytest.warns(SingularDesign):
            design = build_design(frozen)
        assert np.all(design.X[:, 1] == 0.0)

    def test_too_few_rows(self):
        with pytest.raises(DomainError):
            build_design([])


class TestPriorConfig:
    def test_scales_follow_the_rules(self):
        rows = synth_rows(50, constant_effect_beta(), 0.05, np.random.default_rng(3))
        design = build_design(rows)
        prior = PriorConfig.from_design(design)
        sigma_y = design.y.std(ddof=1)
        assert prior.sigma_y == pytest.approx(sigma_y)
        assert prior.coefficient_sds[0] == pytest.approx(2.5 * sigma_y)
        for j in range(1, 16):
            sigma_x = design.X[:, j].std(ddof=1)
            scale = 0.25 if j >= 9 else 1.0
            assert prior.coefficient_sds[j] == pytest.approx(
                scale * 0.75 * sigma_y / sigma_x)
        assert prior.residual_rate == pytest.approx(1.0 / sigma_y)

    def test_sigma_y_override(self):
        rows = synth_rows(10, constant_effect_beta(), 0.05, np.random.default_rng(4))
        prior = PriorConfig.from_design(build_design(rows), sigma_y=2.0)
        assert prior.sigma_y == 2.0


class TestSampler:
    def test_prior_only_fit_reproduces_prior(self):
        empty = DesignMatrix(X=np.empty((0, 16)), y=np.empty(0))
        sds = tuple([2.5] + [0.75] * 8 + [0.1875] * 7)
        prior = PriorConfig(sigma_y=1.0, coefficient_sds=sds, residual_rate=1.0)
        draws = fit_posterior(empty, prior, n_draws=8000, n_chains=4, seed=5)
        means = draws.flat.mean(axis=0)
        spreads = draws.flat.std(axis=0)
        for j in range(16):
            assert abs(means[j]) < 0.1 * sds[j] + 0.05
            assert spreads[j] == pytest.approx(sds[j], rel=0.10)

    def test_generate_and_recover(self):
        rng = np.random.default_rng(6)
        beta = constant_effect_beta()
        rows = synth_rows(87, beta, 0.01, rng)
        design = build_design(rows)
        prior = PriorConfig.from_design(design)
        draws = fit_posterior(design, prior, n_draws=8000, n_chains=4, seed=8)
        means = draws.flat.mean(axis=0)
        sds = draws.flat.std(axis=0)
        assert np.all(np.abs(means - beta) < 3 * sds)

    def test_same_seed_identical(self):
        rows = synth_rows(20, constant_effect_beta(), 0.05, np.random.default_rng(9))
        design = build_design(rows)
        prior = PriorConfig.from_design(design)
        a = fit_posterior(design, prior, n_draws=300, n_chains=2, seed=4,
                          enforce_diagnostics=False)
        b = fit_posterior(design, prior, n_draws=300, n_chains=2, seed=4,
                          enforce_diagnostics=False)
        assert np.array_equal(a.coefficients, b.coefficients)
        assert np.array_equal(a.sigma, b.sigma)

    def test_undersampled_fit_raises(self):
        rows = synth_rows(20, constant_effect_beta(), 0.05, np.random.default_rng(10))
        design = build_design(rows)
        prior = PriorConfig.from_design(design)
        with pytest.raises(ConvergenceError) as err:
            fit_posterior(design, prior, n_draws=100, n_chains=2, seed=0)
        assert min(err.value.diagnostics.ess.values()) <= 400

    def test_posterior_contraction(self):
        beta = constant_effect_beta()
        small = build_design(synth_rows(87, beta, 0.05, np.random.default_rng(11)))
        large = build_design(synth_rows(348, beta, 0.05, np.random.default_rng(12)))
        prior_small = PriorConfig.from_design(small)
        prior_large = PriorConfig.from_design(large)
        sd_small = fit_posterior(small, prior_small, n_draws=4000, n_chains=2, seed=2,
                                 enforce_diagnostics=False).flat[:, 1].std()
        sd_large = fit_posterior(large, prior_large, n_draws=4000, n_chains=2, seed=2,
                                 enforce_diagnostics=False).flat[:, 1].std()
        assert 0.4 <= sd_large / sd_small <= 0.6


class TestQueries:
    def test_cate_zero_at_equal_doses(self):
        rng = np.random.default_rng(13)
        draws = manual_draws(rng.normal(size=(50, 16)))
        values = cate_draws(draws, [0.5, 0, 1, 0, 0, 0], 2.0, 2.0)
        assert np.all(values == 0.0)

    def test_cate_additivity_per_draw(self):
        # exact chaining requires a common baseline dose, since the change
        # interacts with the baseline in the model
        rng = np.random.default_rng(14)
        draws = manual_draws(rng.normal(size=(50, 16)))
        x = [0.5, 1.0, 2.0, 0.0, 0.7, 1.0]
        ab = cate_draws(draws, x, 0.0, 1.5, baseline_dose=0.0)
        bc = cate_draws(draws, x, 1.5, 3.5, baseline_dose=0.0)
        ac = cate_draws(draws, x, 0.0, 3.5, baseline_dose=0.0)
        assert np.allclose(ab + bc, ac, atol=1e-12)

    def test_cate_summary_intervals_nested(self):
        rng = np.random.default_rng(15)
        draws = manual_draws(rng.normal(size=(500, 16)))
        summary = cate(draws, [0.5, 0, 1, 0, 0, 0], 1.0, 3.0)
        assert summary.ci95[0] <= summary.ci80[0] <= summary.ci80[1] <= summary.ci95[1]

    def test_acr_equals_dose_coefficient_without_interactions(self):
        rng = np.random.default_rng(16)
        matrix = rng.normal(size=(100, 16))
        matrix[:, 9:] = 0.0  # no interactions
        draws = manual_draws(matrix)
        rows = synth_rows(30, constant_effect_beta(), 0.05, np.random.default_rng(17))
        estimate = acr(draws, rows)
        assert np.allclose(estimate.effect.draws, matrix[:, 1], atol=1e-12)

    def test_acr_recovery_within_ten_percent(self):
        rng = np.random.default_rng(18)
        rows = synth_rows(87, constant_effect_beta(0.3), 0.01, rng)
        design = build_design(rows)
        prior = PriorConfig.from_design(design)
        draws = fit_posterior(design, prior, n_draws=4000, n_chains=2, seed=44,
                              enforce_diagnostics=False)
        estimate = acr(draws, rows)
        assert estimate.effect.mean == pytest.approx(0.3, rel=0.10)
        sd_y = np.std([r.response for r in rows], ddof=1)
        assert estimate.standardized.mean == pytest.approx(
            estimate.effect.mean / sd_y, rel=1e-12)

    def test_dose_response_curve_is_acr_line(self):
        rng = np.random.default_rng(19)
        draws = manual_draws(rng.normal(size=(80, 16)))
        rows = synth_rows(15, constant_effect_beta(), 0.05, np.random.default_rng(20))
        slope = acr(draws, rows).effect.draws
        curve = dose_response_curve(draws, rows, [-4.0, -1.0, 0.0, 2.0])
        for dose, summary in curve:
            assert np.allclose(summary.draws, dose * slope, atol=1e-12)
        at_zero = dict(curve)[0.0]
        assert at_zero.mean == 0.0

    def test_bands_widen_with_dose_magnitude(self):
        rng = np.random.default_rng(21)
        draws = manual_draws(rng.normal(size=(400, 16)))
        rows = synth_rows(15, constant_effect_beta(), 0.05, np.random.default_rng(22))
        curve = dict(dose_response_curve(draws, rows, [0.5, 1.0, 2.0, 4.0]))
        widths = [curve[d].ci95[1] - curve[d].ci95[0] for d in (0.5, 1.0, 2.0, 4.0)]
        assert widths == sorted(widths)

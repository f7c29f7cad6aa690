import dataclasses

import numpy as np
import pytest

from leeway.codebook import (CourtReview, Drawer, FinalDrawer, PartyControl,
                             Stalemate1, Stalemate2, Veto1, Veto2,
                             load_fixture_codebook)
from leeway.errors import DomainError, NotApplicable
from leeway.nature import GameParameters, PriorSpec, exp_court, CourtContext, sample_parameters
from leeway.solver import (STALEMATE, ControlAssignment, OptimizationGrid,
                           brute_force_solve, equilibrium_matrix, leeway,
                           leeway_table, pairwise_spearman_mean, path_table, solve,
                           spearman_stability)

from test_codebook import make_process

PRIOR = PriorSpec.default()
MEAN = PRIOR.mean()
FIXTURE = load_fixture_codebook()
COARSE = OptimizationGrid(step=2.0, refine=False)


def realized(process):
    return ControlAssignment.realized(process)


class TestGrid:
    def test_default_has_161_points(self):
        points = OptimizationGrid().points()
        assert len(points) == 161
        assert points[0] == -4.0 and points[-1] == 4.0

    def test_points_exactly_symmetric(self):
        points = OptimizationGrid(step=0.05).points()
        assert np.array_equal(points, -points[::-1])

    def test_refine_points_symmetric_and_clipped(self):
        grid = OptimizationGrid()
        fine = grid.refine_points(4.0)
        assert fine.max() == 4.0
        left = grid.refine_points(-1.25)
        right = grid.refine_points(1.25)
        assert np.array_equal(left, -right[::-1])

    def test_bad_step_rejected(self):
        with pytest.raises(DomainError):
            OptimizationGrid(step=0.0)


class TestAssignment:
    def test_uniform_overrides_partisan_nodes_only(self):
        process = FIXTURE.get("AL", 2020)
        uniform = ControlAssignment.uniform(process, PartyControl.DEMOCRATS)
        assert uniform.drawer is PartyControl.DEMOCRATS
        assert uniform.veto1 is PartyControl.DEMOCRATS
        assert uniform.court is process.court_control  # court never reassigned

    def test_uniform_leaves_nonpartisan_and_split(self):
        process = FIXTURE.get("OH", 2020)  # split drawer, split backup commission
        uniform = ControlAssignment.uniform(process, PartyControl.DEMOCRATS)
        assert uniform.drawer is PartyControl.SPLIT
        assert uniform.stalemate1 is PartyControl.SPLIT
        assert uniform.stalemate2 is PartyControl.DEMOCRATS

    def test_uniform_requires_major_party(self):
        with pytest.raises(DomainError):
            ControlAssignment.uniform(FIXTURE.get("AL", 2020), PartyControl.SPLIT)


class TestSolveExamples:
    def test_nonpartisan_commission_fixed_point(self):
        process = FIXTURE.get("MI", 2020)
        for i in range(20):
            theta = sample_parameters(PRIOR, 3, i)
            assert solve(process, realized(process), theta).value == 0.0

    def test_alabama_at_prior_mean(self):
        process = FIXTURE.get("AL", 2020)
        result = solve(process, realized(process), MEAN)
        assert result.round2_proposal == 4.0
        assert 0.0 < result.veto_thresholds["round2_veto1"] < 1.0
        assert 2.0 <= result.value <= 3.5

    def test_full_mirror_negates_exactly(self):
        process = make_process(veto1=Veto1.GOVERNOR,
                               veto1_control=PartyControl.REPUBLICANS,
                               court_review=CourtReview.MAYBE,
                               court_control=PartyControl.REPUBLICANS)
        mirrored = process.mirrored()
        for i in range(10):
            theta = sample_parameters(PRIOR, 11, i)
            v = solve(process, realized(process), theta).value
            w = solve(mirrored, realized(mirrored), theta).value
            assert w == -v

    def test_single_district_not_applicable(self):
        process = make_process(drawer=Drawer.NA, drawer_control=PartyControl.NA,
                               court_review=CourtReview.NA,
                               court_control=PartyControl.NA,
                               stalemate1=Stalemate1.NA,
                               final_drawer=FinalDrawer.NA)
        with pytest.raises(NotApplicable):
            solve(process, ControlAssignment.realized(process), MEAN)

    def test_malformed_assignment_rejected(self):
        process = FIXTURE.get("AL", 2020)
        with pytest.raises(DomainError):
            solve(process, "not-an-assignment", MEAN)

    def test_value_bounds_and_path_mass(self):
        for row in FIXTURE:
            theta = sample_parameters(PRIOR, 5, 1)
            result = solve(row, realized(row), theta)
            assert -4.0 <= result.value <= 4.0
            total = sum(result.path_probs.values())
            assert total == pytest.approx(1.0, abs=1e-9)
            assert all(0.0 <= p <= 1.0 for p in result.path_probs.values())


class TestBruteForce:
    @staticmethod
    def _unconstrained_theta():
        # chal_poss_conf = 1 kills the partisan channel for no-review states.
        return dataclasses.replace(MEAN, chal_poss_conf=1.0)

    def test_single_node_republican_maximizes(self):
        process = make_process(court_review=CourtReview.NO,
                               court_control=PartyControl.NA)
        value = brute_force_solve(process, realized(process),
                                  self._unconstrained_theta(), COARSE)
        assert value == 4.0

    def test_single_node_democrat_minimizes(self):
        process = make_process(drawer_control=PartyControl.DEMOCRATS,
                               court_review=CourtReview.NO,
                               court_control=PartyControl.NA)
        value = brute_force_solve(process, realized(process),
                                  self._unconstrained_theta(), COARSE)
        assert value == -4.0

    def test_matches_solver_on_coarse_grid(self):
        rng = np.random.default_rng(20)
        rows = list(FIXTURE)
        for _ in range(20):
            row = rows[rng.integers(len(rows))]
            theta = sample_parameters(PRIOR, 2024, int(rng.integers(10**6)))
            fast = solve(row, realized(row), theta, COARSE).value
            slow = brute_force_solve(row, realized(row), theta, COARSE)
            assert fast == pytest.approx(slow, abs=1e-9), row.key

    def test_grid_size_guard(self):
        with pytest.raises(DomainError):
            brute_force_solve(FIXTURE.get("AL", 2020), realized(FIXTURE.get("AL", 2020)),
                              MEAN, OptimizationGrid(step=0.5))


class TestInvariants:
    def test_grid_refinement_stability(self):
        fine = OptimizationGrid(step=0.025)
        for row in FIXTURE:
            for i in range(2):
                theta = sample_parameters(PRIOR, 41, i)
                coarse_value = solve(row, realized(row), theta).value
                fine_value = solve(row, realized(row), theta, fine).value
                assert abs(coarse_value - fine_value) < 0.01, row.key

    def test_zero_sum_mirror_non_preclearance(self):
        for row in FIXTURE:
            if row.preclearance:
                continue
            mirrored = row.mirrored()
            for i in range(3):
                theta = sample_parameters(PRIOR, 43, i)
                v = solve(row, realized(row), theta).value
                w = solve(mirrored, realized(mirrored), theta).value
                assert v == -w, row.key

    def test_monotone_in_control(self):
        for row in FIXTURE:
            for i in range(2):
                theta = sample_parameters(PRIOR, 47, i)
                vr = solve(row, ControlAssignment.uniform(row, PartyControl.REPUBLICANS),
                           theta).value
                vx = solve(row, realized(row), theta).value
                vd = solve(row, ControlAssignment.uniform(row, PartyControl.DEMOCRATS),
                           theta).value
                assert vr >= vx >= vd, row.key

    def test_decisions_invariant_to_positive_scaling(self):
        # Optimal choices depend only on value comparisons: scaling every
        # continuation by a positive constant never flips a comparison.
        from leeway.solver import _sign
        rng = np.random.default_rng(1)
        for _ in range(200):
            accept, veto = rng.normal(size=2)
            scale = rng.uniform(0.1, 10.0)
            for party in (PartyControl.REPUBLICANS, PartyControl.DEMOCRATS):
                base = _sign(party) * (veto - accept) > 0
                scaled = _sign(party) * (scale * veto - scale * accept) > 0
                assert base == scaled


class TestLeeway:
    def test_michigan_maximum_zero(self):
        scores = leeway(FIXTURE.get("MI", 2020), PRIOR, n_draws=30, seed=9)
        assert scores.maximum == 0.0
        assert scores.realized == 0.0

    def test_republican_trifecta_nearly_unconstrained(self):
        process = FIXTURE.get("WI", 2010)  # legislature+governor R, no review
        grid = OptimizationGrid(refine=False)
        scores = leeway(process, PRIOR, n_draws=40, seed=13, grid=grid)
        # oracle: per draw, the optimum of the post-enactment expectation
        # over the same grid (no veto or stalemate branch binds)
        ctx = CourtContext(process.court_review, process.court_control,
                           process.preclearance, process.drawer_control)
        points = grid.points()
        expected = np.mean([exp_court(points, ctx, sample_parameters(PRIOR, 13, i)).value.max()
                            for i in range(40)])
        assert scores.realized == pytest.approx(expected, abs=1e-9)
        assert scores.realized > 3.5

    def test_deterministic(self):
        row = FIXTURE.get("OH", 2020)
        a = leeway(row, PRIOR, n_draws=5, seed=3)
        b = leeway(row, PRIOR, n_draws=5, seed=3)
        assert a == b

    def test_single_district_raises(self):
        process = make_process(drawer=Drawer.NA, drawer_control=PartyControl.NA,
                               court_review=CourtReview.NA,
                               court_control=PartyControl.NA,
                               stalemate1=Stalemate1.NA,
                               final_drawer=FinalDrawer.NA)
        with pytest.raises(NotApplicable):
            leeway(process, PRIOR, n_draws=1)

    def test_table_threads_agree(self):
        rows = [FIXTURE.get("AL", 2020), FIXTURE.get("MI", 2020),
                FIXTURE.get("KS", 2020)]
        from leeway.codebook import Codebook
        book = Codebook(tuple(rows))
        serial = leeway_table(book, PRIOR, n_draws=5, seed=1, threads=1)
        parallel = leeway_table(book, PRIOR, n_draws=5, seed=1, threads=8)
        assert serial == parallel


class TestPathTable:
    def test_fixture_mass_conservation(self):
        table = path_table(FIXTURE, PRIOR, n_draws=10, seed=21)
        for key, probs in table.state_probs.items():
            assert sum(probs.values()) == pytest.approx(1.0, abs=1e-9), key
        cross = table.cross_tab()
        grand = sum(sum(c.values()) for c in cross.values())
        assert grand == pytest.approx(len(FIXTURE), abs=1e-6)

    def test_no_review_legislature_state_stays_legislative(self):
        # oracle: survival mass of the per-draw optimal proposal, computed
        # directly from the post-enactment mixture
        from leeway.codebook import Codebook
        process = FIXTURE.get("KS", 2020)  # no vetoes, no review, no preclearance
        book = Codebook((process,))
        n_draws = 40
        grid = OptimizationGrid(refine=False)
        table = path_table(book, PRIOR, n_draws=n_draws, seed=33, grid=grid)
        probs = table.state_probs[("KS", 2020)]

        ctx = CourtContext(process.court_review, process.court_control,
                           process.preclearance, process.drawer_control)
        points = grid.points()
        survive = []
        for i in range(n_draws):
            theta = sample_parameters(PRIOR, 33, i)
            r = exp_court(points, ctx, theta)
            best = np.nonzero(r.value == r.value.max())[0][-1]
            survive.append(r.pr_survive[best])
        assert probs["legislature"] == pytest.approx(np.mean(survive), abs=1e-9)
        assert probs["legislature"] > 0.8

    def test_modal_buckets(self):
        table = path_table(FIXTURE, PRIOR, n_draws=10, seed=21)
        assert table.modal(("MI", 2020)) == "commission"
        assert table.modal(("IN", 2020)) == "legislature"
        assert table.actual[("NC", 2020)] == "court"


class TestSpearman:
    def test_identical_rows_correlate_perfectly(self):
        matrix = np.tile(np.array([1.0, 3.0, 2.0, 5.0, 4.0]), (4, 1))
        assert pairwise_spearman_mean(matrix) == pytest.approx(1.0)

    def test_reversed_row_anticorrelates(self):
        base = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        matrix = np.stack([base, base[::-1]])
        assert pairwise_spearman_mean(matrix) == pytest.approx(-1.0)

    def test_fixture_stability(self):
        rho = spearman_stability(FIXTURE, PRIOR, n_draws=25, seed=51)
        assert rho >= 0.95

    def test_requires_enough_draws(self):
        with pytest.raises(DomainError):
            spearman_stability(FIXTURE, PRIOR, n_draws=1)

"""Data generation, calibration, oracle truth, and the campaign runner."""

import numpy as np
import pytest

from netmundlak.simlab import (
    DgpParams,
    MethodResult,
    Scenario,
    calibrate_gamma0,
    flat_propensities,
    generate_replication,
    oracle_truth,
    run_scenario,
    solve_intercept,
    zero_outcomes,
)
from netmundlak.exposure import any_treated_neighbor
from netmundlak.graphs import ws_generate


class TestRegimes:
    def test_parameter_tables(self):
        low_weak = DgpParams.from_regimes("low", "weak")
        assert (low_weak.alpha_sd, low_weak.mu_x_sd, low_weak.tau_sd) == (1.5, 1.0, 0.0)
        assert low_weak.gamma == (0.5, 0.5, 0.2, 0.5)
        assert (low_weak.delta, low_weak.ws_k, low_weak.ws_p) == (0.8, 4, 0.1)
        high_strong = DgpParams.from_regimes("high", "strong")
        assert (high_strong.alpha_sd, high_strong.mu_x_sd, high_strong.tau_sd) == (3.0, 2.0, 0.15)
        assert high_strong.gamma == (1.5, 1.5, 0.8, 1.5)
        assert (high_strong.delta, high_strong.ws_k, high_strong.ws_p) == (3.0, 8, 0.5)
        assert low_weak.beta == 1.5 and low_weak.eps_sd == 0.5 and low_weak.tau_mean == 0.5

    def test_unknown_regime(self):
        with pytest.raises(ValueError):
            DgpParams.from_regimes("medium", "weak")
        with pytest.raises(ValueError):
            Scenario(heterogeneity="low", dependence="none")

    def test_scenario_validation(self):
        with pytest.raises(ValueError):
            Scenario(ng_min=1)
        with pytest.raises(ValueError):
            Scenario(ng_min=50, ng_max=20)
        with pytest.raises(ValueError):
            Scenario(replications=0)


class TestIntercept:
    def test_all_zero_terms(self):
        assert solve_intercept(np.zeros(100)) == 0.0

    def test_translation_symmetry(self):
        rng = np.random.default_rng(0)
        linear = rng.normal(size=500)
        base = solve_intercept(linear)
        shifted = solve_intercept(linear + 2.5)
        assert shifted == pytest.approx(base - 2.5, abs=1e-9)

    def test_calibrated_share_hits_target(self):
        rng = np.random.default_rng(1)
        params = DgpParams.from_regimes("high", "strong")
        drafts = []
        for s in range(4):
            graph = ws_generate(60, params.ws_k, params.ws_p, seed=s)
            drafts.append((graph, rng.normal(1.0, 2.0, size=(60, 1)), float(rng.normal())))
        gamma0 = calibrate_gamma0(params, drafts)
        from netmundlak.simlab import _logit_terms, _sigmoid

        linear = np.concatenate(
            [_logit_terms(params, g, X[:, 0], mu) for g, X, mu in drafts]
        )
        achieved = _sigmoid(gamma0 + linear).mean()
        assert abs(achieved - 0.5) < 0.005


class TestGenerateReplication:
    def test_deterministic(self):
        scenario = Scenario("low", "weak", m_groups=3, ng_min=20, ng_max=40,
                            replications=1, base_seed=9)
        pop_a, truth_a = generate_replication(scenario, 0)
        pop_b, truth_b = generate_replication(scenario, 0)
        assert truth_a.gamma0 == truth_b.gamma0
        for ga, gb in zip(pop_a.groups, pop_b.groups):
            assert (ga.W == gb.W).all()
            assert (ga.Y == gb.Y).all()
            assert set(ga.graph.edges) == set(gb.graph.edges)

    def test_reps_differ(self):
        scenario = Scenario("low", "weak", m_groups=2, ng_min=20, ng_max=30,
                            replications=2, base_seed=9)
        pop_a, _ = generate_replication(scenario, 0)
        pop_b, _ = generate_replication(scenario, 1)
        assert not np.array_equal(pop_a.groups[0].Y, pop_b.groups[0].Y)

    def test_low_heterogeneity_tau_exactly_half(self):
        scenario = Scenario("low", "strong", m_groups=5, ng_min=20, ng_max=30,
                            replications=1, base_seed=2)
        _, truth = generate_replication(scenario, 0)
        assert (truth.tau_g == 0.5).all()

    def test_group_sizes_within_bounds(self):
        scenario = Scenario("low", "weak", m_groups=6, ng_min=15, ng_max=22,
                            replications=1, base_seed=5)
        pop, _ = generate_replication(scenario, 0)
        assert all(15 <= g.n_units <= 22 for g in pop.groups)

    @pytest.mark.parametrize("het,dep", [("low", "weak"), ("low", "strong"),
                                         ("high", "weak"), ("high", "strong")])
    def test_treatment_share_near_half(self, het, dep):
        scenario = Scenario(het, dep, m_groups=10, ng_min=60, ng_max=100,
                            replications=1, base_seed=3)
        pop, _ = generate_replication(scenario, 0)
        share = np.concatenate([g.W for g in pop.groups]).mean()
        assert 0.45 <= share <= 0.55

    def test_outcome_equation_reconstructed(self):
        scenario = Scenario("high", "weak", m_groups=2, ng_min=20, ng_max=25,
                            replications=1, base_seed=7)
        pop, truth = generate_replication(scenario, 0)
        params = truth.params
        for g_index, group in enumerate(pop.groups):
            exposed = any_treated_neighbor(group).levels
            expected_mean = (
                truth.alpha[g_index]
                + params.beta * group.X[:, 0]
                + truth.tau_g[g_index] * exposed
                + params.delta * truth.frac[g_index]
            )
            resid = group.Y - expected_mean
            assert np.abs(resid).max() < 5 * params.eps_sd


class TestOracleTruth:
    def test_delta_zero_is_mean_tau(self):
        scenario = Scenario("high", "weak", m_groups=4, ng_min=20, ng_max=30,
                            replications=1, base_seed=1)
        pop, truth = generate_replication(scenario, 0)
        from dataclasses import replace

        truth_nodelta = replace(truth, params=replace(truth.params, delta=0.0))
        result = oracle_truth(pop, truth_nodelta, n_redraws=10, seed=0)
        sizes = np.array([g.n_units for g in pop.groups])
        expected = float(np.repeat(truth.tau_g, sizes).mean())
        assert result.tau_star == pytest.approx(expected, abs=1e-12)
        assert result.n_excluded == 0

    def test_delta_zero_low_heterogeneity_is_half(self):
        scenario = Scenario("low", "weak", m_groups=3, ng_min=20, ng_max=25,
                            replications=1, base_seed=4)
        pop, truth = generate_replication(scenario, 0)
        from dataclasses import replace

        truth_nodelta = replace(truth, params=replace(truth.params, delta=0.0))
        assert oracle_truth(pop, truth_nodelta, 10, 0).tau_star == pytest.approx(0.5)

    def test_monte_carlo_stability_across_resolutions(self):
        scenario = Scenario("low", "strong", m_groups=8, ng_min=80, ng_max=120,
                            replications=1, base_seed=6)
        pop, truth = generate_replication(scenario, 0)
        coarse = oracle_truth(pop, truth, n_redraws=200, seed=1)
        fine = oracle_truth(pop, truth, n_redraws=2000, seed=2)
        assert abs(coarse.tau_star - fine.tau_star) < 0.01

    def test_unit_mask_restricts_average(self):
        scenario = Scenario("low", "weak", m_groups=3, ng_min=20, ng_max=25,
                            replications=1, base_seed=8)
        pop, truth = generate_replication(scenario, 0)
        full = oracle_truth(pop, truth, n_redraws=300, seed=3)
        masks = [np.zeros(g.n_units, bool) for g in pop.groups]
        masks[0][:] = True
        part = oracle_truth(pop, truth, n_redraws=300, seed=3, unit_mask=masks)
        assert part.tau_star != full.tau_star


class TestNuisanceHelpers:
    def test_flat_propensities_marginal_frequency(self):
        scenario = Scenario("low", "weak", m_groups=3, ng_min=20, ng_max=25,
                            replications=1, base_seed=10)
        pop, _ = generate_replication(scenario, 0)
        assignments = [any_treated_neighbor(g) for g in pop.groups]
        stacked = np.concatenate([a.levels for a in assignments])
        flat = flat_propensities(pop, assignments, (0, 1))
        for t in (0, 1):
            freq = (stacked == t).mean()
            for vec in flat[t]:
                np.testing.assert_allclose(vec, freq)

    def test_zero_outcomes_are_zero(self):
        scenario = Scenario("low", "weak", m_groups=2, ng_min=20, ng_max=20,
                            replications=1, base_seed=10)
        pop, _ = generate_replication(scenario, 0)
        zeros = zero_outcomes(pop, (0, 1))
        assert all((v == 0).all() for t in (0, 1) for v in zeros[t])


def oracle_echo(pop, truth, ctx):
    return MethodResult(ctx.tau_star, 0.0, 1.0)


def oracle_plus_tenth(pop, truth, ctx):
    return MethodResult(ctx.tau_star + 0.1, 0.0, 1.0)


class TestRunScenario:
    def small(self):
        return Scenario("low", "weak", m_groups=3, ng_min=20, ng_max=30,
                        replications=4, base_seed=21)

    def test_estimator_equal_truth_gives_zero_metrics(self):
        result = run_scenario(
            self.small(), methods=("echo",), n_redraws=50,
            method_registry={"echo": oracle_echo},
        )
        s = result.summaries["echo"]
        assert s.mae == 0.0 and s.mse == 0.0 and s.rmse == 0.0
        assert s.n_used == 4 and s.n_failed == 0

    def test_constant_bias_metrics(self):
        result = run_scenario(
            self.small(), methods=("biased",), n_redraws=50,
            method_registry={"biased": oracle_plus_tenth},
        )
        s = result.summaries["biased"]
        assert s.mae == pytest.approx(0.1, abs=1e-12)
        assert s.rmse == pytest.approx(0.1, abs=1e-12)

    def test_mae_at_most_rmse(self):
        result = run_scenario(self.small(), methods=("mundlak",), n_redraws=50)
        s = result.summaries["mundlak"]
        assert s.mae <= s.rmse + 1e-12

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            run_scenario(self.small(), methods=("nope",))

    def test_worker_count_does_not_change_results(self):
        scenario = self.small()
        a = run_scenario(scenario, methods=("echo", "mundlak"), n_redraws=50,
                         workers=1, method_registry={"echo": oracle_echo})
        b = run_scenario(scenario, methods=("echo", "mundlak"), n_redraws=50,
                         workers=3, method_registry={"echo": oracle_echo})
        assert a.records == b.records
        assert a.summaries == b.summaries

    def test_failures_recorded_not_silent(self):
        def failing(pop, truth, ctx):
            from netmundlak.errors import EstimationError

            raise EstimationError("always fails")

        result = run_scenario(
            self.small(), methods=("bad", "echo"), n_redraws=50,
            method_registry={"bad": failing, "echo": oracle_echo},
        )
        assert result.summaries["bad"].n_failed == 4
        assert np.isnan(result.summaries["bad"].mae)
        assert result.summaries["echo"].n_used == 4
        assert len(result.failures) == 4

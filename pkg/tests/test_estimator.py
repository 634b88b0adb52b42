"""Doubly robust effect estimation: hand cases, exact identities, and
oracle-nuisance behavior."""

import numpy as np
import pytest

from netmundlak.balance import GroupData, GroupedPopulation
from netmundlak.errors import EmptyOverlapError, MissingLevelError
from netmundlak.estimator import (
    NuisanceEstimates,
    effect_from_nuisances,
    fit_nuisances,
    gme_gnn_estimate,
    group_aggregate,
    overlap_flags,
    unit_dr,
)
from netmundlak.exposure import assign_exposure
from netmundlak.gcn import GcnConfig
from netmundlak.graphs import ws_generate
from netmundlak.simlab import Scenario, generate_replication, oracle_nuisances, oracle_truth


def small_population(seed=0, m=3, n=30):
    scenario = Scenario("low", "weak", m_groups=m, ng_min=n, ng_max=n, replications=1,
                        base_seed=seed)
    return generate_replication(scenario, 0)


def constant_nuisances(pop, levels, p=0.5, mus=None):
    p_hat = {t: [np.full(g.n_units, p) for g in pop.groups] for t in levels}
    mu_hat = {
        t: [np.full(g.n_units, 0.0 if mus is None else mus[t]) for g in pop.groups]
        for t in levels
    }
    return NuisanceEstimates(p_hat, mu_hat)


class TestOverlapFlags:
    def test_all_half_propensities(self):
        pop, _ = small_population()
        nuisances = constant_nuisances(pop, (0, 1))
        overlap = overlap_flags(nuisances, (1, 0), 0.01)
        assert overlap.b_bar == 1.0
        assert all(f.all() for f in overlap.flags)

    def test_extreme_unit_trimmed(self):
        pop, _ = small_population(m=1, n=10)
        nuisances = constant_nuisances(pop, (0, 1))
        p = nuisances.p_hat[1][0].copy()
        p[3] = 0.005
        nuisances.p_hat[1][0] = p
        overlap = overlap_flags(nuisances, (1, 0), 0.01)
        assert not overlap.flags[0][3]
        assert overlap.flags[0].sum() == 9

    def test_bbar_is_group_level_double_average(self):
        g1 = GroupData("a", ws_generate(4, 2, 0.0, seed=0), np.zeros(4, int),
                       np.zeros((4, 1)), np.zeros(4))
        g2 = GroupData("b", ws_generate(6, 2, 0.0, seed=0), np.zeros(6, int),
                       np.zeros((6, 1)), np.zeros(6))
        pop = GroupedPopulation([g1, g2])
        # group a: 2 of 4 units overlap; group b: all 6 -> B-bar = (0.5 + 1)/2
        p_a = np.array([0.5, 0.5, 0.001, 0.999])
        nuisances = NuisanceEstimates(
            {0: [p_a, np.full(6, 0.5)], 1: [np.full(4, 0.5), np.full(6, 0.5)]},
            {0: [np.zeros(4), np.zeros(6)], 1: [np.zeros(4), np.zeros(6)]},
        )
        overlap = overlap_flags(nuisances, (1, 0), 0.01)
        assert overlap.b_bar == pytest.approx(0.75)

    def test_empty_overlap_raises(self):
        pop, _ = small_population(m=1, n=10)
        nuisances = constant_nuisances(pop, (0, 1), p=0.999)
        with pytest.raises(EmptyOverlapError):
            overlap_flags(nuisances, (1, 0), 0.01)

    def test_eta_validated(self):
        pop, _ = small_population(m=1, n=10)
        nuisances = constant_nuisances(pop, (0, 1))
        for eta in (0.0, 0.5, -0.1):
            with pytest.raises(ValueError):
                overlap_flags(nuisances, (1, 0), eta)


class TestUnitDr:
    def test_exact_outcome_model_collapses_to_mu_difference(self):
        value = unit_dr(y=1.0, level=1, contrast=(1, 0), p_t=0.7, p_tp=0.3,
                        mu_t=1.0, mu_tp=0.25)
        assert value == pytest.approx(1.0 - 0.25)

    def test_hand_value(self):
        value = unit_dr(y=2.0, level=1, contrast=(1, 0), p_t=0.5, p_tp=0.5,
                        mu_t=1.0, mu_tp=0.5)
        assert value == pytest.approx(2.5)

    def test_pure_ipw_reduction(self):
        value = unit_dr(y=3.0, level=1, contrast=(1, 0), p_t=0.25, p_tp=0.5,
                        mu_t=0.0, mu_tp=0.0)
        assert value == pytest.approx(3.0 / 0.25)

    def test_same_arm_contrast_is_zero(self):
        value = unit_dr(y=2.0, level=1, contrast=(1, 1), p_t=0.4, p_tp=0.4,
                        mu_t=0.9, mu_tp=0.9)
        assert value == 0.0


class TestGroupAggregate:
    def test_all_flags_plain_mean(self):
        assert group_aggregate([1.0, 2.0, 3.0], np.ones(3, bool)) == pytest.approx(2.0)

    def test_all_trimmed_zero(self):
        assert group_aggregate([1.0, 2.0], np.zeros(2, bool)) == 0.0

    def test_hand_value_with_partial_flags(self):
        effects = np.array([1.0, 2.0, 3.0, 4.0])
        flags = np.array([True, False, True, False])
        assert group_aggregate(effects, flags) == pytest.approx(1.0)

    def test_trimmed_unit_only_changes_denominator(self):
        effects = np.array([2.0, 4.0])
        assert group_aggregate(effects, np.ones(2, bool)) == pytest.approx(3.0)
        padded = np.array([2.0, 4.0, 100.0])
        flags = np.array([True, True, False])
        assert group_aggregate(padded, flags) == pytest.approx(6.0 / 3.0)


class TestEffectFromNuisances:
    def test_oracle_nuisances_close_to_truth(self):
        pop, truth = small_population(seed=5, m=10, n=60)
        nuisances = oracle_nuisances(pop, truth)
        est = gme_gnn_estimate(pop, nuisances=nuisances)
        overlap = overlap_flags(nuisances, (1, 0), 0.01)
        target = oracle_truth(pop, truth, n_redraws=800, seed=99,
                              unit_mask=overlap.flags)
        assert abs(est.tau_hat - target.tau_star) < 3 * max(est.std_error, 0.05)

    def test_single_group_normalize_on_off_agree_when_bbar_one(self):
        pop, _ = small_population(m=1, n=40)
        nuisances = constant_nuisances(pop, (0, 1), p=0.5)
        assignments = [assign_exposure(g, "any-neighbor") for g in pop.groups]
        a = effect_from_nuisances(pop, assignments, nuisances, (1, 0), normalize=True)
        b = effect_from_nuisances(pop, assignments, nuisances, (1, 0), normalize=False)
        assert a.b_bar == 1.0
        assert a.tau_hat == b.tau_hat

    def test_identical_arms_give_exact_zero(self):
        pop, _ = small_population(m=2, n=30)
        cfg = GcnConfig(epochs=30, seed=1)
        est = gme_gnn_estimate(pop, contrast=(1, 1), gnn_config=cfg)
        assert est.tau_hat == 0.0
        assert est.sigma2_hat == 0.0

    def test_contrast_antisymmetry_exact(self):
        pop, _ = small_population(seed=2, m=3, n=30)
        cfg = GcnConfig(epochs=40, seed=3)
        forward_est = gme_gnn_estimate(pop, contrast=(1, 0), gnn_config=cfg)
        backward_est = gme_gnn_estimate(pop, contrast=(0, 1), gnn_config=cfg)
        assert forward_est.tau_hat == -backward_est.tau_hat
        assert forward_est.sigma2_hat == backward_est.sigma2_hat
        assert forward_est.std_error == backward_est.std_error

    def test_normalized_estimate_divides_by_bbar(self):
        pop, _ = small_population(m=2, n=20)
        nuisances = constant_nuisances(pop, (0, 1), p=0.5)
        p = nuisances.p_hat[1][0].copy()
        p[:10] = 0.002  # trim half of group 0
        nuisances.p_hat[1][0] = p
        assignments = [assign_exposure(g, "any-neighbor") for g in pop.groups]
        raw = effect_from_nuisances(pop, assignments, nuisances, (1, 0), normalize=False)
        norm = effect_from_nuisances(pop, assignments, nuisances, (1, 0), normalize=True)
        assert norm.b_bar == pytest.approx(0.75)
        assert norm.tau_hat == pytest.approx(raw.tau_hat / 0.75)
        assert norm.diagnostics["raw_tau_hat"] == pytest.approx(raw.tau_hat)

    def test_ci_and_diagnostics_contract(self):
        pop, truth = small_population(m=3, n=30)
        est = gme_gnn_estimate(pop, nuisances=oracle_nuisances(pop, truth))
        lo, hi = est.ci95
        assert lo == pytest.approx(est.tau_hat - 1.96 * est.std_error)
        assert hi == pytest.approx(est.tau_hat + 1.96 * est.std_error)
        assert est.sigma2_hat >= 0
        for gid in ("g0", "g1", "g2"):
            info = est.diagnostics["per_group"][gid]
            assert {"contribution", "bandwidth", "branch", "negative",
                    "overlap_share"} <= set(info)
        assert est.to_dict()["contrast"] == [1, 0]


class TestFitNuisances:
    def test_missing_level_everywhere_raises(self):
        pop, _ = small_population(m=2, n=20)
        assignments = [assign_exposure(g, "joint4") for g in pop.groups]
        missing = next(
            t for t in range(4) if not any((a.levels == t).any() for a in assignments)
        ) if any(
            not any((a.levels == t).any() for a in assignments) for t in range(4)
        ) else None
        if missing is None:
            pytest.skip("all four levels occur in this draw")
        with pytest.raises(MissingLevelError):
            fit_nuisances(pop, assignments, (missing, 0), GcnConfig(epochs=5))

    def test_shapes_and_ranges(self):
        pop, _ = small_population(m=2, n=25)
        assignments = [assign_exposure(g, "any-neighbor") for g in pop.groups]
        nuisances = fit_nuisances(pop, assignments, (0, 1), GcnConfig(epochs=20, seed=0))
        for t in (0, 1):
            for g_index, group in enumerate(pop.groups):
                p = nuisances.p_hat[t][g_index]
                mu = nuisances.mu_hat[t][g_index]
                assert p.shape == (group.n_units,)
                assert mu.shape == (group.n_units,)
                assert ((p > 0) & (p < 1)).all()
                assert np.isfinite(mu).all()

    def test_renormalized_propensities_sum_to_one(self):
        pop, _ = small_population(m=2, n=25)
        assignments = [assign_exposure(g, "any-neighbor") for g in pop.groups]
        nuisances = fit_nuisances(
            pop, assignments, (0, 1), GcnConfig(epochs=20, seed=0), renormalize=True
        )
        for g_index in range(2):
            total = nuisances.p_hat[0][g_index] + nuisances.p_hat[1][g_index]
            np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_determinism_across_calls(self):
        pop, _ = small_population(m=2, n=20)
        cfg = GcnConfig(epochs=25, seed=11)
        a = gme_gnn_estimate(pop, gnn_config=cfg)
        b = gme_gnn_estimate(pop, gnn_config=cfg)
        assert a.tau_hat == b.tau_hat and a.std_error == b.std_error

    def test_contrast_range_validated(self):
        pop, _ = small_population(m=1, n=20)
        with pytest.raises(ValueError):
            gme_gnn_estimate(pop, mapping="any-neighbor", contrast=(2, 0),
                             gnn_config=GcnConfig(epochs=5))

    def test_propensity_validation_in_container(self):
        with pytest.raises(ValueError):
            NuisanceEstimates({1: [np.array([0.0, 0.5])]}, {1: [np.zeros(2)]})

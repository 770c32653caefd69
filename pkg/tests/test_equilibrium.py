"""Stackelberg solvers: best responses, thresholds, pricing, verification."""

from dataclasses import replace

import numpy as np
import pytest
from scipy import optimize

from cachemarket.economics import (
    EXCLUDED,
    FractionVector,
    PriceVector,
    profit_report,
)
from cachemarket.equilibrium import (
    GameInstance,
    VerificationFailure,
    best_response_fraction,
    nups_prices_for_u,
    nups_solve,
    participation_thresholds,
    ups_solve,
    verify_equilibrium,
    waterfill_solve,
)
from cachemarket.harness import ExperimentConfig, make_instance


@pytest.fixture(scope="module")
def default_instance():
    """N=500, V=15, gamma=0.5, Q=500, delta=0.01, alpha=4, zeta=50, K=10, lambda=10."""
    return make_instance(ExperimentConfig())


def small_instance(n_vrs=3, gamma=0.5, storage=500, n_files=500, **overrides):
    cfg = ExperimentConfig(n_vrs=n_vrs, gamma=gamma, storage=storage,
                           n_files=n_files, **overrides)
    return make_instance(cfg), cfg


class TestBestResponse:
    def test_opt_out_threshold(self):
        inst, _ = small_instance(n_vrs=1)
        gamma_v = float(inst.gammas()[0])
        threshold = gamma_v * inst.econ.local_surcharge / (
            inst.constants.lambda_big * inst.econ.sbs_intensity
        )
        assert best_response_fraction(
            threshold, gamma_v, inst.econ, inst.constants
        ) == pytest.approx(0.0, abs=1e-12)
        assert best_response_fraction(
            threshold * 2.0, gamma_v, inst.econ, inst.constants
        ) == 0.0

    def test_matches_grid_search(self):
        # oracle: maximize the concave retailer profit on a fine grid
        inst, _ = small_instance(n_vrs=1, n_files=500, storage=500)
        con = inst.constants
        econ = inst.econ
        gamma_v = 500.0
        s_v = 1.0
        tau_star = best_response_fraction(s_v, gamma_v, econ, con)

        def profit(tau):
            return gamma_v * econ.local_surcharge * tau / (
                con.theta * tau + con.lambda_big
            ) - econ.sbs_intensity * s_v * tau

        grid = np.linspace(0.0, 2.0 * tau_star, 400001)
        best = grid[np.argmax([profit(t) for t in grid])]
        assert tau_star == pytest.approx(best, abs=1e-4)
        assert tau_star > 1.0  # single greedy retailer at a low price

    def test_rejects_nonpositive_price(self):
        inst, _ = small_instance(n_vrs=1)
        with pytest.raises(ValueError):
            best_response_fraction(0.0, 500.0, inst.econ, inst.constants)


class TestParticipationThresholds:
    def test_first_thresholds_are_zero(self, default_instance):
        th = participation_thresholds(
            default_instance.pops, default_instance.constants, 500
        )
        assert th.u_values[0] == 0.0
        assert th.u_bar_values[0] == 0.0

    def test_uniform_preference_collapses(self):
        inst, _ = small_instance(n_vrs=8, gamma=0.0)
        th = participation_thresholds(inst.pops, inst.constants, 500)
        np.testing.assert_allclose(th.u_values, 0.0, atol=1e-12)
        np.testing.assert_allclose(th.u_bar_values, 0.0, atol=1e-12)

    def test_strictly_increasing(self):
        rng = np.random.default_rng(17)
        for _ in range(15):
            n_vrs = int(rng.integers(2, 51))
            gamma = float(rng.uniform(0.02, 1.0))
            inst, _ = small_instance(n_vrs=n_vrs, gamma=gamma)
            th = participation_thresholds(inst.pops, inst.constants, 500)
            assert all(b > a for a, b in zip(th.u_values, th.u_values[1:]))

    def test_shared_price_needs_more_storage(self, default_instance):
        th = participation_thresholds(
            default_instance.pops, default_instance.constants, 500
        )
        assert all(
            ub >= u - 1e-12 for u, ub in zip(th.u_values, th.u_bar_values)
        )
        assert all(
            ub > u for u, ub in zip(th.u_values[1:], th.u_bar_values[1:])
        )


def reference_full_prices(instance):
    """Independent evaluation of the all-participants price closed form."""
    gammas = instance.gammas()
    lam_big = instance.constants.lambda_big
    theta = instance.constants.theta
    v = len(gammas)
    csum = sum(g ** (1 / 3) for g in gammas)
    return [
        lam_big
        * instance.econ.backhaul_cost
        * csum**2
        * g ** (1 / 3)
        / (instance.econ.sbs_intensity * (v * lam_big + theta) ** 2)
        for g in gammas
    ]


class TestNupsPrices:
    def test_full_participation_closed_form(self, default_instance):
        prices = nups_prices_for_u(15, default_instance)
        np.testing.assert_allclose(
            prices.prices, reference_full_prices(default_instance), rtol=1e-12
        )

    def test_single_vr_algebra(self):
        inst, _ = small_instance(n_vrs=1)
        g = float(inst.gammas()[0])
        lam_big = inst.constants.lambda_big
        theta = inst.constants.theta
        expected = (
            lam_big * inst.econ.backhaul_cost * g
            / (inst.econ.sbs_intensity * (lam_big + theta) ** 2)
        )
        assert nups_prices_for_u(1, inst).prices[0] == pytest.approx(
            expected, rel=1e-12
        )

    @pytest.mark.parametrize("u", [1, 5, 10, 15])
    def test_best_responses_fill_budget(self, default_instance, u):
        prices = nups_prices_for_u(u, default_instance)
        total = sum(
            best_response_fraction(
                p, g, default_instance.econ, default_instance.constants
            )
            for p, g in zip(prices.prices, default_instance.gammas())
            if p is not EXCLUDED
        )
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_excluded_suffix(self, default_instance):
        prices = nups_prices_for_u(6, default_instance)
        assert all(p is not EXCLUDED for p in prices.prices[:6])
        assert all(p is EXCLUDED for p in prices.prices[6:])


class TestNupsSolve:
    def test_single_vr(self):
        inst, _ = small_instance(n_vrs=1)
        outcome = nups_solve(inst, 500)
        assert outcome.n_participants == 1
        assert outcome.prices.prices == nups_prices_for_u(1, inst).prices

    def test_symmetric_preferences(self):
        inst, _ = small_instance(n_vrs=5, gamma=0.0)
        outcome = nups_solve(inst, 500)
        assert outcome.n_participants == 5
        assert max(outcome.prices.prices) == pytest.approx(
            min(outcome.prices.prices), rel=1e-12
        )
        np.testing.assert_allclose(outcome.fractions.fractions, 0.2, atol=1e-9)

    def test_default_instance_keeps_all(self, default_instance):
        outcome = nups_solve(default_instance, 500)
        assert outcome.n_participants == 15
        # leader profit matches the closed form for the chosen count
        gammas = default_instance.gammas()
        lam_big = default_instance.constants.lambda_big
        theta = default_instance.constants.theta
        csum = np.cbrt(gammas).sum()
        closed = (
            gammas.sum() - lam_big**2 * csum**3 / (15 * lam_big + theta) ** 2
        ) / theta
        assert outcome.report.nsp_total == pytest.approx(closed, rel=1e-9)

    def test_price_ordering(self, default_instance):
        outcome = nups_solve(default_instance, 500)
        posted = [p for p in outcome.prices.prices if p is not EXCLUDED]
        assert all(a >= b - 1e-12 for a, b in zip(posted, posted[1:]))

    def test_participants_form_popularity_prefix(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            inst, cfg = small_instance(
                n_vrs=int(rng.integers(2, 16)),
                gamma=float(rng.uniform(0.05, 1.0)),
                storage=int(rng.integers(10, 501)),
            )
            outcome = nups_solve(inst, cfg.storage)
            u = outcome.n_participants
            assert all(f > 0 for f in outcome.fractions.fractions[:u])
            assert all(f == 0 for f in outcome.fractions.fractions[u:])
            assert sum(outcome.fractions.fractions) == pytest.approx(1.0, abs=1e-9)

    def test_oversized_storage_behaves_like_full(self, default_instance):
        full = nups_solve(default_instance, 500)
        oversized = nups_solve(default_instance, 10_000)
        assert oversized.prices.prices == full.prices.prices

    def test_requires_matched_surcharge(self):
        inst, _ = small_instance(n_vrs=2, s_ld=2.0)
        with pytest.raises(ValueError, match="surcharge"):
            nups_solve(inst, 500)


class TestUpsSolve:
    def test_single_vr_coincides_with_nups(self):
        inst, _ = small_instance(n_vrs=1)
        assert ups_solve(inst, 500).prices.prices == pytest.approx(
            nups_solve(inst, 500).prices.prices
        )

    def test_symmetric_preferences_coincide(self):
        inst, _ = small_instance(n_vrs=5, gamma=0.0)
        ups = ups_solve(inst, 500)
        nups = nups_solve(inst, 500)
        np.testing.assert_allclose(ups.prices.prices, nups.prices.prices, rtol=1e-12)

    def test_shared_price(self, default_instance):
        outcome = ups_solve(default_instance, 500)
        posted = [p for p in outcome.prices.prices if p is not EXCLUDED]
        assert len(set(posted)) == 1

    def test_fractions_equal_waterfilling(self, default_instance):
        ups = ups_solve(default_instance, 500)
        wf = waterfill_solve(default_instance)
        np.testing.assert_allclose(
            ups.fractions.fractions, wf.fractions.fractions, atol=1e-9
        )


class TestWaterfill:
    def test_single_vr_takes_everything(self):
        inst, _ = small_instance(n_vrs=1)
        assert waterfill_solve(inst).fractions.fractions == (1.0,)

    def test_symmetric_split(self):
        inst, _ = small_instance(n_vrs=4, gamma=0.0)
        np.testing.assert_allclose(
            waterfill_solve(inst).fractions.fractions, 0.25, atol=1e-12
        )

    def test_against_constrained_optimizer(self):
        # oracle: SLSQP maximization of the sum profit over the simplex
        cfg = ExperimentConfig(n_vrs=3, gamma=0.5, n_files=500, storage=100)
        inst = make_instance(cfg)
        q = np.array([0.5, 0.3, 0.2])
        inst = replace(inst, pops=replace(inst.pops, q=q))
        con = inst.constants
        gammas = inst.gammas()

        def neg_sum_profit(tau):
            return -sum(
                g * t / (con.theta * t + con.lambda_big) for g, t in zip(gammas, tau)
            )

        result = optimize.minimize(
            neg_sum_profit,
            x0=np.full(3, 1 / 3),
            bounds=[(0.0, 1.0)] * 3,
            constraints=[{"type": "ineq", "fun": lambda t: 1.0 - t.sum()}],
            method="SLSQP",
            options={"ftol": 1e-14, "maxiter": 500},
        )
        wf = waterfill_solve(inst)
        np.testing.assert_allclose(
            wf.fractions.fractions, result.x, atol=1e-6
        )
        assert sum(wf.fractions.fractions) == pytest.approx(1.0, abs=1e-9)


class TestSchemeComparisons:
    def test_dominance(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            inst, cfg = small_instance(
                n_vrs=int(rng.integers(2, 16)),
                gamma=float(rng.uniform(0.05, 1.0)),
                storage=int(rng.integers(10, 501)),
            )
            nups = nups_solve(inst, cfg.storage)
            ups = ups_solve(inst, cfg.storage)
            assert nups.report.nsp_total >= ups.report.nsp_total - 1e-9
            assert (
                ups.report.nsp_backhaul_saving
                >= nups.report.nsp_backhaul_saving - 1e-9
            )

    def test_leader_profit_rises_with_preference_skew(self):
        profits = []
        for gamma in np.arange(0.1, 1.05, 0.1):
            inst, _ = small_instance(n_vrs=15, gamma=float(gamma))
            profits.append(nups_solve(inst, 500).report.nsp_total)
        assert all(b >= a - 1e-9 for a, b in zip(profits, profits[1:]))

    def test_full_participation_bracket(self, default_instance):
        th = participation_thresholds(
            default_instance.pops, default_instance.constants, 500
        )
        outcome = nups_solve(default_instance, float(th.u_values[-1]) + 1e-6)
        assert outcome.n_participants == 15
        np.testing.assert_allclose(
            outcome.prices.prices, reference_full_prices(default_instance), rtol=1e-12
        )
        below = nups_solve(default_instance, float(th.u_values[-1]) - 1e-6)
        assert below.n_participants == 14


class TestVerification:
    def test_solved_outcomes_pass(self, default_instance):
        for outcome in (
            nups_solve(default_instance, 500),
            ups_solve(default_instance, 500),
            waterfill_solve(default_instance),
        ):
            verify_equilibrium(outcome, default_instance)

    def test_corrupted_price_fails_leader_check(self, default_instance):
        outcome = nups_solve(default_instance, 500)
        prices = list(outcome.prices.prices)
        prices[0] *= 1.1
        corrupted_prices = PriceVector(tuple(prices))
        fractions = FractionVector(
            tuple(
                best_response_fraction(
                    p, g, default_instance.econ, default_instance.constants
                )
                if p is not EXCLUDED
                else 0.0
                for p, g in zip(corrupted_prices.prices, default_instance.gammas())
            )
        )
        report = profit_report(
            fractions,
            corrupted_prices,
            default_instance.pops,
            default_instance.econ,
            default_instance.constants,
        )
        corrupted = replace(
            outcome, prices=corrupted_prices, fractions=fractions, report=report
        )
        with pytest.raises(VerificationFailure, match="leader"):
            verify_equilibrium(corrupted, default_instance)

    def test_corrupted_fraction_fails_follower_check(self, default_instance):
        outcome = nups_solve(default_instance, 500)
        fractions = list(outcome.fractions.fractions)
        fractions[0] += 0.05  # keep the budget feasible by shrinking another
        fractions[1] -= 0.05
        corrupted = replace(outcome, fractions=FractionVector(tuple(fractions)))
        with pytest.raises(VerificationFailure, match="follower"):
            verify_equilibrium(corrupted, default_instance)

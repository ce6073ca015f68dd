"""Genetic evasion attack: operators, query accounting, and end-to-end runs."""

import numpy as np
import pytest

from evadebench import (
    AttackResult,
    GaConfig,
    GlobalLinearDetector,
    QueryCounter,
    crossover,
    fitness_from_scores,
    init_population,
    linf_distance,
    mutate,
    run_attack,
    select_elites,
    to_norm,
)


class TestGaConfig:
    def test_defaults(self):
        cfg = GaConfig()
        assert cfg.n == 10
        assert cfg.m == 100
        assert cfg.k == 5
        assert cfg.epsilon == pytest.approx(10.0 / 255.0)
        assert cfg.p_mut == 0.05
        assert cfg.mutation_weight == pytest.approx(cfg.epsilon / 2.0)

    def test_explicit_mutation_weight(self):
        cfg = GaConfig(w_mut=0.01)
        assert cfg.mutation_weight == 0.01

    @pytest.mark.parametrize("kwargs", [
        {"k": 0},
        {"k": 11},
        {"m": -1},
        {"epsilon": 0.0},
        {"epsilon": 1.5},
        {"p_mut": -0.1},
        {"p_mut": 1.01},
        {"w_mut": 0.0},
        {"w_mut": -0.5},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            GaConfig(**kwargs)


class TestFitness:
    def test_log_law(self):
        scores = [0.0, 0.25, 0.5, 0.9]
        fit = fitness_from_scores(scores)
        want = np.log(1.0 - np.asarray(scores) + 1e-12)
        np.testing.assert_allclose(fit, want, rtol=0, atol=0)

    def test_score_one_is_finite(self):
        fit = fitness_from_scores([1.0])
        assert np.isfinite(fit[0])
        assert fit[0] == pytest.approx(np.log(1e-12))

    def test_lower_score_is_fitter(self):
        fit = fitness_from_scores([0.2, 0.8])
        assert fit[0] > fit[1]


class TestInitPopulation:
    def test_shape_and_bounds(self, rng):
        cfg = GaConfig(epsilon=0.04)
        pop = init_population(cfg, (6, 5, 1), rng)
        assert pop.shape == (10, 6, 5, 1)
        assert np.all(np.abs(pop) <= cfg.epsilon)

    def test_spread(self, rng):
        # uniform init should use most of the interval, not collapse to 0
        cfg = GaConfig(epsilon=0.04)
        pop = init_population(cfg, (16, 16, 1), rng)
        assert pop.max() > 0.9 * cfg.epsilon
        assert pop.min() < -0.9 * cfg.epsilon


class TestSelectElites:
    def test_picks_top_k(self):
        idx = select_elites(np.array([-3.0, -1.0, -2.0, -0.5]), 2)
        assert list(idx) == [3, 1]

    def test_stable_on_ties(self):
        # fitness [1, 3, 3, 2], k=2: the two 3s tie; lower index wins
        idx = select_elites(np.array([1.0, 3.0, 3.0, 2.0]), 2)
        assert list(idx) == [1, 2]

    def test_k_equals_n(self):
        idx = select_elites(np.array([0.0, 2.0, 1.0]), 3)
        assert list(idx) == [1, 2, 0]

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            select_elites(np.array([1.0, 2.0]), 3)


class TestCrossover:
    def test_huge_gap_copies_fitter_parent(self, rng):
        a = np.full((8, 8, 1), 0.03)
        b = np.full((8, 8, 1), -0.03)
        child = crossover(a, b, 0.0, -1000.0, rng)
        np.testing.assert_array_equal(child, a)
        child = crossover(a, b, -1000.0, 0.0, rng)
        np.testing.assert_array_equal(child, b)

    def test_equal_fitness_is_balanced(self, rng):
        a = np.ones((100, 100, 1))
        b = np.zeros((100, 100, 1))
        child = crossover(a, b, -2.0, -2.0, rng)
        frac_a = child.mean()
        # 10,000 fair coin flips: mean within 5 sigma of 0.5
        assert abs(frac_a - 0.5) < 5 * 0.5 / 100.0

    def test_inheritance_probability_is_sigmoid_of_gap(self, rng):
        # f_a - f_b = ln(3): p_a = 3/4
        a = np.ones((200, 200, 1))
        b = np.zeros((200, 200, 1))
        child = crossover(a, b, float(np.log(3.0)), 0.0, rng)
        assert child.mean() == pytest.approx(0.75, abs=0.01)

    def test_elements_inherited_verbatim(self, rng):
        a = rng.uniform(-0.04, 0.04, size=(12, 12, 1))
        b = rng.uniform(-0.04, 0.04, size=(12, 12, 1))
        child = crossover(a, b, -1.0, -2.0, rng)
        from_parent = (child == a) | (child == b)
        assert np.all(from_parent)


class TestMutate:
    def test_stays_in_epsilon_ball(self, rng):
        cfg = GaConfig(epsilon=0.04, p_mut=1.0)
        cand = rng.uniform(-cfg.epsilon, cfg.epsilon, size=(16, 16, 1))
        out = mutate(cand, cfg, rng)
        assert np.all(np.abs(out) <= cfg.epsilon)

    def test_p_mut_zero_is_identity(self, rng):
        cfg = GaConfig(p_mut=0.0)
        cand = rng.uniform(-0.03, 0.03, size=(10, 10, 1))
        np.testing.assert_array_equal(mutate(cand, cfg, rng), cand)

    def test_p_mut_one_touches_most_elements(self, rng):
        cfg = GaConfig(p_mut=1.0)
        cand = np.zeros((50, 50, 1))
        out = mutate(cand, cfg, rng)
        changed = np.mean(out != cand)
        # every element gets a uniform step; only step == 0.0 exactly leaves it
        assert changed > 0.999

    def test_expected_mutation_rate(self, rng):
        cfg = GaConfig(p_mut=0.05)
        cand = np.zeros((100, 100, 1))
        out = mutate(cand, cfg, rng)
        changed = np.mean(out != cand)
        assert changed == pytest.approx(0.05, abs=0.01)

    def test_step_magnitude_bounded_by_weight(self, rng):
        cfg = GaConfig(epsilon=0.5, p_mut=1.0, w_mut=0.01)
        cand = np.zeros((30, 30, 1))
        out = mutate(cand, cfg, rng)
        assert np.all(np.abs(out) <= 0.01 + 1e-12)


def _deficit_oracle(shape, rng, margin_frac=0.05):
    """A linear detector with a small decision margin on mid-gray input."""
    det = GlobalLinearDetector.random(rng, shape=shape, scale=0.05)
    x = np.full(shape, 128, dtype=np.uint8)
    eps_reach = (10.0 / 255.0) * np.abs(det.weights).sum()
    # place the benign logit margin_frac of the attack's maximum reach above 0
    logit0 = float(det.weights.ravel() @ to_norm(x).ravel())
    det = GlobalLinearDetector(det.weights, shape=shape,
                               bias=-logit0 + margin_frac * eps_reach)
    return det, x


class TestRunAttack:
    def test_query_accounting_at_exhaustion(self, rng):
        # unflippable oracle: attack must exhaust exactly n * (m + 1) queries
        det, x = _deficit_oracle((8, 8, 1), rng, margin_frac=5.0)
        oracle = QueryCounter(det)
        cfg = GaConfig(n=4, m=6, k=2, seed=7)
        res = run_attack(oracle, x, cfg)
        assert not res.success
        assert res.queries_used == 4 * (6 + 1)
        assert oracle.total_queries == res.queries_used
        assert res.generations_run == 6

    def test_default_budget_is_1010(self, rng):
        det, x = _deficit_oracle((6, 6, 1), rng, margin_frac=5.0)
        oracle = QueryCounter(det)
        res = run_attack(oracle, x, GaConfig(seed=3))
        assert res.queries_used == 1010
        assert oracle.total_queries == 1010

    def test_success_flips_score(self, rng):
        det, x = _deficit_oracle((16, 16, 1), rng)
        assert det.score_batch([x])[0] >= 0.5
        res = run_attack(QueryCounter(det), x, GaConfig(seed=1))
        assert res.success
        assert res.final_score < 0.5
        # verdict must hold for the artifact itself, re-scored independently
        assert det.score_batch([res.adversarial])[0] == pytest.approx(
            res.final_score, abs=1e-12)

    def test_no_extra_query_for_verdict(self, rng):
        det, x = _deficit_oracle((16, 16, 1), rng)
        oracle = QueryCounter(det)
        cfg = GaConfig(seed=1)
        res = run_attack(oracle, x, cfg)
        assert res.success
        # every query is one scored candidate: a multiple of n, nothing extra
        assert oracle.total_queries == res.queries_used
        assert res.queries_used % cfg.n == 0
        assert res.queries_used == cfg.n * (res.generations_run + 1)

    def test_perturbation_respects_epsilon_with_quantization_slack(self, rng):
        det, x = _deficit_oracle((16, 16, 1), rng)
        cfg = GaConfig(seed=1)
        res = run_attack(det, x, cfg)
        assert res.success
        # rounding the perturbed pixels to 8 bits can add at most 1/510
        assert linf_distance(res.adversarial, x) <= cfg.epsilon + 1.0 / 510.0 + 1e-12

    def test_adversarial_is_8bit(self, rng):
        det, x = _deficit_oracle((8, 8, 1), rng, margin_frac=5.0)
        res = run_attack(det, x, GaConfig(n=3, m=2, k=1, seed=0))
        assert res.adversarial.dtype == np.uint8
        assert res.adversarial.shape == x.shape

    def test_deterministic_given_seed(self, rng):
        det, x = _deficit_oracle((12, 12, 1), rng)
        r1 = run_attack(det, x, GaConfig(seed=42))
        r2 = run_attack(det, x, GaConfig(seed=42))
        assert r1.success == r2.success
        assert r1.queries_used == r2.queries_used
        assert r1.final_score == r2.final_score
        np.testing.assert_array_equal(r1.adversarial, r2.adversarial)

    def test_seed_changes_trajectory(self, rng):
        det, x = _deficit_oracle((12, 12, 1), rng)
        r1 = run_attack(det, x, GaConfig(seed=0))
        r2 = run_attack(det, x, GaConfig(seed=1))
        diverged = (r1.queries_used != r2.queries_used
                    or np.any(r1.adversarial != r2.adversarial))
        assert diverged

    def test_m_zero_scores_initial_population_only(self, rng):
        det, x = _deficit_oracle((8, 8, 1), rng, margin_frac=5.0)
        oracle = QueryCounter(det)
        res = run_attack(oracle, x, GaConfig(n=5, m=0, k=2, seed=0))
        assert oracle.total_queries == 5
        assert res.generations_run == 0

    def test_oracle_failure_mid_run_returns_partial_result(self, rng):
        det, x = _deficit_oracle((8, 8, 1), rng, margin_frac=5.0)

        class FlakyOracle:
            def __init__(self, inner, fail_at):
                self.inner, self.calls, self.fail_at = inner, 0, fail_at

            def score_batch(self, images):
                self.calls += 1
                if self.calls > self.fail_at:
                    raise RuntimeError("backend gone")
                return self.inner.score_batch(images)

        flaky = FlakyOracle(det, fail_at=3)
        cfg = GaConfig(n=4, m=10, k=2, seed=0)
        res = run_attack(flaky, x, cfg)
        assert isinstance(res, AttackResult)
        assert not res.success
        assert res.error is not None and "backend gone" in res.error
        # three successful batches before the failure
        assert res.queries_used == 3 * cfg.n
        assert res.adversarial.dtype == np.uint8

    def test_scores_quantized_candidates_only(self, rng):
        # the oracle must only ever see images representable in 8 bits
        det, x = _deficit_oracle((8, 8, 1), rng, margin_frac=5.0)

        class AssertingOracle:
            def score_batch(self, images):
                for im in images:
                    assert im.dtype == np.uint8
                return det.score_batch(images)

        run_attack(AssertingOracle(), x, GaConfig(n=4, m=3, k=2, seed=0))

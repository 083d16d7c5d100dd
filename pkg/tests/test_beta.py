from types import SimpleNamespace

import numpy as np
import pytest

from goma.beta import (BetaConfig, LearnerState, RunningStats, arm_grid, arm_probs, choose_arm,
                       counterfactual_rewards, mixed_policy_reward, step_size, train, train_batch,
                       update)
from goma.channel import Outcome, SlotFeedback, SlotOutcome
from goma.dists import Exponential, binary, chi_square_2_scaled
from goma.strategy import Scenario, expected_reward_threshold

ARMS = np.array([0.5, 1.0, 1.5, 2.5])


def _stats(alpha=0.4, beta=0.2, lam=1.0, rho=0.1, full=True):
    return SimpleNamespace(alpha=alpha, beta=beta, lam=lam, rho=rho, full=full, rho_bar=0.5)


def test_arm_grid():
    g = arm_grid()
    assert g.size == 201 and g[0] == 0.0 and g[-1] == 20.0
    assert g[1] == pytest.approx(0.1)


def test_softmax_examples():
    assert np.allclose(arm_probs([1.0, 0.0], 0.0), [0.73106, 0.26894], atol=1e-5)
    assert np.allclose(arm_probs([3.0, -1.0, 0.2], 1.0), 1 / 3)
    assert np.allclose(arm_probs(np.zeros(4), 0.01), 0.25)


def test_choose_arm_frequencies():
    rng = np.random.default_rng(0)
    st = LearnerState.fresh(2, explore=0.0)
    st.cum_weights = np.array([1.0, 0.0])
    picks = np.array([choose_arm(st, rng) for _ in range(20_000)])
    assert np.mean(picks == 0) == pytest.approx(0.73106, abs=0.01)


def test_step_size_examples():
    assert step_size(1, 0.99995) == 1.0
    assert step_size(10 ** 4, 0.99995) == pytest.approx(1.00046e-4, rel=1e-5)
    assert step_size(3, 0.5, rule="geometric") == pytest.approx(0.125)
    assert step_size(2, 0.9, rule="power", scale=2.0) == pytest.approx(2 * 2 ** -0.9)
    with pytest.raises(ValueError):
        step_size(0, 0.9)


def test_update_zero_and_skip():
    st = LearnerState.fresh(3)
    update(st, np.zeros(3))
    assert st.step == 1 and np.all(st.cum_weights == 0)
    update(st, None)
    assert st.step == 2 and st.skipped == 1
    update(st, np.array([1.0, 0.0, -1.0]))
    assert st.cum_weights[0] == pytest.approx(st.kappa ** 3)


def test_estimate_silence_slot():
    fb = SlotFeedback(SlotOutcome(Outcome.IDLE, 0), 0.5)
    r = counterfactual_rewards(ARMS, 2.0, 10.0, 0.25, fb, _stats(), 3)
    assert np.allclose(r, [1.75, 1.75, 1.75, 0.0])


def test_estimate_success_by_other():
    fb = SlotFeedback(SlotOutcome(Outcome.SUCCESS, 1, 3.0, 2), 0.5)
    r = counterfactual_rewards(ARMS, 1.0, 10.0, 0.25, fb, _stats(), 3)
    assert np.allclose(r, [-0.5, 2.75, 2.75, 2.75])


def test_estimate_own_success():
    fb = SlotFeedback(SlotOutcome(Outcome.SUCCESS, 1, 2.0, 0), 0.5)
    r = counterfactual_rewards(ARMS, 2.0, 0.0, 0.25, fb, _stats(), 3)
    assert np.allclose(r, [1.75, 1.75, 1.75, 0.0])


def test_estimate_collision_while_silent():
    fb = SlotFeedback(SlotOutcome(Outcome.COLLISION, 2), 0.5)
    r = counterfactual_rewards(ARMS, 1.2, 10.0, 0.25, fb, _stats(), 3)
    assert np.allclose(r, [-0.5, -0.5, -0.25, -0.25])


def test_estimate_collision_while_sending():
    fb = SlotFeedback(SlotOutcome(Outcome.COLLISION, 2), 0.5)
    # others on air given any: (0.5 - 0.1) / 0.4 = 1
    r = counterfactual_rewards(ARMS, 1.2, 0.0, 0.25, fb, _stats(lam=2.0), 3)
    assert np.allclose(r, [-0.5, -0.5, 2.0 - 0.25, 2.0 - 0.25])


def test_collision_skips():
    fb = SlotFeedback(SlotOutcome(Outcome.COLLISION, 2), 0.5)
    assert counterfactual_rewards(ARMS, 1.2, 0.0, 0.25, fb, _stats(alpha=0.0), 3) is None
    assert counterfactual_rewards(ARMS, 1.2, 10.0, 0.25, fb, _stats(beta=0.4), 3) is None
    assert counterfactual_rewards(ARMS, 1.2, 10.0, 0.25, fb, _stats(full=False), 3) is None
    nan_bar = SlotFeedback(SlotOutcome(Outcome.COLLISION, 2), np.nan)
    assert counterfactual_rewards(ARMS, 1.2, 10.0, 0.25, nan_bar, _stats(), 3) is None


def test_estimates_bounded():
    rng = np.random.default_rng(1)
    N, psi = 4, 0.3
    for _ in range(200):
        k = int(rng.integers(0, 4))
        kind = [Outcome.IDLE, Outcome.SUCCESS, Outcome.COLLISION, Outcome.COLLISION][k]
        n_tx = {Outcome.IDLE: 0, Outcome.SUCCESS: 1}.get(kind, 2)
        out = SlotOutcome(kind, n_tx, float(rng.uniform(0, 3)) if n_tx == 1 else None,
                          1 if n_tx == 1 else None)
        st = _stats(*rng.uniform(0.05, 1.0, 2), float(rng.uniform(0, 3)), float(rng.uniform(0, 1)))
        v = float(rng.uniform(0, 3))
        r = counterfactual_rewards(ARMS, v, float(rng.uniform(0, 3)), psi,
                                   SlotFeedback(out, float(rng.uniform(0, 4))), st, N)
        if r is not None:
            assert np.all(np.abs(r) <= 3 + (N + 1) * psi + 1e-12)


def test_running_stats_by_hand():
    rs = RunningStats(window=4)
    rs.push(True, Outcome.SUCCESS, 2.0)       # own success: no other on air
    rs.push(False, Outcome.SUCCESS, 3.0)      # someone else delivered 3
    rs.push(False, Outcome.COLLISION)
    rs.push(False, Outcome.IDLE)
    assert rs.full
    assert rs.own_rate == pytest.approx(0.25)
    assert rs.alpha == pytest.approx(0.5)
    assert rs.beta == pytest.approx(min(1 / 3, 0.5))
    assert rs.lam == pytest.approx(3.0 / 2)
    rs.push(True, Outcome.COLLISION)          # evicts the own success
    assert rs.alpha == pytest.approx(0.75)


def test_mixed_policy_reduces_to_pure():
    s = Scenario.iid(Exponential(1), 3, 0.2)
    arms = np.array([0.5, 1.0, 2.0])
    silent = np.array([[d.cdf(arms) for d in s.dists]])
    tails = np.array([[d.tail_above(arms) for d in s.dists]])
    probs = np.zeros((1, 3, 3))
    probs[0, [0, 1, 2], [0, 2, 1]] = 1.0
    th = [s.dists[0].cdf(0.5), s.dists[1].cdf(2.0), s.dists[2].cdf(1.0)]
    assert mixed_policy_reward(probs, silent, tails, 0.2)[0] == pytest.approx(
        expected_reward_threshold(th, s), abs=1e-12)


def test_single_node_binary_learns_lowest_arm():
    res = train(Scenario.iid(binary(0.5), 1, 0.0), BetaConfig(L=2000), seed=0)
    assert res.greedy_thresholds[0, 0] == 0.0
    assert res.final_reward[0] == pytest.approx(0.5)


def test_training_is_deterministic_and_batch_independent():
    s = [Scenario.iid(chi_square_2_scaled(1.0), 3, 0.25, seed=k) for k in (1, 2)]
    cfg = BetaConfig(L=1500)
    both = train_batch(s, cfg)
    one = train(s[1], cfg, seed=2)
    again = train(s[1], cfg, seed=2)
    assert np.array_equal(one.weights, again.weights)
    assert np.allclose(both.weights[1], one.weights[0], atol=1e-12)
    assert np.array_equal(both.skipped[1], one.skipped[0])


def test_learning_improves_on_uniform_start():
    res = train_batch([Scenario.iid(chi_square_2_scaled(1.0), 4, 0.25, seed=k) for k in range(3)],
                      BetaConfig(L=5000))
    assert res.steps[0] == 0 and res.greedy_reward.shape == (3, res.steps.size)
    # step 0 is the uniform mixture over the arm grid
    assert np.all(res.final_reward > res.policy_reward[:, 0])
    assert np.array_equal(res.final_reward, res.greedy_reward[:, -1])


def test_config_validation():
    for bad in (dict(explore=1.5), dict(stats="x"), dict(step_rule="x"), dict(step_scale=0),
                dict(collision_divisor="x"), dict(arms=[1.0, 0.5])):
        with pytest.raises(ValueError):
            BetaConfig(**bad)


def test_scalar_path_matches_vectorized_estimates():
    # drive the one-slot API by hand and compare with the batched accumulation
    s = Scenario.iid(chi_square_2_scaled(1.0), 3, 0.25, seed=11)
    L, W = 600, 25
    cfg = BetaConfig(L=L, window=W, chunk=L)
    arms_idx = np.array([8, 12, 15])
    res = train_batch([s], cfg, frozen=[arms_idx])
    kids = np.random.SeedSequence(11).spawn(4)
    vals = np.array([d.sample(np.random.default_rng(k), L) for d, k in zip(s.dists, kids[:3])])
    th = cfg.arms[arms_idx]
    stats = [RunningStats(W) for _ in range(3)]
    total = np.zeros((3, cfg.arms.size))
    count = np.zeros(3)
    rho_bar = np.nan
    for i in range(L):
        v = vals[:, i]
        tx = v > th
        k = int(tx.sum())
        kind = [Outcome.IDLE, Outcome.SUCCESS][k] if k < 2 else Outcome.COLLISION
        who = int(np.flatnonzero(tx)[0]) if k == 1 else None
        out = SlotOutcome(kind, k, float(v[who]) if k == 1 else None, who)
        fb = SlotFeedback(out, rho_bar)
        for n in range(3):
            r = counterfactual_rewards(cfg.arms, v[n], th[n], s.psi, fb, stats[n], 3)
            if r is not None:
                total[n] += r
                count[n] += 1
        for n in range(3):
            stats[n].push(bool(tx[n]), kind, float(v[who]) if k == 1 else 0.0)
        if (i + 1) % W == 0:
            reports = [st.report() for st in stats]
            rho_bar = float(np.sum(reports))
            for st, rep in zip(stats, reports):
                st.receive_broadcast(rho_bar, rep)
    assert np.array_equal(res.r_hat_n[0, :, 0], count)
    assert np.allclose(res.r_hat_sum[0], total, atol=1e-9)

import numpy as np
import pytest

from goma.baseline import cdns_profile
from goma.channel import (Outcome, SlotOutcome, node_streams, resolve_slot, run_episode,
                          simulate_slot)
from goma.dists import Exponential, chi_square_2_scaled
from goma.strategy import Scenario, energy, expected_reward_threshold


def test_simulate_slot_examples():
    s = Scenario.iid(Exponential(1), 3, 0.0, seed=1)
    rngs = node_streams(1, 3)
    _, dec, out = simulate_slot(s, [1, 1, 1], rngs)
    assert out.kind is Outcome.IDLE and not dec.any()
    vals, dec, out = simulate_slot(s, [1, 0, 1], rngs)
    assert out.kind is Outcome.SUCCESS
    assert out.transmitter == 1 and out.delivered_value == vals[1]


def test_idle_probability():
    s = Scenario.iid(Exponential(1), 3, 0.0)
    ep = run_episode(s, [0.5] * 3, 10 ** 6, seed=0)
    assert ep.counts["idle"] / ep.slots == pytest.approx(0.125, abs=0.002)


def test_resolve_slot_kinds():
    v = np.array([1.0, 2.0, 3.0])
    assert resolve_slot(v, [0, 0, 0]).kind is Outcome.IDLE
    out = resolve_slot(v, [0, 0, 1])
    assert out.kind is Outcome.SUCCESS and out.delivered_value == 3.0
    out = resolve_slot(v, [1, 0, 1])
    assert out.kind is Outcome.COLLISION and out.num_transmitters == 2
    with pytest.raises(ValueError):
        SlotOutcome(Outcome.SUCCESS, 2, 1.0)
    with pytest.raises(ValueError):
        SlotOutcome(Outcome.SUCCESS, 1)


def test_counts_partition_slots():
    s = Scenario.iid(Exponential(1), 4, 0.1)
    ep = run_episode(s, [0.6, 0.7, 0.8, 0.9], 50_000, seed=3, chunk=7_000)
    assert sum(ep.counts.values()) == ep.slots == 50_000
    assert ep.attempts.sum() == pytest.approx(ep.mean_energy * ep.slots)


def test_cdns_episode():
    s = Scenario.iid(chi_square_2_scaled(1.0), 10, 0.25)
    ep = run_episode(s, cdns_profile(s), 10 ** 6, seed=0)
    assert ep.mean_reward == pytest.approx(0.7788, abs=0.004)
    assert ep.counts["collision"] == 0


def test_silent_episode_is_zero():
    s = Scenario.iid(Exponential(1), 5, 0.25)
    ep = run_episode(s, np.ones(5), 1000)
    assert ep.mean_reward == 0.0 and ep.mean_energy == 0.0


def test_energy_matches_analytic():
    s = Scenario.iid(Exponential(1), 4, 0.0)
    prof = [0.3, 0.6, 0.9, 0.95]
    ep = run_episode(s, prof, 200_000, seed=2)
    assert abs(ep.mean_energy - energy(prof, s)) < 4 * ep.energy_se


def test_determinism_and_chunk_independence():
    s = Scenario.iid(Exponential(1), 3, 0.1)
    a = run_episode(s, [0.7] * 3, 30_000, seed=9)
    b = run_episode(s, [0.7] * 3, 30_000, seed=9)
    c = run_episode(s, [0.7] * 3, 30_000, seed=9, chunk=1_000)
    assert a.mean_reward == b.mean_reward and a.counts == b.counts
    assert np.array_equal(a.attempts, c.attempts) and a.counts == c.counts
    assert a.mean_reward == pytest.approx(c.mean_reward, rel=1e-12)
    d = run_episode(s, [0.7] * 3, 30_000, seed=10)
    assert d.counts != a.counts


def test_node_streams_stable_under_growth():
    small = node_streams(4, 2)
    large = node_streams(4, 5)
    assert small[0].random() == large[0].random()
    assert small[1].random() == large[1].random()


def test_reward_matches_analytic_on_heterogeneous_profile():
    s = Scenario((Exponential(1.0), Exponential(2.0), Exponential(0.5)), 0.2)
    prof = [0.4, 0.5, 0.85]
    ep = run_episode(s, prof, 400_000, seed=6)
    assert abs(ep.mean_reward - expected_reward_threshold(prof, s)) < 4 * ep.reward_se

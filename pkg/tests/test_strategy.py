import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from goma.baseline import cdns_profile
from goma.channel import run_episode
from goma.dists import DiscreteDist, Exponential, Uniform, binary, chi_square_2_scaled, discretize
from goma.strategy import (Scenario, energy, expected_reward, expected_reward_threshold, jfi,
                           mean_tx_prob, silence_factor, silence_factors)


def brute_reward(x, scenario):
    """Enumerate every joint value draw and transmit pattern."""
    ds = scenario.dists
    total = 0.0
    for idx in itertools.product(*[range(len(d.values)) for d in ds]):
        pv = np.prod([d.p[i] for d, i in zip(ds, idx)])
        q = [x[n][i] for n, i in enumerate(idx)]
        for pattern in itertools.product((0, 1), repeat=len(ds)):
            pp = np.prod([qi if b else 1 - qi for qi, b in zip(q, pattern)])
            k = sum(pattern)
            r = -scenario.psi * k
            if k == 1:
                n = pattern.index(1)
                r += ds[n].v[idx[n]]
            total += pv * pp * r
    return total


def test_mean_tx_prob():
    d = Exponential(1)
    assert mean_tx_prob(1.0, d) == 0.0
    assert mean_tx_prob(0.77, d) == pytest.approx(0.23)
    assert mean_tx_prob([0.0, 0.5], DiscreteDist([0.0, 1.0], [0.9, 0.1])) == pytest.approx(0.05)


def test_silence_factor_examples():
    s = Scenario.iid(Exponential(1), 3)
    assert silence_factor([0.3, 1, 1], s, 0) == 1.0
    assert silence_factor([0.3, 0.5, 0.5], s, 0) == pytest.approx(0.25)
    assert silence_factor([1.0, 0.0, 1.0], s, 0) == 0.0


def test_silence_factors_with_zero_entries():
    s = Scenario.iid(Exponential(1), 4)
    z = silence_factors([0.0, 0.5, 0.0, 0.4], s)
    assert np.allclose(z, [0.0, 0.0, 0.0, 0.0])
    z = silence_factors([0.0, 0.5, 1.0, 0.4], s)
    assert np.allclose(z, [0.2, 0.0, 0.0, 0.0])


def test_expected_reward_examples():
    b = binary(0.1)
    s = Scenario.iid(b, 10)
    silent = [np.zeros(2)] * 10
    assert expected_reward(silent, s) == 0.0
    one = Scenario.iid(binary(0.3), 1)
    assert expected_reward([np.ones(2)], one) == pytest.approx(0.3)
    on_anomaly = [np.array([0.0, 1.0])] * 10
    assert expected_reward(on_anomaly, s) == pytest.approx(10 * 0.1 * 0.9 ** 9, abs=1e-12)
    assert round(expected_reward(on_anomaly, s), 5) == 0.38742


def test_expected_reward_rejects_continuous():
    with pytest.raises(TypeError):
        expected_reward([np.ones(1)], Scenario.iid(Exponential(1), 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.floats(0, 0.5), st.integers(0, 10 ** 6))
def test_expected_reward_matches_enumeration(n, k, psi, seed):
    rng = np.random.default_rng(seed)
    dists = [DiscreteDist(np.sort(rng.choice(20, k, replace=False)) / 4.0, rng.dirichlet(np.ones(k)))
             for _ in range(n)]
    s = Scenario(tuple(dists), psi)
    x = [rng.random(k) for _ in range(n)]
    assert expected_reward(x, s) == pytest.approx(brute_reward(x, s), abs=1e-12)


def test_threshold_reward_examples():
    s = Scenario.iid(chi_square_2_scaled(1), 10, 0.25)
    assert expected_reward_threshold(cdns_profile(s), s) == pytest.approx(np.exp(-0.25), abs=1e-12)
    assert round(expected_reward_threshold(cdns_profile(s), s), 5) == 0.77880
    assert expected_reward_threshold(np.ones(10), s) == 0.0


def test_threshold_reward_matches_monte_carlo():
    # pooled over 12 seeded episodes so the 3-SE band does not hinge on one seed
    s = Scenario.iid(Exponential(1), 3, 0.0)
    prof = [0.77] * 3
    eps = [run_episode(s, prof, 10 ** 6, seed=k) for k in range(12)]
    mean = np.mean([e.mean_reward for e in eps])
    se = np.sqrt(np.sum([e.reward_se ** 2 for e in eps])) / len(eps)
    assert abs(mean - expected_reward_threshold(prof, s)) < 3 * se


def test_threshold_reward_agrees_with_general_form():
    rng = np.random.default_rng(3)
    for _ in range(30):
        dists = [DiscreteDist(np.arange(1, 5) / 2.0, rng.dirichlet(np.ones(4))) for _ in range(3)]
        s = Scenario(tuple(dists), 0.2)
        th = rng.random(3)
        x = [d.tx_mask(t).astype(float) for d, t in zip(dists, th)]
        assert expected_reward_threshold(th, s) == pytest.approx(expected_reward(x, s), abs=1e-12)


def test_discretized_reward_converges():
    d = Exponential(1)
    s = Scenario.iid(d, 3, 0.1)
    dd = discretize(d, 1e-3)
    sd = Scenario.iid(dd, 3, 0.1)
    th = np.array([0.6, 0.7, 0.8])
    x = [dd.v > float(d.quantile(t)) for t in th]
    r_disc = expected_reward([xi.astype(float) for xi in x], sd)
    assert abs(r_disc - expected_reward_threshold(th, s)) < 1e-2 * d.mean


def test_linearity_in_values():
    rng = np.random.default_rng(4)
    base = Scenario((Exponential(1.0), Uniform(0, 2), Exponential(0.5)), 0.0)
    scaled = Scenario(tuple(d.scaled(3.0) for d in base.dists), 0.0)
    for _ in range(20):
        th = rng.random(3)
        assert expected_reward_threshold(th, scaled) == pytest.approx(
            3.0 * expected_reward_threshold(th, base), rel=1e-12)


def test_energy_examples():
    s = Scenario.iid(Exponential(1), 10, 0.0)
    assert energy(cdns_profile(s), s) == pytest.approx(1.0)
    assert energy(np.ones(10), s) == 0.0
    assert energy(np.full(10, 0.98), s) == pytest.approx(0.2)


def test_jfi_examples():
    assert jfi(np.full(5, 0.3)) == pytest.approx(1.0)
    assert jfi(np.r_[0.0, np.ones(9)]) == pytest.approx(0.1)
    assert jfi([0.8, 0.9]) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        jfi(np.ones(3))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
def test_jfi_bounds(th):
    th = np.array(th)
    if np.all(th == 1):
        return
    j = jfi(th)
    assert 1 / th.size - 1e-12 <= j <= 1 + 1e-12


def test_profile_validation():
    s = Scenario.iid(Exponential(1), 2)
    with pytest.raises(ValueError):
        expected_reward_threshold([0.5, 1.5], s)
    with pytest.raises(ValueError):
        expected_reward_threshold([0.5], s)
    with pytest.raises(ValueError):
        Scenario.iid(Exponential(1), 2, psi=-0.1)

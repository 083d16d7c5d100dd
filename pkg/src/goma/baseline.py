"""Pull-based dominant-node baseline and equal-value initialization."""
from dataclasses import dataclass

import numpy as np

from .strategy import expected_reward_threshold

__all__ = [
    "EqualValueInit",
    "weighted_tail",
    "pull_action",
    "cdns_profile",
    "cdns_reward",
    "best_cdns",
    "equal_value_reward",
    "equal_value_init",
]


def weighted_tail(d, psi):
    """``E[V | V > psi] P(V > psi)``, the polling score of one node."""
    return float(d.tail_above(psi))


def pull_action(scenario):
    """Index of the node the receiver polls (lowest index on ties)."""
    scores = np.array([weighted_tail(d, scenario.psi) for d in scenario.dists])
    return int(np.argmax(scores))


def _cdns_for(scenario, node):
    th = np.ones(scenario.n)
    th[node] = float(scenario.dists[node].cdf(scenario.psi))
    return th


def cdns_profile(scenario, node=None):
    """Canonical dominant-node profile: ``node`` sends iff ``V > psi``."""
    return _cdns_for(scenario, pull_action(scenario) if node is None else node)


def cdns_reward(scenario, node=None):
    """``E[(V - psi)^+]`` of the dominant node."""
    return expected_reward_threshold(cdns_profile(scenario, node), scenario)


def best_cdns(scenario):
    """The highest-reward canonical DNS over all nodes.

    Returns ``(node, profile, reward)``.  Coincides with :func:`pull_action`
    whenever the node laws are stochastically ordered (e.g. scaled
    exponentials).
    """
    rewards = [cdns_reward(scenario, n) for n in range(scenario.n)]
    node = int(np.argmax(rewards))
    return node, _cdns_for(scenario, node), float(rewards[node])


@dataclass
class EqualValueInit:
    v_eq: float
    profile: np.ndarray
    search_step: float
    reward: float


def equal_value_reward(scenario, v):
    """Expected reward when every node uses the common value threshold ``v``.

    ``v`` may be an array; the result has the same shape.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    silent = np.array([d.cdf(v) for d in scenario.dists])  # (N, G)
    tails = np.array([d.tail_above(v) for d in scenario.dists])
    out = np.zeros(v.shape)
    for n in range(scenario.n):
        others = np.prod(np.delete(silent, n, axis=0), axis=0)
        out += tails[n] * others
    out -= scenario.psi * (1.0 - silent).sum(axis=0)
    return out


def equal_value_init(scenario, step=1e-3, p_max=0.9999):
    """Grid search for the best common value threshold on ``[0, Q_max]``.

    ``Q_max`` is the largest ``p_max`` quantile over the nodes.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    hi = max(d.support_max(p_max) for d in scenario.dists)
    grid = np.arange(0.0, hi + step, step)
    rewards = equal_value_reward(scenario, grid)
    k = int(np.argmax(rewards))
    v_eq = float(grid[k])
    profile = np.array([float(d.cdf(v_eq)) for d in scenario.dists])
    return EqualValueInit(v_eq, profile, step, float(rewards[k]))

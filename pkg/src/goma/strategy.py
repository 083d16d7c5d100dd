"""Scenarios, threshold profiles and exact reward evaluation.

A threshold profile is a 1-D float array of per-node quantile thresholds in
``[0, 1]``.  A general strategy (discrete scenarios only) is a list holding,
for each node, an array of per-value transmission probabilities.
"""
from dataclasses import dataclass, field

import numpy as np

from .dists import DiscreteDist

__all__ = [
    "Scenario",
    "as_profile",
    "mean_tx_prob",
    "silence_factor",
    "silence_factors",
    "expected_reward",
    "expected_reward_threshold",
    "energy",
    "jfi",
]


@dataclass(frozen=True)
class Scenario:
    """Nodes sharing a collision channel.

    ``dists`` holds one VoI law per node and ``psi`` is the per-transmission
    energy cost.
    """

    dists: tuple
    psi: float = 0.0
    seed: int = 0
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "dists", tuple(self.dists))
        if len(self.dists) < 1:
            raise ValueError("a scenario needs at least one node")
        if self.psi < 0:
            raise ValueError("psi must be nonnegative")

    @classmethod
    def iid(cls, dist, n, psi=0.0, seed=0):
        return cls((dist,) * n, psi, seed)

    @property
    def n(self):
        return len(self.dists)

    @property
    def is_discrete(self):
        return all(isinstance(d, DiscreteDist) for d in self.dists)

    def with_psi(self, psi):
        return Scenario(self.dists, psi, self.seed, self.meta)


def as_profile(thetas, n=None):
    th = np.array(thetas, dtype=float).reshape(-1)
    if n is not None and th.size != n:
        raise ValueError(f"profile has {th.size} entries, scenario has {n} nodes")
    if np.any((th < 0) | (th > 1)) or np.any(np.isnan(th)):
        raise ValueError(f"thresholds must lie in [0, 1]: {th}")
    return th


def mean_tx_prob(x_n, d):
    """Expected transmission probability of one node.

    ``x_n`` is either a quantile threshold (float) or a per-value array of
    transmission probabilities for a discrete law ``d``.
    """
    if np.ndim(x_n) == 0:
        return float(d.tx_prob(float(x_n)))
    if not isinstance(d, DiscreteDist):
        raise TypeError("per-value strategies need a discrete distribution")
    x_n = np.asarray(x_n, dtype=float)
    if x_n.shape != d.p.shape:
        raise ValueError("strategy length does not match the value set")
    return float(d.p @ x_n)


def _tx_probs(profile, scenario):
    return np.array([d.tx_prob(t) for d, t in zip(scenario.dists, profile)])


def _others_product(silent):
    """For each n the product of ``silent`` over all other entries."""
    silent = np.asarray(silent, dtype=float)
    # prefix/suffix products avoid dividing by a zero entry
    pre = np.concatenate(([1.0], np.cumprod(silent[:-1])))
    suf = np.concatenate((np.cumprod(silent[::-1][:-1])[::-1], [1.0]))
    return pre * suf


def silence_factors(profile, scenario):
    """``zeta_n`` for every node under a threshold profile."""
    profile = as_profile(profile, scenario.n)
    return _others_product(1.0 - _tx_probs(profile, scenario))


def silence_factor(profile, scenario, n):
    """Probability that every node other than ``n`` stays silent."""
    return float(silence_factors(profile, scenario)[n])


def expected_reward(x, scenario):
    """Exact expected reward of a general per-value strategy."""
    if not scenario.is_discrete:
        raise TypeError("expected_reward needs discrete distributions; "
                        "use expected_reward_threshold for threshold profiles")
    if len(x) != scenario.n:
        raise ValueError("one strategy per node expected")
    xs = [np.asarray(xn, dtype=float) for xn in x]
    for xn in xs:
        if np.any((xn < 0) | (xn > 1)):
            raise ValueError("transmission probabilities must lie in [0, 1]")
    xbar = np.array([mean_tx_prob(xn, d) for xn, d in zip(xs, scenario.dists)])
    zeta = _others_product(1.0 - xbar)
    gain = sum(z * float(d.v * d.p @ xn) for z, d, xn in zip(zeta, scenario.dists, xs))
    return float(gain - scenario.psi * xbar.sum())


def expected_reward_threshold(profile, scenario):
    """Expected reward of a threshold profile.

    Sum over nodes of ``zeta_n * tail_n(theta_n) - psi * xbar_n``.
    """
    profile = as_profile(profile, scenario.n)
    xbar = _tx_probs(profile, scenario)
    zeta = _others_product(1.0 - xbar)
    tails = np.array([float(d.tail_expectation(t)) for d, t in zip(scenario.dists, profile)])
    return float(zeta @ tails - scenario.psi * xbar.sum())


def energy(profile, scenario):
    """Mean number of transmissions per slot."""
    return float(_tx_probs(as_profile(profile, scenario.n), scenario).sum())


def jfi(profile, scenario=None):
    """Jain fairness index of per-node transmission rates."""
    profile = as_profile(profile)
    rates = 1.0 - profile if scenario is None else _tx_probs(profile, scenario)
    sq = float(np.sum(rates ** 2))
    if sq == 0:
        raise ValueError("fairness is undefined when every node is silent")
    return float(rates.sum() ** 2 / (rates.size * sq))

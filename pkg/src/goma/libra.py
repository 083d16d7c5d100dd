"""Closed-form best responses and the LIBRA iterated-best-response scheme."""
from dataclasses import dataclass, field

import numpy as np

from .baseline import equal_value_init
from .dists import DiscreteDist
from .strategy import _others_product, as_profile, expected_reward_threshold

__all__ = [
    "BestResponseReport",
    "IbrTrace",
    "best_response",
    "best_response_discrete",
    "best_response_general",
    "ibr_from",
    "libra",
    "nash_gap",
]


@dataclass
class BestResponseReport:
    node: int
    theta_star: float
    value_threshold: float
    interference_term: float
    cost_term: float
    degenerate: bool = False
    transmit_set: np.ndarray = None


@dataclass
class IbrTrace:
    """Per-round profiles and rewards of one IBR run.

    ``update_rewards`` holds the reward after every single best-response
    update, the sequence the potential-game argument makes nondecreasing.
    """

    iterations: list = field(default_factory=list)
    update_rewards: list = field(default_factory=list)
    converged: bool = False
    epsilon: float = 1e-9
    rounds: int = 0

    @property
    def rewards(self):
        return np.array([r for _, r in self.iterations])

    @property
    def profiles(self):
        return np.array([p for p, _ in self.iterations])


class _NodeTerms:
    """Cached per-node silence probability and tail term."""

    def __init__(self, scenario, profile):
        self.dists = scenario.dists
        self.silent = np.empty(scenario.n)
        self.tail = np.empty(scenario.n)
        for n, t in enumerate(profile):
            self.set(n, t)

    def set(self, n, theta):
        d = self.dists[n]
        self.silent[n] = 1.0 - d.tx_prob(theta)
        self.tail[n] = float(d.tail_expectation(theta))

    def reward(self, psi):
        zeta = _others_product(self.silent)
        return float(zeta @ self.tail - psi * (1.0 - self.silent).sum())

    def response(self, n, psi):
        others = np.arange(self.silent.size) != n
        silent = self.silent[others]
        if np.any(silent <= 0.0):
            # a neighbour that always transmits collides with anything n sends
            return np.inf, np.inf, 0.0
        zeta = float(np.prod(silent))
        interference = float(np.sum(self.tail[others] / silent))
        return psi / zeta + interference, interference, psi / zeta


def _report(scenario, n, terms):
    d = scenario.dists[n]
    t_star, interference, cost = terms.response(n, scenario.psi)
    if not np.isfinite(t_star):
        return BestResponseReport(n, 1.0, float(d.value_threshold(1.0)), np.inf, np.inf, True)
    theta = float(np.clip(d.cdf(t_star), 0.0, 1.0))
    return BestResponseReport(n, theta, float(d.value_threshold(theta)), interference, cost)


def best_response(scenario, n, others):
    """Reward-maximizing quantile threshold of node ``n``.

    ``others`` is a full profile; its entry for ``n`` is ignored.  The value
    threshold is ``psi / zeta_n + sum_m tail_m / (1 - xbar_m)`` and node ``n``
    transmits strictly above it.  If some other node always transmits the
    response is silence.
    """
    profile = as_profile(others, scenario.n)
    return _report(scenario, n, _NodeTerms(scenario, profile))


def best_response_discrete(scenario, n, others):
    """Best response for PMF laws; ``transmit_set`` lists the values sent."""
    if not isinstance(scenario.dists[n], DiscreteDist):
        raise TypeError("node distribution is not discrete")
    rep = best_response(scenario, n, others)
    d = scenario.dists[n]
    rep.transmit_set = d.v[d.tx_mask(rep.theta_star)]
    return rep


def nash_gap(profile, scenario):
    """Largest reward gain any single node can get by best-responding."""
    profile = as_profile(profile, scenario.n)
    base = expected_reward_threshold(profile, scenario)
    terms = _NodeTerms(scenario, profile)
    gap = 0.0
    for n in range(scenario.n):
        br = _report(scenario, n, terms)
        alt = profile.copy()
        alt[n] = br.theta_star
        gap = max(gap, expected_reward_threshold(alt, scenario) - base)
    return gap


def ibr_from(scenario, start, epsilon=1e-9, max_rounds=10_000, record_updates=False):
    """Round-robin best responses in ascending node order from ``start``.

    Stops once a full round moves no threshold by ``epsilon`` or more.
    Returns ``(profile, trace)``; ``trace.converged`` is False when the
    round cap is hit.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    th = as_profile(start, scenario.n).copy()
    terms = _NodeTerms(scenario, th)
    trace = IbrTrace(epsilon=epsilon)
    trace.iterations.append((th.copy(), terms.reward(scenario.psi)))
    for rnd in range(1, max_rounds + 1):
        prev = th.copy()
        for n in range(scenario.n):
            th[n] = _report(scenario, n, terms).theta_star
            terms.set(n, th[n])
            if record_updates:
                trace.update_rewards.append(terms.reward(scenario.psi))
        trace.iterations.append((th.copy(), terms.reward(scenario.psi)))
        trace.rounds = rnd
        if np.max(np.abs(th - prev)) < epsilon:
            trace.converged = True
            break
    return th, trace


def libra(scenario, epsilon=1e-9, step=1e-3, max_rounds=10_000, record_updates=False):
    """Equal-value initialization followed by iterated best response."""
    init = equal_value_init(scenario, step)
    profile, trace = ibr_from(scenario, init.profile, epsilon, max_rounds, record_updates)
    trace.init = init
    return profile, trace


def best_response_general(scenario, n, x):
    """Threshold best response of ``n`` to arbitrary per-value strategies.

    ``x`` holds one per-value transmission array per node (entry ``n``
    ignored); all laws must be discrete.
    """
    if not scenario.is_discrete:
        raise TypeError("general strategies need discrete distributions")
    silent, weighted = [], []
    for m, (d, xm) in enumerate(zip(scenario.dists, x)):
        if m == n:
            continue
        xm = np.asarray(xm, dtype=float)
        silent.append(1.0 - float(d.p @ xm))
        weighted.append(float((d.v * d.p) @ xm))
    silent = np.array(silent)
    d = scenario.dists[n]
    if np.any(silent <= 0.0):
        rep = BestResponseReport(n, 1.0, float(d.value_threshold(1.0)), np.inf, np.inf, True)
    else:
        zeta = float(np.prod(silent))
        interference = float(np.sum(np.array(weighted) / silent))
        t_star = scenario.psi / zeta + interference
        theta = float(d.cdf(t_star))
        rep = BestResponseReport(n, theta, float(d.value_threshold(theta)),
                                 interference, scenario.psi / zeta)
    rep.transmit_set = d.v[d.tx_mask(rep.theta_star)]
    return rep

"""Randomized certification of the closed forms against the oracles.

Each check returns a :class:`CheckResult`; :func:`run_all` is what the
``verify`` subcommand prints.
"""
from dataclasses import dataclass

import numpy as np

from .beta import BetaConfig, train_batch
from .channel import run_episode
from .dists import DiscreteDist, Gaussian, Uniform, chi_square_2_scaled
from .libra import best_response_general, libra
from .libra import nash_gap as _nash_gap
from .oracle import exhaustive_general_response, hessian_minor_check
from .strategy import Scenario, expected_reward, expected_reward_threshold

__all__ = [
    "CheckResult",
    "random_discrete_scenario",
    "check_threshold_sufficiency",
    "check_negative_minor",
    "check_ibr_certificates",
    "check_monte_carlo",
    "check_unbiasedness",
    "run_all",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    trials: int
    worst: float
    detail: str = ""

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.trials} trials, worst {self.worst:.3g} {self.detail}".rstrip()


def random_discrete_scenario(rng, n_nodes=(2, 4), n_values=(2, 6), psi_max=0.5):
    n = int(rng.integers(*n_nodes))
    dists = []
    for _ in range(n):
        k = int(rng.integers(*n_values))
        vals = np.sort(rng.choice(np.arange(1, 40), size=k, replace=False)) / 10.0
        dists.append(DiscreteDist(vals, rng.dirichlet(np.ones(k))))
    return Scenario(tuple(dists), float(rng.uniform(0, psi_max)))


def check_threshold_sufficiency(trials=100, seed=0):
    """A threshold best response matches vertex enumeration of general responses."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        s = random_discrete_scenario(rng)
        n = int(rng.integers(s.n))
        x = [rng.random(len(d.values)) for d in s.dists]
        best, _ = exhaustive_general_response(s, n, x)
        rep = best_response_general(s, n, x)
        x[n] = s.dists[n].tx_mask(rep.theta_star).astype(float)
        worst = max(worst, abs(best - expected_reward(x, s)))
    return CheckResult("threshold sufficiency", worst <= 1e-10, trials, worst)


def check_negative_minor(trials=100, seed=1):
    """Every instance has a 2x2 cross-node minor with a negative quadratic form."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(trials):
        s = random_discrete_scenario(rng)
        n, m = rng.choice(s.n, 2, replace=False)
        v = float(rng.choice(s.dists[n].v))
        u = float(rng.choice(s.dists[m].v))
        worst = max(worst, hessian_minor_check(s, int(n), v, int(m), u))
    return CheckResult("negative minor", worst < 0, trials, worst)


def _random_continuous(rng):
    n = int(rng.integers(2, 8))
    kind = rng.integers(3)
    if kind == 0:
        dists = [chi_square_2_scaled(m) for m in rng.uniform(0.5, 1.5, n)]
    elif kind == 1:
        dists = [Gaussian(float(rng.uniform(0, 1)), float(rng.uniform(0.5, 4))) for _ in range(n)]
    else:
        dists = [Uniform(0.0, float(rng.uniform(0.5, 2))) for _ in range(n)]
    return Scenario(tuple(dists), float(rng.choice([0.0, 0.25, rng.uniform(0, 0.5)])))


def check_ibr_certificates(trials=30, seed=2):
    """LIBRA runs never lose reward between updates and end at an epsilon-NE."""
    rng = np.random.default_rng(seed)
    worst_drop = worst_gap = 0.0
    for _ in range(trials):
        s = _random_continuous(rng)
        prof, tr = libra(s, record_updates=True)
        r = np.r_[tr.iterations[0][1], tr.update_rewards]
        worst_drop = max(worst_drop, float(np.max(r[:-1] - r[1:], initial=0.0)))
        worst_gap = max(worst_gap, _nash_gap(prof, s))
    ok = worst_drop <= 1e-12 and worst_gap <= 1e-6
    return CheckResult("IBR monotone reward and epsilon-NE", ok, trials,
                       max(worst_drop, worst_gap),
                       f"(max drop {worst_drop:.2g}, max gap {worst_gap:.2g})")


def check_monte_carlo(trials=50, T=200_000, seed=3):
    """Simulated mean reward within 4 standard errors of the analytic value."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(trials):
        s = _random_continuous(rng)
        prof = rng.uniform(0.3, 1.0, s.n)
        ep = run_episode(s, prof, T, seed=[seed, k])
        z = abs(ep.mean_reward - expected_reward_threshold(prof, s)) / ep.reward_se
        worst = max(worst, z)
    return CheckResult("Monte Carlo agreement", worst < 4, trials, worst, "(|z|)")


def check_unbiasedness(L=100_000, seed=4, arms=(12, 20, 25, 30), probe=(0, 5, 10, 20, 30, 50, 200)):
    """Frozen-profile mean of the counterfactual estimate per arm vs the analytic reward."""
    s = Scenario.iid(chi_square_2_scaled(1.0), len(arms), 0.25, seed)
    # frozen strategies: channel statistics pooled over the whole run
    cfg = BetaConfig(L=L, stats="cumulative")
    res = train_batch([s], cfg, frozen=[list(arms)])
    grid = cfg.arms
    prof = np.array([d.cdf(grid[a]) for d, a in zip(s.dists, arms)])
    worst = 0.0
    for n in range(s.n):
        cnt = res.r_hat_n[0, n]
        mean = res.r_hat_sum[0, n] / cnt
        se = np.sqrt(np.maximum(res.r_hat_sq[0, n] / cnt - mean ** 2, 0) / cnt)
        for j in probe:
            p = prof.copy()
            p[n] = s.dists[n].cdf(grid[j])
            worst = max(worst, abs(mean[j] - expected_reward_threshold(p, s)) / se[j])
    return CheckResult("counterfactual unbiasedness", worst < 4, s.n * len(probe), worst, "(|z|)")


def run_all(seed=0, quick=False):
    scale = 0.2 if quick else 1.0
    return [
        check_threshold_sufficiency(max(10, int(100 * scale)), seed),
        check_negative_minor(max(10, int(100 * scale)), seed + 1),
        check_ibr_certificates(max(5, int(30 * scale)), seed + 2),
        check_monte_carlo(max(10, int(50 * scale)), seed=seed + 3),
        check_unbiasedness(int(100_000 * scale), seed + 4),
    ]

"""Attraction regions of the equilibria of three-node networks.

Each grid cell fixes the starting thresholds of nodes 2 and 3; node 1 moves
first, so its own starting value is irrelevant.  Equilibria that are saddle
points of the best-response map have basins of measure zero and never show
up as cell labels; they are recovered by bisecting across basin boundaries
and polishing the lingering point with a root finder.
"""
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .libra import best_response, ibr_from, nash_gap
from .strategy import as_profile, expected_reward_threshold

__all__ = [
    "EquilibriumLabel",
    "Equilibrium",
    "BasinMap",
    "classify",
    "map_basins",
    "fixed_point_residual",
]

DNS_FACTOR = 10.0


@dataclass(frozen=True)
class EquilibriumLabel:
    kind: str  # "cDNS", "DNS", "Symmetric" or "Other"
    node: int = None  # 0-based dominant node for cDNS/DNS
    profile: tuple = field(default=None, compare=False)

    def __str__(self):
        return self.kind if self.node is None else f"{self.kind}({self.node + 1})"


def classify(profile, scenario, sym_tol=1e-3, cdns_tol=1e-6, dns_factor=DNS_FACTOR):
    """Label a converged profile.

    cDNS: a single node below 1, sitting at ``cdf(psi)``.  Symmetric: all
    thresholds within ``sym_tol``.  DNS: one node transmits at least
    ``dns_factor`` times as often as each of the others.
    """
    th = as_profile(profile, scenario.n)
    prof = tuple(float(t) for t in th)
    active = np.flatnonzero(th < 1.0 - cdns_tol)
    if active.size == 1:
        k = int(active[0])
        if abs(th[k] - float(scenario.dists[k].cdf(scenario.psi))) < cdns_tol:
            return EquilibriumLabel("cDNS", k, prof)
    if th.max() - th.min() < sym_tol:
        return EquilibriumLabel("Symmetric", None, prof)
    x = np.array([d.tx_prob(t) for d, t in zip(scenario.dists, th)])
    k = int(np.argmax(x))
    rest = np.delete(x, k)
    if np.all(x[k] >= dns_factor * rest):
        return EquilibriumLabel("DNS", k, prof)
    return EquilibriumLabel("Other", None, prof)


def fixed_point_residual(theta, scenario):
    """``BR(theta) - theta`` with every node responding to the same profile."""
    theta = np.asarray(theta, dtype=float)
    # root finders probe slightly outside the cube; a root is inside anyway
    inside = np.clip(theta, 0.0, 1.0)
    br = np.array([best_response(scenario, n, inside).theta_star for n in range(scenario.n)])
    return br - theta


@dataclass
class Equilibrium:
    label: EquilibriumLabel
    profile: np.ndarray
    reward: float
    cells: int  # number of grid cells converging here (0 for saddles)
    nash_gap: float


@dataclass
class BasinMap:
    grid: np.ndarray
    table: list  # rows (theta2_0, theta3_0, label, theta1*, theta2*, theta3*, reward)
    equilibria: list
    converged: np.ndarray  # (G, G) bool

    COLUMNS = ("theta2_0", "theta3_0", "label", "theta1", "theta2", "theta3", "reward")

    def label_counts(self):
        return Counter(row[2] for row in self.table)

    def by_kind(self, kind):
        return [e for e in self.equilibria if e.label.kind == kind]


def _run(scenario, t2, t3, epsilon, max_rounds):
    return ibr_from(scenario, [1.0, t2, t3], epsilon, max_rounds)


def _add(found, label, profile, reward, cells, scenario, tol):
    for e in found:
        if np.max(np.abs(e.profile - profile)) < tol:
            e.cells += cells
            return
    found.append(Equilibrium(label, np.asarray(profile, dtype=float), float(reward), cells,
                             nash_gap(profile, scenario)))


def _saddle_from(scenario, a, b, key_a, keys, epsilon, max_rounds, depth=40):
    """Bisect the start segment ``a``-``b`` and polish where IBR lingers."""
    for _ in range(depth):
        m = 0.5 * (a + b)
        prof, tr = _run(scenario, m[0], m[1], epsilon, max_rounds)
        if keys(prof, tr) == key_a:
            a = m
        else:
            b = m
    _, tr = _run(scenario, a[0], a[1], epsilon, max_rounds)
    traj = tr.profiles
    step = np.abs(np.diff(traj, axis=0)).max(axis=1)
    # the slowest move away from the final limit marks the saddle
    away = np.abs(traj[:-1] - traj[-1]).max(axis=1) > 1e-3
    if not away.any():
        return None
    k = int(np.argmin(np.where(away, step, np.inf)))
    sol = optimize.root(fixed_point_residual, traj[k], args=(scenario,), method="hybr",
                        options={"xtol": 1e-13})
    x = sol.x
    # hybr often reports failure at an accurate root; judge by the residual
    if np.max(np.abs(fixed_point_residual(x, scenario))) < 1e-9 and \
            np.all(x > -1e-12) and np.all(x < 1 + 1e-12):
        return np.clip(x, 0.0, 1.0)
    return None


def map_basins(scenario, grid_step=0.01, epsilon=1e-9, max_rounds=10_000, dedup_tol=1e-3,
               saddles=True, pairs_per_boundary=8, seed=0):
    """Label every start cell of a three-node scenario by its limit.

    Returns a :class:`BasinMap` whose ``equilibria`` are deduplicated within
    ``dedup_tol`` and include saddle equilibria reached by boundary
    bisection (``cells == 0``).  Non-convergent cells are labeled Other.
    """
    if scenario.n != 3:
        raise ValueError("basin maps are defined for three nodes")
    if not 0 < grid_step < 1:
        raise ValueError("grid_step must lie in (0, 1)")
    g = np.linspace(0.0, 1.0, int(round(1.0 / grid_step)) + 1)
    G = g.size
    table, found = [], []
    conv = np.zeros((G, G), dtype=bool)
    key = np.empty((G, G), dtype=object)

    def keys(prof, tr):
        if not tr.converged:
            return None
        return tuple(np.round(prof, 3))

    for i, t2 in enumerate(g):
        for j, t3 in enumerate(g):
            prof, tr = _run(scenario, t2, t3, epsilon, max_rounds)
            rew = expected_reward_threshold(prof, scenario)
            conv[i, j] = tr.converged
            lab = classify(prof, scenario) if tr.converged else EquilibriumLabel("Other")
            key[i, j] = keys(prof, tr)
            table.append((float(t2), float(t3), str(lab), *map(float, prof), float(rew)))
            if tr.converged:
                _add(found, lab, prof, rew, 1, scenario, dedup_tol)

    if saddles:
        boundary = {}
        for i in range(G):
            for j in range(G):
                for di, dj in ((1, 0), (0, 1)):
                    if i + di < G and j + dj < G and key[i, j] is not None \
                            and key[i + di, j + dj] is not None \
                            and key[i, j] != key[i + di, j + dj]:
                        pair = frozenset((key[i, j], key[i + di, j + dj]))
                        boundary.setdefault(pair, []).append(((i, j), (i + di, j + dj)))
        rng = np.random.default_rng(seed)
        for pair in sorted(boundary, key=lambda p: sorted(map(str, p))):
            edges = boundary[pair]
            pick = rng.choice(len(edges), min(pairs_per_boundary, len(edges)), replace=False)
            for e in sorted(pick):
                (i, j), (k, m) = edges[e]
                x = _saddle_from(scenario, np.array([g[i], g[j]]), np.array([g[k], g[m]]),
                                 key[i, j], keys, epsilon, max_rounds)
                if x is not None:
                    _add(found, classify(x, scenario), x,
                         expected_reward_threshold(x, scenario), 0, scenario, dedup_tol)

    found.sort(key=lambda e: (e.label.kind, -1 if e.label.node is None else e.label.node))
    return BasinMap(g, table, found, conv)

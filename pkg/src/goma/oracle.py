"""Brute-force verifiers.

Nothing here calls the closed-form best response; every routine evaluates
rewards directly and searches by enumeration or grids.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from .dists import DiscreteDist
from .strategy import as_profile, expected_reward, expected_reward_threshold

__all__ = [
    "SweepResult",
    "grid_best_response",
    "exhaustive_general_response",
    "hessian_minor_check",
    "reward_hessian",
    "binary_toy_reward",
    "binary_toy_optimum",
]


@dataclass
class SweepResult:
    grid: np.ndarray
    rewards: np.ndarray
    best: float
    best_reward: float


def grid_best_response(scenario, n, others, step=1e-3):
    """Sweep node ``n``'s quantile threshold over a uniform grid on [0, 1]."""
    if not step > 0:
        raise ValueError("step must be positive")
    prof = as_profile(others, scenario.n).copy()
    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    rewards = np.empty(grid.size)
    for k, t in enumerate(grid):
        prof[n] = t
        rewards[k] = expected_reward_threshold(prof, scenario)
    k = int(np.argmax(rewards))
    return SweepResult(grid, rewards, float(grid[k]), float(rewards[k]))


def _as_general(x_or_profile, scenario):
    if isinstance(x_or_profile, (list, tuple)) and len(x_or_profile) == scenario.n \
            and all(np.ndim(xm) == 1 for xm in x_or_profile):
        return [np.asarray(xm, dtype=float) for xm in x_or_profile]
    prof = as_profile(x_or_profile, scenario.n)
    return [d.tx_mask(t).astype(float) for d, t in zip(scenario.dists, prof)]


def exhaustive_general_response(scenario, n, others, max_values=20):
    """Best deterministic per-value response of node ``n``.

    ``others`` is a threshold profile or a list of per-value strategies.  The
    reward is affine in node ``n``'s own strategy, so the optimum over
    ``[0, 1]^|V|`` is attained at one of the ``2^|V|`` vertices enumerated
    here.  Returns ``(best_reward, best_x_n)``.
    """
    if not scenario.is_discrete:
        raise TypeError("exhaustive search needs discrete distributions")
    d = scenario.dists[n]
    k = len(d.values)
    if k > max_values:
        raise ValueError(f"value set of size {k} is too large to enumerate")
    x = _as_general(others, scenario)
    best, best_x = -np.inf, None
    for bits in itertools.product((0.0, 1.0), repeat=k):
        x[n] = np.array(bits)
        r = expected_reward(x, scenario)
        if r > best:
            best, best_x = r, x[n].copy()
    return best, best_x


def hessian_minor_check(scenario, n, v, m, u):
    """``z^T M z`` at ``z = (1, -1)`` for the 2x2 minor linking ``x_{n,v}``
    and ``x_{m,u}``; negative values witness non-convexity."""
    if n == m:
        raise ValueError("the minor couples two different nodes")
    dn, dm = scenario.dists[n], scenario.dists[m]
    if not (isinstance(dn, DiscreteDist) and isinstance(dm, DiscreteDist)):
        raise TypeError("discrete distributions required")
    p_nv = dn.p[list(dn.values).index(v)]
    p_mu = dm.p[list(dm.values).index(u)]
    if u + v == 0:
        raise ValueError("u + v = 0 gives a degenerate minor")
    off = (u + v) * p_nv * p_mu
    M = np.array([[0.0, off], [off, 0.0]])
    z = np.array([1.0, -1.0])
    return float(z @ M @ z)


def reward_hessian(x, scenario, h=1e-4):
    """Central-difference Hessian of the negated reward over all ``x_{n,v}``."""
    sizes = [len(d.values) for d in scenario.dists]
    flat = np.concatenate([np.asarray(xn, dtype=float) for xn in x])
    offsets = np.cumsum([0] + sizes)

    def f(vec):
        return -expected_reward([vec[offsets[i]:offsets[i + 1]] for i in range(len(sizes))], scenario)

    dim = flat.size
    H = np.empty((dim, dim))
    for i in range(dim):
        for j in range(dim):
            e_i = np.eye(dim)[i] * h
            e_j = np.eye(dim)[j] * h
            H[i, j] = (f(flat + e_i + e_j) - f(flat + e_i - e_j)
                       - f(flat - e_i + e_j) + f(flat - e_i - e_j)) / (4 * h * h)
    return H


def binary_toy_reward(xs, p, psi):
    """Reward when node ``n`` reports an anomaly with probability ``xs[n]``.

    ``xs`` may carry extra leading axes; the last axis indexes nodes.
    """
    xs = np.asarray(xs, dtype=float)
    tx = p * xs
    silent = 1.0 - tx
    total = np.zeros(xs.shape[:-1])
    for n in range(xs.shape[-1]):
        others = np.prod(np.delete(silent, n, axis=-1), axis=-1)
        total = total + tx[..., n] * others
    return total - psi * tx.sum(axis=-1)


def _coordinate_ascent(x, p, psi, grid, max_sweeps=200):
    for _ in range(max_sweeps):
        moved = False
        for n in range(x.size):
            cand = np.repeat(x[None, :], grid.size, axis=0)
            cand[:, n] = grid
            r = binary_toy_reward(cand, p, psi)
            k = int(np.argmax(r))
            if r[k] > binary_toy_reward(x, p, psi) + 1e-14:
                x[n] = grid[k]
                moved = True
        if not moved:
            break
    return x


def binary_toy_optimum(N, p, psi=0.0, step=1e-3, starts=16, seed=0):
    """Brute-force optimum of the binary anomaly example.

    Nodes never send a normal reading (it has no value and only adds cost),
    so the search is over the anomaly transmission probabilities.  ``N <= 2``
    is a full grid; ``N == 3`` a coarse grid refined by multi-start
    coordinate ascent on the ``step`` grid; larger ``N`` the family of ``k``
    active nodes sharing a common probability.  Returns ``(xs, reward)``.
    """
    if step > 1e-3:
        raise ValueError("step must be at most 1e-3")
    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    if N == 1:
        r = binary_toy_reward(grid[:, None], p, psi)
        k = int(np.argmax(r))
        return np.array([grid[k]]), float(r[k])
    if N == 2:
        xx = np.stack(np.meshgrid(grid, grid, indexing="ij"), axis=-1)
        r = binary_toy_reward(xx, p, psi)
        i, j = np.unravel_index(int(np.argmax(r)), r.shape)
        return np.array([grid[i], grid[j]]), float(r[i, j])
    if N == 3:
        coarse = np.linspace(0.0, 1.0, 51)
        xx = np.stack(np.meshgrid(coarse, coarse, coarse, indexing="ij"), axis=-1)
        r = binary_toy_reward(xx, p, psi)
        idx = np.unravel_index(int(np.argmax(r)), r.shape)
        rng = np.random.default_rng(seed)
        inits = [np.array([coarse[i] for i in idx])] + [rng.random(3) for _ in range(starts)]
        best_x, best_r = None, -np.inf
        for x0 in inits:
            x = _coordinate_ascent(np.round(x0 / step) * step, p, psi, grid)
            rx = float(binary_toy_reward(x, p, psi))
            if rx > best_r + 1e-12:
                best_x, best_r = x, rx
        return best_x, best_r
    best_x, best_r = None, -np.inf
    for k in range(N, 0, -1):
        # k nodes active with a common probability x, the rest silent
        tx = p * grid
        r = k * tx * (1.0 - tx) ** (k - 1) - psi * k * tx
        j = int(np.argmax(r))
        if r[j] > best_r + 1e-12:
            best_r = float(r[j])
            best_x = np.r_[np.full(k, grid[j]), np.zeros(N - k)]
    return best_x, best_r

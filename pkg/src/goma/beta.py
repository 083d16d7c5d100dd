"""BETA: distributed epsilon-Hedge learning of value thresholds.

Each node keeps one cumulative reward estimate per arm (a value-space
threshold; the node sends iff ``v > arm``).  After every slot the receiver
feedback lets each node estimate, for every arm, the reward the slot would
have produced had it played that arm, and all arms are updated at once.

The per-node functions (:func:`choose_arm`, :func:`counterfactual_rewards`,
:func:`update`) are the reference API.  :func:`train_batch` runs many
independent networks at once with the same estimator, vectorized over
runs, nodes and arms.
"""
from dataclasses import dataclass, field

import numpy as np

from .channel import Outcome, SlotFeedback

__all__ = [
    "BetaConfig",
    "RunningStats",
    "LearnerState",
    "BetaResult",
    "arm_grid",
    "arm_probs",
    "choose_arm",
    "counterfactual_rewards",
    "update",
    "step_size",
    "mixed_policy_reward",
    "train",
    "train_batch",
]

IDLE, SUCCESS, COLLISION = 0, 1, 2
_KIND_CODE = {Outcome.IDLE: IDLE, Outcome.SUCCESS: SUCCESS, Outcome.COLLISION: COLLISION}


def arm_grid(low=0.0, high=20.0, step=0.1):
    k = int(round((high - low) / step))
    return np.round(low + step * np.arange(k + 1), 10)


@dataclass
class BetaConfig:
    L: int = 100_000
    window: int = 25
    explore: float = 0.01
    kappa: float = 1 - 5e-5
    arms: np.ndarray = field(default_factory=arm_grid)
    # "algorithm": silent-collision divisor (alpha - beta); "proof": alpha
    collision_divisor: str = "algorithm"
    # "geometric": gamma_i = scale * kappa**i; "power": gamma_i = scale * i**-kappa.
    # With kappa this close to 1 the power rule is ~1/i, which lets the first
    # few (uninformed) slots dominate the weights; see README.
    step_rule: str = "geometric"
    step_scale: float = 1.0
    # "window": sliding window of ``window`` slots; "cumulative": every past
    # slot (only sensible when strategies are frozen)
    stats: str = "window"
    eval_every: int = 100
    chunk: int = 1000

    def __post_init__(self):
        self.arms = np.asarray(self.arms, dtype=float)
        if np.any(np.diff(self.arms) <= 0):
            raise ValueError("arms must be strictly increasing")
        if not 0 <= self.explore <= 1:
            raise ValueError("explore must lie in [0, 1]")
        if self.collision_divisor not in ("algorithm", "proof"):
            raise ValueError("collision_divisor is 'algorithm' or 'proof'")
        if self.stats not in ("window", "cumulative"):
            raise ValueError("stats is 'window' or 'cumulative'")
        if self.step_rule not in ("power", "geometric"):
            raise ValueError("step_rule is 'power' or 'geometric'")
        if not self.step_scale > 0:
            raise ValueError("step_scale must be positive")


class RunningStats:
    """Sliding-window channel statistics seen by one node.

    ``alpha``: fraction of window slots with at least one other transmitter.
    ``beta``: fraction of the node's silent slots that carried a success
    (an estimate of the probability that exactly one other node sends),
    capped at ``alpha``.  ``lam``: mean delivered value over silent slots
    with at least one other transmitter (collisions count as 0).
    ``rho`` and ``rho_bar`` are the node's last report and the receiver's
    aggregate broadcast, refreshed every ``window`` slots.
    """

    def __init__(self, window=25):
        self.window = window
        # columns: tx, others_any, silent, silent_success, silent_others, silent_value
        self._buf = np.zeros((window, 6))
        self._sum = np.zeros(6)
        self.count = 0
        self.rho = np.nan
        self.rho_bar = np.nan

    def push(self, transmitted, outcome, delivered=0.0):
        others_any = outcome is not Outcome.IDLE and not (transmitted and outcome is Outcome.SUCCESS)
        silent = not transmitted
        silent_success = silent and outcome is Outcome.SUCCESS
        row = np.array([transmitted, others_any, silent, silent_success,
                        silent and others_any, delivered if silent_success else 0.0], dtype=float)
        k = self.count % self.window
        self._sum += row - self._buf[k]
        self._buf[k] = row
        self.count += 1

    @property
    def full(self):
        return self.count >= self.window

    @property
    def own_rate(self):
        return self._sum[0] / self.window

    def report(self):
        """The node's attempt fraction over the current window."""
        return self.own_rate

    def receive_broadcast(self, rho_bar, rho_reported):
        self.rho_bar = float(rho_bar)
        self.rho = float(rho_reported)

    @property
    def alpha(self):
        return self._sum[1] / self.window

    @property
    def beta(self):
        if self._sum[2] == 0:
            return np.nan
        return min(self._sum[3] / self._sum[2], self.alpha)

    @property
    def lam(self):
        if self._sum[4] == 0:
            return np.nan
        return self._sum[5] / self._sum[4]


@dataclass
class LearnerState:
    cum_weights: np.ndarray
    step: int = 0
    explore_rate: float = 0.01
    kappa: float = 1 - 5e-5
    stats: RunningStats = None
    skipped: int = 0
    step_rule: str = "geometric"
    step_scale: float = 1.0

    @classmethod
    def fresh(cls, n_arms, explore=0.01, kappa=1 - 5e-5, window=25, step_rule="geometric",
              step_scale=1.0):
        return cls(np.zeros(n_arms), 0, explore, kappa, RunningStats(window), 0,
                   step_rule, step_scale)


def arm_probs(weights, explore):
    """epsilon-Hedge arm distribution (last axis indexes arms)."""
    w = np.asarray(weights, dtype=float)
    e = np.exp(w - w.max(axis=-1, keepdims=True))
    soft = e / e.sum(axis=-1, keepdims=True)
    return (1.0 - explore) * soft + explore / w.shape[-1]


def choose_arm(state, rng):
    """Sample an arm index from the epsilon-Hedge distribution."""
    if rng.random() < state.explore_rate:
        return int(rng.integers(state.cum_weights.size))
    soft = arm_probs(state.cum_weights, 0.0)
    return int(min(np.searchsorted(np.cumsum(soft), rng.random(), side="right"),
                   soft.size - 1))


def step_size(i, kappa, rule="power", scale=1.0):
    if i < 1:
        raise ValueError("steps are counted from 1")
    if rule == "geometric":
        return scale * float(kappa) ** i
    return scale * float(i) ** (-kappa)


def _estimates(arms, v, tx, kind, delivered, psi, rho_bar, rho, alpha, beta, lam,
               ready, n_nodes, divisor="algorithm"):
    """Vectorized counterfactual estimates.

    Leading axes of ``v``, ``tx`` ... broadcast together; the result gains a
    trailing arm axis.  Returns ``(r_hat, skip)`` where ``skip`` marks
    collision slots whose statistics are not yet usable.
    """
    a = (arms < v[..., None]).astype(float)
    tx3 = tx[..., None]
    kind3 = kind[..., None]
    gain_own = a * (v[..., None] - psi)
    from_other = (1.0 - a) * delivered[..., None] - (1.0 + a) * psi

    others = rho_bar - rho
    with np.errstate(divide="ignore", invalid="ignore"):
        # expected others on air given at least one of them sends
        nc_tx = np.clip(others / alpha, 1.0, max(n_nodes - 1, 1))
        denom = alpha - beta if divisor == "algorithm" else alpha
        # expected others on air given at least two of them send
        nc_silent = np.clip((others - beta) / denom, 0.0, max(n_nodes - 1, 1))
    coll_tx = (1.0 - a) * np.nan_to_num(lam)[..., None] - psi * nc_tx[..., None] - psi * a
    coll_silent = -psi * nc_silent[..., None] - psi * a

    r = np.where(kind3 == IDLE, gain_own,
        np.where(kind3 == SUCCESS, np.where(tx3, gain_own, from_other),
                 np.where(tx3, coll_tx, coll_silent)))
    bad_tx = ~(alpha > 0) | np.isnan(lam)
    bad_silent = ~(denom > 0) | np.isnan(beta)
    skip = (kind == COLLISION) & (~ready | np.where(tx, bad_tx, bad_silent))
    r = np.where(skip[..., None], 0.0, r)
    return r, skip


def counterfactual_rewards(arms, own_value, own_threshold, psi, feedback, stats,
                           n_nodes, divisor="algorithm"):
    """Per-arm reward estimates for one node after one slot.

    Returns ``None`` when the slot is a collision and the running statistics
    cannot support an estimate yet.
    """
    arms = np.asarray(arms, dtype=float)
    tx = np.array(own_threshold < own_value)
    out = feedback.outcome
    delivered = out.delivered_value if out.delivered_value is not None else 0.0
    ready = stats.full and np.isfinite(stats.rho_bar) and np.isfinite(feedback.rho_bar)
    r, skip = _estimates(
        arms, np.array(float(own_value)), tx, np.array(_KIND_CODE[out.kind]),
        np.array(float(delivered)), psi, np.array(float(feedback.rho_bar)),
        np.array(stats.rho), np.array(stats.alpha), np.array(stats.beta),
        np.array(stats.lam), np.array(ready), n_nodes, divisor)
    return None if bool(skip) else r


def update(state, r_hat):
    """Advance the step counter and add ``gamma_i * r_hat`` to the weights.

    ``r_hat=None`` (a skipped collision estimate) only advances the counter.
    """
    state.step += 1
    if r_hat is None:
        state.skipped += 1
        return state
    gamma = step_size(state.step, state.kappa, state.step_rule, state.step_scale)
    state.cum_weights = state.cum_weights + gamma * np.asarray(r_hat)
    return state


def mixed_policy_reward(probs, silent_arms, tail_arms, psi):
    """Expected reward when every node draws its arm from ``probs``.

    ``silent_arms[..., n, j]`` is ``P_n(arm_j)`` and ``tail_arms`` the matching
    ``E[V 1{V > arm_j}]``; leading axes are runs.
    """
    xbar = (probs * (1.0 - silent_arms)).sum(-1)
    gain = (probs * tail_arms).sum(-1)
    silent = 1.0 - xbar
    n = silent.shape[-1]
    zeta = np.empty_like(silent)
    for k in range(n):
        zeta[..., k] = np.prod(np.delete(silent, k, axis=-1), axis=-1)
    return (zeta * gain).sum(-1) - psi * xbar.sum(-1)


@dataclass
class BetaResult:
    greedy_thresholds: np.ndarray  # value space, (runs, N)
    greedy_profiles: np.ndarray  # quantile space, (runs, N)
    steps: np.ndarray
    greedy_reward: np.ndarray  # (runs, len(steps))
    policy_reward: np.ndarray
    realized_reward: np.ndarray  # block means of per-slot reward
    final_reward: np.ndarray
    weights: np.ndarray
    skipped: np.ndarray

    def smoothed(self, width=10):
        k = np.ones(width) / width
        return np.array([np.convolve(r, k, mode="valid") for r in self.realized_reward])


def _arm_tables(scenarios, arms):
    silent = np.array([[d.cdf(arms) for d in s.dists] for s in scenarios])
    tails = np.array([[d.tail_above(arms) for d in s.dists] for s in scenarios])
    return silent, tails


def _greedy_reward(idx, silent_arms, tail_arms, psi):
    s = np.take_along_axis(silent_arms, idx[..., None], -1)[..., 0]
    g = np.take_along_axis(tail_arms, idx[..., None], -1)[..., 0]
    n = s.shape[-1]
    zeta = np.empty_like(s)
    for k in range(n):
        zeta[..., k] = np.prod(np.delete(s, k, axis=-1), axis=-1)
    return (zeta * g).sum(-1) - psi * (1.0 - s).sum(-1)


def train_batch(scenarios, config=None, seeds=None, frozen=None):
    """Train BETA independently on each scenario (all with the same N and psi).

    Run ``r`` draws node values from ``node_streams(seeds[r], N)`` children
    and arm choices from a second-level spawn of each node child, so results
    do not depend on how many runs share the batch.

    ``frozen`` (runs x N arm indices) pins every node to a fixed arm; the
    estimates are then accumulated in ``r_hat_sum``/``r_hat_sq``/``r_hat_n``
    on the result instead of being learned from.
    """
    config = config or BetaConfig()
    scenarios = list(scenarios)
    R = len(scenarios)
    N = scenarios[0].n
    psi = scenarios[0].psi
    if any(s.n != N or s.psi != psi for s in scenarios):
        raise ValueError("batched runs must share node count and psi")
    seeds = [s.seed for s in scenarios] if seeds is None else list(seeds)
    arms = config.arms
    A = arms.size
    W = config.window

    value_rngs, learn_rngs = [], []
    for seed in seeds:
        kids = np.random.SeedSequence(seed).spawn(N + 1)
        value_rngs.append([np.random.default_rng(k) for k in kids[:N]])
        learn_rngs.append([np.random.default_rng(k.spawn(1)[0]) for k in kids[:N]])

    silent_arms, tail_arms = _arm_tables(scenarios, arms)
    weights = np.zeros((R, N, A))
    buf = np.zeros((W, 6, R, N))  # tx, others_any, silent, silent_succ, silent_other, value
    sums = np.zeros((6, R, N))
    cumulative = config.stats == "cumulative"
    rho_rep = np.full((R, N), np.nan)
    rho_bar = np.full((R,), np.nan)
    skipped = np.zeros((R, N), dtype=np.int64)
    if frozen is not None:
        frozen = np.broadcast_to(np.asarray(frozen, dtype=int), (R, N))
        acc = np.zeros((3, R, N, A))

    n_eval = config.L // config.eval_every + 1
    steps = np.arange(n_eval) * config.eval_every
    greedy_r = np.empty((R, n_eval))
    policy_r = np.empty((R, n_eval))
    realized = np.zeros((R, n_eval - 1))

    def evaluate(j):
        greedy_r[:, j] = _greedy_reward(weights.argmax(-1), silent_arms, tail_arms, psi)
        policy_r[:, j] = mixed_policy_reward(arm_probs(weights, config.explore),
                                             silent_arms, tail_arms, psi)

    evaluate(0)
    i = 0
    rr = np.arange(R)[:, None]
    while i < config.L:
        C = min(config.chunk, config.L - i)
        vals = np.empty((C, R, N))
        unif = np.empty((C, 3, R, N))
        for r in range(R):
            for n, d in enumerate(scenarios[r].dists):
                vals[:, r, n] = d.sample(value_rngs[r][n], C)
                unif[:, :, r, n] = learn_rngs[r][n].random((C, 3))
        for c in range(C):
            i += 1
            v = vals[c]
            u_exp, u_arm, u_soft = unif[c]
            e = np.exp(weights - weights.max(-1, keepdims=True))
            cum = np.cumsum(e, -1)
            idx = (cum < (u_soft * cum[..., -1])[..., None]).sum(-1)
            idx = np.where(u_exp < config.explore, np.minimum((u_arm * A).astype(int), A - 1), idx)
            if frozen is not None:
                idx = frozen
            tx = v > arms[idx]
            k = tx.sum(-1)
            kind = np.where(k == 0, IDLE, np.where(k == 1, SUCCESS, COLLISION))
            delivered = np.where(k == 1, (v * tx).sum(-1), 0.0)
            kind_n = np.broadcast_to(kind[:, None], (R, N))
            deliv_n = np.broadcast_to(delivered[:, None], (R, N))

            seen = W if not cumulative else max(i - 1, 1)
            alpha = sums[1] / seen
            with np.errstate(divide="ignore", invalid="ignore"):
                beta = np.minimum(np.where(sums[2] > 0, sums[3] / sums[2], np.nan), alpha)
                lam = np.where(sums[4] > 0, sums[5] / sums[4], np.nan)
            ready = (i > W) & np.isfinite(rho_bar)[:, None]
            r_hat, skip = _estimates(arms, v, tx, kind_n, deliv_n, psi,
                                     rho_bar[:, None], rho_rep, alpha, beta, lam,
                                     np.broadcast_to(ready, (R, N)), N,
                                     config.collision_divisor)
            if frozen is None:
                weights += step_size(i, config.kappa, config.step_rule, config.step_scale) * r_hat
            else:
                keep = ~skip[..., None]
                acc[0] += r_hat * keep
                acc[1] += r_hat ** 2 * keep
                acc[2] += keep
            skipped += skip

            others_any = (k[:, None] - tx) >= 1
            silent = ~tx
            row = np.stack([tx, others_any, silent, silent & (k == 1)[:, None],
                            silent & others_any, np.where(silent & (k == 1)[:, None], deliv_n, 0.0)])
            slot = (i - 1) % W
            if cumulative:
                sums += row
            else:
                sums += row - buf[slot]
                buf[slot] = row
            if i % W == 0:
                rho_rep = sums[0] / (i if cumulative else W)
                rho_bar = rho_rep.sum(-1)

            blk = (i - 1) // config.eval_every
            if blk < realized.shape[1]:
                realized[:, blk] += delivered - psi * k
            if i % config.eval_every == 0:
                evaluate(i // config.eval_every)
    realized /= config.eval_every

    idx = weights.argmax(-1)
    thresholds = arms[idx]
    profiles = np.take_along_axis(silent_arms, idx[..., None], -1)[..., 0]
    final = _greedy_reward(idx, silent_arms, tail_arms, psi)
    res = BetaResult(thresholds, profiles, steps, greedy_r, policy_r, realized, final,
                     weights, skipped)
    if frozen is not None:
        res.r_hat_sum, res.r_hat_sq, res.r_hat_n = acc
    return res


def train(scenario, config=None, seed=None):
    """Single-network convenience wrapper around :func:`train_batch`."""
    return train_batch([scenario], config, None if seed is None else [seed])

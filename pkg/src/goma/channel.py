"""Slotted collision channel with receiver feedback.

Random streams: ``node_streams(seed, n)`` spawns child ``k`` of
``SeedSequence(seed)`` for node ``k`` and child ``n`` for the harness.
Children are keyed by index only, so adding nodes never changes the draws
of existing ones.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .strategy import as_profile

__all__ = [
    "Outcome",
    "SlotOutcome",
    "SlotFeedback",
    "EpisodeResult",
    "node_streams",
    "simulate_slot",
    "resolve_slot",
    "run_episode",
]


class Outcome(Enum):
    IDLE = "idle"
    SUCCESS = "success"
    COLLISION = "collision"


@dataclass(frozen=True)
class SlotOutcome:
    kind: Outcome
    num_transmitters: int
    delivered_value: float = None
    transmitter: int = None

    def __post_init__(self):
        k = self.num_transmitters
        expected = Outcome.IDLE if k == 0 else Outcome.SUCCESS if k == 1 else Outcome.COLLISION
        if self.kind is not expected:
            raise ValueError(f"{self.kind} inconsistent with {k} transmitters")
        if (self.kind is Outcome.SUCCESS) != (self.delivered_value is not None):
            raise ValueError("a delivered value accompanies successes only")


@dataclass(frozen=True)
class SlotFeedback:
    """What the receiver broadcasts after a slot."""

    outcome: SlotOutcome
    rho_bar: float = 0.0


def node_streams(seed, n):
    """``n`` per-node generators plus one harness generator."""
    children = np.random.SeedSequence(seed).spawn(n + 1)
    return [np.random.default_rng(c) for c in children]


def resolve_slot(values, decisions):
    decisions = np.asarray(decisions, dtype=bool)
    k = int(decisions.sum())
    if k == 0:
        return SlotOutcome(Outcome.IDLE, 0)
    if k == 1:
        n = int(np.flatnonzero(decisions)[0])
        return SlotOutcome(Outcome.SUCCESS, 1, float(values[n]), n)
    return SlotOutcome(Outcome.COLLISION, k)


def simulate_slot(scenario, profile=None, rngs=None, decisions=None):
    """Draw one value per node and resolve the slot.

    Either a threshold ``profile`` or explicit boolean ``decisions`` must be
    given.  ``rngs`` is one generator per node (see :func:`node_streams`).
    Returns ``(values, decisions, SlotOutcome)``.
    """
    if rngs is None:
        rngs = node_streams(scenario.seed, scenario.n)
    values = np.array([d.sample(r) for d, r in zip(scenario.dists, rngs)], dtype=float)
    if decisions is None:
        profile = as_profile(profile, scenario.n)
        decisions = np.array([bool(d.transmits(v, t))
                              for d, v, t in zip(scenario.dists, values, profile)])
    decisions = np.asarray(decisions, dtype=bool)
    return values, decisions, resolve_slot(values, decisions)


@dataclass
class EpisodeResult:
    slots: int
    mean_reward: float
    reward_se: float
    mean_energy: float
    energy_se: float
    counts: dict
    attempts: np.ndarray

    def summary(self):
        return {
            "mean_reward": self.mean_reward,
            "reward_se": self.reward_se,
            "mean_energy": self.mean_energy,
            **{f"n_{k}": v for k, v in self.counts.items()},
        }


def run_episode(scenario, profile, T=1_000_000, seed=None, chunk=200_000):
    """Monte Carlo estimate of reward and energy over ``T`` slots.

    Per-slot reward is the delivered value (on success) minus ``psi`` times
    the number of transmissions.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    profile = as_profile(profile, scenario.n)
    rngs = node_streams(scenario.seed if seed is None else seed, scenario.n)
    s_r = s_r2 = s_e = s_e2 = 0.0
    counts = {"idle": 0, "success": 0, "collision": 0}
    attempts = np.zeros(scenario.n, dtype=np.int64)
    done = 0
    while done < T:
        m = min(chunk, T - done)
        vals = np.empty((scenario.n, m))
        tx = np.empty((scenario.n, m), dtype=bool)
        for n, (d, r) in enumerate(zip(scenario.dists, rngs[:-1])):
            vals[n] = d.sample(r, m)
            tx[n] = d.transmits(vals[n], profile[n])
        k = tx.sum(axis=0)
        success = k == 1
        delivered = np.where(success, (vals * tx).sum(axis=0), 0.0)
        reward = delivered - scenario.psi * k
        s_r += reward.sum()
        s_r2 += (reward ** 2).sum()
        s_e += k.sum()
        s_e2 += (k.astype(float) ** 2).sum()
        counts["idle"] += int((k == 0).sum())
        counts["success"] += int(success.sum())
        counts["collision"] += int((k >= 2).sum())
        attempts += tx.sum(axis=1)
        done += m
    mean_r = s_r / T
    mean_e = s_e / T
    var_r = max(s_r2 / T - mean_r ** 2, 0.0)
    var_e = max(s_e2 / T - mean_e ** 2, 0.0)
    return EpisodeResult(T, mean_r, np.sqrt(var_r / T), mean_e, np.sqrt(var_e / T),
                         counts, attempts)

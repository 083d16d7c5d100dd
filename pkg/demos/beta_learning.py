# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: light
#       format_version: '1.5'
#   kernelspec:
#     display_name: Python 3
#     name: python3
# ---

# # Learning thresholds from channel feedback
#
# Each node keeps Hedge weights over a grid of value thresholds and updates
# every arm from one slot of feedback.  Nobody knows the value laws.

# +
import numpy as np

from goma.beta import BetaConfig, train_batch
from goma.dists import chi_square_2_scaled
from goma.libra import libra
from goma.strategy import Scenario, expected_reward_threshold

runs = [Scenario.iid(chi_square_2_scaled(1.0), 10, 0.25, seed=k) for k in range(4)]
ref = expected_reward_threshold(libra(runs[0])[0], runs[0])
res = train_batch(runs, BetaConfig(L=10_000))
# -

# Greedy (argmax-arm) reward relative to LIBRA, every 1000 slots:

curve = res.greedy_reward.mean(0) / ref
for step, val in zip(res.steps[::10], curve[::10]):
    print(f"{step:6d}  {val:.4f}")

# Learned value thresholds, and how many collision slots had to be skipped
# while the window statistics were still empty:

res.greedy_thresholds, res.skipped.sum(1)

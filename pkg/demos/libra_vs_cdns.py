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

# # Sharing the channel vs. handing it to one node
#
# The canonical DNS lets a single node talk.  LIBRA starts every node at a
# common value threshold and runs best responses until nothing moves.

# +
import numpy as np

from goma.baseline import best_cdns, cdns_profile
from goma.channel import run_episode
from goma.dists import chi_square_2_scaled
from goma.experiments import asymmetric_scenario
from goma.libra import libra, nash_gap
from goma.strategy import Scenario, energy, expected_reward_threshold, jfi

d = chi_square_2_scaled(1.0)
for n in (2, 5, 10, 20, 50, 100):
    s = Scenario.iid(d, n, psi=0.0)
    prof, tr = libra(s)
    r = expected_reward_threshold(prof, s)
    e = energy(prof, s) / energy(cdns_profile(s), s)
    print(f"N={n:3d}  gain={r:.4f}  energy ratio={e:.3f}  rounds={tr.rounds}")
# -

# The analytic number agrees with a simulated channel.

s = Scenario.iid(d, 10, psi=0.25)
prof, _ = libra(s)
ep = run_episode(s, prof, 200_000, seed=1)
expected_reward_threshold(prof, s), ep.mean_reward, ep.reward_se, nash_gap(prof, s)

# Heterogeneous means: compare against the best single talker.

rng = np.random.default_rng(0)
rel = []
for _ in range(20):
    s, means = asymmetric_scenario(10, 0.5, 0.0, rng)
    _, cprof, r_c = best_cdns(s)
    prof, _ = libra(s)
    rel.append(expected_reward_threshold(prof, s) / r_c)
rel = np.array(rel)
rel.mean(), (rel > 1).mean(), jfi(prof, s)

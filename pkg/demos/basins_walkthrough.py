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

# # Where does best-response play end up?
#
# Three identical sensors with Exp(1) values and free transmissions.  Node 1
# responds first, so a start is fixed by the thresholds of nodes 2 and 3.

# +
import numpy as np

from goma.basins import map_basins
from goma.dists import Exponential, Gaussian
from goma.strategy import Scenario

np.set_printoptions(precision=4, suppress=True)
exp3 = Scenario.iid(Exponential(1.0), 3, psi=0.0)
bm = map_basins(exp3, grid_step=0.05)
bm.label_counts()
# -

# Cell labels only show the attracting equilibria.  The DNS points repel the
# round-robin map, so they turn up with zero cells, found on basin borders.

for e in bm.equilibria:
    print(f"{str(e.label):10s} cells={e.cells:4d} theta={e.profile} reward={e.reward:.5f}")

# A cheap map of which start goes where (S symmetric, digits the cDNS node):

# +
code = {"Symmetric": "S", "cDNS(1)": "1", "cDNS(2)": "2", "cDNS(3)": "3"}
G = bm.grid.size
art = np.array([code.get(row[2], "?") for row in bm.table]).reshape(G, G)
for j in range(G - 1, -1, -1):
    print("".join(art[:, j]))
# -

# With a transmission cost and Gaussian values the picture collapses to one
# symmetric point.

gauss = Scenario.iid(Gaussian(0.5, 4.0), 3, psi=0.25)
gm = map_basins(gauss, grid_step=0.1)
gm.label_counts(), gm.equilibria[0].profile

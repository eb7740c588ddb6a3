"""Non-Markovianity against coupling strength for a few bath temperatures.

Weak coupling barely disturbs the system, strong coupling overdamps it; the
backflow is largest in between.  At very strong coupling a complex pole pair
re-appears and with it the backflow.
"""
import numpy as np

from qbm import PairSpec, PhysParams, TimeGrid, sweep
from qbm.greens import discriminant_map

grid = TimeGrid.from_tmax(40, 0.01)
gammas = np.array([0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0])
kTs = np.array([0.1, 1.0, 10.0])

res = sweep(("gamma", gammas), ("kT", kTs), PhysParams(0.1, 100.0, 1.0), PairSpec(-3, 3), grid)
signs = discriminant_map(gammas, [100.0])[:, 0]

print("gamma    poles    " + "  ".join(f"kT={k:<6g}" for k in kTs))
for g, s, row in zip(gammas, signs, res.measure):
    print(f"{g:6g}  {'complex' if s < 0 else 'real   '}  " + "  ".join(f"{v:9.2e}" for v in row))

"""The backflow is weakest when the effective spectral density is flat at omega0.

J_eff(omega) = J(omega) coth(omega / 2kT) has zero slope at the system
frequency for one cutoff Omega*(kT); scanning the cutoff shows a minimum of
the measure close to it.
"""
import numpy as np

from qbm import PairSpec, PhysParams, TimeGrid, measure, resonance_cutoff

grid = TimeGrid.from_tmax(40, 0.01)
pair = PairSpec(-3, 3)
for kT in (0.5, 1.0, 2.0):
    Omegas = np.logspace(np.log10(0.3), np.log10(30), 20)
    N = [measure(PhysParams(0.1, O, kT), pair, grid) for O in Omegas]
    print(f"kT={kT:4g}: minimum at Omega={Omegas[int(np.argmin(N))]:6.3f}, Omega*={resonance_cutoff(kT):6.3f}")

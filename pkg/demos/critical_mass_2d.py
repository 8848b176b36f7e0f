"""Second moment of a 2D parabolic-elliptic run below and above 8 pi.

With (k, eps, mu, chi) = (0, 0, 1, 1) the second moment M2 = int |x|^2/2 rho
changes at the constant rate 2 M0 (1 - M0 / (8 pi)).  Masses below 8 pi spread
out and masses above it contract.  This script fits dM2/dt for a few masses
and prints it next to that rate.

    python demos/critical_mass_2d.py
"""

import numpy as np

from sipfpic import SimParams, validate
from sipfpic.experiments import RunManifest, experiment_critical_mass
from sipfpic.scenarios import ScenarioSpec

params = validate(SimParams(dim=2, mu=1.0, chi=1.0, eps=0.0, kappa=0.0, box_len=16.0,
                            grid_h=128, n_particles=1 << 14, dt=5e-4, n_steps=200))
manifest = RunManifest(params, ScenarioSpec("disk"), metrics_every=10)

print(f"critical mass 8*pi = {8 * np.pi:.3f}")
for s in experiment_critical_mass(manifest, masses=[15.0, 22.0, 27.0, 35.0]):
    rate = 2 * s.mass * (1 - s.mass / (8 * np.pi))
    print(f"M0={s.mass:5.1f}  fitted dM2/dt={s.m2_slope:+8.3f}  expected {rate:+8.3f}  -> {s.classification}")

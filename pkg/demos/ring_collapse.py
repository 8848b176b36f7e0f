"""A toroidal shell of mass 180 contracting toward its axis.

Particles start uniformly in a torus around the x3 axis.  The mean distance
from that axis is printed at each snapshot, together with the spectral
blow-up ratio.  Scaled down from the preset so it runs in about a minute.

    python demos/ring_collapse.py
"""

from sipfpic.experiments import experiment_scenario, load_preset

m = load_preset("ring_desk")
m = m.replace(params=m.params.replace(grid_h=64, n_particles=1 << 16), snapshot_every=100)
res = experiment_scenario(m, "ring")
ratios = {r.step: r.blowup_ratio for r in res.output.records}
for step, t, r in zip(res.steps, res.times, res.mean_cyl_radius):
    extra = f"  ratio {ratios[step]:.3f}" if step in ratios else ""
    print(f"step {step:4d}  t={t:.4f}  mean cylindrical radius {r:.4f}{extra}")

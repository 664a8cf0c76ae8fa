"""
Mean-square threshold and the second-moment recursion
=====================================================
"""

# %%
import numpy as np

from qeclab import config, stability
from qeclab.linalg import spectral_radius
from qeclab.rng import stream

plant = config.load("robotarm_stabilized").plant
for variant in stability.VARIANTS:
    r = stability.p_star(plant, 4, variant)
    print(f"{variant:>5}: A_const={r.A_const:.3f}  |M1|*={r.star_norm_M1:.4f}  p*={r.p_star:.4g}")

# %%
# rho(M(p)) against p: the threshold is conservative, the actual
# crossing of 1 sits further out.
ps = np.linspace(0, 0.1, 11)
print([round(spectral_radius(stability.build_M(plant, p, 4, variance_model="independent")), 4) for p in ps])

# %%
# The literal arm has no threshold at all.
try:
    stability.p_star(config.load("robotarm").plant, 4)
except stability.UnstableClosedLoop as exc:
    print("published gain:", exc)

# %%
# Which sign and variance term agree with simulation? A small plant keeps
# the Monte-Carlo cheap.
small = stability.PlantModel([[1.0, 0.2], [0.0, 0.9]], [0.1, 1.0], [-1.0, -0.6])
sel = stability.select_sign_convention(small, 0.05, 2, [1.0, -1.0], (1, 5, 10), 200_000, stream(0))
for key, z in sorted(sel.max_z.items()):
    print(key, round(z, 2))

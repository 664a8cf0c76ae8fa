"""
Closed loop under imperfect entanglement
========================================

Runs the stabilized robot arm with the unquantized realization at a few
flip probabilities and prints how the mean state norm evolves.
"""

# %%
import numpy as np

from qeclab import config, simulate, stability

cfg = config.load("robotarm_stabilized").with_overrides(horizon=300, trials=50)
rep = stability.p_star(cfg.plant, cfg.w_b)
print(f"rho(A+BK) = {rep.rho_closed:.4f}, p* = {rep.p_star:.4g}")

# %%
# Below the threshold the mean norm decays; at p = 0.5 the actuator's key is
# independent of the sensor's and the loop blows up.
for p in (0.0, rep.p_star / 2, 0.05, 0.5):
    run = simulate.simulate_closed_loop(cfg.with_channel(p))
    tail = run.state_norm[np.isfinite(run.state_norm)][-1]
    print(f"p={p:<8.4g} final mean |x| = {tail:.3e}  diverged trials = {run.diverged_trials}")

# %%
# With perfect keys the decrypted input equals K x to rounding.
run = simulate.simulate_closed_loop(cfg.with_overrides(trials=1, horizon=20))
print("max (u - Kx)^2 with perfect keys:", np.nanmax(run.mse))

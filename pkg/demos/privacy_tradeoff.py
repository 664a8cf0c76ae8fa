"""
Privacy versus accuracy in the quantized loop
=============================================
"""

# %%
import numpy as np

from qeclab import privacy
from qeclab.quantized import QuantizedScenario
from qeclab.rng import stream

alphas = np.linspace(0.05, 0.9, 8)
for a in alphas:
    d = privacy.delta_value(0.01, a, 1.0, 10)
    m = privacy.worst_case_mse_bound(a, 10, 4, [1.0] * 3, [63.0, 25.0, 1.0])
    print(f"alpha={a:.2f}  Delta={d:.4f}  worst-case MSE bound={m:.4g}")

# %%
# Exact TV gaps for random same-sign neighbours stay under Delta.
scen = QuantizedScenario(10, 4, 0.5, [1.0], [1.0])
gap = privacy.max_measured_gap(0.001, scen, 500, stream(3))
print("max gap", gap, "Delta", privacy.delta_value(0.001, 0.5, 1.0, 10))

# %%
# Parameter selection for a concrete target.
print(privacy.choose_params(0.1, 0.1, 0.5, 3, 63, 1.0, 4))
print(privacy.choose_params(0.1, 0.1, 0.5, 3, 63, 1.0, 4, mode="literal"))

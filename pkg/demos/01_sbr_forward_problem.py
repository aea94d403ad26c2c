"""
The scalar boundary problem
===========================

Twenty concentrations on the top edge of a unit square diffuse inward for
0.1 time units. Thirty interior sensors record the result. Recovering the
boundary from the sensors is the inverse task the rest of the demos tackle.
"""

import numpy as np

from autotandem.benchmarks import DEFAULT_GRID, get_problem, sbr_solve

# A smooth bump on the boundary
x = (np.arange(20) + 0.5) / 20
bc = 30 * np.exp(-((x - 0.5) / 0.2) ** 2)
field = sbr_solve(bc)
print("field shape", field.shape, "max", field.max().round(3))

# Concentration decays away from the heated edge
print("row means from bottom to top:")
print(field.mean(axis=1).round(3))

# The benchmark wraps the solver and the sensor layout
prob = get_problem("sbr")
y = prob.evaluate(bc)
print("30 sensor readings, top row last:")
print(y.reshape(6, 5).round(3))

# Doubling the boundary doubles every reading
print("linear in bc:", np.allclose(prob.evaluate(2 * bc), 2 * y))
print("grid spacing", DEFAULT_GRID.h, "steps", DEFAULT_GRID.n_steps)

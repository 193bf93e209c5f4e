"""
Global and local costs
======================

The global cost compares A|x> with |b> directly. The local cost only needs
single-qubit projections, yet it vanishes at exactly the same states.
"""

import numpy as np

from vqls_heat.ansatz import build_ansatz
from vqls_heat.cost import CostMode, global_cost, local_cost
from vqls_heat.problems import build_test_instance

problem = build_test_instance(1.0, 3)
spec = build_ansatz(3, 2)
rng = np.random.default_rng(1)

print(" local    global")
for _ in range(5):
    params = rng.uniform(0, 2 * np.pi, spec.param_count)
    cl = local_cost(problem, spec, params).value
    cg = global_cost(problem, spec, params).value
    print(f"{cl:.4f}   {cg:.4f}")

# on hardware each u-coefficient comes from a Hadamard test with finite shots
params = rng.uniform(0, 2 * np.pi, spec.param_count)
exact = local_cost(problem, spec, params).value
for shots in (100, 1000, 10000):
    est = local_cost(problem, spec, params, CostMode.with_shots(shots, seed=3)).value
    print(f"{shots:6d} shots: {est:.4f}  (exact {exact:.4f})")

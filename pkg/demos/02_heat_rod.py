"""
Steady temperature along a rod
==============================

A rod held at T=0 on one end and T=1 on the other settles into a linear
temperature profile. We recover it variationally on 3 qubits and compare with
a direct solve.
"""

import numpy as np

from vqls_heat.harness import SolveSettings, run_solve

settings = SolveSettings("heat1d:n=3,t1=0,t2=1", epsilon=0.05)
outcome = run_solve(settings, seed=0)
r = outcome.result

print(f"converged after {r.iterations} iterations, final local cost {r.final_cost:.2e}")
print(f"stopping threshold on the cost: {outcome.cost_threshold:.2e}")
print(f"fidelity with the direct solve: {outcome.fidelity:.6f}")

# the variational state only fixes the direction; rescaling recovers temperatures
quantum = outcome.temperatures()
classical = outcome.reference
print("   node   variational   direct")
for i, (q, c) in enumerate(zip(quantum, classical)):
    print(f"{i:7d} {q:13.4f} {c:8.4f}")
print("largest temperature error:", np.abs(quantum - classical).max())

"""
Writing a heat-conduction matrix as a sum of Pauli strings
==========================================================

The solver never touches the matrix directly. It works with a weighted sum of
Pauli strings, each of which acts on a statevector as a signed permutation.
"""

import numpy as np

from vqls_heat.pauli import decompose, pauli_matrix, reconstruct
from vqls_heat.problems import dirichlet_matrix, laplacian_2d

# the 1D finite-difference Laplacian on 8 interior points (3 qubits)
A = dirichlet_matrix(8)
print(A.astype(int))

d = decompose(A)
for term in d.terms:
    print(f"{term.string}  {term.coefficient.real:+.2f}")

# the sum reproduces A exactly
print("max reconstruction error:", np.abs(reconstruct(d) - A).max())

# every string is Hermitian and squares to the identity
P = pauli_matrix("XYY")
print("XYY Hermitian:", np.allclose(P, P.conj().T), " involutory:", np.allclose(P @ P, np.eye(8)))

# the 2D plate has many more terms
for npd in (2, 3, 4):
    print(f"2D plate with {2**npd}x{2**npd} points: {len(laplacian_2d(npd).decomposition)} strings")

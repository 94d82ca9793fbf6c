"""
Direct density-matrix measurement
=================================

Swap roles: the evolution is known (a DFT reference gate), and the state is
what we want. Each element of rho comes out of one probe expectation value
without any global inversion.
"""

import numpy as np

from krauscope import DensityMatrix, Setup, density_full, matcore
from krauscope.harness import fidelity

rho = DensityMatrix(matcore.random_density(3, seed=5))
rec = density_full(Setup(rho_s=rho))

print("reconstructed rho:\n", np.round(rec.elements, 6))
print("Frobenius error:", matcore.frobenius_distance(rec.elements, rho.mat))
print("trace:", np.trace(rec.elements).real)
print("fidelity:", fidelity(rho.mat, rec.elements))

# a pure state: the |+> coherence is exactly one half
plus = DensityMatrix.from_vector(np.array([1, 1]) / np.sqrt(2))
print("<0|rho|1> for |+>:", density_full(Setup(rho_s=plus)).elements[0, 1])

"""
Characterizing an unknown gate
==============================

With no environment, the branch unitary itself is the target. Here a Haar
random 4x4 gate is rebuilt from d + 1 = 5 settings.
"""

import numpy as np

from krauscope import Setup, matcore, unitary_full

u = matcore.random_unitary(4, seed=8)
rec = unitary_full(Setup(u1=u))

print("settings used:", rec.settings_used)
print("max |U_est - U| =", np.max(np.abs(rec.elements - u)))
print("unitarity residual:", np.linalg.norm(rec.elements.conj().T @ rec.elements - np.eye(4)))

# the coupling angle does not matter in exact mode
for theta in (np.pi / 4, np.pi / 2, np.pi):
    est = unitary_full(Setup(u1=u, theta=theta)).elements
    print(f"theta = {theta:.3f}: max deviation {np.max(np.abs(est - u)):.1e}")

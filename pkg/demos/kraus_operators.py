"""
Reading off a Kraus operator one element at a time
==================================================

A qubit system talks to a qubit environment through a random unitary. We pick
one pointer outcome k and rebuild the matching Kraus operator A_k from probe
expectation values, then compare with the operator we never showed the
protocol.
"""

import numpy as np

from krauscope import Setup, kraus_full, kraus_set_full, random_dilation
from krauscope.quantum import kraus_from_dilation

dil = random_dilation(2, 2, seed=3)
setup = Setup(dil=dil)  # default input state: 0.7 |+><+| + 0.3 I/2

rec = kraus_full(setup, k=0)
print("reconstructed A_0:\n", np.round(rec.elements, 6))
print("true A_0:\n", np.round(kraus_from_dilation(dil, 0), 6))
print("settings used:", rec.settings_used, rec.settings)

# every element of a column shares one baseline run with the identity setting
print("baselines:", sorted(rec.baseline_values))

# the whole set comes back complete
ops = [r.elements for r in kraus_set_full(setup)]
print("||sum A^dag A - I|| =", np.linalg.norm(sum(a.conj().T @ a for a in ops) - np.eye(2)))

# the same thing with a finite number of shots per setting
noisy = kraus_full(Setup(dil=dil, shots=200_000, seed=1), k=0)
print("sampled A_0 (200k shots):\n", np.round(noisy.elements, 3))
print("per-element standard error:\n", np.round(noisy.stderr, 4))

"""
Same POVM, different Kraus operators
====================================

Two instruments on a qubit share the POVM element E_0 = I/2 but act
differently on the state afterwards: A_0 = I/sqrt(2) in one, A_0 = (X + Z)/2 in
the other. Tomography of outcome statistics cannot tell them apart. The probe
protocol can.
"""

import numpy as np

from krauscope import Setup, ambiguous_kraus_pair, dilation_from_kraus, kraus_full, povm_full

ks, ks_tilde = ambiguous_kraus_pair()
for name, kset in (("I/sqrt(2)", ks), ("(X + Z)/2", ks_tilde)):
    setup = Setup(dil=dilation_from_kraus(kset))
    a0 = kraus_full(setup, 0).elements
    e0 = povm_full(setup, 0).elements
    print(f"A_0 = {name}")
    print("  reconstructed A_0:\n", np.round(a0, 6))
    print("  reconstructed E_0:\n", np.round(e0, 6))

a = kraus_full(Setup(dil=dilation_from_kraus(ks)), 0).elements
b = kraus_full(Setup(dil=dilation_from_kraus(ks_tilde)), 0).elements
print("||A_0 - A_0~||_F =", np.linalg.norm(a - b))

"""Quick invariant suite used by ``krauscope verify``.

Each check returns ``(name, passed, detail)``.  The suite is a fast subset
of the test-suite; it exists so an installed copy can self-check without
pytest.
"""

from __future__ import annotations

import numpy as np

from . import matcore
from .characterize import Setup, density_full, kraus_set_full, povm_full, kraus_full, unitary_full
from .protocol import ProtocolInstance, evolve, exact_expectation, lhs_oracle
from .quantum import (
    DensityMatrix,
    ambiguous_kraus_pair,
    apply_channel,
    default_input_state,
    dilate_and_trace,
    dilation_from_kraus,
    kraus_from_dilation,
    random_dilation,
    random_kraus_set,
)


def random_instance(d_s: int, d_e: int, seed: int) -> ProtocolInstance:
    """Fully random protocol instance (random probe and environment states too)."""
    ss = np.random.SeedSequence([seed, d_s, d_e])
    s = ss.spawn(6)
    rng = np.random.default_rng(s[0])
    chi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    xi = rng.standard_normal(d_e) + 1j * rng.standard_normal(d_e)
    xi /= np.linalg.norm(xi)
    return ProtocolInstance(
        u_s=matcore.random_unitary(d_s, s[1]),
        u_tilde=matcore.random_unitary(d_s, s[2]),
        rho_s=DensityMatrix(matcore.random_density(d_s, s[3])),
        dil=random_dilation(d_s, d_e, s[4], xi=xi),
        chi=chi,
    )


def check_central_identity(dims=(2, 3, 4), seeds=range(20)):
    worst = 0.0
    for d_s in dims:
        for d_e in dims:
            for seed in seeds:
                inst = random_instance(d_s, d_e, seed)
                rho_t = evolve(inst)
                for i in range(d_s):
                    for k in range(d_e):
                        got = exact_expectation(rho_t, inst, i, k).ratio
                        worst = max(worst, abs(got - lhs_oracle(inst, i, k)))
    return "central identity", worst <= 1e-10, f"max deviation {worst:.2e}"


def check_ambiguity():
    ks, ks_tilde = ambiguous_kraus_pair()
    out = []
    for kset in (ks, ks_tilde):
        setup = Setup(dil=dilation_from_kraus(kset), rho_s=default_input_state(2))
        out.append((kraus_full(setup, 0).elements, povm_full(setup, 0).elements))
    (a0, e0), (a0t, e0t) = out
    half = 0.5 * np.eye(2)
    err = max(np.max(np.abs(e0 - half)), np.max(np.abs(e0t - half)))
    sep = matcore.frobenius_distance(a0, a0t)
    ok = err <= 1e-9 and sep > 0.5
    return "POVM ambiguity", ok, f"|E0 - I/2| = {err:.2e}, ||A0 - A0~||_F = {sep:.3f}"


def check_round_trips(dims=(2, 3, 4), seeds=range(5)):
    worst, settings_ok = 0.0, True
    for d in dims:
        for seed in seeds:
            dil = random_dilation(d, 2, seed)
            recs = kraus_set_full(Setup(dil=dil))
            for k, r in enumerate(recs):
                worst = max(worst, matcore.frobenius_distance(r.elements, kraus_from_dilation(dil, k)))
                settings_ok &= r.settings_used == d + 1
            u = matcore.random_unitary(d, seed + 100)
            r = unitary_full(Setup(u1=u))
            worst = max(worst, matcore.frobenius_distance(r.elements, u))
            settings_ok &= r.settings_used == d + 1
            rho = DensityMatrix(matcore.random_density(d, seed + 200))
            r = density_full(Setup(rho_s=rho))
            worst = max(worst, matcore.frobenius_distance(r.elements, rho.mat))
            settings_ok &= r.settings_used == d + 1
    ok = worst <= 1e-9 and settings_ok
    return "exact round trips / d+1 settings", ok, f"max Frobenius error {worst:.2e}, settings ok: {settings_ok}"


def check_stinespring(seeds=range(20)):
    worst = 0.0
    for seed in seeds:
        ks = random_kraus_set(3, 2 + seed % 3, seed)
        rho = DensityMatrix(matcore.random_density(3, seed + 1000))
        dil = dilation_from_kraus(ks)
        worst = max(worst, np.max(np.abs(apply_channel(ks, rho).mat - dilate_and_trace(dil, rho).mat)))
    return "Stinespring consistency", worst <= 1e-10, f"max deviation {worst:.2e}"


def check_theta_independence(thetas=(np.pi / 4, np.pi / 2, np.pi)):
    dil = random_dilation(3, 2, 11)
    ests = [kraus_full(Setup(dil=dil, theta=t), 1).elements for t in thetas]
    spread = max(np.max(np.abs(e - ests[0])) for e in ests)
    return "theta independence", spread <= 1e-9, f"max spread {spread:.2e}"


CHECKS = (check_central_identity, check_ambiguity, check_round_trips, check_stinespring, check_theta_independence)


def run_all():
    return [check() for check in CHECKS]

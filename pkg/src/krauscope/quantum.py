"""States, Kraus sets, POVMs, channels and Stinespring dilations.

Tensor ordering is always system (x) environment, i.e. the joint index of
``|s>|e>`` is ``s * d_E + e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import matcore
from .errors import (
    CompletenessError,
    DimensionError,
    InvalidStateError,
    NotHermitianError,
    NotUnitaryError,
    VanishingDenominatorError,
)

EPS_STATE = 1e-10
EPS_COMP = 1e-9
EPS_PSD = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """A validated density operator (Hermitian, unit trace, PSD)."""

    mat: np.ndarray

    def __post_init__(self):
        m = matcore.as_cmatrix(self.mat)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        if not matcore.is_hermitian(m, EPS_STATE):
            raise NotHermitianError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1) > EPS_STATE:
            raise InvalidStateError(f"density matrix has trace {tr:.12g}, expected 1")
        lam_min = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lam_min < -EPS_PSD:
            raise InvalidStateError(f"density matrix has negative eigenvalue {lam_min:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


def completeness_residual(ops: Sequence[np.ndarray]) -> float:
    """``|| sum_k A_k^dag A_k - I ||_F``."""
    d = ops[0].shape[1]
    s = sum(a.conj().T @ a for a in ops)
    return float(np.linalg.norm(s - np.eye(d)))


@dataclass(frozen=True)
class KrausSet:
    """Ordered Kraus operators ``A_0 .. A_{d_E - 1}`` satisfying completeness."""

    ops: tuple

    def __post_init__(self):
        ops = tuple(matcore.as_cmatrix(a) for a in self.ops)
        if not ops:
            raise DimensionError("a Kraus set needs at least one operator")
        d = ops[0].shape[0]
        for k, a in enumerate(ops):
            if a.shape != (d, d):
                raise DimensionError(f"Kraus operator {k} has shape {a.shape}, expected {(d, d)}")
        res = completeness_residual(ops)
        if res > EPS_COMP:
            raise CompletenessError(
                f"sum_k A_k^dag A_k deviates from identity (residual {res:.3e})", residual=res
            )
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    @property
    def env_dim(self) -> int:
        return len(self.ops)

    def __len__(self):
        return len(self.ops)

    def __getitem__(self, k):
        return self.ops[k]


@dataclass(frozen=True)
class Dilation:
    """System-environment unitary with a fixed environment input state.

    ``env_basis`` holds the pointer basis vectors as columns; the identity
    (computational basis) is used when omitted.
    """

    u_se: np.ndarray
    xi: np.ndarray
    d_s: int
    env_basis: np.ndarray = field(default=None)

    def __post_init__(self):
        u = matcore.as_cmatrix(self.u_se)
        xi = np.asarray(self.xi, dtype=complex).ravel()
        d_e = xi.size
        if u.shape != (self.d_s * d_e, self.d_s * d_e):
            raise DimensionError(
                f"U_SE has shape {u.shape}, expected {(self.d_s * d_e,) * 2} for d_S={self.d_s}, d_E={d_e}"
            )
        if not matcore.is_unitary(u, EPS_STATE):
            raise NotUnitaryError("U_SE is not unitary")
        if abs(np.linalg.norm(xi) - 1) > matcore.EPS_BUILD:
            raise InvalidStateError(f"environment state has norm {np.linalg.norm(xi):.15g}")
        basis = np.eye(d_e, dtype=complex) if self.env_basis is None else matcore.as_cmatrix(self.env_basis)
        if not matcore.is_unitary(basis, EPS_STATE) or basis.shape[0] != d_e:
            raise NotUnitaryError("environment pointer basis must be an orthonormal basis of size d_E")
        object.__setattr__(self, "u_se", u)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "env_basis", basis)

    @property
    def d_e(self) -> int:
        return self.xi.size

    def kraus_set(self) -> KrausSet:
        return KrausSet(tuple(kraus_from_dilation(self, k) for k in range(self.d_e)))


def uniform_state(d: int) -> np.ndarray:
    return np.full(d, 1 / np.sqrt(d), dtype=complex)


def default_input_state(d: int, lam: float = 0.3) -> DensityMatrix:
    """``(1 - lam)|+_d><+_d| + lam I/d``: mixed, with every entry nonzero."""
    plus = uniform_state(d)
    return DensityMatrix((1 - lam) * np.outer(plus, plus.conj()) + lam * np.eye(d) / d)


def kraus_from_dilation(dil: Dilation, k: int) -> np.ndarray:
    """``A_k = <k_E| U_SE |xi_E>`` by direct tensor contraction."""
    if not 0 <= k < dil.d_e:
        raise IndexError(f"outcome index {k} out of range for d_E={dil.d_e}")
    d_s, d_e = dil.d_s, dil.d_e
    u = dil.u_se.reshape(d_s, d_e, d_s, d_e)
    bra_k = dil.env_basis[:, k].conj()
    return np.einsum("e,aebf,f->ab", bra_k, u, dil.xi)


def householder_to_zero(xi) -> np.ndarray:
    """Unitary ``R`` with ``R |xi> = |0>`` exactly (up to round-off).

    Needs ``xi[0] != 0`` so the phase of the first component can be removed.
    """
    xi = np.asarray(xi, dtype=complex).ravel()
    d = xi.size
    alpha = xi[0] / abs(xi[0])
    w = alpha.conjugate() * xi
    e0 = np.zeros(d, dtype=complex)
    e0[0] = 1.0
    v = w - e0
    nv = np.linalg.norm(v)
    if nv < 1e-15:
        return alpha.conjugate() * np.eye(d, dtype=complex)
    v = v / nv
    h = np.eye(d, dtype=complex) - 2 * np.outer(v, v.conj())
    return alpha.conjugate() * h


def dilation_from_kraus(ks: KrausSet, xi_target=None, seed: int = 0) -> Dilation:
    """Build a dilation whose Kraus operators (for ``xi_target``) are exactly ``ks``.

    The isometry ``|psi>|0> -> sum_k A_k|psi>|k>`` is completed to a unitary
    ``U_dil``, then ``U_SE = U_dil (I (x) R)`` with ``R|xi_target> = |0>``.
    ``xi_target`` defaults to the uniform superposition and must have no
    zero components, otherwise the protocol normalization vanishes.
    """
    d_s, d_e = ks.dim, ks.env_dim
    xi = uniform_state(d_e) if xi_target is None else np.asarray(xi_target, dtype=complex).ravel()
    if xi.size != d_e:
        raise DimensionError(f"environment state has {xi.size} components, Kraus set has {d_e} operators")
    xi = xi / np.linalg.norm(xi)
    small = np.flatnonzero(np.abs(xi) < 1e-8)
    if small.size:
        raise VanishingDenominatorError(
            f"environment state has zero overlap with pointer states {small.tolist()}", factor="env overlap"
        )

    n = d_s * d_e
    iso = np.zeros((n, d_s), dtype=complex)
    for k, a in enumerate(ks.ops):
        iso[k::d_e, :] = a  # rows s*d_E + k
    completed = matcore.complete_to_unitary(iso, seed=seed)
    # place isometry column s at joint index s*d_E + 0, complement elsewhere
    u_dil = np.empty((n, n), dtype=complex)
    in_cols = np.arange(d_s) * d_e
    rest = np.setdiff1d(np.arange(n), in_cols)
    u_dil[:, in_cols] = completed[:, :d_s]
    u_dil[:, rest] = completed[:, d_s:]

    r = householder_to_zero(xi)
    u_se = u_dil @ np.kron(np.eye(d_s), r)
    return Dilation(u_se=u_se, xi=xi, d_s=d_s)


def random_dilation(d_s: int, d_e: int, seed, xi=None) -> Dilation:
    """Haar-random ``U_SE`` with a uniform (or given) environment state."""
    xi = uniform_state(d_e) if xi is None else xi
    return Dilation(u_se=matcore.random_unitary(d_s * d_e, seed), xi=xi, d_s=d_s)


def random_kraus_set(d_s: int, d_e: int, seed) -> KrausSet:
    """Kraus set read off a Haar unitary with the environment in ``|0>``."""
    u = matcore.random_unitary(d_s * d_e, seed).reshape(d_s, d_e, d_s, d_e)
    return KrausSet(tuple(u[:, k, :, 0].copy() for k in range(d_e)))


def povm_from_kraus(a) -> np.ndarray:
    a = matcore.as_cmatrix(a)
    return a.conj().T @ a


def born_probability(rho: DensityMatrix, e) -> float:
    """``tr(rho E)``; round-off excursions just outside ``[0, 1]`` are clamped."""
    e = matcore.as_cmatrix(e)
    p = np.trace(rho.mat @ e)
    if abs(p.imag) > EPS_STATE:
        raise NotHermitianError(f"tr(rho E) has imaginary part {p.imag:.3e}; E is not Hermitian")
    p = p.real
    if p < -EPS_PSD or p > 1 + EPS_PSD:
        raise InvalidStateError(f"probability {p:.6g} outside [0, 1]; E is not a valid POVM element")
    return float(min(max(p, 0.0), 1.0))


def apply_channel(ks: KrausSet, rho: DensityMatrix) -> DensityMatrix:
    if ks.dim != rho.dim:
        raise DimensionError(f"Kraus operators act on d={ks.dim}, state has d={rho.dim}")
    out = sum(a @ rho.mat @ a.conj().T for a in ks.ops)
    return DensityMatrix(0.5 * (out + out.conj().T))


def dilate_and_trace(dil: Dilation, rho: DensityMatrix) -> DensityMatrix:
    """``tr_E[U_SE (rho (x) |xi><xi|) U_SE^dag]``, the Stinespring form of the channel."""
    joint = np.kron(rho.mat, np.outer(dil.xi, dil.xi.conj()))
    joint = dil.u_se @ joint @ dil.u_se.conj().T
    out = matcore.partial_trace(joint, [dil.d_s, dil.d_e], keep=[0])
    return DensityMatrix(0.5 * (out + out.conj().T))


def three_outcome_povm():
    """The three-outcome qubit POVM ``{I/2, (I+Z)/8, (3I-Z)/8}``."""
    i2, z = np.eye(2, dtype=complex), matcore.SIGMA_Z
    return [0.5 * i2, (i2 + z) / 8, (3 * i2 - z) / 8]


def ambiguous_kraus_pair():
    """Two complete Kraus sets realising the same POVM, differing only in ``A_0``.

    ``A_0 = I/sqrt(2)`` versus ``A_0 = (X + Z)/2``; the other two operators are
    the square roots of the remaining POVM elements.
    """
    e = three_outcome_povm()
    tail = [matcore.sqrtm_psd(e[1]), matcore.sqrtm_psd(e[2])]
    a0 = np.eye(2, dtype=complex) / np.sqrt(2)
    a0_tilde = 0.5 * (matcore.SIGMA_X + matcore.SIGMA_Z)
    return KrausSet((a0, *tail)), KrausSet((a0_tilde, *tail))

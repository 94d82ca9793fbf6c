"""Probe-system-environment protocol engine.

A qubit probe controls which branch acts on the system: ``U_S`` on
``|0_P>`` and ``U_SE (U~_S (x) I_E)`` on ``|1_P>``.  Measuring
``sigma^x + i sigma^y`` on the probe together with ``|i><i|`` on the system
and ``|k><k|`` on the environment, and dividing by

    N = 2 <chi|0> <1|chi> <xi|k>,

returns ``<i| A_k U~_S rho_S U_S^dag |i>`` exactly.

Joint ordering is probe (x) system (x) environment.  When there is no
environment the environment factor is simply absent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import matcore
from .errors import DimensionError, NotUnitaryError, VanishingDenominatorError
from .quantum import DensityMatrix, Dilation, kraus_from_dilation

EPS_OVERLAP = 1e-8
EPS_NORM = 1e-10

PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)

# probe measurement bases (columns are the +1 / -1 eigenvectors)
_X_BASIS = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_Y_BASIS = np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class ProtocolInstance:
    """One complete run configuration of the protocol.

    ``dil=None`` drops the environment altogether (``U_SE = I``, no
    environment register).
    """

    u_s: np.ndarray
    u_tilde: np.ndarray
    rho_s: DensityMatrix
    dil: Optional[Dilation] = None
    chi: np.ndarray = field(default_factory=lambda: PLUS.copy())
    theta: float = np.pi / 2

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=complex).ravel()
        if chi.size != 2:
            raise DimensionError("probe state must have two amplitudes")
        chi = chi / np.linalg.norm(chi)
        if abs(chi[0]) <= EPS_OVERLAP or abs(chi[1]) <= EPS_OVERLAP:
            raise VanishingDenominatorError(
                "probe state must overlap both |0_P> and |1_P>", factor="probe overlap"
            )
        object.__setattr__(self, "chi", chi)
        d = self.rho_s.dim
        for name in ("u_s", "u_tilde"):
            u = matcore.as_cmatrix(getattr(self, name))
            if u.shape != (d, d):
                raise DimensionError(f"{name} has shape {u.shape}, system dimension is {d}")
            if not matcore.is_unitary(u):
                raise NotUnitaryError(f"{name} is not unitary")
            object.__setattr__(self, name, u)
        if self.dil is not None and self.dil.d_s != d:
            raise DimensionError(f"dilation acts on d_S={self.dil.d_s}, state has d_S={d}")

    @property
    def d_s(self) -> int:
        return self.rho_s.dim

    @property
    def d_e(self) -> int:
        return 1 if self.dil is None else self.dil.d_e

    @property
    def dims(self) -> list:
        return [2, self.d_s, self.d_e]


@dataclass(frozen=True)
class ExpectationRecord:
    """Measured ``<(sigma^x + i sigma^y) (x) Pi_i (x) Pi_k>`` and its normalization.

    ``stderr`` is the standard error of ``value`` (0 in exact mode), combining
    the two real settings in quadrature.
    """

    value: complex
    normalization: complex
    mode: str = "exact"
    shots: Optional[int] = None
    seed: Optional[tuple] = None
    stderr: float = 0.0

    @property
    def ratio(self) -> complex:
        if abs(self.normalization) <= EPS_NORM:
            raise VanishingDenominatorError("normalization vanishes", factor="env overlap")
        return self.value / self.normalization

    @property
    def ratio_stderr(self) -> float:
        return self.stderr / abs(self.normalization)


def projector_unitary(j: int, theta: float, d: int) -> np.ndarray:
    """``exp(-i theta |j><j|) = I + (e^{-i theta} - 1)|j><j|``."""
    if not 0 <= j < d:
        raise IndexError(f"projector index {j} out of range for d={d}")
    u = np.eye(d, dtype=complex)
    u[j, j] = np.exp(-1j * theta)
    return u


def build_upse(inst: ProtocolInstance) -> np.ndarray:
    d_s, d_e = inst.d_s, inst.d_e
    i_e = np.eye(d_e, dtype=complex)
    branch0 = np.kron(inst.u_s, i_e)
    branch1 = np.kron(inst.u_tilde, i_e)
    if inst.dil is not None:
        branch1 = inst.dil.u_se @ branch1
    n = d_s * d_e
    u = np.zeros((2 * n, 2 * n), dtype=complex)
    u[:n, :n] = branch0
    u[n:, n:] = branch1
    return u


def initial_state(inst: ProtocolInstance) -> np.ndarray:
    parts = [np.outer(inst.chi, inst.chi.conj()), inst.rho_s.mat]
    if inst.dil is not None:
        parts.append(np.outer(inst.dil.xi, inst.dil.xi.conj()))
    return matcore.kron_all(parts)


def evolve(inst: ProtocolInstance) -> DensityMatrix:
    u = build_upse(inst)
    rho_t = u @ initial_state(inst) @ u.conj().T
    return DensityMatrix(0.5 * (rho_t + rho_t.conj().T))


def normalization(inst: ProtocolInstance, k: Optional[int]) -> complex:
    """``2 <chi|0><1|chi> <xi|k>``; the environment factor is dropped when there is none."""
    n = 2 * inst.chi[0].conjugate() * inst.chi[1]
    if inst.dil is not None:
        n *= np.vdot(inst.dil.xi, inst.dil.env_basis[:, k])
    return complex(n)


def _check_indices(inst: ProtocolInstance, i: int, k: Optional[int]):
    if not 0 <= i < inst.d_s:
        raise IndexError(f"system index {i} out of range for d_S={inst.d_s}")
    if inst.dil is None:
        if k not in (None, 0):
            raise IndexError("instance has no environment; pass k=None")
    else:
        if k is None or not 0 <= k < inst.d_e:
            raise IndexError(f"environment index {k} out of range for d_E={inst.d_e}")


def _checked_normalization(inst, i, k) -> complex:
    n = normalization(inst, k)
    if abs(n) <= EPS_NORM:
        raise VanishingDenominatorError(
            f"environment state has no overlap with pointer state {k}", factor="env overlap"
        )
    return n


def _pointer_frame(inst: ProtocolInstance, rho_t: DensityMatrix) -> np.ndarray:
    """``rho(t)`` expressed in the environment pointer basis, as a 6-index tensor."""
    m = rho_t.mat
    if inst.dil is not None and not np.array_equal(inst.dil.env_basis, np.eye(inst.d_e)):
        w = np.kron(np.eye(2 * inst.d_s), inst.dil.env_basis.conj().T)
        m = w @ m @ w.conj().T
    return m.reshape(inst.dims + inst.dims)


def exact_expectation(rho_t: DensityMatrix, inst: ProtocolInstance, i: int, k: Optional[int] = None) -> ExpectationRecord:
    """Exact tripartite expectation, evaluated as two real settings ``x + i y``."""
    _check_indices(inst, i, k)
    n = _checked_normalization(inst, i, k)
    kk = 0 if k is None else k
    t = _pointer_frame(inst, rho_t)
    block = t[:, i, kk, :, i, kk]  # probe 2x2 block at system i, env k
    x = float(np.trace(block @ matcore.SIGMA_X).real)
    y = float(np.trace(block @ matcore.SIGMA_Y).real)
    return ExpectationRecord(value=complex(x, y), normalization=n)


def _setting_probs(t: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Joint outcome distribution (probe eigenvalue index, system, env)."""
    d_s, d_e = t.shape[1], t.shape[2]
    n = 2 * d_s * d_e
    m = t.reshape(n, n)
    w = np.kron(basis.conj().T, np.eye(d_s * d_e))
    p = np.real(np.diag(w @ m @ w.conj().T))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _sample_setting(t, basis, i, kk, shots, rng):
    """Empirical mean of ``(+-1) 1[i'=i] 1[k'=k]`` and its standard error."""
    p = _setting_probs(t, basis).reshape(t.shape[:3])
    counts = rng.multinomial(shots, p.ravel()).reshape(p.shape)
    plus, minus = counts[0, i, kk], counts[1, i, kk]
    mean = (plus - minus) / shots
    second = (plus + minus) / shots
    var = max(second - mean * mean, 0.0)
    return mean, np.sqrt(var / shots)


def split_shots(shots: int) -> tuple:
    """Even split between the X and Y settings, remainder to X."""
    n_y = shots // 2
    return shots - n_y, n_y


def sampled_expectation(
    rho_t: DensityMatrix,
    inst: ProtocolInstance,
    i: int,
    k: Optional[int],
    shots: int,
    seed: int | Sequence[int],
) -> ExpectationRecord:
    """Finite-shot estimate of the tripartite expectation.

    Joint outcomes are drawn from the Born distribution of ``rho(t)`` in the
    probe X (resp. Y) eigenbasis times the system computational basis times
    the environment pointer basis.  Each setting gets its own RNG stream
    derived from ``seed`` so results do not depend on call order.
    """
    if shots < 2:
        raise ValueError("need at least 2 shots (one per probe setting)")
    _check_indices(inst, i, k)
    n = _checked_normalization(inst, i, k)
    kk = 0 if k is None else k
    key = (int(seed),) if np.isscalar(seed) else tuple(int(s) for s in seed)
    entropy = [s % (1 << 64) for s in key]  # SeedSequence wants non-negative words
    t = _pointer_frame(inst, rho_t)
    n_x, n_y = split_shots(shots)
    rng_x = np.random.default_rng(np.random.SeedSequence(entropy + [0]))
    rng_y = np.random.default_rng(np.random.SeedSequence(entropy + [1]))
    x, se_x = _sample_setting(t, _X_BASIS, i, kk, n_x, rng_x)
    y, se_y = _sample_setting(t, _Y_BASIS, i, kk, n_y, rng_y)
    return ExpectationRecord(
        value=complex(x, y),
        normalization=n,
        mode="sampled",
        shots=shots,
        seed=key,
        stderr=float(np.hypot(se_x, se_y)),
    )


def lhs_oracle(inst: ProtocolInstance, i: int, k: Optional[int] = None) -> complex:
    """Direct evaluation of ``<i| A_k U~_S rho_S U_S^dag |i>``."""
    _check_indices(inst, i, k)
    a = np.eye(inst.d_s) if inst.dil is None else kraus_from_dilation(inst.dil, k)
    m = a @ inst.u_tilde @ inst.rho_s.mat @ inst.u_s.conj().T
    return complex(m[i, i])

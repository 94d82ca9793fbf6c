"""Direct reconstruction of Kraus operators, POVM elements, unitaries,
observables and density matrices from protocol expectation values.

Every protocol uses one input state and the projector-unitary settings
``exp(-i theta |j><j|)`` for ``j = 0 .. d-1`` plus the identity setting,
i.e. ``d + 1`` settings for a full matrix.  Column ``j`` of the target is

    [measured(i, setting j) - measured(i, identity)] / [phase * overlap(i, j)]

where the identity-setting term is the shared baseline.

``rho_S`` is treated as known to the experimenter when reconstructing Kraus
operators, unitaries and observables (it enters the denominator); the
reference unitary is known when reconstructing a density matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import matcore
from .errors import DimensionError, VanishingDenominatorError
from .protocol import (
    PLUS,
    ExpectationRecord,
    ProtocolInstance,
    evolve,
    exact_expectation,
    projector_unitary,
    sampled_expectation,
)
from .quantum import DensityMatrix, Dilation, completeness_residual, default_input_state

EPS_OVERLAP = 1e-8
EPS_DTHETA = 1e-12
IDENTITY = "I"  # label of the baseline setting

# setting codes used in RNG stream keys
_CODE_IDENTITY = -1


@dataclass(frozen=True)
class ObservableEstimatorConfig:
    theta1: float
    theta2: float
    method: str = "refined"
    max_gap: float = 1.0

    def __post_init__(self):
        if self.method not in ("first_order", "refined"):
            raise ValueError(f"unknown method {self.method!r}")
        gap = abs(self.theta1 - self.theta2)
        if gap < EPS_DTHETA:
            raise VanishingDenominatorError("theta1 and theta2 coincide", factor="delta theta")
        if gap >= self.max_gap:
            raise ValueError(f"|theta1 - theta2| = {gap:g} exceeds the series guard {self.max_gap:g}")

    @property
    def delta_theta(self) -> float:
        return self.theta1 - self.theta2


@dataclass
class Setup:
    """What the experimenter controls plus the (hidden) object under test.

    Only the field relevant to the target kind needs to be set:
    ``dil`` for Kraus/POVM, ``u1`` for unitary, ``generator`` for observable,
    and ``rho_s`` doubles as the unknown when reconstructing a density matrix
    (``u1`` then is the known reference unitary, DFT by default).
    """

    rho_s: Optional[DensityMatrix] = None
    dil: Optional[Dilation] = None
    u1: Optional[np.ndarray] = None
    generator: Optional[np.ndarray] = None
    observable: Optional[ObservableEstimatorConfig] = None
    chi: np.ndarray = field(default_factory=lambda: PLUS.copy())
    theta: float = np.pi / 2
    shots: Optional[int] = None
    seed: int = 0

    @property
    def d_s(self) -> int:
        if self.rho_s is not None:
            return self.rho_s.dim
        if self.dil is not None:
            return self.dil.d_s
        for m in (self.u1, self.generator):
            if m is not None:
                return m.shape[0]
        raise DimensionError("setup has no operator to infer d_S from")

    def input_state(self) -> DensityMatrix:
        return self.rho_s if self.rho_s is not None else default_input_state(self.d_s)

    @property
    def mode(self) -> str:
        return "exact" if self.shots is None else f"sampled(shots={self.shots}, seed={self.seed})"


@dataclass
class Reconstruction:
    target_kind: str
    elements: np.ndarray
    settings_used: int
    mode: str
    baseline_values: dict = field(default_factory=dict)
    stderr: Optional[np.ndarray] = None
    unreliable: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)
    settings: tuple = ()


class _Runner:
    """Builds one protocol instance per setting, caches ``rho(t)``, and
    records which projector settings were used.
    """

    def __init__(self, setup: Setup, make_instance):
        self.setup = setup
        self.make_instance = make_instance
        self._states = {}
        self.settings = []

    def measure(self, setting, i, k, stream) -> ExpectationRecord:
        if setting not in self._states:
            inst = self.make_instance(setting)
            self._states[setting] = (inst, evolve(inst))
            self.settings.append(setting)
        inst, rho_t = self._states[setting]
        if self.setup.shots is None:
            return exact_expectation(rho_t, inst, i, k)
        code = _CODE_IDENTITY if setting == IDENTITY else int(setting)
        key = (self.setup.seed, *stream, code)
        return sampled_expectation(rho_t, inst, i, k, self.setup.shots, key)


def _phase(theta, sign=-1):
    return np.exp(sign * 1j * theta) - 1


def _require_overlap(value, factor, location, what):
    if abs(value) <= EPS_OVERLAP:
        raise VanishingDenominatorError(f"{what} vanishes ({abs(value):.2e})", factor=factor, location=location)


class _ColumnEstimator:
    """Shared machinery: baseline per (i, k), column per (j, k)."""

    def __init__(self, runner: _Runner, d: int, denominator, k=None):
        self.runner = runner
        self.d = d
        self.denominator = denominator  # (i, j) -> complex
        self.k = k
        self.baselines = {}

    def _k_stream(self):
        return -1 if self.k is None else self.k

    def baseline(self, i) -> ExpectationRecord:
        if i not in self.baselines:
            self.baselines[i] = self.runner.measure(IDENTITY, i, self.k, (i, -1, self._k_stream()))
        return self.baselines[i]

    def element(self, i, j):
        """Return (estimate, standard error)."""
        den = self.denominator(i, j)
        try:
            rec = self.runner.measure(j, i, self.k, (i, j, self._k_stream()))
            base = self.baseline(i)
        except VanishingDenominatorError as exc:
            if exc.location is not None:
                raise
            raise VanishingDenominatorError(str(exc), exc.factor, location=(i, j, self.k)) from exc
        est = (rec.ratio - base.ratio) / den
        se = np.hypot(rec.ratio_stderr, base.ratio_stderr) / abs(den)
        return est, se

    def matrix(self, columns=None):
        cols = range(self.d) if columns is None else columns
        est = np.full((self.d, self.d), np.nan, dtype=complex)
        se = np.zeros((self.d, self.d))
        for j in cols:
            for i in range(self.d):
                est[i, j], se[i, j] = self.element(i, j)
        return est, se


def _flag_unreliable(se: np.ndarray, shots) -> Optional[np.ndarray]:
    # denominator below 3 standard errors of the numerator <=> element se > 1/3
    if shots is None:
        return None
    return se > 1.0 / 3.0


# -- Kraus operators ---------------------------------------------------------

def _kraus_runner(setup: Setup) -> _Runner:
    if setup.dil is None:
        raise ValueError("Kraus characterization needs a dilation (setup.dil)")
    rho = setup.input_state()
    d = rho.dim

    def make(setting):
        u_t = np.eye(d) if setting == IDENTITY else projector_unitary(setting, setup.theta, d)
        return ProtocolInstance(u_s=np.eye(d), u_tilde=u_t, rho_s=rho, dil=setup.dil, chi=setup.chi, theta=setup.theta)

    return _Runner(setup, make)


def _kraus_estimator(setup: Setup, runner: _Runner, k: int) -> _ColumnEstimator:
    rho = setup.input_state().mat
    phase = _phase(setup.theta)

    def den(i, j):
        _require_overlap(rho[j, i], "rho overlap", (i, j, k), "<j|rho_S|i>")
        return phase * rho[j, i]

    return _ColumnEstimator(runner, setup.d_s, den, k=k)


def kraus_element(setup: Setup, i: int, j: int, k: int) -> complex:
    """``<i|A_k|j>`` from the ``exp(-i theta Pi_j)`` setting and the identity baseline."""
    runner = _kraus_runner(setup)
    return complex(_kraus_estimator(setup, runner, k).element(i, j)[0])


def kraus_full(setup: Setup, k: int, runner: Optional[_Runner] = None) -> Reconstruction:
    runner = runner or _kraus_runner(setup)
    est = _kraus_estimator(setup, runner, k)
    a, se = est.matrix()
    return Reconstruction(
        target_kind=f"kraus({k})",
        elements=a,
        settings_used=len(set(runner.settings)),
        settings=tuple(runner.settings),
        mode=setup.mode,
        baseline_values={(i, IDENTITY): rec.ratio for i, rec in est.baselines.items()},
        stderr=None if setup.shots is None else se,
        unreliable=_flag_unreliable(se, setup.shots),
    )


def kraus_set_full(setup: Setup) -> list:
    """Reconstruct every ``A_k``; all outcomes share the same ``d + 1`` settings."""
    runner = _kraus_runner(setup)
    recs = [kraus_full(setup, k, runner) for k in range(setup.dil.d_e)]
    res = completeness_residual([r.elements for r in recs])
    for r in recs:
        r.settings_used = len(set(runner.settings))
        r.settings = tuple(runner.settings)
        r.diagnostics["completeness"] = res
    return recs


# -- POVM elements -----------------------------------------------------------

def povm_element(setup: Setup, i: int, j: int, k: int) -> complex:
    """``<i|E_k|j> = sum_l conj(<l|A_k|i>) <l|A_k|j>`` from columns ``i`` and ``j`` of ``A_k``."""
    runner = _kraus_runner(setup)
    est = _kraus_estimator(setup, runner, k)
    a, _ = est.matrix(columns=sorted({i, j}))
    return complex(np.vdot(a[:, i], a[:, j]))


def povm_full(setup: Setup, k: int, runner: Optional[_Runner] = None) -> Reconstruction:
    kr = kraus_full(setup, k, runner)
    a = kr.elements
    e = a.conj().T @ a
    return Reconstruction(
        target_kind=f"povm({k})",
        elements=e,
        settings_used=kr.settings_used,
        settings=kr.settings,
        mode=kr.mode,
        baseline_values=kr.baseline_values,
        stderr=kr.stderr,
        unreliable=kr.unreliable,
        diagnostics={"hermiticity": float(np.linalg.norm(e - e.conj().T)), "kraus": a},
    )


# -- unitaries -----------------------------------------------------------------

def _unitary_estimator(setup: Setup, u1: np.ndarray):
    rho = setup.input_state()
    d = rho.dim
    if u1.shape != (d, d):
        raise DimensionError(f"unitary has shape {u1.shape}, input state has d={d}")

    def make(setting):
        u2 = np.eye(d) if setting == IDENTITY else projector_unitary(setting, setup.theta, d)
        return ProtocolInstance(u_s=np.eye(d), u_tilde=u1 @ u2, rho_s=rho, chi=setup.chi, theta=setup.theta)

    runner = _Runner(setup, make)
    phase = _phase(setup.theta)
    r = rho.mat

    def den(i, j):
        _require_overlap(r[j, i], "rho overlap", (i, j, None), "<j|rho_S|i>")
        return phase * r[j, i]

    return runner, _ColumnEstimator(runner, d, den)


def unitary_element(setup: Setup, i: int, j: int) -> complex:
    _, est = _unitary_estimator(setup, matcore.as_cmatrix(setup.u1))
    return complex(est.element(i, j)[0])


def unitary_full(setup: Setup, u1=None, label="unitary") -> Reconstruction:
    u1 = matcore.as_cmatrix(setup.u1 if u1 is None else u1)
    runner, est = _unitary_estimator(setup, u1)
    u, se = est.matrix()
    return Reconstruction(
        target_kind=label,
        elements=u,
        settings_used=len(set(runner.settings)),
        settings=tuple(runner.settings),
        mode=setup.mode,
        baseline_values={(i, IDENTITY): rec.ratio for i, rec in est.baselines.items()},
        stderr=None if setup.shots is None else se,
        unreliable=_flag_unreliable(se, setup.shots),
        diagnostics={"unitarity": float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))},
    )


# -- observables ---------------------------------------------------------------

def observable_unitaries(generator, cfg: ObservableEstimatorConfig):
    """``U1 = e^{-i theta1 A} e^{+i theta2 A}`` and, separately realised, its adjoint."""
    u1 = matcore.expm_hermitian(generator, cfg.theta1) @ matcore.expm_hermitian(generator, -cfg.theta2)
    u1_adj = matcore.expm_hermitian(generator, -cfg.theta1) @ matcore.expm_hermitian(generator, cfg.theta2)
    return u1, u1_adj


def estimate_observable(u1_elem, u1_adj_elem, delta_ij, cfg: ObservableEstimatorConfig):
    """Turn unitary matrix elements into an observable matrix element.

    first_order: ``(delta_ij - U_ij) / (i dtheta)``, error O(dtheta);
    refined:     ``(Udag_ij - U_ij) / (2 i dtheta)``, error O(dtheta^2).
    Works elementwise on arrays too.
    """
    dt = cfg.delta_theta
    if abs(dt) < EPS_DTHETA:
        raise VanishingDenominatorError("delta theta vanishes", factor="delta theta")
    if cfg.method == "first_order":
        return (delta_ij - u1_elem) / (1j * dt)
    return (u1_adj_elem - u1_elem) / (2j * dt)


def _observable_setup(setup: Setup, cfg):
    cfg = cfg or setup.observable
    if cfg is None:
        raise ValueError("observable characterization needs an ObservableEstimatorConfig")
    if setup.generator is None:
        raise ValueError("observable characterization needs setup.generator")
    return cfg, matcore.as_cmatrix(setup.generator)


def observable_element(setup: Setup, i: int, j: int, cfg: Optional[ObservableEstimatorConfig] = None) -> complex:
    cfg, gen = _observable_setup(setup, cfg)
    u1, u1_adj = observable_unitaries(gen, cfg)
    _, est = _unitary_estimator(setup, u1)
    u_ij = est.element(i, j)[0]
    ud_ij = 0.0
    if cfg.method == "refined":
        _, est_adj = _unitary_estimator(_shifted(setup), u1_adj)
        ud_ij = est_adj.element(i, j)[0]
    return complex(estimate_observable(u_ij, ud_ij, float(i == j), cfg))


def _shifted(setup: Setup) -> Setup:
    # independent RNG streams for the adjoint run
    s = Setup(**{f: getattr(setup, f) for f in setup.__dataclass_fields__})
    s.seed = setup.seed + 7919
    return s


def observable_full(setup: Setup, cfg: Optional[ObservableEstimatorConfig] = None) -> Reconstruction:
    cfg, gen = _observable_setup(setup, cfg)
    u1, u1_adj = observable_unitaries(gen, cfg)
    ru = unitary_full(setup, u1, label="unitary(U1)")
    d = ru.elements.shape[0]
    ud = np.zeros_like(ru.elements)
    settings = set(ru.settings)
    if cfg.method == "refined":
        rud = unitary_full(_shifted(setup), u1_adj, label="unitary(U1^dag)")
        ud = rud.elements
        settings |= set(rud.settings)
    a = estimate_observable(ru.elements, ud, np.eye(d), cfg)
    return Reconstruction(
        target_kind="observable",
        elements=a,
        settings_used=len(settings),
        settings=tuple(ru.settings),
        mode=setup.mode,
        baseline_values=ru.baseline_values,
        diagnostics={
            "hermiticity": float(np.linalg.norm(a - a.conj().T)),
            "method": cfg.method,
            "delta_theta": cfg.delta_theta,
        },
    )


# -- density matrices ----------------------------------------------------------

def _density_estimator(setup: Setup):
    rho = setup.rho_s
    if rho is None:
        raise ValueError("density characterization needs the (unknown) state in setup.rho_s")
    d = rho.dim
    u1 = matcore.dft_matrix(d) if setup.u1 is None else matcore.as_cmatrix(setup.u1)

    def make(setting):
        u2 = np.eye(d) if setting == IDENTITY else projector_unitary(setting, setup.theta, d)
        return ProtocolInstance(u_s=u1 @ u2, u_tilde=np.eye(d), rho_s=rho, chi=setup.chi, theta=setup.theta)

    runner = _Runner(setup, make)
    phase = _phase(setup.theta, sign=+1)
    u1_adj = u1.conj().T

    def den(i, j):
        _require_overlap(u1_adj[j, i], "reference overlap", (i, j, None), "<j|U1^dag|i>")
        return phase * u1_adj[j, i]

    return runner, _ColumnEstimator(runner, d, den)


def density_element(setup: Setup, i: int, j: int) -> complex:
    _, est = _density_estimator(setup)
    return complex(est.element(i, j)[0])


def density_full(setup: Setup) -> Reconstruction:
    runner, est = _density_estimator(setup)
    rho, se = est.matrix()
    return Reconstruction(
        target_kind="density",
        elements=rho,
        settings_used=len(set(runner.settings)),
        settings=tuple(runner.settings),
        mode=setup.mode,
        baseline_values={(i, IDENTITY): rec.ratio for i, rec in est.baselines.items()},
        stderr=None if setup.shots is None else se,
        unreliable=_flag_unreliable(se, setup.shots),
        diagnostics={
            "hermiticity": float(np.linalg.norm(rho - rho.conj().T)),
            "trace": complex(np.trace(rho)),
        },
    )


KINDS = ("kraus", "povm", "unitary", "observable", "density")


def full_reconstruction(kind: str, setup: Setup, k: int = 0) -> Reconstruction:
    """Dispatch to the full-matrix protocol for ``kind``."""
    if kind == "kraus":
        return kraus_full(setup, k)
    if kind == "povm":
        return povm_full(setup, k)
    if kind == "unitary":
        return unitary_full(setup)
    if kind == "observable":
        return observable_full(setup)
    if kind == "density":
        return density_full(setup)
    raise ValueError(f"unknown reconstruction kind {kind!r}; expected one of {KINDS}")

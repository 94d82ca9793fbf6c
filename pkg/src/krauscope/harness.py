"""Experiment orchestration: instance generation, sweeps, metrics, reports."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__, matcore
from .characterize import (
    KINDS,
    ObservableEstimatorConfig,
    Setup,
    density_full,
    kraus_set_full,
    observable_full,
    povm_full,
    unitary_full,
    _kraus_runner,
)
from .errors import ConfigError, KrauscopeError
from .protocol import PLUS
from .quantum import (
    DensityMatrix,
    KrausSet,
    completeness_residual,
    default_input_state,
    dilation_from_kraus,
    kraus_from_dilation,
    random_dilation,
    uniform_state,
)
from .serialize import decode_operator, encode_operator, to_jsonable

MIN_DIM, MAX_DIM = 2, 8
MIN_SHOTS = 100
MIN_REPETITIONS = 50
SWEEP_AXES = ("delta_theta", "shots")


@dataclass
class ExperimentConfig:
    kind: str
    d_s: int = 2
    d_e: int = 2
    theta: float = math.pi / 2
    mode: str = "exact"
    shots: Optional[int] = None
    seeds: list = field(default_factory=lambda: [0])
    sweep: Optional[dict] = None  # {"axis": "delta_theta" | "shots", "values": [...]}
    repetitions: int = MIN_REPETITIONS
    lam: float = 0.3
    theta1: float = 0.7
    delta_theta: float = 0.01
    method: str = "refined"
    chi: Optional[np.ndarray] = None
    xi: Optional[np.ndarray] = None
    instance: Optional[dict] = None  # explicit operators: kraus | rho | u1 | generator

    def __post_init__(self):
        self.validate()

    @property
    def instance_source(self) -> str:
        return "random" if not self.instance else "explicit"

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {list(KINDS)}", "$.kind")
        for name in ("d_s", "d_e"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or not MIN_DIM <= v <= MAX_DIM:
                raise ConfigError(f"must be an integer in [{MIN_DIM}, {MAX_DIM}], got {v!r}", f"$.{name}")
        if self.mode not in ("exact", "sampled"):
            raise ConfigError(f"must be 'exact' or 'sampled', got {self.mode!r}", "$.mode")
        shot_sweep = isinstance(self.sweep, dict) and self.sweep.get("axis") == "shots"
        if self.mode == "sampled" and not (shot_sweep and self.shots is None):
            if not isinstance(self.shots, int) or self.shots < MIN_SHOTS:
                raise ConfigError(f"sampled mode needs an integer shots >= {MIN_SHOTS}, got {self.shots!r}", "$.shots")
        if not isinstance(self.seeds, (list, tuple)) or not self.seeds:
            raise ConfigError("must be a non-empty list of integers", "$.seeds")
        for n, s in enumerate(self.seeds):
            if not isinstance(s, int) or isinstance(s, bool) or s < 0:
                raise ConfigError(f"seed must be a non-negative integer, got {s!r}", f"$.seeds[{n}]")
        if not (isinstance(self.theta, (int, float)) and math.isfinite(self.theta)):
            raise ConfigError("must be a finite real number", "$.theta")
        if not 0 <= self.lam < 1:
            raise ConfigError("must lie in [0, 1)", "$.lam")
        if self.method not in ("first_order", "refined"):
            raise ConfigError("must be 'first_order' or 'refined'", "$.method")
        if self.sweep is not None:
            if not isinstance(self.sweep, dict) or self.sweep.get("axis") not in SWEEP_AXES:
                raise ConfigError(f"sweep axis must be one of {list(SWEEP_AXES)}", "$.sweep.axis")
            vals = self.sweep.get("values")
            if not isinstance(vals, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in vals
            ):
                raise ConfigError("must be a list of positive numbers", "$.sweep.values")
        self._validate_instance()

    def _validate_instance(self):
        if self.chi is not None:
            chi = np.asarray(self.chi, dtype=complex).ravel()
            if chi.size != 2 or min(abs(chi)) <= 1e-8:
                raise ConfigError("probe state must have two nonzero amplitudes", "$.chi")
        if self.xi is not None:
            xi = np.asarray(self.xi, dtype=complex).ravel()
            if xi.size != self.d_e or min(abs(xi)) <= 1e-8:
                raise ConfigError(f"environment state needs {self.d_e} nonzero amplitudes", "$.xi")
        inst = self.instance or {}
        for key in inst:
            if key not in ("kraus", "rho", "u1", "generator"):
                raise ConfigError(f"unknown instance operator {key!r}", f"$.instance.{key}")
        d = self.d_s
        if "kraus" in inst:
            ops = inst["kraus"]
            for n, a in enumerate(ops):
                if a.shape != (d, d):
                    raise ConfigError(f"shape {a.shape} != ({d}, {d})", f"$.instance.kraus[{n}]")
            if len(ops) != self.d_e:
                raise ConfigError(f"{len(ops)} operators given but d_e = {self.d_e}", "$.instance.kraus")
            res = completeness_residual(ops)
            if res > 1e-9:
                raise ConfigError(f"Kraus set violates completeness (residual {res:.3e})", "$.instance.kraus")
        if "rho" in inst:
            try:
                r = DensityMatrix(inst["rho"])
            except KrauscopeError as exc:
                raise ConfigError(str(exc), "$.instance.rho") from exc
            if r.dim != d:
                raise ConfigError(f"dimension {r.dim} != d_s = {d}", "$.instance.rho")
        if "u1" in inst:
            u = inst["u1"]
            if u.shape != (d, d):
                raise ConfigError(f"shape {u.shape} != ({d}, {d})", "$.instance.u1")
            res = float(np.linalg.norm(u.conj().T @ u - np.eye(d)))
            if res > 1e-10:
                raise ConfigError(f"not unitary (||U^dag U - I||_F = {res:.3e})", "$.instance.u1")
        if "generator" in inst:
            g = inst["generator"]
            if g.shape != (d, d) or not matcore.is_hermitian(g):
                raise ConfigError(f"must be a Hermitian {d}x{d} matrix", "$.instance.generator")

    # -- (de)serialization --------------------------------------------------

    def to_dict(self, resolved: bool = False) -> dict:
        """Plain-JSON form.  ``resolved=True`` also spells out default states."""
        out = {
            k: v
            for k, v in asdict(self).items()
            if k not in ("chi", "xi", "instance")
        }
        out["seeds"] = list(self.seeds)
        if self.chi is not None:
            out["chi"] = encode_operator(self.chi)
        if self.xi is not None:
            out["xi"] = encode_operator(self.xi)
        if self.instance:
            inst = {}
            for key, val in self.instance.items():
                inst[key] = [encode_operator(a) for a in val] if key == "kraus" else encode_operator(val)
            out["instance"] = inst
        if resolved:
            out["chi"] = encode_operator(PLUS if self.chi is None else self.chi)
            out["xi"] = encode_operator(uniform_state(self.d_e) if self.xi is None else self.xi)
            out["instance_source"] = self.instance_source
            if self.kind != "density" and "rho" not in (self.instance or {}):
                out["input_state"] = f"(1 - lam)|+><+| + lam I/d, lam = {self.lam}"
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object", "$")
        known = set(cls.__dataclass_fields__)
        for key in d:
            if key not in known:
                raise ConfigError(f"unknown field {key!r}", f"$.{key}")
        if "kind" not in d:
            raise ConfigError("missing required field", "$.kind")
        kw = dict(d)
        for key in ("chi", "xi"):
            if kw.get(key) is not None:
                kw[key] = decode_operator(kw[key], f"$.{key}").ravel()
        if kw.get("instance") is not None:
            raw = kw["instance"]
            if not isinstance(raw, dict):
                raise ConfigError("must be an object of operators", "$.instance")
            inst = {}
            for key, val in raw.items():
                if key == "kraus":
                    if not isinstance(val, list) or not val:
                        raise ConfigError("must be a non-empty list of operators", "$.instance.kraus")
                    inst[key] = [decode_operator(a, f"$.instance.kraus[{n}]") for n, a in enumerate(val)]
                else:
                    inst[key] = decode_operator(val, f"$.instance.{key}")
            kw["instance"] = inst
        for key in ("theta", "lam", "theta1", "delta_theta"):
            if key in kw and (not isinstance(kw[key], (int, float)) or isinstance(kw[key], bool)):
                raise ConfigError("must be a number", f"$.{key}")
            if key in kw:
                kw[key] = float(kw[key])
        return cls(**kw)


@dataclass
class ExperimentReport:
    config: dict
    records: list
    summary: dict
    slopes: dict = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "version": self.version,
            "config": self.config,
            "summary": self.summary,
            "slopes": self.slopes,
            "records": self.records,
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return to_jsonable(d)

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2)

    def csv_rows(self) -> list:
        rows = []
        for rec in self.records:
            for el in rec.get("elements", []):
                est, true = complex(el["est"]), complex(el["true"])
                rows.append(
                    {
                        "seed": rec["seed"],
                        "sweep_value": rec.get("sweep_value", ""),
                        "method": rec.get("method", ""),
                        "repetition": rec.get("repetition", ""),
                        "i": el["i"],
                        "j": el["j"],
                        "k": "" if el["k"] is None else el["k"],
                        "re_est": repr(est.real),
                        "im_est": repr(est.imag),
                        "re_true": repr(true.real),
                        "im_true": repr(true.imag),
                        "abs_err": repr(abs(est - true)),
                    }
                )
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["seed", "sweep_value", "method", "repetition", "i", "j", "k", "re_est", "im_est", "re_true", "im_true", "abs_err"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(self.csv_rows())
        return buf.getvalue()


# -- instance generation -------------------------------------------------------

def _seed_for(seed: int, *tags: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, *tags])


def build_setup(cfg: ExperimentConfig, seed: int, shots_seed: Optional[int] = None, shots=None):
    """Return ``(setup, truth)``.  ``truth`` is the oracle target (list for kraus/povm)."""
    inst = cfg.instance or {}
    chi = PLUS.copy() if cfg.chi is None else np.asarray(cfg.chi, dtype=complex)
    xi = uniform_state(cfg.d_e) if cfg.xi is None else np.asarray(cfg.xi, dtype=complex)
    shots = shots if shots is not None else (cfg.shots if cfg.mode == "sampled" else None)
    setup = Setup(chi=chi, theta=cfg.theta, shots=shots, seed=seed if shots_seed is None else shots_seed)
    d = cfg.d_s
    probe_state = DensityMatrix(inst["rho"]) if "rho" in inst else default_input_state(d, cfg.lam)
    if cfg.kind in ("kraus", "povm"):
        if "kraus" in inst:
            dil = dilation_from_kraus(KrausSet(tuple(inst["kraus"])), xi)
        else:
            dil = random_dilation(d, cfg.d_e, _seed_for(seed, 1), xi=xi / np.linalg.norm(xi))
        setup.dil = dil
        setup.rho_s = probe_state
        ops = [kraus_from_dilation(dil, k) for k in range(dil.d_e)]
        truth = ops if cfg.kind == "kraus" else [a.conj().T @ a for a in ops]
    elif cfg.kind == "unitary":
        setup.u1 = inst["u1"] if "u1" in inst else matcore.random_unitary(d, _seed_for(seed, 2))
        setup.rho_s = probe_state
        truth = setup.u1
    elif cfg.kind == "observable":
        setup.generator = inst["generator"] if "generator" in inst else matcore.random_hermitian(d, _seed_for(seed, 3))
        setup.rho_s = probe_state
        setup.observable = ObservableEstimatorConfig(cfg.theta1, cfg.theta1 - cfg.delta_theta, cfg.method)
        truth = setup.generator
    else:  # density
        setup.rho_s = DensityMatrix(inst["rho"]) if "rho" in inst else DensityMatrix(matcore.random_density(d, _seed_for(seed, 4)))
        setup.u1 = inst.get("u1")
        truth = setup.rho_s.mat
    return setup, truth


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``; ``sigma`` is Hermitised first."""
    sigma = 0.5 * (sigma + sigma.conj().T)
    s = matcore.sqrtm_psd(rho)
    m = s @ sigma @ s
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(np.sum(np.sqrt(np.clip(w, 0, None))) ** 2)


def _element_rows(est, true, k=None):
    d = est.shape[0]
    return [
        {"i": i, "j": j, "k": k, "est": complex(est[i, j]), "true": complex(true[i, j])}
        for i in range(d)
        for j in range(d)
    ]


def reconstruct(cfg: ExperimentConfig, setup: Setup, truth) -> dict:
    """Run one reconstruction and compare against the oracle."""
    rec = {}
    if cfg.kind in ("kraus", "povm"):
        if cfg.kind == "kraus":
            recs = kraus_set_full(setup)
        else:
            runner = _kraus_runner(setup)
            recs = [povm_full(setup, k, runner) for k in range(setup.dil.d_e)]
        ests = [r.elements for r in recs]
        err = math.sqrt(sum(matcore.frobenius_distance(e, t) ** 2 for e, t in zip(ests, truth)))
        d = ests[0].shape[0]
        if cfg.kind == "kraus":
            residuals = {"completeness": completeness_residual(ests)}
        else:
            residuals = {
                "completeness": float(np.linalg.norm(sum(ests) - np.eye(d))),
                "hermiticity": max(float(np.linalg.norm(e - e.conj().T)) for e in ests),
            }
        rec["elements"] = [row for k, (e, t) in enumerate(zip(ests, truth)) for row in _element_rows(e, t, k)]
        rec["settings_used"] = recs[0].settings_used
        rec["unreliable"] = int(sum(0 if r.unreliable is None else int(r.unreliable.sum()) for r in recs))
    else:
        r = {"unitary": unitary_full, "observable": observable_full, "density": density_full}[cfg.kind](setup)
        est = r.elements
        err = matcore.frobenius_distance(est, truth)
        d = est.shape[0]
        if cfg.kind == "unitary":
            residuals = {"unitarity": float(np.linalg.norm(est.conj().T @ est - np.eye(d)))}
        elif cfg.kind == "density":
            residuals = {
                "hermiticity": float(np.linalg.norm(est - est.conj().T)),
                "trace": float(abs(np.trace(est) - 1)),
            }
            rec["fidelity"] = fidelity(truth, est)
        else:
            residuals = {"hermiticity": float(np.linalg.norm(est - est.conj().T))}
        rec["elements"] = _element_rows(est, truth)
        rec["settings_used"] = r.settings_used
        rec["unreliable"] = 0 if r.unreliable is None else int(r.unreliable.sum())
    rec["frobenius_error"] = err
    rec["max_abs_error"] = max(abs(el["est"] - el["true"]) for el in rec["elements"])
    rec["residuals"] = residuals
    return rec


def _ols_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def _summarise(records: list) -> dict:
    ok = [r for r in records if r.get("error") is None]
    summary = {"n_records": len(records), "n_failed": len(records) - len(ok)}
    if ok:
        errs = [r["frobenius_error"] for r in ok]
        summary.update(
            max_frobenius_error=max(errs),
            mean_frobenius_error=float(np.mean(errs)),
            median_frobenius_error=float(np.median(errs)),
            settings_used=sorted({r["settings_used"] for r in ok}),
        )
    return summary


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run ``cfg`` for every seed (in sorted order).

    Element-level failures are recorded on the seed's record and do not abort
    the batch.  A config with a sweep is forwarded to the matching sweep.
    """
    if cfg.sweep is not None:
        if cfg.sweep["axis"] == "delta_theta":
            return sweep_delta_theta(cfg)
        return sweep_shots(cfg)
    t0 = time.perf_counter()
    records = []
    for seed in sorted(cfg.seeds):
        try:
            setup, truth = build_setup(cfg, seed)
            rec = reconstruct(cfg, setup, truth)
            rec["error"] = None
        except KrauscopeError as exc:
            rec = {"error": f"{type(exc).__name__}: {exc}"}
        rec["seed"] = seed
        records.append(rec)
    return ExperimentReport(
        config=cfg.to_dict(resolved=True), records=records, summary=_summarise(records), wall_time=time.perf_counter() - t0
    )


def sweep_delta_theta(cfg: ExperimentConfig) -> ExperimentReport:
    """Observable estimator error against ``delta_theta`` for both estimators."""
    if cfg.kind != "observable":
        raise ConfigError("delta-theta sweeps need kind 'observable'", "$.kind")
    values = sorted(float(v) for v in (cfg.sweep or {}).get("values", []))
    if len(values) < 4:
        raise ConfigError("need at least 4 delta_theta values", "$.sweep.values")
    if values[-1] / values[0] < 8 - 1e-12:
        raise ConfigError("delta_theta values must span at least a factor of 8", "$.sweep.values")
    t0 = time.perf_counter()
    records = []
    per_seed = {"first_order": [], "refined": []}
    for seed in sorted(cfg.seeds):
        curves = {"first_order": [], "refined": []}
        for dt in values:
            for method in ("first_order", "refined"):
                sub = ExperimentConfig(**{**_plain_fields(cfg), "sweep": None, "delta_theta": dt, "method": method})
                setup, truth = build_setup(sub, seed)
                rec = reconstruct(sub, setup, truth)
                rec.update(seed=seed, sweep_value=dt, method=method, error=None)
                records.append(rec)
                curves[method].append(rec["max_abs_error"])
        for method in curves:
            per_seed[method].append(_ols_slope(values, curves[method]))
    slopes = {}
    for method in ("first_order", "refined"):
        mean_curve = [
            float(np.mean([r["max_abs_error"] for r in records if r["method"] == method and r["sweep_value"] == dt]))
            for dt in values
        ]
        slopes[method] = _ols_slope(values, mean_curve)
        slopes[f"{method}_per_seed"] = per_seed[method]
        slopes[f"{method}_mean_error"] = mean_curve
    refined_le = all(
        r_ref["max_abs_error"] <= r_fo["max_abs_error"]
        for r_fo, r_ref in zip(records[0::2], records[1::2])
    )
    summary = _summarise(records)
    summary["refined_le_first_order_everywhere"] = refined_le
    summary["delta_theta_values"] = values
    return ExperimentReport(
        config=cfg.to_dict(resolved=True), records=records, summary=summary, slopes=slopes, wall_time=time.perf_counter() - t0
    )


def _plain_fields(cfg: ExperimentConfig) -> dict:
    return {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}


def sweep_shots(cfg: ExperimentConfig, repetitions: Optional[int] = None) -> ExperimentReport:
    """RMSE of the reconstruction against shot count, over repeated runs.

    The instance is fixed by ``cfg.seeds[0]``; repetitions differ only in the
    sampling streams.
    """
    if cfg.mode != "sampled":
        raise ConfigError("shot sweeps need mode 'sampled'", "$.mode")
    reps = cfg.repetitions if repetitions is None else repetitions
    if reps < MIN_REPETITIONS:
        raise ConfigError(f"need at least {MIN_REPETITIONS} repetitions for a slope fit", "$.repetitions")
    levels = sorted(int(v) for v in (cfg.sweep or {}).get("values", []))
    if len(levels) < 3:
        raise ConfigError("need at least 3 shot levels", "$.sweep.values")
    if min(levels) < MIN_SHOTS:
        raise ConfigError(f"shot levels must be >= {MIN_SHOTS}", "$.sweep.values")
    ratios = [b / a for a, b in zip(levels, levels[1:])]
    if max(ratios) - min(ratios) > 1e-9 * max(ratios) or ratios[0] <= 1:
        raise ConfigError("shot levels must form an increasing geometric progression", "$.sweep.values")
    t0 = time.perf_counter()
    base = cfg.seeds[0]
    records = []
    rmse = []
    for li, shots in enumerate(levels):
        errs = []
        for rep in range(reps):
            stream = int(_seed_for(base, 5, li, rep).generate_state(1)[0])
            setup, truth = build_setup(cfg, base, shots_seed=stream, shots=shots)
            rec = reconstruct(cfg, setup, truth)
            rec.update(seed=base, sweep_value=shots, repetition=rep, error=None)
            records.append(rec)
            errs.append(rec["frobenius_error"])
        rmse.append(float(np.sqrt(np.mean(np.square(errs)))))
    positive = all(r > 0 for r in rmse)
    slopes = {"rmse": rmse, "shots": levels, "slope": _ols_slope(levels, rmse) if positive else 0.0}
    summary = _summarise(records)
    summary["rmse"] = rmse
    return ExperimentReport(
        config=cfg.to_dict(resolved=True), records=records, summary=summary, slopes=slopes, wall_time=time.perf_counter() - t0
    )

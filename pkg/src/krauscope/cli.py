"""Command-line front end.

    krauscope characterize {kraus,povm,unitary,observable,density} [options]
    krauscope sweep {dtheta,shots} [options]
    krauscope verify
    krauscope demo povm-ambiguity

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import verify
from .characterize import KINDS, Setup, kraus_full, povm_full
from .errors import ConfigError, KrauscopeError
from .harness import ExperimentConfig, run_experiment, sweep_delta_theta, sweep_shots
from .quantum import ambiguous_kraus_pair, default_input_state, dilation_from_kraus

SEED_ENV = "KRAUSCOPE_SEED"

DEFAULT_DTHETA = [0.1, 0.05, 0.025, 0.0125]
DEFAULT_SHOT_LEVELS = [10_000, 40_000, 160_000]


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc.strerror}", "$") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}", "$") from exc


def load_config(path) -> ExperimentConfig:
    """Read and validate a config; explicit operators are physics-checked here too."""
    return ExperimentConfig.from_dict(_read_json(path))


def save_config(cfg: ExperimentConfig, path):
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="experiment config (JSON)")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, help=f"single seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--mode", choices=("exact", "sampled"))
    p.add_argument("--shots", type=int)
    p.add_argument("--theta", type=float, help="projector-unitary angle in radians")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krauscope",
        description="Direct characterization of Kraus operators, POVMs, unitaries, observables and states.",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("characterize", help="full reconstruction of one target kind")
    p.add_argument("kind", choices=KINDS)
    _common(p)

    p = sub.add_parser("sweep", help="delta-theta or shot-count sweep")
    p.add_argument("axis", choices=("dtheta", "shots"))
    _common(p)

    sub.add_parser("verify", help="run the built-in invariant suite")

    p = sub.add_parser("demo", help="worked examples")
    p.add_argument("name", choices=("povm-ambiguity",))
    return parser


def _resolve_config(args, kind, defaults, forced=None) -> ExperimentConfig:
    seed_from_config = False
    if args.config:
        seed_from_config = "seeds" in _read_json(args.config)
        raw = load_config(args.config).to_dict()
        if raw["kind"] != kind:
            raise ConfigError(f"config kind {raw['kind']!r} does not match command kind {kind!r}", "$.kind")
        for key, val in defaults.items():
            raw.setdefault(key, val)
        if "sweep" in defaults and raw.get("sweep") is None:
            raw["sweep"] = defaults["sweep"]
    else:
        raw = {"kind": kind, **defaults}
    raw.update(forced or {})
    if args.seed is not None:
        raw["seeds"] = [args.seed]
    elif os.environ.get(SEED_ENV) and not seed_from_config:
        try:
            raw["seeds"] = [int(os.environ[SEED_ENV])]
        except ValueError:
            raise ConfigError(f"${SEED_ENV} must be an integer", "$.seeds") from None
    if args.mode is not None:
        raw["mode"] = args.mode
    if args.shots is not None:
        raw["shots"] = args.shots
    if args.theta is not None:
        raw["theta"] = args.theta
    return ExperimentConfig.from_dict(raw)


def _emit(report, args):
    text = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_characterize(args) -> int:
    cfg = _resolve_config(args, args.kind, {})
    report = run_experiment(cfg)
    _emit(report, args)
    failed = report.summary["n_failed"]
    if failed:
        for rec in report.records:
            if rec.get("error"):
                print(f"seed {rec['seed']}: {rec['error']}", file=sys.stderr)
        return 1
    return 0


def _cmd_sweep(args) -> int:
    if args.axis == "dtheta":
        defaults = {"d_s": 3, "sweep": {"axis": "delta_theta", "values": DEFAULT_DTHETA}}
        cfg = _resolve_config(args, "observable", defaults)
        report = sweep_delta_theta(cfg)
    else:
        defaults = {"mode": "sampled", "sweep": {"axis": "shots", "values": DEFAULT_SHOT_LEVELS}}
        cfg = _resolve_config(args, "kraus", defaults, forced={"mode": "sampled"})
        report = sweep_shots(cfg)
    _emit(report, args)
    return 0


def _cmd_verify(args) -> int:
    ok = True
    for name, passed, detail in verify.run_all():
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    return 0 if ok else 1


def _fmt(m) -> str:
    return np.array2string(np.round(m, 6), precision=6, suppress_small=True)


def _cmd_demo(args) -> int:
    ks, ks_tilde = ambiguous_kraus_pair()
    rho = default_input_state(2)
    results = []
    for label, kset in (("A0 = I/sqrt(2)", ks), ("A0~ = (X + Z)/2", ks_tilde)):
        setup = Setup(dil=dilation_from_kraus(kset), rho_s=rho)
        a = kraus_full(setup, 0)
        e = povm_full(setup, 0)
        results.append((a.elements, e.elements))
        print(f"Kraus set with {label}")
        print(f"  reconstructed A0 ({a.settings_used} settings):\n{_fmt(a.elements)}")
        print(f"  reconstructed E0:\n{_fmt(e.elements)}\n")
    (a0, e0), (a0t, e0t) = results
    dist_a = float(np.linalg.norm(a0 - a0t))
    dist_e = float(np.max(np.abs(e0 - e0t)))
    print(f"||A0 - A0~||_F = {dist_a:.6f}   (different Kraus operators)")
    print(f"max |E0 - E0~| = {dist_e:.2e}   (same POVM element I/2)")
    half = 0.5 * np.eye(2)
    ok = dist_a > 0.5 and np.max(np.abs(e0 - half)) <= 1e-9 and np.max(np.abs(e0t - half)) <= 1e-9
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    handler = {
        "characterize": _cmd_characterize,
        "sweep": _cmd_sweep,
        "verify": _cmd_verify,
        "demo": _cmd_demo,
    }[args.command]
    try:
        return handler(args)
    except KrauscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

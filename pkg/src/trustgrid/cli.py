"""Command-line front end: spec parsing, experiment dispatch, CSV output.

Experiment specs are JSON files.  Every field has a documented default and
unknown keys are rejected, so a spec plus this package version pins an
experiment exactly; the resolved configuration (defaults filled in) is
echoed into the output header and a metadata sidecar.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, metrics
from .controller import LqrConfig
from .linsys import (
    DEFAULT_DT,
    DEFAULT_MEASUREMENT_NOISE,
    DEFAULT_PROCESS_NOISE,
    build_case_study,
    case_study_inertia,
    case_study_stiffness,
    ContinuousCaseStudy,
    model_from_dict,
    model_to_dict,
)
from .sim import CONTROL_MODES, SimConfig, run, run_batch
from .threat import ATTACK_MODES, AttackerConfig

KINDS = ("trace", "cdf", "roc", "cost_vs_frequency", "cost_vs_amplitude")

# Sweep key each kind requires (None: no sweep allowed).
_KIND_SWEEP = {
    "trace": None,
    "cdf": "frequencies",
    "roc": "thresholds",
    "cost_vs_frequency": "frequencies",
    "cost_vs_amplitude": "amplitudes",
}

_SPEC_KEYS = {
    "kind",
    "model",
    "lqr",
    "attacker",
    "horizon",
    "seed",
    "realizations",
    "control_mode",
    "prior_odds",
    "detection_threshold",
    "init_scale",
    "prior_var",
    "forgetting",
    "include_full_filter_weight",
    "sweep",
    "output",
}

_ATTACKER_KEYS = {"target", "mode", "frequency", "amplitude"}
_LQR_KEYS = {"Q", "Pc", "beta"}

DEFAULT_SEED = 12345


@dataclass
class ExperimentSpec:
    """Fully resolved experiment: kind, simulation config, sweep, output."""

    kind: str
    sim: SimConfig
    realizations: int
    sweep: dict | None
    output: str
    model_spec: dict
    lqr_spec: dict

    def to_dict(self) -> dict:
        """Canonical JSON form with every default made explicit."""
        data = {
            "kind": self.kind,
            "model": self.model_spec,
            "lqr": self.lqr_spec,
            "attacker": {
                "target": self.sim.attacker.target,
                "mode": self.sim.attacker.mode,
                "frequency": self.sim.attacker.frequency,
                "amplitude": self.sim.attacker.amplitude,
            },
            "horizon": self.sim.horizon,
            "seed": self.sim.seed,
            "realizations": self.realizations,
            "control_mode": self.sim.control_mode,
            "prior_odds": self.sim.prior_odds,
            "detection_threshold": self.sim.detection_threshold,
            "init_scale": self.sim.init_scale,
            "prior_var": self.sim.prior_var,
            "forgetting": self.sim.forgetting,
            "include_full_filter_weight": self.sim.include_full_filter_weight,
            "output": self.output,
        }
        if self.sweep is not None:
            data["sweep"] = self.sweep
        return data

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExperimentSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _reject_unknown(data: dict, allowed: set, context: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown {context} keys: {sorted(unknown)}")


def _resolve_model(data: dict | None) -> tuple:
    """Returns (model, resolved model spec dict)."""
    if data is None:
        data = {"case_study": {}}
    if "case_study" in data:
        cs = dict(data["case_study"])
        resolved = {
            "case_study": {
                "M": np.asarray(cs.get("M", case_study_inertia()), dtype=float).tolist(),
                "K": np.asarray(cs.get("K", case_study_stiffness()), dtype=float).tolist(),
                "dt": float(cs.get("dt", DEFAULT_DT)),
                "process_noise": float(cs.get("process_noise", DEFAULT_PROCESS_NOISE)),
                "measurement_noise": float(cs.get("measurement_noise", DEFAULT_MEASUREMENT_NOISE)),
            }
        }
        model = model_from_dict(data)  # validates unknown keys too
        return model, resolved
    model = model_from_dict(data)
    return model, model_to_dict(model)


def _resolve_lqr(data: dict | None, n_states: int, n_inputs: int) -> tuple:
    """Returns (LqrConfig, resolved lqr spec dict).  Scalars mean scale * I."""
    if data is None:
        data = {}
    _reject_unknown(data, _LQR_KEYS, "lqr")
    q_spec = data.get("Q", 1.0)
    pc_spec = data.get("Pc", 0.01)
    beta = float(data.get("beta", 1.0))

    def expand(spec, size, name):
        arr = np.asarray(spec, dtype=float)
        if arr.ndim == 0:
            return float(arr) * np.eye(size), float(arr)
        if arr.shape != (size, size):
            raise ValueError(f"lqr.{name} must be scalar or {size}x{size}, got shape {arr.shape}")
        return arr, arr.tolist()

    q_mat, q_resolved = expand(q_spec, n_states, "Q")
    pc_mat, pc_resolved = expand(pc_spec, n_inputs, "Pc")
    cfg = LqrConfig(Q=q_mat, Pc=pc_mat, beta=beta)
    return cfg, {"Q": q_resolved, "Pc": pc_resolved, "beta": beta}


def _resolve_attacker(data: dict | None) -> AttackerConfig:
    if data is None:
        data = {}
    _reject_unknown(data, _ATTACKER_KEYS, "attacker")
    return AttackerConfig(
        target=int(data.get("target", 0)),
        mode=str(data.get("mode", "none")),
        frequency=float(data.get("frequency", 0.0)),
        amplitude=float(data.get("amplitude", 0.0)),
    )


def _resolve_sweep(kind: str, data: dict | None) -> dict | None:
    required = _KIND_SWEEP[kind]
    if required is None:
        if data is not None:
            raise ValueError(f"kind {kind!r} does not take a sweep")
        return None
    if data is None:
        raise ValueError(f"kind {kind!r} requires a sweep with key {required!r}")
    _reject_unknown(data, {required}, "sweep")
    values = [float(v) for v in data.get(required, [])]
    if not values:
        raise ValueError(f"sweep.{required} must be a non-empty list")
    for v in values:
        if required == "frequencies" and not 0.0 <= v <= 1.0:
            raise ValueError(f"sweep.frequencies entries must be in [0, 1], got {v}")
        if required == "thresholds" and not 0.0 < v < 1.0:
            raise ValueError(f"sweep.thresholds entries must be in (0, 1), got {v}")
        if required == "amplitudes" and v < 0.0:
            raise ValueError(f"sweep.amplitudes entries must be non-negative, got {v}")
    return {required: values}


def parse_spec_dict(data: dict) -> ExperimentSpec:
    """Validate a spec dictionary and fill in every default."""
    _reject_unknown(data, _SPEC_KEYS, "spec")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")

    model, model_spec = _resolve_model(data.get("model"))
    lqr, lqr_spec = _resolve_lqr(data.get("lqr"), model.n_states, model.n_inputs)
    attacker = _resolve_attacker(data.get("attacker"))
    sweep = _resolve_sweep(kind, data.get("sweep"))

    realizations = int(data.get("realizations", 1 if kind == "trace" else 100))
    if kind == "trace" and realizations != 1:
        raise ValueError("realizations must be 1 for kind 'trace'")
    if realizations < 1:
        raise ValueError(f"realizations must be at least 1, got {realizations}")

    if kind in ("cdf", "roc", "cost_vs_frequency", "cost_vs_amplitude") and attacker.mode == "none":
        raise ValueError(f"kind {kind!r} requires attacker.mode of 'replace' or 'additive'")

    sim_cfg = SimConfig(
        model=model,
        lqr=lqr,
        attacker=attacker,
        horizon=int(data.get("horizon", 200)),
        seed=int(data.get("seed", DEFAULT_SEED)),
        control_mode=str(data.get("control_mode", "weighted")),
        prior_odds=float(data.get("prior_odds", 0.0)),
        detection_threshold=float(data.get("detection_threshold", 0.7)),
        init_scale=float(data.get("init_scale", 1.0)),
        prior_var=float(data.get("prior_var", 1.0)),
        forgetting=float(data.get("forgetting", 1.0)),
        include_full_filter_weight=bool(data.get("include_full_filter_weight", False)),
    )
    return ExperimentSpec(
        kind=kind,
        sim=sim_cfg,
        realizations=realizations,
        sweep=sweep,
        output=str(data.get("output", f"{kind}.csv")),
        model_spec=model_spec,
        lqr_spec=lqr_spec,
    )


def parse_spec(path: str | Path) -> ExperimentSpec:
    """Load, validate, and resolve an experiment spec file."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: spec must be a JSON object")
    return parse_spec_dict(data)


def write_spec(spec: ExperimentSpec, path: str | Path) -> None:
    """Write the fully resolved spec back out as JSON."""
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")


def _with_attack(cfg: SimConfig, **kwargs) -> SimConfig:
    return replace(cfg, attacker=replace(cfg.attacker, **kwargs))


def _run_experiment(spec: ExperimentSpec, csv_path: Path, metadata: dict) -> None:
    cfg = spec.sim
    if spec.kind == "trace":
        result = run(cfg)
        metrics.write_trace_csv(csv_path, result, metadata)
    elif spec.kind == "cdf":
        curves = []
        for freq in spec.sweep["frequencies"]:
            batch = run_batch(_with_attack(cfg, frequency=freq), spec.realizations)
            stats = metrics.DetectionStats.from_results(batch)
            curves.append((freq, metrics.detection_cdf(stats, cfg.horizon)))
        metrics.write_cdf_csv(csv_path, curves, metadata)
    elif spec.kind == "roc":
        points = metrics.roc_sweep(cfg, spec.sweep["thresholds"], spec.realizations)
        metrics.write_roc_csv(csv_path, points, metadata)
    else:
        param = "frequency" if spec.kind == "cost_vs_frequency" else "amplitude"
        rows = []
        for value in spec.sweep[f"{param}s" if param == "amplitude" else "frequencies"]:
            varied = _with_attack(cfg, **{param: value})
            weighted = run_batch(replace(varied, control_mode="weighted"), spec.realizations)
            full = run_batch(replace(varied, control_mode="full_trust"), spec.realizations)
            rows.append((value, metrics.average_cost(weighted), metrics.average_cost(full)))
        metrics.write_cost_csv(csv_path, param, rows, metadata)


def execute(spec: ExperimentSpec) -> int:
    """Run the experiment and write its CSV plus a JSON metadata sidecar.

    Returns 0 on success.  On failure any partial output is removed and
    the error propagates to the caller.
    """
    output = Path(spec.output)
    partial = output.with_name(output.name + ".part")
    metadata = spec.to_dict()
    started = time.perf_counter()
    try:
        _run_experiment(spec, partial, metadata)
    except BaseException:
        partial.unlink(missing_ok=True)
        raise
    os.replace(partial, output)
    sidecar = output.with_name(output.name + ".meta.json")
    sidecar.write_text(
        json.dumps(
            {
                "config": metadata,
                "version": __version__,
                "wall_time_s": time.perf_counter() - started,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return 0


def _cmd_run(args) -> int:
    try:
        spec = parse_spec(args.spec)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.realizations is not None:
            overrides["realizations"] = args.realizations
        if args.output is not None:
            overrides["output"] = args.output
        if overrides:
            data = spec.to_dict()
            data.update(overrides)
            spec = parse_spec_dict(data)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        execute(spec)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {spec.output} ({spec.kind}, seed {spec.sim.seed})")
    return 0


def _cmd_validate(args) -> int:
    try:
        spec = parse_spec(args.spec)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(spec.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_show_model(args) -> int:
    try:
        if args.spec is not None:
            model = parse_spec(args.spec).sim.model
        else:
            model = build_case_study(ContinuousCaseStudy())
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(model_to_dict(model), indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="trustgrid",
        description="Trust-weighted secure LQR control experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment spec")
    p_run.add_argument("spec", help="path to a JSON experiment spec")
    p_run.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p_run.add_argument(
        "--realizations", type=int, default=None, help="override the realization count"
    )
    p_run.add_argument("--output", default=None, help="override the output CSV path")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a spec and print it resolved")
    p_val.add_argument("spec", help="path to a JSON experiment spec")
    p_val.set_defaults(func=_cmd_validate)

    p_show = sub.add_parser("show-model", help="print the resolved plant matrices")
    p_show.add_argument("spec", nargs="?", default=None, help="optional spec to resolve")
    p_show.set_defaults(func=_cmd_show_model)

    args = parser.parse_args(argv)
    return args.func(args)


def console_main() -> None:
    sys.exit(main())

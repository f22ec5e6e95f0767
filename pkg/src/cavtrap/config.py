"""Config resolution: preset defaults <- config file <- --set overrides.

A resolved RunConfig has every downstream object constructed (SystemParams
for both drive levels, TriggerConfig, InitialConditionModel,
IntegratorConfig), so all type invariants are enforced before any
computation starts.  The resolved plain-dict form (cfg.raw) serializes to
YAML and hashes deterministically; resolving a serialized resolved config
reproduces it exactly.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

import yaml

from . import presets
from .quantum import SystemParams
from .tables import drive_for_target
from .trajectory import InitialConditionModel, IntegratorConfig, TriggerConfig


class ValidationError(Exception):
    def __init__(self, field_name, message=None):
        self.field = field_name
        super().__init__(message or f"invalid or missing field: {field_name}")


def _deep_merge(base, update):
    out = copy.deepcopy(base)
    for key, val in update.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def parse_set_args(pairs):
    """--set a.b.c=value overrides; values parsed as YAML scalars/lists."""
    tree = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValidationError(pair, f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        node = tree
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = yaml.safe_load(raw)
    return tree


@dataclass
class RunConfig:
    preset: str
    probe_params: SystemParams
    trap_params: SystemParams
    trigger: TriggerConfig
    initial: InitialConditionModel
    integrator: IntegratorConfig
    n_grid: int
    n_trajectories: int
    base_seed: int
    triggered: bool
    out_dir: str
    analyses: list
    analysis: dict
    raw: dict = field(repr=False, default_factory=dict)


def resolve_config(config_file=None, preset=None, set_args=(), **flags):
    """Build a validated RunConfig from file + flags (flags win over the file).

    flags accepts n (trajectories), seed, out, untriggered (bool),
    flip_friction (bool).
    """
    file_data = {}
    if config_file is not None:
        with open(config_file) as fh:
            file_data = yaml.safe_load(fh) or {}
    name = preset or file_data.get("preset") or "hood"
    try:
        merged = presets.preset_defaults(name)
    except KeyError as exc:
        raise ValidationError("preset", str(exc)) from exc
    merged = _deep_merge(merged, file_data)
    merged = _deep_merge(merged, parse_set_args(set_args))
    if flags.get("n") is not None:
        merged["run"]["n_trajectories"] = int(flags["n"])
    if flags.get("seed") is not None:
        merged["run"]["base_seed"] = int(flags["seed"])
    if flags.get("out") is not None:
        merged["run"]["out_dir"] = str(flags["out"])
    if flags.get("untriggered"):
        merged["run"]["triggered"] = False
    if flags.get("flip_friction"):
        merged["integrator"]["friction_sign"] = -abs(
            merged["integrator"].get("friction_sign", 1.0))
    merged["preset"] = name
    return _validate(merged)


def _validate(merged):
    sys_d = merged.get("system", {})
    for key in ("g0", "gamma", "kappa", "delta_ac", "delta_probe",
                "wavelength", "waist", "mass"):
        if sys_d.get(key) is None:
            raise ValidationError(key)
        try:
            sys_d[key] = float(sys_d[key])
        except (TypeError, ValueError) as exc:
            raise ValidationError(key, f"{key} must be a number") from exc
    drive_d = merged.get("drive", {})
    for key in ("probe_target", "trap_target"):
        if drive_d.get(key) is None:
            raise ValidationError(key)
    try:
        base = SystemParams(drive=0.0, fock_cutoff=None, **sys_d)
    except ValueError as exc:
        raise ValidationError("system", str(exc)) from exc

    def _leveled(target_key, cutoff_key):
        amp = drive_for_target(base, float(drive_d[target_key]),
                               "photon_number")
        cutoff = drive_d.get(cutoff_key)
        return base.replace(drive=amp,
                            fock_cutoff=None if cutoff is None else int(cutoff))

    try:
        probe_params = _leveled("probe_target", "probe_fock_cutoff")
        trap_params = _leveled("trap_target", "trap_fock_cutoff")
        trigger = TriggerConfig(**merged["trigger"])
        initial = InitialConditionModel(**merged["initial"])
        integrator = IntegratorConfig(**merged["integrator"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(type(exc).__name__, str(exc)) from exc
    run_d = merged["run"]
    n_grid = int(merged["table"]["n_grid"])
    if n_grid < 64:
        raise ValidationError("table.n_grid", "n_grid must be at least 64")
    # the output directory is runtime plumbing; keep it out of the
    # serialized/hashed config so reruns elsewhere stay byte-identical
    merged = copy.deepcopy(merged)
    merged["run"].pop("out_dir", None)
    return RunConfig(
        preset=merged["preset"], probe_params=probe_params,
        trap_params=trap_params, trigger=trigger, initial=initial,
        integrator=integrator, n_grid=n_grid,
        n_trajectories=int(run_d["n_trajectories"]),
        base_seed=int(run_d["base_seed"]), triggered=bool(run_d["triggered"]),
        out_dir=str(run_d["out_dir"]),
        analyses=list(merged["analysis"].get("run", [])),
        analysis=dict(merged["analysis"]), raw=merged)


def serialize_config(cfg):
    return yaml.safe_dump(cfg.raw, sort_keys=True, default_flow_style=False)


def config_hash(cfg):
    payload = json.dumps(cfg.raw, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]

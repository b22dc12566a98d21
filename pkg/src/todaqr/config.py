"""Experiment configuration: JSON files, named presets and flag overrides."""
import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional

from .ensembles import MASK64, Ensemble
from .errors import ConfigError

COMMANDS = (
    "sample-ensemble",
    "toda-trace",
    "qr-trace",
    "strobe-check",
    "deflate-universality",
    "gap-law",
    "tw-table",
    "sine-gap",
    "xy",
    "lis-mc",
)


@dataclass
class ExperimentConfig:
    command: str = "deflate-universality"
    algorithm: str = "QR"
    ensembles: List[str] = field(default_factory=lambda: ["GOE", "BernoulliWigner"])
    N: int = 100
    epsilon: float = 1e-10
    trials: int = 2000
    master_seed: int = 20140901
    bins: int = 40
    output_dir: Optional[str] = None
    workers: int = 1
    max_iter: int = 10_000
    t_max: float = 1000.0
    coarse_dt: float = 0.05
    reduction: str = "none"
    sigma: float = 0.1
    t_values: List[float] = field(default_factory=lambda: [-4.0, -2.0, 0.0, 2.0])
    s_values: List[float] = field(default_factory=lambda: [0.25, 0.5, 1.0])
    beta: float = 1.0
    quadrature_nodes: int = 50
    dt: float = 0.5
    steps: int = 20
    k_max: int = 5
    tw_table: Optional[str] = None  # CSV with columns t, F used by lis-mc instead of computing F

    def to_dict(self):
        return dataclasses.asdict(self)


FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}

# keys a hand-written config file must provide, per command
REQUIRED = {
    "deflate-universality": ("algorithm", "ensembles", "N", "epsilon", "trials"),
    "gap-law": ("N", "epsilon", "trials"),
    "lis-mc": ("N", "trials"),
}

PRESETS = {
    "qr-universality": dict(command="deflate-universality", algorithm="QR", ensembles=["GOE", "BernoulliWigner"],
                     N=100, epsilon=1e-10, trials=2000),
    "toda-universality": dict(command="deflate-universality", algorithm="Toda", ensembles=["GOE", "BernoulliWigner"],
                       N=100, epsilon=1e-8, trials=2000),
    "gap-law": dict(command="gap-law", ensembles=["GOE"], N=50, epsilon=1e-8, trials=500),
    "tw-table": dict(command="tw-table", t_values=[-6.0, -5.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
                     quadrature_nodes=60),
    "lis-mc": dict(command="lis-mc", N=1000, trials=10_000),
    "xy": dict(command="xy", beta=1.0, t_values=[0.5 * i for i in range(21)], quadrature_nodes=60),
    "sine-gap": dict(command="sine-gap", s_values=[0.25, 0.5, 1.0], quadrature_nodes=50),
}

# alternative names accepted by --preset
PRESET_ALIASES = {"fig3a-qr": "qr-universality", "fig3b-toda": "toda-universality"}

# what a bare subcommand runs with
COMMAND_DEFAULTS = {
    "sample-ensemble": dict(ensembles=["GOE"], N=10, trials=1),
    "toda-trace": dict(ensembles=["GOE"], N=4, t_max=10.0, dt=0.5),
    "qr-trace": dict(ensembles=["GOE"], N=6, steps=20),
    "strobe-check": dict(N=8, trials=100, k_max=5),
    "deflate-universality": PRESETS["qr-universality"],
    "gap-law": PRESETS["gap-law"],
    "tw-table": PRESETS["tw-table"],
    "sine-gap": PRESETS["sine-gap"],
    "xy": PRESETS["xy"],
    "lis-mc": PRESETS["lis-mc"],
}


def _positive_int(name, value):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(name, f"must be a positive integer, got {value!r}")


def _positive_real(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0 or not math.isfinite(value):
        raise ConfigError(name, f"must be a positive number, got {value!r}")


def validate(cfg: ExperimentConfig):
    """Check every field; raises ConfigError naming the first offending one."""
    if cfg.command not in COMMANDS:
        raise ConfigError("command", f"unknown command {cfg.command!r}")
    if cfg.algorithm not in ("QR", "Toda"):
        raise ConfigError("algorithm", f"must be 'QR' or 'Toda', got {cfg.algorithm!r}")
    if not isinstance(cfg.ensembles, list) or not cfg.ensembles:
        raise ConfigError("ensembles", "must be a non-empty list")
    parsed = []
    for name in cfg.ensembles:
        try:
            parsed.append(Ensemble.parse(name).value)
        except ValueError as exc:
            raise ConfigError("ensembles", str(exc)) from None
    if len(set(parsed)) != len(parsed):
        raise ConfigError("ensembles", "duplicate ensemble")
    if cfg.command == "deflate-universality" and "GUE" in parsed:
        raise ConfigError("ensembles", "deflation experiments take real ensembles (GOE, BernoulliWigner)")
    cfg.ensembles = parsed
    for name in ("N", "trials", "bins", "workers", "max_iter", "quadrature_nodes", "steps", "k_max"):
        _positive_int(name, getattr(cfg, name))
    for name in ("t_max", "coarse_dt", "beta", "dt", "sigma"):
        _positive_real(name, getattr(cfg, name))
    if isinstance(cfg.epsilon, bool) or not isinstance(cfg.epsilon, (int, float)) or not 0 < cfg.epsilon < 1:
        raise ConfigError("epsilon", f"must lie in (0, 1), got {cfg.epsilon!r}")
    if isinstance(cfg.master_seed, bool) or not isinstance(cfg.master_seed, int) or not 0 <= cfg.master_seed <= MASK64:
        raise ConfigError("master_seed", "must be an unsigned 64-bit integer")
    if cfg.reduction not in ("none", "tridiagonal"):
        raise ConfigError("reduction", "must be 'none' or 'tridiagonal'")
    if cfg.command in ("deflate-universality", "gap-law") and cfg.N < 2:
        raise ConfigError("N", "deflation needs N >= 2")
    if cfg.command == "deflate-universality" and cfg.trials < 2:
        raise ConfigError("trials", "normalisation needs at least two trials")
    for name in ("t_values", "s_values"):
        values = getattr(cfg, name)
        if not isinstance(values, list) or not all(isinstance(v, (int, float)) for v in values):
            raise ConfigError(name, "must be a list of numbers")
    if any(s < 0 for s in cfg.s_values):
        raise ConfigError("s_values", "must be >= 0")
    if cfg.tw_table is not None and not isinstance(cfg.tw_table, str):
        raise ConfigError("tw_table", "must be a string path")
    if cfg.output_dir is not None and not isinstance(cfg.output_dir, str):
        raise ConfigError("output_dir", "must be a string path")
    return cfg


def from_mapping(data, command=None, require=True):
    unknown = sorted(set(data) - FIELDS)
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    command = data.get("command", command) or "deflate-universality"
    if require:
        for name in REQUIRED.get(command, ()):
            if name not in data:
                raise ConfigError(name, "missing required field")
    merged = dict(COMMAND_DEFAULTS.get(command, {}))
    merged.update(data)
    merged["command"] = command
    return validate(ExperimentConfig(**merged))


def load_preset(name):
    try:
        preset = PRESETS[PRESET_ALIASES.get(name, name)]
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return from_mapping(dict(preset), require=False)


def parse_config(path=None, preset=None, command=None, **overrides):
    """Build a validated config from a JSON file, a preset or the command defaults.

    ``overrides`` (seed, trials, out, workers) are applied last.
    """
    if path is not None and preset is not None:
        raise ConfigError("config", "give either a config file or a preset, not both")
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path} is not valid JSON: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
        cfg = from_mapping(data, command=command)
    elif preset is not None:
        cfg = load_preset(preset)
    else:
        cfg = from_mapping({}, command=command, require=False)
    if command is not None and cfg.command != command:
        raise ConfigError("command", f"config is for {cfg.command!r}, not {command!r}")
    renames = {"seed": "master_seed", "out": "output_dir"}
    data = cfg.to_dict()
    for key, value in overrides.items():
        if value is not None:
            data[renames.get(key, key)] = value
    return validate(ExperimentConfig(**data))

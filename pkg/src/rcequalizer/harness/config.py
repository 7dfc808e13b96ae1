"""Experiment configuration.

Configs are YAML documents whose structure mirrors :class:`ExperimentConfig`.
Unknown keys are rejected with their full path so that a typo in a scan
grid cannot silently fall back to a default.
"""
from __future__ import annotations

import copy
import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from ..channel import PARAM_NAMES, SCHEDULE_KINDS, ChannelParams, ChannelSchedule
from ..prng import NOISE_POLY, SYMBOL_POLY_A, SYMBOL_POLY_B, is_primitive
from ..reservoir import ReservoirConfig, map_attenuation_db
from ..trainer import MODES, TrainerConfig


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class ReservoirBlock:
    n: int = 50                       # neurons
    alpha: float = 0.6                # feedback gain
    attenuation_db: float | None = None  # if set, overrides alpha via 10**(-dB/20)
    beta: float = 0.3                 # input gain
    phi: float = 0.1                  # phase bias, radians
    washout: int = 100                # steps ignored before training
    readout_gain: float = 0.5         # state scale seen by the readout
    state_noise: float = 0.0          # uniform measurement noise on read states

    def effective_alpha(self) -> float:
        if self.attenuation_db is not None:
            return map_attenuation_db(self.attenuation_db)
        return self.alpha


@dataclass
class ScheduleBlock:
    kind: str = "stationary"          # stationary | monotonic | oscillating | switching
    parameter: str = "p1"
    start_value: float = 1.0
    end_value: float = 1.0
    start: int = 0                    # symbol index where variation begins
    duration: int = 1                 # monotonic ramp length
    period: int = 2                   # oscillation full period
    interval: int = 1                 # switching interval
    values: list = field(default_factory=list)

    def build(self) -> ChannelSchedule:
        return ChannelSchedule(self.kind, self.parameter, self.start_value, self.end_value, self.start,
                               self.duration, self.period, self.interval, tuple(self.values))


@dataclass
class ChannelBlock:
    p1: float = 1.0
    p2: float = 0.036
    p3: float = -0.011
    m: float = 0.0
    snr_db: float = math.inf          # .inf for a noiseless channel
    calibration_length: int = 100_000
    symbol_poly_a: list = field(default_factory=lambda: list(SYMBOL_POLY_A))
    symbol_poly_b: list = field(default_factory=lambda: list(SYMBOL_POLY_B))
    noise_poly: list = field(default_factory=lambda: list(NOISE_POLY))
    schedule: ScheduleBlock = field(default_factory=ScheduleBlock)

    def params(self) -> ChannelParams:
        return ChannelParams(self.p1, self.p2, self.p3, self.m)


@dataclass
class TrainerBlock:
    mode: str = "full"                # full | non-stationary | simplified
    lambda0: float = 0.4
    lambda_min: float = 0.0
    gamma: float = 0.999
    k: int = 20
    target_delay: int = 2
    ser_threshold: float = 0.05
    train_length: int | None = 45_000  # null: train for the whole run
    watchdog: bool = False

    def build(self) -> TrainerConfig:
        return TrainerConfig(self.lambda0, self.lambda_min, self.gamma, self.k, self.mode, self.target_delay,
                             self.ser_threshold, self.train_length, self.watchdog)


@dataclass
class EvaluatorBlock:
    window: int = 10_000


@dataclass
class RunBlock:
    test_length: int = 200_000
    paper_scale: bool = False         # use paper_test_length instead of test_length
    paper_test_length: int = 1_000_000
    total_length: int | None = None   # explicit stream length (drift/switch runs)
    masks: int = 10
    pipeline: str = "float"           # float | fixed
    adc_bits: int = 0                 # fixed pipeline: quantise states to this many bits first (0 = off)
    workers: int = 1

    def stream_length(self, washout: int, train_length: int | None) -> int:
        if self.total_length is not None:
            return self.total_length
        test = self.paper_test_length if self.paper_scale else self.test_length
        return washout + (train_length or 0) + test + 16


PLOT_KINDS = ("none", "sweep", "profile", "trace")


@dataclass
class PlotBlock:
    kind: str = "none"                # none | sweep | profile | trace
    x: str | None = None              # sweep: dotted path on the horizontal axis
    series: str | None = None         # sweep/trace: dotted path that separates curves


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 1
    reservoir: ReservoirBlock = field(default_factory=ReservoirBlock)
    channel: ChannelBlock = field(default_factory=ChannelBlock)
    trainer: TrainerBlock = field(default_factory=TrainerBlock)
    evaluator: EvaluatorBlock = field(default_factory=EvaluatorBlock)
    run: RunBlock = field(default_factory=RunBlock)
    scan: dict = field(default_factory=dict)    # dotted path -> list of values
    variants: list = field(default_factory=list)  # list of {dotted path: value}, crossed with scan
    plot: PlotBlock = field(default_factory=PlotBlock)
    preset: str | None = None
    output_dir: str = "results"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def copy(self) -> "ExperimentConfig":
        return copy.deepcopy(self)

    def with_values(self, values: dict) -> "ExperimentConfig":
        cfg = self.copy()
        for path, value in values.items():
            set_path(cfg, path, value)
        validate(cfg)
        return cfg


def _coerce(value: Any, ftype: Any, path: str):
    if isinstance(ftype, str):
        ftype = ftype.replace(" ", "")
    if ftype in ("float", float):
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        try:
            return float(value)
        except ValueError:
            raise ConfigError(path, f"expected a number, got {value!r}") from None
    if ftype in ("int", int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    if ftype == "int|None":
        return None if value is None else _coerce(value, "int", path)
    if ftype == "float|None":
        return None if value is None else _coerce(value, "float", path)
    if ftype == "str|None":
        return None if value is None else _coerce(value, "str", path)
    if ftype in ("bool", bool):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if ftype in ("str", str):
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if ftype in ("list", list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, f"expected a list, got {value!r}")
        return list(value)
    if ftype in ("dict", dict):
        if not isinstance(value, dict):
            raise ConfigError(path, f"expected a mapping, got {value!r}")
        return dict(value)
    raise TypeError(f"unsupported field type {ftype!r}")


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(where, f"unknown key (allowed: {', '.join(sorted(known))})")
    kwargs = {}
    for name, value in data.items():
        f = known[name]
        sub = f"{path}.{name}" if path else name
        if dataclasses.is_dataclass(f.default_factory() if f.default_factory is not dataclasses.MISSING else None):
            kwargs[name] = _build(type(f.default_factory()), value, sub)
        else:
            kwargs[name] = _coerce(value, f.type, sub)
    return cls(**kwargs)


def resolve_path(cfg: ExperimentConfig, path: str):
    """Return (owner object, attribute name) for a dotted path."""
    parts = path.split(".")
    obj = cfg
    for i, part in enumerate(parts[:-1]):
        if not dataclasses.is_dataclass(obj) or not hasattr(obj, part):
            raise ConfigError(".".join(parts[: i + 1]), "unknown key")
        obj = getattr(obj, part)
    if not dataclasses.is_dataclass(obj) or parts[-1] not in {f.name for f in fields(obj)}:
        raise ConfigError(path, "unknown key")
    return obj, parts[-1]


def set_path(cfg: ExperimentConfig, path: str, value) -> None:
    owner, name = resolve_path(cfg, path)
    ftype = {f.name: f.type for f in fields(owner)}[name]
    setattr(owner, name, _coerce(value, ftype, path))


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check cross-field constraints; raises :class:`ConfigError`."""
    r, c, t, run = cfg.reservoir, cfg.channel, cfg.trainer, cfg.run
    if r.n < 1:
        raise ConfigError("reservoir.n", "must be >= 1")
    alpha = r.effective_alpha()
    if not 0 <= alpha < 1:
        raise ConfigError("reservoir.alpha", f"effective alpha must be in [0, 1), got {alpha}")
    if r.attenuation_db is not None and r.attenuation_db < 0:
        raise ConfigError("reservoir.attenuation_db", "must be >= 0")
    if r.readout_gain <= 0:
        raise ConfigError("reservoir.readout_gain", "must be > 0")
    if r.washout < 0:
        raise ConfigError("reservoir.washout", "must be >= 0")
    if r.state_noise < 0:
        raise ConfigError("reservoir.state_noise", "must be >= 0")
    if math.isnan(c.snr_db) or c.snr_db == -math.inf:
        raise ConfigError("channel.snr_db", "must be finite or .inf")
    if c.calibration_length < 10_000:
        raise ConfigError("channel.calibration_length", "must be >= 10000")
    for name in ("symbol_poly_a", "symbol_poly_b", "noise_poly"):
        poly = getattr(c, name)
        if not poly or any(not isinstance(e, int) or e < 1 for e in poly) or max(poly) > 62:
            raise ConfigError(f"channel.{name}", "exponents must be positive integers <= 62")
        if not is_primitive(poly):
            raise ConfigError(f"channel.{name}", f"polynomial {poly} is not primitive")
    s = c.schedule
    if s.kind not in SCHEDULE_KINDS:
        raise ConfigError("channel.schedule.kind", f"must be one of {SCHEDULE_KINDS}")
    if s.parameter not in PARAM_NAMES:
        raise ConfigError("channel.schedule.parameter", f"must be one of {PARAM_NAMES}")
    try:
        s.build()
    except ValueError as exc:
        raise ConfigError("channel.schedule", str(exc)) from None
    if t.mode not in MODES:
        raise ConfigError("trainer.mode", f"must be one of {MODES}")
    try:
        t.build()
    except ValueError as exc:
        raise ConfigError("trainer", str(exc)) from None
    if cfg.evaluator.window < 1:
        raise ConfigError("evaluator.window", "must be >= 1")
    if run.masks < 1:
        raise ConfigError("run.masks", "must be >= 1")
    if run.pipeline not in ("float", "fixed"):
        raise ConfigError("run.pipeline", "must be 'float' or 'fixed'")
    if run.pipeline == "fixed" and r.state_noise:
        raise ConfigError("reservoir.state_noise", "not supported by the fixed pipeline")
    if not 0 <= run.adc_bits <= 18:
        raise ConfigError("run.adc_bits", "must be in [0, 18]")
    if run.test_length < 1 or run.paper_test_length < 1:
        raise ConfigError("run.test_length", "must be >= 1")
    for path, values in cfg.scan.items():
        resolve_path(cfg, path)
        if not isinstance(values, list) or not values:
            raise ConfigError(f"scan.{path}", "grid must be a non-empty list")
    for i, variant in enumerate(cfg.variants):
        if not isinstance(variant, dict) or not variant:
            raise ConfigError(f"variants[{i}]", "must be a non-empty mapping")
        for path in variant:
            resolve_path(cfg, path)
            if path in cfg.scan:
                raise ConfigError(f"variants[{i}].{path}", "also appears in scan")
    if cfg.plot.kind not in PLOT_KINDS:
        raise ConfigError("plot.kind", f"must be one of {PLOT_KINDS}")
    for name in ("x", "series"):
        path = getattr(cfg.plot, name)
        if path is not None:
            resolve_path(cfg, path)
    if cfg.plot.kind == "sweep" and cfg.plot.x is None:
        raise ConfigError("plot.x", "required for sweep plots")
    return cfg


def from_dict(data: dict | None) -> ExperimentConfig:
    cfg = _build(ExperimentConfig, data or {}, "")
    for path, values in cfg.scan.items():
        owner, name = resolve_path(cfg, path)
        ftype = {f.name: f.type for f in fields(owner)}[name]
        if not isinstance(values, list):
            raise ConfigError(f"scan.{path}", "grid must be a list")
        cfg.scan[path] = [_coerce(v, ftype, f"scan.{path}") for v in values]
    for i, variant in enumerate(cfg.variants):
        if not isinstance(variant, dict):
            raise ConfigError(f"variants[{i}]", "must be a mapping")
        for path, value in variant.items():
            owner, name = resolve_path(cfg, path)
            ftype = {f.name: f.type for f in fields(owner)}[name]
            variant[path] = _coerce(value, ftype, f"variants[{i}].{path}")
    return validate(cfg)


def load(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        return from_dict(yaml.safe_load(fh))


def dump(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)

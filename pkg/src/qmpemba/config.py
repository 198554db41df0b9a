"""Experiment configuration read from INI files.

Units: energies and temperatures in units of nu (k_B = hbar = 1), times as nu * t.
Every section and key is optional; defaults reproduce the canonical parameter set
(nu = 1, T = 2, gamma = 0.005, delta = 1e-4) with a ground-state preparation.

    [model]
    kind = v              ; v | lambda | multibath | classical
    nu = 1.0
    delta = 1e-4

    [bath]
    temperature = 2.0
    gamma = 0.005
    omega_c = inf
    baths = 2.0:0.005, 1.0:0.002   ; multibath only: temperature:gamma pairs

    [preparation]
    kind = ground         ; ground | maximally-mixed | steady | mpemba | perturbed-mpemba | explicit-matrix
    c2 = -0.24
    epsilon = 1e-3
    path = state.txt      ; explicit-matrix only

    [grid]
    start = 0.1
    stop =                ; blank: ten times the slowest lifetime
    per_decade = 40

    [analysis]
    threshold = 1e-4

    [classical]
    delta = 0.25
    c22 = -0.2703

    [sweep]
    deltas = logspace(-5, -3, 21)
    temperatures = 2.0
    gammas = 0.005
"""

from __future__ import annotations

import configparser
import math
import re
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .model import BathSpec, VModelParams

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "MAX_SWEEP_POINTS"]

MAX_SWEEP_POINTS = 1_000_000
MODEL_KINDS = ("v", "lambda", "multibath", "classical")
PREPARATIONS = ("ground", "maximally-mixed", "steady", "mpemba", "perturbed-mpemba", "explicit-matrix")

SCHEMA = {
    "model": {"kind", "nu", "delta"},
    "bath": {"temperature", "gamma", "omega_c", "baths"},
    "preparation": {"kind", "c2", "epsilon", "path"},
    "grid": {"start", "stop", "per_decade"},
    "analysis": {"threshold"},
    "classical": {"delta", "c22"},
    "sweep": {"deltas", "temperatures", "gammas"},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "v"
    nu: float = 1.0
    delta: float = 1e-4
    temperature: float = 2.0
    gamma: float = 0.005
    omega_c: float = math.inf
    baths: tuple[tuple[float, float], ...] = ()
    preparation: str = "ground"
    c2: float = -0.24
    epsilon: float = 1e-3
    matrix_path: str | None = None
    grid_start: float = 0.1
    grid_stop: float | None = None
    per_decade: int = 40
    threshold: float = 1e-4
    classical_delta: float = 0.25
    c22: float = -0.2703
    sweep_deltas: tuple[float, ...] = (1e-4,)
    sweep_temperatures: tuple[float, ...] = (2.0,)
    sweep_gammas: tuple[float, ...] = (0.005,)
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def bath(self) -> BathSpec:
        return BathSpec(temperature=self.temperature, gamma=self.gamma, omega_c=self.omega_c)

    @property
    def bath_list(self) -> tuple[BathSpec, ...]:
        if self.model == "multibath":
            return tuple(BathSpec(temperature=t, gamma=g, omega_c=self.omega_c) for t, g in self.baths)
        return (self.bath,)

    @property
    def sweep_size(self) -> int:
        return len(self.sweep_deltas) * len(self.sweep_temperatures) * len(self.sweep_gammas)

    def to_dict(self) -> dict:
        return asdict(self)


_LOGSPACE = re.compile(r"^(logspace|linspace)\(\s*([^,]+),\s*([^,]+),\s*(\d+)\s*\)$")


def _float(section: str, key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {text!r}") from None


def _float_list(section: str, key: str, text: str) -> tuple[float, ...]:
    text = text.strip()
    m = _LOGSPACE.match(text)
    if m:
        kind, a, b, n = m.groups()
        a, b, n = _float(section, key, a), _float(section, key, b), int(n)
        if n > MAX_SWEEP_POINTS:
            raise ConfigError(f"[{section}] {key}: {n} points exceeds the limit of {MAX_SWEEP_POINTS}")
        values = np.logspace(a, b, n) if kind == "logspace" else np.linspace(a, b, n)
        return tuple(float(v) for v in values)
    return tuple(_float(section, key, tok) for tok in text.split(",") if tok.strip())


def _baths(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        parts = tok.split(":")
        if len(parts) != 2:
            raise ConfigError(f"[bath] baths: expected temperature:gamma pairs, got {tok!r}")
        out.append((_float("bath", "baths", parts[0]), _float("bath", "baths", parts[1])))
    return tuple(out)


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(parser[section]) - SCHEMA[section]
        if unknown:
            raise ConfigError(f"[{section}] unknown keys: {', '.join(sorted(unknown))}")

    def get(section, key):
        if parser.has_option(section, key):
            value = parser.get(section, key).strip()
            return value or None
        return None

    kw = {}
    for section, key, name in (
        ("model", "nu", "nu"),
        ("model", "delta", "delta"),
        ("bath", "temperature", "temperature"),
        ("bath", "gamma", "gamma"),
        ("bath", "omega_c", "omega_c"),
        ("preparation", "c2", "c2"),
        ("preparation", "epsilon", "epsilon"),
        ("grid", "start", "grid_start"),
        ("grid", "stop", "grid_stop"),
        ("analysis", "threshold", "threshold"),
        ("classical", "delta", "classical_delta"),
        ("classical", "c22", "c22"),
    ):
        value = get(section, key)
        if value is not None:
            kw[name] = _float(section, key, value)
    if (value := get("grid", "per_decade")) is not None:
        try:
            kw["per_decade"] = int(value)
        except ValueError:
            raise ConfigError(f"[grid] per_decade: expected an integer, got {value!r}") from None
    if (value := get("model", "kind")) is not None:
        kw["model"] = value.lower()
    if (value := get("preparation", "kind")) is not None:
        kw["preparation"] = value.lower()
    if (value := get("preparation", "path")) is not None:
        path = Path(value)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        kw["matrix_path"] = str(path)
    if (value := get("bath", "baths")) is not None:
        kw["baths"] = _baths(value)
    for key, name in (("deltas", "sweep_deltas"), ("temperatures", "sweep_temperatures"), ("gammas", "sweep_gammas")):
        if (value := get("sweep", key)) is not None:
            kw[name] = _float_list("sweep", key, value)
    return validate(ExperimentConfig(**kw))


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Reject invalid configurations, naming the violated constraint; collect validity warnings."""
    if cfg.model not in MODEL_KINDS:
        raise ConfigError(f"[model] kind: must be one of {', '.join(MODEL_KINDS)}, got {cfg.model!r}")
    if cfg.preparation not in PREPARATIONS:
        raise ConfigError(f"[preparation] kind: must be one of {', '.join(PREPARATIONS)}, got {cfg.preparation!r}")
    if cfg.preparation == "explicit-matrix" and not cfg.matrix_path:
        raise ConfigError("[preparation] path: required for an explicit-matrix preparation")
    if cfg.model == "multibath" and not cfg.baths:
        raise ConfigError("[bath] baths: a multibath model needs at least one temperature:gamma pair")
    if not cfg.epsilon > 0:
        raise ConfigError(f"[preparation] epsilon: must be positive, got {cfg.epsilon}")
    if not 0 < cfg.threshold < 1:
        raise ConfigError(f"[analysis] threshold: must lie in (0, 1), got {cfg.threshold}")
    if not cfg.grid_start > 0:
        raise ConfigError(f"[grid] start: must be positive, got {cfg.grid_start}")
    if cfg.grid_stop is not None and not cfg.grid_stop > cfg.grid_start:
        raise ConfigError(f"[grid] stop: must exceed start = {cfg.grid_start}, got {cfg.grid_stop}")
    if not cfg.per_decade >= 1:
        raise ConfigError(f"[grid] per_decade: must be at least 1, got {cfg.per_decade}")
    if not 0 <= cfg.classical_delta < cfg.nu:
        raise ConfigError(f"[classical] delta: must satisfy 0 <= delta < nu, got {cfg.classical_delta}")
    if cfg.sweep_size > MAX_SWEEP_POINTS:
        raise ConfigError(f"[sweep] grid has {cfg.sweep_size} points, more than the limit of {MAX_SWEEP_POINTS}")

    caught = []
    with warnings.catch_warnings(record=True) as log:
        warnings.simplefilter("always")
        try:
            if cfg.model != "classical":
                VModelParams(nu=cfg.nu, delta=cfg.delta)
            elif not cfg.nu > 0:
                raise ValueError(f"nu must be positive, got {cfg.nu}")
            cfg.bath_list
            for d in cfg.sweep_deltas:
                VModelParams(nu=cfg.nu, delta=d)
            for t in cfg.sweep_temperatures:
                for g in cfg.sweep_gammas:
                    BathSpec(temperature=t, gamma=g, omega_c=cfg.omega_c)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        caught = list(dict.fromkeys(str(w.message) for w in log))
    return ExperimentConfig(**{**cfg.to_dict(), "warnings": tuple(caught), "baths": tuple(cfg.baths)})


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return validate(ExperimentConfig())
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent)

"""Run configuration: a TOML file with fixed sections.

Unknown sections or keys are rejected with the offending name, so typos
never silently fall back to defaults.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np
import tomli

from .calibration import CalibrationTargets
from .counterfactual import SCENARIO_NAMES
from .model import ESTIMATED, ModelParams
from .population import DEFAULT_SEED

SCHEMA = {
    "params": set(ModelParams.__dataclass_fields__),
    "population": {"n", "seed", "threads"},
    "scenarios": {"names", "outsourcing_price"},
    "sweep": {"delta_grid"},
    "calibration": {"n", "seed", "starts", "max_evals", "jitter", "free", "moments", "init",
                    "targets_file"},
    "targets": set(CalibrationTargets.__dataclass_fields__),
    "regional": {"prefecture_data", "delta_grid", "national_gaps"},
    "output": {"dir"},
}
NATIONAL_GAP_KEYS = {"participation", "occupation", "hours", "wage"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    n: int = 100_000
    seed: int = DEFAULT_SEED
    threads: Optional[int] = None
    scenarios: tuple = SCENARIO_NAMES
    outsourcing_price: Optional[float] = None
    sweep_grid: Optional[np.ndarray] = None
    calibration: dict = field(default_factory=dict)
    targets: CalibrationTargets = field(default_factory=CalibrationTargets)
    prefecture_data: Optional[str] = None
    regional_grid: Optional[np.ndarray] = None
    national_gaps: Optional[dict] = None
    out: str = "out"


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:points`` to an evenly spaced grid."""
    try:
        start, stop, points = text.split(":")
        grid = np.linspace(float(start), float(stop), int(points))
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}; expected start:stop:points") from exc
    if grid.size == 0:
        raise ConfigError(f"grid {text!r} has no points")
    return grid


def _check(section: str, table: dict):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    allowed = SCHEMA[section]
    for k in table:
        if k not in allowed:
            raise ConfigError(f"unknown key '{k}' in [{section}]")


def bundled_config_path() -> str:
    return str(resources.files("jointlabor") / "data" / "baseline.config")


def bundled_prefecture_path() -> str:
    return str(resources.files("jointlabor") / "data" / "prefectures_synthetic.csv")


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def config_from_dict(raw: dict, base_dir: str = ".") -> RunConfig:
    for section in raw:
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        _check(section, raw[section])
    cfg = RunConfig()
    try:
        cfg.params = ModelParams(**raw.get("params", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[params]: {exc}") from exc
    pop = raw.get("population", {})
    cfg.n = int(pop.get("n", cfg.n))
    cfg.seed = int(pop.get("seed", cfg.seed))
    cfg.threads = pop.get("threads")
    sc = raw.get("scenarios", {})
    names = tuple(sc.get("names", cfg.scenarios))
    for nm in names:
        if nm not in SCENARIO_NAMES:
            raise ConfigError(f"unknown scenario '{nm}'")
    cfg.scenarios = names
    cfg.outsourcing_price = sc.get("outsourcing_price")
    if "delta_grid" in raw.get("sweep", {}):
        cfg.sweep_grid = parse_grid(raw["sweep"]["delta_grid"])
    cal = dict(raw.get("calibration", {}))
    for k in cal.get("free", []):
        if k not in ESTIMATED:
            raise ConfigError(f"unknown parameter '{k}' in [calibration] free")
    for k in cal.get("moments", []):
        if k not in CalibrationTargets.__dataclass_fields__:
            raise ConfigError(f"unknown target key: {k}")
    if "targets_file" in cal:
        cal["targets_file"] = os.path.join(base_dir, cal["targets_file"])
    cfg.calibration = cal
    try:
        cfg.targets = CalibrationTargets.from_mapping(raw.get("targets", {}))
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    reg = raw.get("regional", {})
    if "prefecture_data" in reg:
        cfg.prefecture_data = os.path.join(base_dir, reg["prefecture_data"])
    if "delta_grid" in reg:
        cfg.regional_grid = parse_grid(reg["delta_grid"])
    if "national_gaps" in reg:
        ng = reg["national_gaps"]
        bad = [k for k in ng if k not in NATIONAL_GAP_KEYS]
        if bad:
            raise ConfigError(f"unknown key '{bad[0]}' in [regional] national_gaps")
        cfg.national_gaps = {k: float(v) for k, v in ng.items()}
    cfg.out = raw.get("output", {}).get("dir", cfg.out)
    return cfg

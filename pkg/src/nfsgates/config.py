"""Run configuration: a validated structured-text file plus overrides."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .gates import GateSpec, Setup, TriggerModel
from .hyperfine import NuclearSpecies
from .rotation import EulerAngles
from .scattering.spectrum import SwitchProtocol, TimeGrid

_DEFAULT_SPECIES = NuclearSpecies()


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpeciesConfig(_Strict):
    spin_ground: float = _DEFAULT_SPECIES.spin_ground
    spin_excited: float = _DEFAULT_SPECIES.spin_excited
    transition_energy: float = _DEFAULT_SPECIES.transition_energy  # keV
    mean_lifetime: float = _DEFAULT_SPECIES.mean_lifetime  # ns
    g_ground: float = _DEFAULT_SPECIES.g_ground
    g_excited: float = _DEFAULT_SPECIES.g_excited
    hyperfine_field: float = _DEFAULT_SPECIES.hyperfine_field  # tesla


class GridConfig(_Strict):
    t_end: float = 200.0
    n_samples: int = 4096


class ProtocolConfig(_Strict):
    t0: Optional[float] = None  # None: static field
    angles: tuple[float, float, float] = (0.0, math.pi / 2, 0.0)
    ramp_duration: float = 0.0


class SearchConfig(_Strict):
    gate: Literal["identity", "negation", "true", "false"] = "negation"
    window: tuple[float, float] = (0.0, 100.0)
    step: float = 0.05
    purity_threshold: float = 0.95


class PlanConfig(_Strict):
    common_t0: float = 6.9
    tolerance: float = 0.5


class TriggerConfig(_Strict):
    detection_probability: float = 1.0
    latency: float = 0.0
    jitter_sigma: float = 0.0
    mode: Literal["predetermined_t0", "prompt_on_detection"] = "predetermined_t0"
    switch_time: float = 22.3
    control_arrival: float = 22.3
    jitter_distribution: Literal["uniform", "gaussian"] = "uniform"


class RunConfig(_Strict):
    species: SpeciesConfig = Field(default_factory=SpeciesConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    xi: float = 10.0
    input_pol: Literal["sigma", "pi"] = "sigma"
    solver: Literal["series", "slices"] = "series"
    p_max: int = 20
    n_slices: int = 200
    protocol: ProtocolConfig = Field(default_factory=ProtocolConfig)
    search: SearchConfig = Field(default_factory=SearchConfig)
    plan: PlanConfig = Field(default_factory=PlanConfig)
    trigger: TriggerConfig = Field(default_factory=TriggerConfig)
    n_trials: int = 1000
    seed: int = 0
    output: Optional[str] = None


class ConfigError(ValueError):
    """Configuration rejected before any computation."""


def load_config(path: str | Path | None) -> dict:
    """Raw mapping from a JSON or YAML file (empty when no file is given)."""
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return data


def apply_override(data: dict, dotted: str, value: Any) -> None:
    """Set ``data[a][b]... = value`` for a dotted key, creating sections as needed."""
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{dotted}: {key} is not a section")
    node[keys[-1]] = value


def parse_assignment(text: str) -> tuple[str, Any]:
    """``key.path=value`` with the value read as YAML (numbers, lists, null)."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, raw = text.split("=", 1)
    try:
        return key.strip(), yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {text!r}: {exc}") from exc


class Resolved:
    """Domain objects built from a RunConfig; construction runs every precondition."""

    def __init__(self, config: RunConfig):
        self.config = config
        try:
            species = NuclearSpecies(**config.species.model_dump())
            grid = TimeGrid(config.grid.t_end, config.grid.n_samples)
            angles = EulerAngles(*config.protocol.angles)
            self.setup = Setup(species, grid, config.p_max, angles, config.solver, config.n_slices)
            if config.p_max < 1 or config.n_slices < 1:
                raise ValueError("p_max and n_slices must be >= 1")
            if config.xi < 0:
                raise ValueError("xi must be >= 0")
            self.protocol = None
            if config.protocol.t0 is not None:
                if not 0 <= config.protocol.t0 <= grid.t_end:
                    raise ValueError("protocol.t0 outside grid")
                self.protocol = SwitchProtocol(
                    config.protocol.t0, angles, config.protocol.ramp_duration, species.mean_lifetime
                )
            self.gate = GateSpec(config.search.gate)
            lo, hi = config.search.window
            if not 0 <= lo < hi <= grid.t_end:
                raise ValueError("search.window must lie inside the grid")
            if config.search.step <= 0:
                raise ValueError("search.step must be > 0")
            if not 0 <= config.search.purity_threshold <= 1:
                raise ValueError("search.purity_threshold must lie in [0, 1]")
            if not 0 <= config.plan.common_t0 <= grid.t_end:
                raise ValueError("plan.common_t0 outside grid")
            self.trigger = TriggerModel(**config.trigger.model_dump())
            if config.n_trials < 1:
                raise ValueError("n_trials must be >= 1")
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def build_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(problems) from exc

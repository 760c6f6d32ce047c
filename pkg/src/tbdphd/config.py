"""Experiment configuration: schema, validation, built-in presets."""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .amplitude import AmplitudeParams
from .filter import FilterConfig
from .grid import GridSpec, polar_to_cartesian
from .scenario import MotionModel, ScenarioTarget

# nominal sigma_s for the 12 and 18 dB cases (sigma_n = 1.5)
NOMINAL_SIGMA_S = {12: 6.0, 18: 12.0}


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridModel(_Strict):
    range_min: float = Field(0.0, ge=0)
    range_max: float = 200.0
    range_res: float = Field(2.5, gt=0)
    bearing_min: float = 0.0
    bearing_max: float = 180.0
    bearing_res: float = Field(3.0, gt=0)


class MotionModelCfg(_Strict):
    tau: float = Field(1.0, gt=0)
    q: float = Field(8.1e-3, ge=0)


class AmplitudeModel(_Strict):
    sigma_n: float = Field(gt=0)
    sigma_s: float = Field(ge=0)


class TargetModel(_Strict):
    state: tuple[float, float, float, float]
    birth_time: int = Field(ge=1)
    lasting_time: int = Field(ge=1)
    birth_weight: float = Field(0.08, gt=0)


class FilterModel(_Strict):
    p_s: float = Field(0.99, gt=0, le=1)
    birth_weight: float = Field(0.08, gt=0)
    particles_per_component: int = Field(250, ge=1)
    prune_threshold: float = Field(4e-3, gt=0)
    merge_threshold: float = Field(4.0, gt=0)
    birth_threshold: float = Field(6.4, gt=0)
    birth_velocity_std: float = Field(3.0, gt=0)
    capping_enabled: bool = True
    report_threshold: float = Field(0.5, gt=0)


class BaselineModel(_Strict):
    # constant: kappa(z) = kappa; noise_scaled: kappa(z) = kappa * noise_pdf(A_z)
    kappa_mode: Literal["constant", "noise_scaled"] = "constant"
    # fixed kappa; None means grid-search it before the run
    kappa: Optional[float] = Field(None, ge=0)
    # tuning candidates (absolute kappa values, tried in every tuning mode)
    kappa_grid: tuple[float, ...] = (1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4)
    tuning_modes: tuple[Literal["constant", "noise_scaled"], ...] = ("constant",)
    tuning_replications: int = Field(3, ge=1)


class OspaModel(_Strict):
    c: float = Field(8.0, gt=0)
    p: float = Field(2.0, ge=1)


class ExperimentModel(_Strict):
    name: str = "experiment"
    grid: GridModel = GridModel()
    motion: MotionModelCfg = MotionModelCfg()
    amplitude: AmplitudeModel
    scenario: tuple[TargetModel, ...]
    filter: FilterModel = FilterModel()
    baseline: BaselineModel = BaselineModel()
    ospa: OspaModel = OspaModel()
    replications: int = Field(1, ge=1)
    master_seed: int = Field(0, ge=0, lt=2 ** 64)
    scan_count: int = Field(49, ge=1)
    output_dir: str = "results"

    @model_validator(mode="after")
    def _check_grid(self):
        try:
            self.grid_spec()
        except ValueError as e:
            raise ValueError(f"grid: {e}") from None
        return self

    def grid_spec(self) -> GridSpec:
        return GridSpec(**self.grid.model_dump())

    def motion_model(self) -> MotionModel:
        return MotionModel(**self.motion.model_dump())

    def amplitude_params(self) -> AmplitudeParams:
        return AmplitudeParams(**self.amplitude.model_dump())

    def targets(self) -> list[ScenarioTarget]:
        return [ScenarioTarget(t.state, t.birth_time, t.lasting_time, t.birth_weight)
                for t in self.scenario]

    def filter_config(self) -> FilterConfig:
        return FilterConfig(**self.filter.model_dump())


ExperimentConfig = ExperimentModel


# reference scenario rows: state [px, vx, py, vy], t_b, t_l
REFERENCE_TARGETS = [
    ((-135.0, 0.9, 10.0, 0.4), 1, 40),
    ((-90.0, 0.2, 60.0, 0.8), 8, 33),
    ((-45.0, 0.8, 20.0, 2.0), 8, 38),
    ((90.0, 100.0, -1.4, -0.4), 16, 17),
    ((45.0, -0.3, 20.0, 1.6), 16, 17),
    ((0.0, -0.6, 180.0, -1.2), 24, 17),
    ((135.0, -0.2, 10.0, 3.0), 24, 9),
    ((-90.0, 0.6, 140.0, -1.2), 16, 25),
]
# the listed target 4 row lies outside the FOV; the corrected variant reads it as [px, py, vx, vy]
TARGET4_CORRECTED = (90.0, -1.4, 100.0, -0.4)


def _target_rows(corrected: bool) -> list[dict]:
    rows = []
    for i, (state, tb, tl) in enumerate(REFERENCE_TARGETS, start=1):
        if corrected and i == 4:
            state = TARGET4_CORRECTED
        rows.append({"state": list(state), "birth_time": tb, "lasting_time": tl,
                     "birth_weight": 0.08})
    return rows


def _reference_base(corrected: bool) -> dict:
    return {
        "name": "table1_corrected" if corrected else "table1_verbatim",
        "amplitude": {"sigma_n": 1.5, "sigma_s": 6.0},
        "scenario": _target_rows(corrected),
        "replications": 25,
        "scan_count": 49,
    }


def _static_target() -> dict:
    # centre of pixel (40, 30) on the default grid, away from bin edges
    px, py = polar_to_cartesian(101.25, 91.5)
    return {
        "name": "static_target",
        "amplitude": {"sigma_n": 1.5, "sigma_s": 12.0},
        "scenario": [{"state": [float(px), 0.0, float(py), 0.0], "birth_time": 1,
                      "lasting_time": 49}],
        "replications": 20,
        "scan_count": 10,
    }


PRESETS = {
    "table1_corrected": lambda: _reference_base(True),
    "table1_verbatim": lambda: _reference_base(False),
    "static_target": _static_target,
}


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def build_config(data: dict) -> ExperimentModel:
    try:
        return ExperimentModel.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_errors(e)) from None


def preset(name: str, **overrides) -> ExperimentModel:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return build_config(_deep_merge(PRESETS[name](), overrides))


def load_config(path=None, *, preset_name: str | None = None) -> ExperimentModel:
    """Read a YAML config. A ``preset`` key (or ``preset_name``) selects a
    built-in base that the file's keys override."""
    data = {}
    if path is not None:
        text = Path(path).read_text()
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError("config document must be a mapping")
    base_name = data.pop("preset", None) or preset_name
    if base_name is not None:
        if base_name not in PRESETS:
            raise ConfigError(f"preset: unknown preset {base_name!r}")
        data = _deep_merge(PRESETS[base_name](), data)
    return build_config(data)


def with_overrides(cfg: ExperimentModel, **changes) -> ExperimentModel:
    """Re-validated copy with nested dict overrides applied."""
    return build_config(_deep_merge(cfg.model_dump(mode="python"), changes))


def snr_amplitude(snr: float, sigma_n: float = 1.5) -> dict:
    if snr in NOMINAL_SIGMA_S and sigma_n == 1.5:
        return {"sigma_n": sigma_n, "sigma_s": NOMINAL_SIGMA_S[snr]}
    p = AmplitudeParams.from_snr_db(snr, sigma_n)
    return {"sigma_n": p.sigma_n, "sigma_s": p.sigma_s}

#!/usr/bin/env python3
"""
Scenario Configuration
======================

ScenarioConfig mirrors the JSON scenario files under configs/. Every
invariant is checked up front, across every sweep point, and all
violations are reported together.

Process-level settings (worker count, log level, output directory) come
from the environment / .env file via RuntimeSettings.

Usage:
    from src.harness.config import load_scenario, RuntimeSettings

    cfg = load_scenario("configs/ml_mse_check.json")
    settings = RuntimeSettings()
    print(cfg.system.n_bs, settings.THREADS)
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterator, List, Literal, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.channel.materials import (DEFAULT_ABSORPTION_PATH, DEFAULT_MATERIALS, AbsorptionTable,
                                   load_materials)
from src.channel.thz_channel import ChannelParams
from src.combiner.hybrid import SblConfig
from src.core.errors import ConfigError
from src.estimators.rals_sb import RalsConfig

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

ESTIMATORS = ("ml", "rals_sb", "wd_sb_perfect", "wd_sb_estimated")
METRICS = ("nmse", "ber", "se", "ecdf")
SWEEP_PARAMETERS = ("snr_db", "tau_p", "n_bs", "n_data", "n_rf", "adc_bits", "f_hz", "distance_m")


@dataclass
class RuntimeSettings:
    """Process-level settings read from the environment"""
    THREADS: int = field(default_factory=lambda: int(os.getenv("THZSB_THREADS", "1")))
    LOG_LEVEL: str = field(default_factory=lambda: os.getenv("THZSB_LOG_LEVEL", "INFO"))
    OUT_DIR: str = field(default_factory=lambda: os.getenv("THZSB_OUT_DIR", "results"))
    PORT: int = field(default_factory=lambda: int(os.getenv("PORT", "3000")))


def parse_bits(value):
    """ADC resolution from config text; "inf" means an ideal converter."""
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return math.inf
    return value


def configure_logging(level: str = "INFO"):
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s'
    )


class ChannelSettings(BaseModel):
    """Physical channel section; array sizes come from the system section"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    f_hz: float = Field(0.3e12, gt=0)
    distance_m: float = Field(15.0, gt=0)
    n_nlos: int = Field(3, ge=0)
    n_ray: int = Field(1, ge=0)
    antenna_gain_dbi: float = 26.0
    d_r_over_lambda: float = Field(0.5, gt=0)
    diffuse_spread_deg: float = Field(5.0, ge=0, le=180)
    materials_file: Optional[str] = None
    material_names: Optional[List[str]] = None
    absorption_file: Optional[str] = DEFAULT_ABSORPTION_PATH
    normalize_h: bool = True

    def to_params(self, n_bs: int, k_u: int, f_hz: Optional[float] = None,
                  distance_m: Optional[float] = None) -> ChannelParams:
        materials = load_materials(self.materials_file) if self.materials_file else list(DEFAULT_MATERIALS)
        if self.material_names:
            by_name = {m.name: m for m in materials}
            missing = [name for name in self.material_names if name not in by_name]
            if missing:
                raise ConfigError(f"unknown materials: {', '.join(missing)}")
            materials = [by_name[name] for name in self.material_names]
        return ChannelParams(
            f_hz=f_hz if f_hz is not None else self.f_hz,
            distance_m=distance_m if distance_m is not None else self.distance_m,
            n_nlos=self.n_nlos,
            n_ray=self.n_ray,
            antenna_gain_dbi=self.antenna_gain_dbi,
            n_bs=n_bs,
            k_u=k_u,
            d_r_over_lambda=self.d_r_over_lambda,
            materials=materials,
            diffuse_spread_deg=self.diffuse_spread_deg,
        )

    def absorption_table(self) -> AbsorptionTable:
        if not self.absorption_file:
            return AbsorptionTable()
        return AbsorptionTable.from_csv(self.absorption_file)


class SystemSettings(BaseModel):
    """Array, frame and front-end sizes"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    n_bs: int = Field(64, ge=1)
    k_u: int = Field(12, ge=1)
    n_rf: int = Field(16, ge=1)
    tau_p: int = Field(16, ge=1)
    n_data: int = Field(1000, ge=1)
    n_q: int = Field(4, ge=1)
    adc_bits: Union[int, float] = math.inf
    combiner_mode: Literal["random", "unitary_validation"] = "unitary_validation"
    p_p: float = Field(1.0, gt=0)
    p_d: float = Field(1.0, gt=0)
    pseudo_inverse_combining: bool = False

    @field_validator('adc_bits', mode='before')
    @classmethod
    def _parse_bits(cls, v):
        return parse_bits(v)


class SweepSettings(BaseModel):
    """One swept parameter; the others stay at their system values"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    parameter: Literal["snr_db", "tau_p", "n_bs", "n_data", "n_rf", "adc_bits", "f_hz",
                       "distance_m"] = "snr_db"
    values: List[Union[float, str]] = Field(default_factory=lambda: [0.0])
    snr_db: float = 10.0

    @field_validator('values', mode='before')
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("sweep needs at least one value")
        return v


class ScenarioConfig(BaseModel):
    """Complete Monte Carlo experiment description"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    name: str = "scenario"
    channel: ChannelSettings = Field(default_factory=ChannelSettings)
    system: SystemSettings = Field(default_factory=SystemSettings)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    trials: int = Field(100, ge=1)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    estimators: List[Literal["ml", "rals_sb", "wd_sb_perfect", "wd_sb_estimated"]] = \
        Field(default_factory=lambda: ["ml", "wd_sb_perfect"])
    metrics: List[Literal["nmse", "ber", "se", "ecdf"]] = Field(default_factory=lambda: ["nmse"])
    ecdf_thresholds: List[float] = Field(default_factory=lambda: [0.05 * i for i in range(1, 41)])
    rals: RalsConfig = Field(default_factory=RalsConfig)
    sbl: SblConfig = Field(default_factory=SblConfig)
    clip_scale: float = Field(3.0, gt=0)
    outputs: str = "results"

    def sweep_points(self) -> Iterator[Tuple[int, float, "PointSettings"]]:
        for index, value in enumerate(self.sweep.values):
            yield index, value, self.point(value)

    def point(self, value) -> "PointSettings":
        """Concrete settings at one sweep value."""
        system = self.system
        updates = {}
        snr_db = self.sweep.snr_db
        f_hz = self.channel.f_hz
        distance_m = self.channel.distance_m
        parameter = self.sweep.parameter
        if parameter == "snr_db":
            snr_db = float(value)
        elif parameter == "f_hz":
            f_hz = float(value)
        elif parameter == "distance_m":
            distance_m = float(value)
        elif parameter == "adc_bits":
            updates["adc_bits"] = parse_bits(value)
        else:
            updates[parameter] = int(float(value))
        if updates:
            system = system.model_copy(update=updates)
        return PointSettings(system=system, snr_db=snr_db, f_hz=f_hz, distance_m=distance_m)


@dataclass(frozen=True)
class PointSettings:
    """System settings at one sweep point"""
    system: SystemSettings
    snr_db: float
    f_hz: float
    distance_m: float

    @property
    def sigma2(self) -> float:
        return 10 ** (-self.snr_db / 10)


def check_scenario(cfg: ScenarioConfig) -> List[str]:
    """Every invariant violation across all sweep points (empty when valid)."""
    problems: List[str] = []
    for index, value, point in cfg.sweep_points():
        s = point.system
        where = f"sweep point {index} ({cfg.sweep.parameter}={value})"
        if s.tau_p < s.k_u:
            problems.append(f"{where}: tau_p ({s.tau_p}) must be >= k_u ({s.k_u})")
        if not s.k_u <= s.n_rf <= s.n_bs:
            problems.append(f"{where}: need k_u <= n_rf <= n_bs, got "
                            f"k_u={s.k_u}, n_rf={s.n_rf}, n_bs={s.n_bs}")
        if s.n_bs % s.n_rf:
            problems.append(f"{where}: n_bs ({s.n_bs}) must be divisible by n_rf ({s.n_rf})")
        bits = s.adc_bits
        if not (math.isinf(bits) or (float(bits).is_integer() and 1 <= bits <= 16)):
            problems.append(f"{where}: adc_bits must be an integer in [1, 16] or inf, got {bits}")
        if point.f_hz <= 0:
            problems.append(f"{where}: f_hz must be positive")
        if point.distance_m <= 0:
            problems.append(f"{where}: distance_m must be positive")
        if cfg.rals.lambda_fading is not None and len(cfg.rals.lambda_fading) != s.k_u:
            problems.append(f"{where}: rals.lambda_fading needs {s.k_u} entries")
    if not cfg.estimators:
        problems.append("at least one estimator must be selected")
    if cfg.channel.materials_file and not os.path.exists(cfg.channel.materials_file):
        problems.append(f"materials file not found: {cfg.channel.materials_file}")
    if cfg.channel.absorption_file and not os.path.exists(cfg.channel.absorption_file):
        problems.append(f"absorption file not found: {cfg.channel.absorption_file}")
    return problems


def _validation_messages(error: ValidationError) -> List[str]:
    return [f"{'.'.join(str(p) for p in e['loc']) or 'config'}: {e['msg']}" for e in error.errors()]


def parse_scenario(data: Union[str, dict]) -> ScenarioConfig:
    """Validate a scenario from JSON text or a dict; raises ConfigError listing every problem."""
    try:
        if isinstance(data, str):
            cfg = ScenarioConfig.model_validate_json(data)
        else:
            cfg = ScenarioConfig.model_validate(data)
    except ValidationError as e:
        problems = _validation_messages(e)
        raise ConfigError(f"{len(problems)} configuration problem(s)", problems) from e
    problems = check_scenario(cfg)
    if problems:
        raise ConfigError(f"{len(problems)} configuration problem(s)", problems)
    return cfg


def load_scenario(path: str) -> ScenarioConfig:
    if not os.path.exists(path):
        raise ConfigError(f"scenario file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    cfg = parse_scenario(text)
    logger.info(f"✅ Loaded scenario '{cfg.name}' from {path}")
    return cfg

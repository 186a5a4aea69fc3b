"""Scenario configuration and the environment suites for profiling and held-out evaluation."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, fields, is_dataclass, replace
from pathlib import Path

from .antenna import DEFAULT_BINS, DEFAULT_PITCH, N_CONFIGS, ArrayGeometry
from .channel import DYNAMIC_RHO, SEMI_STATIC_RHO, Environment, Orientation
from .impairments import ImpairmentConfig
from .metrics import config_hash
from .phy import Constellation, OfdmConfig
from .protocol import RetrainingPolicy, TrainingFrameSpec
from .seeding import rng_for

ALL_ORIENTATIONS = tuple(Orientation)


def profiling_suite(base: Environment | None = None, n: int = 16) -> list[Environment]:
    """``n`` profiling environments cycling LOS/NLOS and semi-static/dynamic."""
    base = base or Environment()
    out = []
    for i in range(n):
        out.append(replace(base, seed=i, los_blocked=bool(i % 2),
                           dynamics_rho=DYNAMIC_RHO if (i // 2) % 2 else SEMI_STATIC_RHO,
                           name=f"profile{i:02d}"))
    return out


def held_out_suite(base: Environment | None = None, n: int = 20, seed: int = 0) -> list[Environment]:
    """Fresh environments with the peer anywhere on the circle."""
    base = base or Environment()
    rng = rng_for(seed, "held_out")
    out = []
    for i in range(n):
        out.append(replace(base, seed=1000 + i, peer_azimuth=float(rng.uniform(0, 2 * math.pi)),
                           los_blocked=bool(rng.random() < 0.25),
                           dynamics_rho=DYNAMIC_RHO if rng.random() < 0.5 else SEMI_STATIC_RHO,
                           name=f"held_out{i:02d}"))
    return out


class ConfigError(ValueError):
    """Malformed scenario configuration; the message names the offending field."""


@dataclass(frozen=True)
class GeometryConfig:
    pitch: float = DEFAULT_PITCH
    azimuth_bins: int = DEFAULT_BINS
    # [center, edge, corner] as [re, im] pairs; None keeps the default rear-null coupling.
    rings: tuple | None = None

    def build(self) -> ArrayGeometry:
        if self.rings is None:
            return ArrayGeometry(pitch=self.pitch, azimuth_bins=self.azimuth_bins)
        center, edge, corner = (complex(*r) for r in self.rings)
        return ArrayGeometry.from_rings(center, edge, corner, pitch=self.pitch, azimuth_bins=self.azimuth_bins)


@dataclass(frozen=True)
class TrainingConfig:
    sample_rate_hz: float = 40e6
    gap_samples: int = 20
    data_samples: int = 30
    null_samples: int = 30
    guard_samples: int = 8

    def spec(self, pattern_set=range(N_CONFIGS)) -> TrainingFrameSpec:
        return TrainingFrameSpec(self.sample_rate_hz, self.gap_samples, self.data_samples,
                                 self.null_samples, tuple(pattern_set), self.guard_samples)


@dataclass(frozen=True)
class ProfilingConfig:
    n_environments: int = 16
    duration_s: float = 2.0
    orientations: tuple = tuple(o.value for o in Orientation)


@dataclass(frozen=True)
class SweepConfig:
    periods_s: tuple = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
    sim_duration_s: float = 5.0
    n_environments: int = 6


@dataclass(frozen=True)
class SessionConfig:
    retrain_period_s: float = 0.1
    hd_receive: str = "reselect"
    pattern_set: str = "full"
    tx_power_sweep_dbm: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Whole-experiment configuration, loaded from a JSON object with these keys."""

    master_seed: int = 0
    output_dir: str = "out"
    bank_path: str | None = None
    geometry: GeometryConfig = GeometryConfig()
    environment: Environment = Environment()
    profiling: ProfilingConfig = ProfilingConfig()
    n_held_out: int = 20
    impairments: ImpairmentConfig = ImpairmentConfig()
    ofdm: OfdmConfig = OfdmConfig()
    training: TrainingConfig = TrainingConfig()
    thresholds_db: tuple = tuple(float(x) for x in range(40, 72, 2))
    set_target_size: int = 300
    retrain: SweepConfig = SweepConfig()
    session: SessionConfig = SessionConfig()

    @property
    def bank_file(self) -> Path:
        return Path(self.bank_path) if self.bank_path else Path(self.output_dir) / "bank.npz"

    def to_dict(self) -> dict:
        return _to_plain(self)

    def hash(self) -> str:
        """Digest of everything that affects results (paths excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("bank_path")
        return config_hash(d)

    def profiling_environments(self) -> list[Environment]:
        return profiling_suite(self.environment, self.profiling.n_environments)

    def held_out_environments(self) -> list[Environment]:
        return held_out_suite(self.environment, self.n_held_out, self.master_seed)

    def policy(self, pattern_set=range(N_CONFIGS)) -> RetrainingPolicy:
        return RetrainingPolicy(self.session.retrain_period_s, self.training.spec(pattern_set))


def _to_plain(v):
    if is_dataclass(v):
        return {f.name: _to_plain(getattr(v, f.name)) for f in fields(v)}
    if isinstance(v, enum.Enum):
        return v.value if not isinstance(v, Constellation) else v.name
    if isinstance(v, (tuple, list)):
        return [_to_plain(x) for x in v]
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


_NESTED = {"geometry": GeometryConfig, "environment": Environment, "profiling": ProfilingConfig,
           "impairments": ImpairmentConfig, "ofdm": OfdmConfig, "training": TrainingConfig,
           "retrain": SweepConfig, "session": SessionConfig}


def _coerce(value, default, where: str):
    if isinstance(value, str) and value in ("inf", "-inf") and isinstance(default, (int, float)):
        return float(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float) or (default is None and isinstance(value, (int, float))):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return tuple(tuple(x) if isinstance(x, list) else x for x in value)
    return value


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    defaults = cls()
    kwargs = {}
    for key, value in data.items():
        path = f"{where}.{key}" if where else key
        if key not in known:
            raise ConfigError(f"{path}: unknown field")
        if key in _NESTED and cls is ScenarioConfig:
            kwargs[key] = _build(_NESTED[key], value, path)
            continue
        default = getattr(defaults, key)
        if key == "rings" and value is not None:
            if not (isinstance(value, list) and len(value) == 3
                    and all(isinstance(r, list) and len(r) == 2 for r in value)):
                raise ConfigError(f"{path}: expected three [re, im] pairs")
            kwargs[key] = tuple(tuple(float(x) for x in r) for r in value)
            continue
        if isinstance(default, enum.Enum):
            try:
                kwargs[key] = type(default)[value] if isinstance(default, Constellation) else type(default)(value)
            except (KeyError, ValueError):
                raise ConfigError(f"{path}: invalid value {value!r}") from None
            continue
        kwargs[key] = _coerce(value, default, path)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where or 'config'}: {exc}") from None


def load_config(path=None, overrides: dict | None = None) -> ScenarioConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if overrides:
        data = dict(data, **{k: v for k, v in overrides.items() if v is not None})
    cfg = _build(ScenarioConfig, data, "")
    if cfg.session.hd_receive not in ("reselect", "omni"):
        raise ConfigError("session.hd_receive: expected 'reselect' or 'omni'")
    return cfg

"""Episode configuration loaded from YAML.

Every section maps onto a frozen dataclass; unknown keys anywhere in the
document raise :class:`ConfigurationError`, as do invalid values.
"""
import dataclasses
import typing
from dataclasses import dataclass, field

import numpy as np
import yaml

from ..exceptions import ConfigurationError
from ..mobility import MobilityParams
from ..netmodel import (
    AntennaConfig,
    BandConfig,
    Deployment,
    HitModel,
    NoiseConfig,
    ShadowingConfig,
)
from ..policies import POLICY_NAMES
from ..solver import SolverConfig


@dataclass(frozen=True)
class BandSection:
    carrier_frequency: float = 3.75e9
    bandwidth: float = 40e6
    tx_power: float = 46.0


def _default_bands():
    return (BandSection(), BandSection(carrier_frequency=0.75e9, bandwidth=10e6))


@dataclass(frozen=True)
class DeploymentSection:
    sites: int = 7
    isd: float = 500.0
    bs_height: float = 25.0
    ue_height: float = 1.5
    min_distance: float = 10.0
    bands: tuple = field(default_factory=_default_bands)


@dataclass(frozen=True)
class NoiseSection:
    psd: float = -174.0
    noise_figure: float = 10.0


@dataclass(frozen=True)
class AntennaSection:
    beamwidth: float = 65.0
    front_to_back: float = 30.0
    max_gain: float = 8.0


@dataclass(frozen=True)
class ShadowingSection:
    sigma_los: float = 4.0
    sigma_nlos: float = 6.0
    decorrelation: float = 50.0


@dataclass(frozen=True)
class UsersSection:
    count: int = 200
    drop: str = "gmm"  # or "uniform"
    num_clusters: int = 10
    cluster_std: float = 150.0


@dataclass(frozen=True)
class MobilitySection:
    memory: float = 0.8
    speed_mean: float = 15.0  # m/s
    speed_variance: float = 9.0
    heading_noise_std: float = float(np.pi / 8)


@dataclass(frozen=True)
class HitSection:
    outcomes: tuple = ((0.8, 20.0), (0.2, 90.76))
    slot_ms: float = 100.0


@dataclass(frozen=True)
class MpcSection:
    horizon: int = 3
    history: int = 8
    eta: float | None = None  # None -> expected log handover penalty
    gap_tolerance: float | None = None
    max_iterations: int = 500


@dataclass(frozen=True)
class ForecasterSection:
    hidden_size: int = 64
    horizon: int = 3
    temperature: float = 0.1
    max_epochs: int = 30
    batch_size: int = 256
    learning_rate: float = 1e-3
    clip_norm: float = 5.0
    train_samples: int = 10_000
    model: str | None = None  # checkpoint path


@dataclass(frozen=True)
class EpisodeConfig:
    seed: int = 0
    slots: int = 50
    runs: int = 20
    policies: tuple = POLICY_NAMES
    strict: bool = False
    deployment: DeploymentSection = field(default_factory=DeploymentSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    antenna: AntennaSection = field(default_factory=AntennaSection)
    shadowing: ShadowingSection = field(default_factory=ShadowingSection)
    users: UsersSection = field(default_factory=UsersSection)
    mobility: MobilitySection = field(default_factory=MobilitySection)
    hit: HitSection = field(default_factory=HitSection)
    mpc: MpcSection = field(default_factory=MpcSection)
    forecaster: ForecasterSection = field(default_factory=ForecasterSection)

    def __post_init__(self):
        validate(self)

    # derived objects -----------------------------------------------------
    def bands(self):
        return tuple(BandConfig(b.carrier_frequency, b.bandwidth, b.tx_power) for b in self.deployment.bands)

    def build_deployment(self):
        d = self.deployment
        return Deployment.build(
            d.sites, d.isd, self.bands(), d.bs_height, AntennaConfig(**dataclasses.asdict(self.antenna))
        )

    def noise_config(self):
        return NoiseConfig(**dataclasses.asdict(self.noise))

    def shadowing_config(self):
        return ShadowingConfig(**dataclasses.asdict(self.shadowing))

    def hit_model(self):
        return HitModel(tuple(tuple(o) for o in self.hit.outcomes), self.hit.slot_ms)

    def mobility_params(self):
        return MobilityParams(slot_seconds=self.hit.slot_ms / 1000.0, **dataclasses.asdict(self.mobility))

    def solver_config(self):
        return SolverConfig(gap_tolerance=self.mpc.gap_tolerance, max_iterations=self.mpc.max_iterations)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_section(self, name, **changes):
        return dataclasses.replace(self, **{name: dataclasses.replace(getattr(self, name), **changes)})

    def to_dict(self):
        return _plain(dataclasses.asdict(self))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def validate(cfg):
    """Raise :class:`ConfigurationError` for any inconsistent value."""
    if cfg.seed is None or int(cfg.seed) < 0:
        raise ConfigurationError("seed is mandatory and must be non-negative")
    if cfg.slots < 1 or cfg.runs < 1:
        raise ConfigurationError("slots and runs must be >= 1")
    unknown = [p for p in cfg.policies if p not in POLICY_NAMES]
    if unknown or not cfg.policies:
        raise ConfigurationError(f"unknown policies {unknown}; choose from {list(POLICY_NAMES)}")
    if cfg.users.count < 1:
        raise ConfigurationError("users.count must be >= 1")
    if cfg.users.drop not in ("gmm", "uniform"):
        raise ConfigurationError("users.drop must be 'gmm' or 'uniform'")
    if cfg.users.num_clusters < 1 or cfg.users.cluster_std < 0:
        raise ConfigurationError("invalid GMM drop parameters")
    if cfg.mpc.horizon < 1 or cfg.mpc.history < 1:
        raise ConfigurationError("mpc.horizon and mpc.history must be >= 1")
    if cfg.mpc.eta is not None and cfg.mpc.eta > 0:
        raise ConfigurationError("mpc.eta must be non-positive")
    if cfg.forecaster.horizon < cfg.mpc.horizon - 1:
        raise ConfigurationError("forecaster.horizon must cover mpc.horizon - 1 future slots")
    try:
        cfg.build_deployment()
        cfg.hit_model()
        cfg.mobility_params()
        cfg.solver_config()
        cfg.noise_config()
        cfg.shadowing_config()
    except ConfigurationError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(str(exc)) from exc


def _coerce(ftype, value, path):
    """Convert YAML scalars to the declared float/int/bool field type."""
    args = typing.get_args(ftype)
    if value is None and type(None) in args:
        return None
    base = next((a for a in args if a is not type(None)), ftype)
    if base not in (int, float, bool):
        return value
    if isinstance(value, bool) != (base is bool):
        raise ConfigurationError(f"{path} must be of type {base.__name__}")
    try:
        out = base(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path} must be of type {base.__name__}, got {value!r}") from exc
    if base is int and out != float(value):
        raise ConfigurationError(f"{path} must be an integer, got {value!r}")
    return out


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path or 'config'} must be a mapping")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        where = f" in {path}" if path else ""
        raise ConfigurationError(f"unknown config keys{where}: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        f = names[key]
        sub = f"{path}.{key}" if path else key
        if dataclasses.is_dataclass(f.type):
            kwargs[key] = _build(f.type, value, sub)
        elif key == "bands":
            if not isinstance(value, list) or not value:
                raise ConfigurationError(f"{sub} must be a non-empty list")
            kwargs[key] = tuple(_build(BandSection, b, f"{sub}[{i}]") for i, b in enumerate(value))
        elif key == "outcomes":
            try:
                kwargs[key] = tuple((float(p), float(t)) for p, t in value)
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"{sub} must be a list of [probability, ms] pairs") from exc
        elif key == "policies":
            if isinstance(value, str):
                value = [v.strip() for v in value.split(",")]
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = _coerce(f.type, value, sub)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"{path or 'config'}: {exc}") from exc


def config_from_dict(data):
    return _build(EpisodeConfig, data or {}, "")


def load_config(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(data)

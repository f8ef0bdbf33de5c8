"""
Run configuration: one optional TOML file with a section per concern, CLI
overrides on top, every violation collected before any work starts. The
effective configuration is hashed; the hash and seed are stamped on every run
artifact (config echo, dataset header, checkpoint sidecar, pose CSV rows, eval
CSV rows and summary, ICP JSON). IGSO(3) tables depend on the concentration
alone and carry neither.
"""
import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from .datagen import DatagenConfig
from .diff import SDE_FORMS, SdeSamplerConfig
from .errors import ConfigError
from .flow import SOLVERS, OdeSamplerConfig
from .guidance import ORDERS, GuidanceConfig
from .net import MODES, NetConfig
from .register import IcpConfig
from .schedule import T_MIN, NoiseSchedule
from .trainer import OptimConfig
log = logging.getLogger(__name__)
OUTPUT_ROOT_ENV = "SE3GRASP_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "runs"
DEFAULT_STEPS = {"score": 100, "flow": 40}
@dataclass(frozen=True)
class NetSettings:
    hidden: Tuple[int, ...] = (256, 256, 256, 256)
    time_embed_dim: int = 16
    codebook_dim: int = 16
    head_hidden: int = 64
    def to_config(self, feature_dim: int) -> NetConfig:
        return NetConfig(self.hidden, self.time_embed_dim, feature_dim, self.codebook_dim, head_hidden=self.head_hidden)
@dataclass(frozen=True)
class SamplerSettings:
    """`steps = 0` selects the per-mode default (100 for score, 40 for flow)."""
    steps: int = 0
    solver: str = "euler"
    cfg_weight: float = 2.0
    stochasticity_scale: float = 1.0
    final_denoise: bool = True
    sde_form: str = "matched"
    t_min: float = T_MIN
    samples_per_scene: int = 100
    def __post_init__(self):
        errors = []
        if self.steps < 0:
            errors.append(f"sampler.steps must be >= 0, got {self.steps}")
        if self.solver not in SOLVERS:
            errors.append(f"sampler.solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.sde_form not in SDE_FORMS:
            errors.append(f"sampler.sde_form must be one of {SDE_FORMS}, got {self.sde_form!r}")
        if self.stochasticity_scale < 0.0:
            errors.append("sampler.stochasticity_scale must be non-negative")
        if not 0.0 < self.t_min < 1.0:
            errors.append(f"sampler.t_min must lie in (0, 1), got {self.t_min}")
        if self.samples_per_scene < 1:
            errors.append(f"sampler.samples_per_scene must be >= 1, got {self.samples_per_scene}")
        if errors:
            raise ConfigError(errors)
@dataclass(frozen=True)
class GuidanceSettings:
    enabled: bool = True
    e_app: Tuple[float, ...] = (0.0, 1.0, 0.0)
    theta_thr: float = 0.8
    lambda_gd: float = 1e-3
    lambda_gd_score: Optional[float] = None
    gripper_axis_index: int = 1
    order: str = "before_cfg"
    def __post_init__(self):
        if self.order not in ORDERS:
            raise ConfigError([f"guidance.order must be one of {ORDERS}, got {self.order!r}"])
        self.to_config()
    def to_config(self) -> GuidanceConfig:
        fields = {f.name: getattr(self, f.name) for f in dataclasses.fields(GuidanceConfig)}
        try:
            return GuidanceConfig(**fields)
        except ValueError as e:
            raise ConfigError([f"guidance: {e}"]) from e
@dataclass(frozen=True)
class EvalSettings:
    lambda_rot: float = 0.1
    subsample_seed: int = 0
    contact_threshold: float = 0.5
    def __post_init__(self):
        if not self.lambda_rot > 0.0:
            raise ConfigError([f"eval.lambda_rot must be positive, got {self.lambda_rot}"])
        if not 0.0 < self.contact_threshold < 1.0:
            raise ConfigError([f"eval.contact_threshold must lie in (0, 1), got {self.contact_threshold}"])
SECTIONS = {
    "schedule": NoiseSchedule,
    "net": NetSettings,
    "optim": OptimConfig,
    "sampler": SamplerSettings,
    "guidance": GuidanceSettings,
    "datagen": DatagenConfig,
    "eval": EvalSettings,
    "icp": IcpConfig,
}
TOP_LEVEL = {"mode": "flow", "seed": 0, "dataset": "", "output_dir": "", "workers": 1}
UNHASHED = ("output_dir", "workers")
@dataclass(frozen=True)
class RunConfig:  # pylint: disable=too-many-instance-attributes
    mode: str = "flow"
    seed: int = 0
    dataset: str = ""
    output_dir: str = ""
    workers: int = 1
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    net: NetSettings = field(default_factory=NetSettings)
    optim: OptimConfig = field(default_factory=OptimConfig)
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    guidance: GuidanceSettings = field(default_factory=GuidanceSettings)
    datagen: DatagenConfig = field(default_factory=DatagenConfig)
    eval: EvalSettings = field(default_factory=EvalSettings)
    icp: IcpConfig = field(default_factory=IcpConfig)
    def to_dict(self) -> Dict[str, Any]:
        return json.loads(json.dumps(dataclasses.asdict(self)))
    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of every setting that affects results."""
        payload = {k: v for k, v in self.to_dict().items() if k not in UNHASHED}
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    def output_path(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT))
    def dataset_path(self) -> Path:
        return Path(self.dataset) if self.dataset else self.output_path() / "dataset.jsonl"
    def sampler_steps(self, mode: Optional[str] = None) -> int:
        return self.sampler.steps or DEFAULT_STEPS[mode or self.mode]
    def guidance_config(self) -> Optional[GuidanceConfig]:
        return self.guidance.to_config() if self.guidance.enabled else None
    def sde_config(self, schedule: Optional[NoiseSchedule] = None) -> SdeSamplerConfig:
        return SdeSamplerConfig(
            steps=self.sampler_steps("score"),
            schedule=schedule or self.schedule,
            stochasticity_scale=self.sampler.stochasticity_scale,
            guidance=self.guidance_config(),
            cfg_weight=self.sampler.cfg_weight,
            t_min=self.sampler.t_min,
            final_denoise=self.sampler.final_denoise,
            sde_form=self.sampler.sde_form,
        )
    def ode_config(self, schedule: Optional[NoiseSchedule] = None) -> OdeSamplerConfig:
        return OdeSamplerConfig(
            steps=self.sampler_steps("flow"),
            solver=self.sampler.solver,
            schedule=schedule or self.schedule,
            guidance=self.guidance_config(),
            cfg_weight=self.sampler.cfg_weight,
        )
def _check_value(name: str, default: Any, value: Any, errors: List[str]) -> Any:
    """Returns value coerced to the default's type, or records a type violation."""
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif isinstance(default, float) or default is None:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif isinstance(default, str):
        if isinstance(value, str):
            return value
    elif isinstance(default, tuple):
        if isinstance(value, (list, tuple)):
            items = [_check_value(f"{name}[{i}]", default[0], v, errors) for i, v in enumerate(value)] if default else list(value)
            return tuple(items)
    errors.append(f"{name}: expected {type(default).__name__ if default is not None else 'number'}, got {value!r}")
    return default
def _build_section(name: str, cls, raw: Any, errors: List[str]) -> Any:
    if not isinstance(raw, Mapping):
        errors.append(f"[{name}] must be a table, got {raw!r}")
        return cls()
    defaults = {f.name: getattr(cls(), f.name) for f in dataclasses.fields(cls)}
    values = {}
    for key, value in raw.items():
        if key not in defaults:
            errors.append(f"unknown key {name}.{key}")
            continue
        values[key] = _check_value(f"{name}.{key}", defaults[key], value, errors)
    try:
        return cls(**values)
    except ConfigError as e:
        errors.extend(e.violations)
    except (ValueError, TypeError) as e:
        errors.append(f"[{name}] {e}")
    return cls()
def build_config(raw: Mapping[str, Any]) -> RunConfig:
    """
    Validates a nested mapping into a RunConfig.
    Raises:
        ConfigError: Listing every unknown key, type mismatch and range violation.
    """
    errors: List[str] = []
    sections = {}
    top = {}
    for key, value in raw.items():
        if key in SECTIONS:
            sections[key] = _build_section(key, SECTIONS[key], value, errors)
        elif key in TOP_LEVEL:
            top[key] = _check_value(key, TOP_LEVEL[key], value, errors)
        else:
            errors.append(f"unknown key {key}")
    if top.get("mode", TOP_LEVEL["mode"]) not in MODES:
        errors.append(f"mode must be one of {MODES}, got {top.get('mode')!r}")
    if top.get("seed", 0) < 0:
        errors.append(f"seed must be non-negative, got {top.get('seed')}")
    if top.get("workers", 1) < 1:
        errors.append(f"workers must be >= 1, got {top.get('workers')}")
    if errors:
        raise ConfigError(errors)
    return RunConfig(**top, **sections)
def parse_assignment(text: str) -> Tuple[str, Any]:
    """Parses `section.key=value`; the value is read as a TOML literal, else kept as a string."""
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError([f"override must look like section.key=value, got {text!r}"])
    try:
        parsed = tomllib.loads(f"v = {value.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value.strip()
    return key.strip(), parsed
def apply_overrides(raw: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    merged = json.loads(json.dumps(raw))
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = merged
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError([f"cannot override {dotted}: {part} is not a table"])
        node[parts[-1]] = list(value) if isinstance(value, tuple) else value
    return merged
def load_config(path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Reads the TOML file (if any), applies dotted-key overrides and validates."""
    raw: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                raw = tomllib.load(f)
        except FileNotFoundError as e:
            raise ConfigError([f"config file not found: {path}"]) from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigError([f"invalid TOML in {path}: {e}"]) from e
        log.debug("Loaded configuration from %s", path)
    return build_config(apply_overrides(raw, overrides or {}))

"""
INI configuration for the detector.

The file is read with configparser, `--set` overrides are merged into the raw
values, and the result is validated by pydantic models. Unknown keys only
produce warnings; bad or missing values raise ConfigError naming the key.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union
import configparser
import logging
import re

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.bsif import FILTER_SIZES, ScaleId, all_scales, is_valid_combination
from src.ensemble import TuningOptions
from src.errors import ConfigError
from src.svm import ParameterGrid
from src.svm.tuning import DEFAULT_C_VALUES, DEFAULT_GAMMA_VALUES

logger = logging.getLogger(__name__)

ALIASES = {
    "voting": "ensemble.majority_voting",
    "n": "bsif.bit_depth",
}

_POWER_RE = re.compile(r"^2\^(-?\d+)$")


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def _number(token: Any) -> Any:
    if isinstance(token, str):
        match = _POWER_RE.match(token.replace(" ", ""))
        if match:
            return 2.0 ** int(match.group(1))
    return token


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ModesConfig(Section):
    extract_features: bool = False
    train_models: bool = False
    test_images: bool = False


class PathsConfig(Section):
    image_dir: Optional[Path] = None
    filter_dir: Optional[Path] = None
    feature_dir: Optional[Path] = None
    model_dir: Optional[Path] = None
    output_dir: Optional[Path] = None
    training_list: Optional[Path] = None
    testing_list: Optional[Path] = None


class BsifConfig(Section):
    bit_depth: int = 8
    scales: List[int] = Field(default_factory=lambda: list(FILTER_SIZES))
    raw_counts: bool = False

    @field_validator("scales", mode="before")
    @classmethod
    def _parse_scales(cls, value):
        return _split_list(value)

    @field_validator("scales")
    @classmethod
    def _check_scales(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one filter size is required")
        unknown = [s for s in value if s not in FILTER_SIZES]
        if unknown:
            raise ValueError(f"unsupported filter sizes {unknown}")
        if len(set(value)) != len(value):
            raise ValueError("filter sizes must be unique")
        return sorted(value)

    @model_validator(mode="after")
    def _check_combinations(self):
        bad = [s for s in self.scales if not is_valid_combination(s, self.bit_depth)]
        if bad:
            raise ValueError(f"bsif.bit_depth: n={self.bit_depth} is not available for sizes {bad}")
        return self


class SvmConfig(Section):
    c_values: List[float] = Field(default_factory=lambda: list(DEFAULT_C_VALUES))
    gamma_values: List[float] = Field(default_factory=lambda: list(DEFAULT_GAMMA_VALUES))
    folds: int = Field(default=10, ge=2)
    tol: float = Field(default=1e-3, gt=0)
    max_iter: int = Field(default=10_000_000, ge=1)
    sv_threshold: float = Field(default=1e-8, ge=0)

    @field_validator("c_values", "gamma_values", mode="before")
    @classmethod
    def _parse_grid(cls, value):
        value = _split_list(value)
        return [_number(v) for v in value] if isinstance(value, list) else value

    @field_validator("c_values", "gamma_values")
    @classmethod
    def _check_grid(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("grid must not be empty")
        if min(value) <= 0:
            raise ValueError("grid values must be positive")
        return value


class EnsembleConfig(Section):
    majority_voting: bool = True
    size: int = Field(default=16, ge=1, le=16)
    members: List[str] = Field(default_factory=list)

    @field_validator("members", mode="before")
    @classmethod
    def _parse_members(cls, value):
        return _split_list(value)

    @field_validator("members")
    @classmethod
    def _check_members(cls, value: List[str]) -> List[str]:
        for label in value:
            ScaleId.parse(label)
        return value


class SeedsConfig(Section):
    split: int = 1
    cv: int = 1
    tie: int = 1


class ProtocolConfig(Section):
    validation_fraction: float = Field(default=0.2, gt=0, lt=1)
    logo_groups: List[str] = Field(default_factory=list)
    logo_attack_train_per_group: Optional[int] = Field(default=None, ge=1)
    logo_attack_test: Optional[int] = Field(default=None, ge=1)
    logo_bonafide_train: Optional[int] = Field(default=None, ge=1)
    logo_bonafide_test: Optional[int] = Field(default=None, ge=1)

    @field_validator("logo_groups", mode="before")
    @classmethod
    def _parse_groups(cls, value):
        return _split_list(value)


class RuntimeConfig(Section):
    workers: int = Field(default=1, ge=1)
    otel_endpoint: Optional[str] = None


# Paths each mode cannot run without
MODE_REQUIREMENTS = {
    "extract_features": ("image_dir", "filter_dir", "feature_dir"),
    "train_models": ("feature_dir", "model_dir", "training_list"),
    "test_images": ("feature_dir", "model_dir", "output_dir", "testing_list"),
}


class Config(BaseModel):
    model_config = ConfigDict(extra="forbid")

    modes: ModesConfig = Field(default_factory=ModesConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)
    bsif: BsifConfig = Field(default_factory=BsifConfig)
    svm: SvmConfig = Field(default_factory=SvmConfig)
    ensemble: EnsembleConfig = Field(default_factory=EnsembleConfig)
    seeds: SeedsConfig = Field(default_factory=SeedsConfig)
    protocol: ProtocolConfig = Field(default_factory=ProtocolConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)

    @model_validator(mode="after")
    def _check_modes(self):
        enabled = [name for name, on in self.modes.model_dump().items() if on]
        if not enabled:
            raise ValueError("modes: no mode enabled (extract_features, train_models, test_images)")
        for mode in enabled:
            for key in MODE_REQUIREMENTS[mode]:
                if getattr(self.paths, key) is None:
                    raise ValueError(f"paths.{key}: required when modes.{mode} is on")
        if self.modes.extract_features and not (self.paths.training_list or self.paths.testing_list):
            raise ValueError("paths.training_list: extraction needs a training or testing list")
        return self

    @property
    def scale_ids(self) -> List[ScaleId]:
        return all_scales(self.bsif.scales)

    @property
    def grid(self) -> ParameterGrid:
        return ParameterGrid(tuple(self.svm.c_values), tuple(self.svm.gamma_values))

    def tuning_options(self) -> TuningOptions:
        return TuningOptions(grid=self.grid, k=self.svm.folds, seed=self.seeds.cv, tol=self.svm.tol,
                             max_iter=self.svm.max_iter, sv_threshold=self.svm.sv_threshold)

    def require_paths(self, *keys: str):
        for key in keys:
            if getattr(self.paths, key) is None:
                raise ConfigError(f"paths.{key}", "required for this operation")

    def seeds_summary(self) -> str:
        return f"split:{self.seeds.split},cv:{self.seeds.cv},tie:{self.seeds.tie}"


SECTIONS = {name: field.annotation for name, field in Config.model_fields.items()}


def known_keys() -> Dict[str, Tuple[str, ...]]:
    return {section: tuple(model.model_fields) for section, model in SECTIONS.items()}


def _resolve_key(key: str) -> Tuple[str, str]:
    key = ALIASES.get(key.strip(), key.strip())
    keys = known_keys()
    if "." in key:
        section, name = key.split(".", 1)
        if section in keys and name in keys[section]:
            return section, name
        raise ConfigError(key, "unknown configuration key")
    owners = [section for section, names in keys.items() if key in names]
    if len(owners) == 1:
        return owners[0], key
    if owners:
        raise ConfigError(key, f"ambiguous key, use one of {', '.join(f'{o}.{key}' for o in owners)}")
    raise ConfigError(key, "unknown configuration key")


def parse_overrides(overrides: Iterable[str]) -> Dict[Tuple[str, str], str]:
    parsed = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, value = item.split("=", 1)
        parsed[_resolve_key(key)] = value.strip()
    return parsed


def _format_errors(error: ValidationError) -> ConfigError:
    first = error.errors()[0]
    loc = ".".join(str(p) for p in first.get("loc", ()))
    message = first.get("msg", str(error))
    match = re.search(r"([a-z_]+\.[a-z_]+|modes):\s*(.*)", message)
    if match and (not loc or loc.count(".") == 0):
        return ConfigError(match.group(1), match.group(2))
    return ConfigError(loc or "config", message)


def build_config(raw: Mapping[str, Mapping[str, Any]]) -> Config:
    try:
        return Config.model_validate({section: dict(values) for section, values in raw.items()})
    except ValidationError as e:
        raise _format_errors(e) from e


def _resolve_paths(raw: Dict[str, Dict[str, Any]], base: Path):
    for key, value in raw.get("paths", {}).items():
        path = Path(value).expanduser()
        raw["paths"][key] = str(path if path.is_absolute() else (base / path).resolve())


def parse_config(path: Union[str, Path], overrides: Sequence[str] = (),
                 seed: Optional[int] = None) -> Config:
    """Read an INI file, merge overrides and validate.

    Relative paths are resolved against the config file's directory. Empty
    values fall back to their defaults.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Config file not found: {path}")

    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError(path.name, f"malformed INI file ({e})") from e

    keys = known_keys()
    raw: Dict[str, Dict[str, Any]] = {}
    for section in parser.sections():
        if section not in keys:
            logger.warning(f"⚠️ Unknown config section [{section}] ignored")
            continue
        for name, value in parser.items(section):
            if name not in keys[section]:
                logger.warning(f"⚠️ Unknown config key {section}.{name} ignored")
                continue
            if value.strip():
                raw.setdefault(section, {})[name] = value.strip()
    _resolve_paths(raw, path.parent)

    for (section, name), value in parse_overrides(overrides).items():
        if section == "paths" and value:
            value = str(Path(value).expanduser().resolve())
        if value:
            raw.setdefault(section, {})[name] = value
        else:
            raw.get(section, {}).pop(name, None)
    if seed is not None:
        raw["seeds"] = {name: str(seed) for name in keys["seeds"]}

    return build_config(raw)


def render_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(render_value(v) for v in value)
    return str(value)


def show_config(cfg: Config) -> str:
    """Every effective key, defaults included, as INI text that parses back to cfg"""
    lines = []
    for section in SECTIONS:
        lines.append(f"[{section}]")
        for name, value in getattr(cfg, section).model_dump().items():
            rendered = render_value(value)
            lines.append(f"{name} = {rendered}" if rendered else f"{name} =")
        lines.append("")
    return "\n".join(lines)

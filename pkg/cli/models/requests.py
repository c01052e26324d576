"""
Experiment configuration: a flat `key = value` text file with `#` comments.
"""
import os
from typing import Dict, Literal, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, model_validator

from griddata.synthetic import SyntheticConfig
from griddata.types import GridSpec
from settings.config import settings
from training.config import TrainConfig
from utils.exceptions import ConfigError

BIAS_CORRECTION = "bias_correction"
DOWNSCALING = "downscaling"

# default file names produced by gen-data under <out_dir>/data
DATA_FILES = {
    "truth": "truth.gfb",
    "biased": "biased.gfb",
    "lowres": "lowres.gfb",
}


class ExperimentConfig(BaseModel):
    """All knobs of one experiment; every command reads the same config"""
    task: Literal["bias_correction", "downscaling"] = Field(BIAS_CORRECTION, description="Experiment kind")
    out_dir: str = Field(settings.out_dir, description="Root directory of every artifact")

    # data files; empty means the gen-data outputs for the task
    train_input: str = ""
    train_target: str = ""
    test_input: str = ""
    test_target: str = ""

    # synthetic data
    data_seed: int = 42
    grid_size: int = Field(64, ge=4)
    n_days: int = Field(500, ge=2)
    n_train_days: int = Field(400, ge=1)
    bias_gain: float = Field(1.3, gt=0)
    bias_offset: float = 2.0
    noise_sigma: float = Field(1.5, ge=0)
    n_bumps: int = Field(6, ge=1)
    bump_scale: float = Field(6.0, gt=0)
    lowres_factor: int = Field(4, ge=1)

    # training
    train_seed: int = 7
    learning_rate: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)
    batch_size: int = Field(16, ge=1)
    max_epochs: int = Field(500, ge=1)
    patience: int = Field(20, ge=1)
    val_fraction: float = Field(0.2, gt=0, lt=0.5)

    # baselines and evaluation
    n_quantiles: int = Field(settings.n_quantiles, ge=1)
    kl_bins: int = Field(settings.kl_bins, ge=2)
    kl_epsilon: float = Field(settings.kl_epsilon, ge=0)
    peak: Optional[float] = Field(None, gt=0, description="PSNR peak; largest test target value when unset")

    # extremes and robustness
    dry_threshold: float = 1.0
    heavy_threshold: float = 20.0
    detection_threshold: float = 20.0
    skew_shape: float = 5.0
    noise_seed: int = 0

    threads: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_split(self):
        if self.n_train_days >= self.n_days:
            raise ValueError(f"n_train_days ({self.n_train_days}) must be below n_days ({self.n_days})")
        if self.grid_size % self.lowres_factor:
            raise ValueError(f"grid_size {self.grid_size} is not divisible by lowres_factor {self.lowres_factor}")
        return self

    @property
    def data_dir(self) -> str:
        return os.path.join(self.out_dir, "data")

    def data_path(self, kind: str, split: str) -> str:
        stem, ext = os.path.splitext(DATA_FILES[kind])
        return os.path.join(self.data_dir, f"{stem}_{split}{ext}")

    def series_paths(self) -> Dict[str, str]:
        """Resolved train/test input/target paths"""
        input_kind = "biased" if self.task == BIAS_CORRECTION else "lowres"
        return {
            "train_input": self.train_input or self.data_path(input_kind, "train"),
            "train_target": self.train_target or self.data_path("truth", "train"),
            "test_input": self.test_input or self.data_path(input_kind, "test"),
            "test_target": self.test_target or self.data_path("truth", "test"),
        }

    def require_files(self, names=("train_input", "train_target", "test_input", "test_target")) -> Dict[str, str]:
        paths = self.series_paths()
        missing = [f"{name}={paths[name]}" for name in names if not os.path.isfile(paths[name])]
        if missing:
            raise ConfigError(f"missing input files: {', '.join(missing)} (run gen-data or set the paths)")
        return paths

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate, beta1=self.beta1, beta2=self.beta2, epsilon=self.epsilon,
            batch_size=self.batch_size, max_epochs=self.max_epochs, patience=self.patience,
            val_fraction=self.val_fraction, seed=self.train_seed,
        )

    def synthetic_config(self) -> SyntheticConfig:
        return SyntheticConfig(
            seed=self.data_seed,
            n_days=self.n_days,
            spec=GridSpec(n_lat=self.grid_size, n_lon=self.grid_size, lat0=6.75, lon0=66.5),
            bias_gain=self.bias_gain,
            bias_offset=self.bias_offset,
            noise_sigma=self.noise_sigma,
            n_bumps=self.n_bumps,
            bump_scale=self.bump_scale,
            lowres_factor=self.lowres_factor,
        )

    def seeds(self) -> Dict[str, int]:
        return {"data_seed": self.data_seed, "train_seed": self.train_seed, "noise_seed": self.noise_seed}


def _parse_line(raw: str, number: int, source: str) -> Optional[Tuple[str, str]]:
    line = raw.split("#", 1)[0].strip()
    if not line:
        return None
    if "=" not in line:
        raise ConfigError(f"{source}:{number}: expected 'key = value', got '{raw.strip()}'")
    key, value = (part.strip() for part in line.split("=", 1))
    if not key:
        raise ConfigError(f"{source}:{number}: missing key")
    return key, value


def parse_config_text(text: str, source: str = "<config>", overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
    """
    Parse `key = value` lines into an ExperimentConfig.

    Args:
        text: Config file contents
        source: Name used in diagnostics
        overrides: Values applied after the file (command-line flags)

    Returns:
        Validated ExperimentConfig
    """
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        parsed = _parse_line(raw, number, source)
        if parsed is None:
            continue
        key, value = parsed
        if key not in ExperimentConfig.model_fields:
            raise ConfigError(f"{source}:{number}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{source}:{number}: duplicate key '{key}' (first set on line {lines[key]})")
        values[key] = value
        lines[key] = number
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        details = []
        for error in e.errors():
            key = str(error["loc"][0]) if error["loc"] else "config"
            where = f"{source}:{lines[key]}" if key in lines else source
            details.append(f"{where}: {key}: {error['msg']}")
        raise ConfigError("; ".join(details)) from e


def load_experiment_config(path: Optional[str], overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
    """Read a config file (or the defaults when path is None) and apply overrides"""
    if path is None:
        return parse_config_text("", "<defaults>", overrides)
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as handle:
        return parse_config_text(handle.read(), path, overrides)

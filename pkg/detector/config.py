# detector/config.py
"""
Experiment configuration.

`TrainConfig` holds everything a single training/scoring run needs;
`CliConfig` adds the experiment protocol and paths. Both reject unknown keys.
Config files are flat `key=value` text with the lower-case field names.
"""

from enum import Enum
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from graphs.features import DEFAULT_DEGREE_CAP, FeatureScheme
from sego import settings
from sego.exceptions import ConfigurationError
from triplet.encodings import DEFAULT_WALK_LENGTH


class TreePartner(str, Enum):
    BASIC = "basic"
    TOPO = "topo"
    BOTH = "both"


class Mode(str, Enum):
    OOD = "ood"
    ANOMALY = "anomaly"
    SELF_CONSISTENCY = "self"


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    epochs: int = Field(150, ge=1)
    batch_size: int = Field(64, ge=2)
    learning_rate: float = Field(1e-3, gt=0)
    tau: float = Field(0.2, gt=0)
    theta: float = Field(1.0, ge=0)
    k: int = Field(5, ge=1)
    r: int = Field(DEFAULT_WALK_LENGTH, ge=1)
    hidden_dim: int = Field(16, ge=1)
    contrast_dim: int = Field(16, ge=1)
    num_layers: int = Field(5, ge=1)
    seed: int = 0
    feature_scheme: FeatureScheme = FeatureScheme.AUTO
    degree_cap: int = Field(DEFAULT_DEGREE_CAP, ge=1)
    tree_partner: TreePartner = TreePartner.BASIC
    disable_tree: bool = False
    disable_local: bool = False
    disable_global: bool = False
    score_tree_term: bool = False
    workers: int = Field(default_factory=lambda: settings.WORKERS, ge=1)


class CliConfig(TrainConfig):
    mode: Mode = Mode.OOD
    id_data: Optional[Path] = None
    ood_data: Optional[Path] = None
    n_runs: int = Field(5, ge=1)
    out: Path = Field(default_factory=lambda: settings.OUTPUT_DIR)
    split_ratio: float = Field(0.9, gt=0, lt=1)
    anomaly_label: Optional[int] = None
    anomaly_test_fraction: float = Field(0.2, gt=0, lt=1)
    cache_dir: Optional[Path] = Field(default_factory=lambda: Path(settings.CACHE_DIR) if settings.CACHE_DIR else None)

    def train_config(self):
        return TrainConfig(**self.model_dump(include=set(TrainConfig.model_fields)))

    def check_paths(self):
        """Raise ConfigurationError unless the dataset directories this mode needs exist."""
        needed = [("id_data", self.id_data)]
        if self.mode is Mode.OOD:
            needed.append(("ood_data", self.ood_data))
        for key, path in needed:
            if path is None:
                raise ConfigurationError(f"{key}: required for mode {self.mode.value}")
            if not Path(path).is_dir():
                raise ConfigurationError(f"{key}: dataset directory {path} does not exist")


def _first_error(e):
    err = e.errors()[0]
    key = ".".join(str(p) for p in err["loc"]) or "config"
    return f"{key}: {err['msg']}"


def build_config(model, *layers):
    """Merge mappings left to right (later wins), dropping None, and validate."""
    merged = {}
    for layer in layers:
        merged.update({k: v for k, v in layer.items() if v is not None})
    try:
        return model(**merged)
    except ValidationError as e:
        raise ConfigurationError(_first_error(e)) from e


def read_config_file(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {path} does not exist")
    values = dotenv_values(path)
    return {key.strip().lower(): value.strip() for key, value in values.items() if value and value.strip()}

"""Central configuration – environment settings and experiment configs.

Two layers:

* ``Settings`` – process-wide knobs from ``.env`` or ``QDSG_*`` env vars
  (output directory, log level, presets file).
* ``ExperimentConfig`` – one simulation run: graph, data, algorithm,
  quantizer and schedule parameters.  Loaded from JSON/YAML files or CLI flags.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings

from src.errors import ConfigParseError, ConfigValidationError

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Process settings – values come from .env or real env vars (prefix QDSG_)."""

    # ── Output ────────────────────────────────────────────────────────────
    out: str = Field(default="results", description="Default output directory (QDSG_OUT)")

    # ── Logging ───────────────────────────────────────────────────────────
    log_level: str = Field(default="INFO", description="Logging level")

    # ── Experiments ───────────────────────────────────────────────────────
    presets_file: str = Field(default="experiments.yaml", description="Path to experiments.yaml")
    reference_tol: float = Field(default=1e-9, description="Default tolerance for solve_reference")

    model_config = {
        "env_prefix": "QDSG_",
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "extra": "ignore",
    }

    @property
    def out_dir(self) -> Path:
        return Path(self.out)


def get_settings() -> Settings:
    """Fresh settings object; env is re-read on every call."""
    return Settings()  # type: ignore[call-arg]


# ── Experiment config ────────────────────────────────────────────────────────


LossKind = Literal["quadratic", "absolute"]
Algorithm = Literal["qdsg", "dsg"]
ScheduleKind = Literal["inv_sqrt", "inv_linear"]
AveragingMode = Literal["weighted", "plain"]
StopRule = Literal["none", "relative_gap"]


class ExperimentConfig(BaseModel):
    """Every knob of a single simulation run, with explicit defaults."""

    model_config = ConfigDict(extra="forbid")

    # Network
    n: int = Field(default=100, ge=1, description="Number of nodes")
    radius: float = Field(default=0.4, gt=0, description="Connection radius in the unit square")
    seed: int = Field(default=0, ge=0, description="Master RNG seed")

    # Problem
    d: int = Field(default=10, ge=1, description="Decision variable dimension")
    loss: LossKind = "quadratic"
    reg: float = Field(default=0.0, ge=0, description="l2 coefficient lambda")
    box_lower: float = -1.0
    box_upper: float = 1.0
    reference_tol: float = Field(default=1e-9, gt=0)

    # Algorithm
    algorithm: Algorithm = "qdsg"
    bits: int = Field(default=8, ge=1, le=52, description="Bits per coordinate b")
    gamma: Optional[float] = Field(
        default=None, gt=0, description="Override for the interval constant (None = 48(2+L)/(1-sigma2))"
    )
    schedule: ScheduleKind = "inv_sqrt"
    scale: float = Field(default=1.0, gt=0, description="Step scale a (inv_linear only)")
    averaging: AveragingMode = "weighted"

    # Run control
    rounds: int = Field(default=5000, ge=1, description="Round cap K")
    log_every: int = Field(default=1, ge=1)
    stop_rule: StopRule = "none"
    stop_tol: float = Field(default=0.05, gt=0, description="Relative-gap target tau")

    # Output
    output_dir: Optional[str] = None
    label: str = ""
    message_log: bool = False
    export_graph: bool = False
    export_dataset: bool = False

    @model_validator(mode="after")
    def _check_box(self) -> "ExperimentConfig":
        if self.box_lower > self.box_upper:
            raise ValueError("box_lower must not exceed box_upper")
        return self

    @property
    def run_name(self) -> str:
        if self.label:
            return self.label
        return f"{self.algorithm}-{self.loss}-b{self.bits}-n{self.n}-d{self.d}-s{self.seed}"


def build_config(data: dict[str, Any]) -> ExperimentConfig:
    """Validate a raw mapping; pydantic errors become ConfigValidationError."""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(part) for part in first.get("loc", ())) or "config"
        raise ConfigValidationError(loc, first.get("msg", "invalid value")) from exc


def merge_config(base: ExperimentConfig, updates: dict[str, Any]) -> ExperimentConfig:
    """Return a re-validated copy of *base* with *updates* applied."""
    return build_config({**base.model_dump(), **updates})


def read_config_mapping(path: str | Path) -> dict[str, Any]:
    """Read a JSON or YAML file into a plain dict (no validation)."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read {p}: {exc}") from exc

    try:
        if p.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigParseError(f"cannot parse {p}: {exc}") from exc

    if not isinstance(data, dict):
        raise ConfigParseError(f"{p}: top level must be a mapping, got {type(data).__name__}")
    return data


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and validate an experiment config; unset fields get their defaults."""
    config = build_config(read_config_mapping(path))
    logger.info("Loaded config %s (%s)", path, config.run_name)
    return config


def save_config(config: ExperimentConfig, path: str | Path) -> Path:
    """Write *config* as sorted-key JSON."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(config.model_dump(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return p

"""Experiment registry – loads experiments.yaml and resolves presets by name or alias."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import yaml

from src.errors import ConfigParseError

logger = logging.getLogger(__name__)


class ExperimentRegistry:
    """In-memory registry of the named experiment presets."""

    def __init__(self, yaml_path: str | Path = "experiments.yaml"):
        self._path = Path(yaml_path)
        self._experiments: dict[str, dict] = {}
        self._alias_map: dict[str, str] = {}  # alias -> canonical name
        self._load()

    def _load(self) -> None:
        if not self._path.exists():
            logger.warning("Experiments file not found: %s", self._path)
            return

        try:
            with open(self._path, encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigParseError(f"cannot parse {self._path}: {exc}") from exc

        self._experiments = data.get("experiments", {}) or {}
        for name, info in self._experiments.items():
            self._alias_map[name.lower()] = name
            for alias in info.get("aliases", []):
                self._alias_map[str(alias).lower()] = name

        logger.info(
            "Loaded %d experiment presets (%d aliases)", len(self._experiments), len(self._alias_map)
        )

    def resolve(self, name_or_alias: str) -> Optional[dict]:
        """Preset info dict (with ``_name``) for a name or alias, or None."""
        canonical = self._alias_map.get(name_or_alias.lower())
        if canonical:
            return {**self._experiments[canonical], "_name": canonical}
        return None

    def experiment_names(self) -> list[str]:
        return list(self._experiments.keys())

    def bits_list(self, name_or_alias: str) -> list[int]:
        info = self.resolve(name_or_alias) or {}
        return [int(b) for b in info.get("bits", [])]

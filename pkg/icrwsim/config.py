"""Configuration management for icrwsim."""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

from .scenario import ScenarioConfig
from .validator import ConfigValidator, ValidationError

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def parse_override(item: str) -> Tuple[str, Any]:
    """Split a `key=value` override; the value is read as JSON when possible.

    Raises:
        ValidationError: If the item has no `=` or an empty key
    """
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ValidationError(f"Invalid override '{item}'", [f"--set {item}: expected key=value"])
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def default_global_path() -> Path:
    """Global configuration file, relocated by the ICRWSIM_HOME environment variable."""
    home = os.environ.get("ICRWSIM_HOME")
    return (Path(home) if home else Path.home() / ".icrwsim") / "config.json"


class Configuration:
    """Configuration class for icrwsim.

    This class manages loading and merging configuration from different sources:
    1. Command-line `--set key=value` overrides (highest priority)
    2. Experiment file given with `--config`
    3. Global configuration file (~/.icrwsim/config.json)
    4. Schema defaults
    """

    def __init__(self, validator: Optional[ConfigValidator] = None, global_path: Optional[Path] = None):
        """Initialize a new Configuration instance.

        Args:
            validator: Schema validator; the packaged schema is used by default
            global_path: Location of the global configuration file
        """
        self.validator = validator or ConfigValidator()
        self._global_config_path = global_path or default_global_path()
        self._experiment_path: Optional[Path] = None

        # Configuration values from different sources
        self._global_config: Dict[str, Any] = {}
        self._experiment_config: Dict[str, Any] = {}
        self._overrides: Dict[str, Any] = {}
        self._errors: List[str] = []

        # Merged configuration (overrides taking precedence)
        self._config: Dict[str, Any] = {}

    def _read(self, path: Path) -> Dict[str, Any]:
        text = path.read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"Failed to parse {path}", [f"{path}:{e.lineno}: {e.msg}"])
        if not isinstance(data, dict):
            raise ValidationError(f"Failed to parse {path}", [f"{path}:1: top level must be a JSON object"])
        _, errors = self.validator.validate(data, source=str(path), text=text)
        self._errors.extend(errors)
        return {k: v for k, v in data.items() if not k.startswith("_")}

    def load_global_config(self) -> None:
        """Load configuration from the global config file, if present."""
        if self._global_config_path.exists():
            self._global_config = self._read(self._global_config_path)
            logger.debug(f"Loaded global config from {self._global_config_path}")

    def load_experiment_config(self, path: Optional[str]) -> None:
        """Load the experiment file.

        Raises:
            ValidationError: If the file is missing or not valid JSON
        """
        if path is None:
            return
        self._experiment_path = Path(path)
        if not self._experiment_path.is_file():
            raise ValidationError(f"Configuration file not found: {path}", [f"{path}: no such file"])
        self._experiment_config = self._read(self._experiment_path)
        logger.debug(f"Loaded experiment config from {self._experiment_path}")

    def set_overrides(self, items: Sequence[str]) -> None:
        """Apply `key=value` overrides from the command line."""
        for item in items:
            key, value = parse_override(item)
            self._overrides[key] = value
        _, errors = self.validator.validate(self._overrides)
        self._errors.extend(f"--set: {e}" for e in errors)
        self._update_merged_config()

    def _update_merged_config(self) -> None:
        """Update the merged configuration with values from all sources."""
        self._config = self.validator.defaults()
        self._config.update(self._global_config)
        self._config.update(self._experiment_config)
        self._config.update(self._overrides)

    def load_config(self, experiment: Optional[str] = None, overrides: Sequence[str] = ()) -> None:
        """Load every source and raise if any of them is invalid.

        Raises:
            ValidationError: With one diagnostic per problem
        """
        self._errors = []
        self.load_global_config()
        self.load_experiment_config(experiment)
        self.set_overrides(overrides)
        if self._errors:
            raise ValidationError("Configuration is invalid", self._errors)

    def to_scenario(self) -> ScenarioConfig:
        """Build and validate the scenario described by the effective configuration."""
        scenario = ScenarioConfig.from_flat(self._config)
        scenario.validate()
        return scenario

    def create_global_config(self) -> bool:
        """Write the effective configuration to the global config file.

        Returns:
            True if the configuration file was created successfully
        """
        return self.write(self._global_config_path)

    def write(self, path: Path) -> bool:
        """Write the effective configuration as JSON.

        Returns:
            True if the file was written
        """
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w') as f:
                json.dump(self._config, f, indent=2, sort_keys=True)
            logger.info(f"Wrote configuration to {path}")
            return True
        except OSError as e:
            logger.error(f"Failed to write configuration file: {str(e)}")
            return False

    @property
    def global_config(self) -> Dict[str, Any]:
        return dict(self._global_config)

    @property
    def experiment_config(self) -> Dict[str, Any]:
        return dict(self._experiment_config)

    def get(self, key: str, default: Any = None) -> Any:
        return self._config.get(key, default)

    def __getitem__(self, key: str) -> Any:
        if key in self._config:
            return self._config[key]
        raise KeyError(f"Configuration key '{key}' not found")

    def __contains__(self, key: str) -> bool:
        return key in self._config

    def keys(self) -> Set[str]:
        return set(self._config.keys())

    def as_dict(self) -> Dict[str, Any]:
        """Get the effective configuration as a dictionary."""
        return self._config.copy()

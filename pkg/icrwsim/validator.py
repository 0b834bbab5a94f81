"""Configuration schema validator for icrwsim."""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

SCHEMA_PATH = Path(__file__).parent / "config_schema.json"


class ValidationError(Exception):
    """Exception raised for configuration and schema validation errors."""

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        super().__init__(message)
        self.errors: List[str] = list(errors or [])

    def __str__(self) -> str:
        if not self.errors:
            return super().__str__()
        return super().__str__() + ":\n" + "\n".join(f"  {e}" for e in self.errors)


class SchemaOption:
    """Represents one configuration key defined in the schema."""

    def __init__(self, option_data: Dict[str, Any]):
        """Initialize a SchemaOption.

        Args:
            option_data: Dictionary containing option data from schema
        """
        self.name = option_data.get("name", "")
        self.description = option_data.get("description", "")
        self.type = option_data.get("type", "string")
        self.default = option_data.get("default-value", None)
        self.nullable = option_data.get("nullable", False)
        self.minimum = option_data.get("minimum")
        self.maximum = option_data.get("maximum")
        self.exclusive_minimum = option_data.get("exclusive-minimum", False)
        self.choices = option_data.get("choices", [])

    @property
    def section(self) -> str:
        return self.name.split(".", 1)[0] if "." in self.name else "run"

    def validate_value(self, value: Any) -> Tuple[bool, Optional[str]]:
        """Validate a value against this option's type and range.

        Args:
            value: The value to validate

        Returns:
            Tuple of (is_valid, error_message)
        """
        if value is None:
            if self.nullable:
                return (True, None)
            return (False, f"Value for {self.name} must not be null")

        if self.type == "string":
            if not isinstance(value, str):
                return (False, f"Value for {self.name} must be a string")
        elif self.type == "integer":
            if isinstance(value, bool) or not isinstance(value, int):
                return (False, f"Value for {self.name} must be an integer")
        elif self.type == "boolean":
            if not isinstance(value, bool):
                return (False, f"Value for {self.name} must be a boolean")
        elif self.type == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return (False, f"Value for {self.name} must be a number")
        elif self.type == "array":
            if not isinstance(value, list):
                return (False, f"Value for {self.name} must be an array")

        if self.choices and value not in self.choices:
            return (False, f"Value for {self.name} must be one of {', '.join(map(str, self.choices))}, got {value!r}")
        if self.minimum is not None and isinstance(value, (int, float)):
            if value < self.minimum or (self.exclusive_minimum and value == self.minimum):
                bound = ">" if self.exclusive_minimum else ">="
                return (False, f"Value for {self.name} must be {bound} {self.minimum}, got {value}")
        if self.maximum is not None and isinstance(value, (int, float)) and value > self.maximum:
            return (False, f"Value for {self.name} must be <= {self.maximum}, got {value}")
        return (True, None)


class ConfigValidator:
    """Validates flat configuration dictionaries against the configuration schema."""

    def __init__(self, schema_path: Optional[Union[str, Path]] = SCHEMA_PATH):
        """Initialize a ConfigValidator.

        Args:
            schema_path: Path to the configuration schema file
        """
        self.schema: Dict[str, Any] = {}
        self.options: Dict[str, SchemaOption] = {}

        if schema_path:
            self.load_schema(schema_path)

    def load_schema(self, schema_path: Union[str, Path]) -> None:
        """Load and parse the schema file.

        Raises:
            ValidationError: If the schema file is invalid or cannot be read
        """
        try:
            with open(schema_path, 'r') as f:
                self.schema = json.load(f)
        except (FileNotFoundError, json.JSONDecodeError) as e:
            raise ValidationError(f"Failed to load schema file: {str(e)}")

        for option_data in self.schema.get("options", []):
            option = SchemaOption(option_data)
            self.options[option.name] = option
        logger.debug(f"Successfully loaded schema: {len(self.options)} options")

    def defaults(self) -> Dict[str, Any]:
        """Schema default of every key that has one."""
        return {name: option.default for name, option in self.options.items()
                if option.default is not None or option.nullable}

    def apply_defaults(self, values: Dict[str, Any]) -> Dict[str, Any]:
        """Fill keys missing from `values` with their schema defaults."""
        result = self.defaults()
        result.update(values)
        return result

    @staticmethod
    def locate(text: str, key: str) -> Optional[int]:
        """1-based line on which `key` appears as a JSON object key, if any."""
        pattern = re.compile(r'"' + re.escape(key) + r'"\s*:')
        for number, line in enumerate(text.splitlines(), start=1):
            if pattern.search(line):
                return number
        return None

    def validate(self, values: Dict[str, Any], source: Optional[str] = None,
                 text: Optional[str] = None) -> Tuple[bool, List[str]]:
        """Validate configuration values.

        Keys starting with an underscore are comments and are skipped.

        Args:
            values: Flat configuration dictionary
            source: Name of the file the values came from, for diagnostics
            text: Raw text of that file, used to locate line numbers

        Returns:
            Tuple of (is_valid, error_messages)
        """
        errors = []
        for key, value in values.items():
            if key.startswith("_"):
                continue
            option = self.options.get(key)
            if option is None:
                errors.append(self._prefix(source, text, key) + f"Unknown configuration key: {key}")
                continue
            is_valid, error = option.validate_value(value)
            if not is_valid:
                errors.append(self._prefix(source, text, key) + error)
        return (len(errors) == 0, errors)

    def _prefix(self, source: Optional[str], text: Optional[str], key: str) -> str:
        if source is None:
            return ""
        line = self.locate(text, key) if text is not None else None
        return f"{source}:{line}: " if line is not None else f"{source}: "

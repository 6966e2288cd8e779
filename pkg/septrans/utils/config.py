import re
from pathlib import Path
from typing import Any, Optional, Union

import yaml
from pydantic import ValidationError

from septrans.schemas.models import ConfigurationError, Settings
from septrans.utils.load_env import get_env, get_float_env

DEFAULT_SETTINGS_FILE = "septrans.yaml"
TOL_ENV_VAR = "SEPTRANS_DEFAULT_TOL"

# Pattern to match ${ENV_VAR} style placeholders
_ENV_VAR_PATTERN = re.compile(r"\$\{([^}]+)\}")


def _substitute(item: Any) -> Any:
    """Replace ${VAR} placeholders recursively in parsed YAML data."""
    if isinstance(item, dict):
        return {k: _substitute(v) for k, v in item.items()}
    if isinstance(item, list):
        return [_substitute(v) for v in item]
    if isinstance(item, str):

        def replace_match(match):
            try:
                return get_env(match.group(1), required=True)
            except EnvironmentError as e:
                raise ConfigurationError(f"Environment variable error: {e}")

        return _ENV_VAR_PATTERN.sub(replace_match, item)
    return item


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    """
    Load settings from a YAML file, then apply the environment override.

    Args:
        path: Settings file. When None, ``septrans.yaml`` in the working
            directory is used if it exists.

    Returns:
        Validated Settings instance

    Raises:
        ConfigurationError: If the file is unreadable or the values are invalid
    """
    data: dict = {}
    if path is not None:
        settings_path = Path(path)
        if not settings_path.exists():
            raise ConfigurationError(f"Settings file not found: {settings_path}")
    else:
        settings_path = Path(DEFAULT_SETTINGS_FILE)

    if settings_path.is_file():
        try:
            with open(settings_path, "r", encoding="utf-8") as f:
                loaded = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"YAML parsing error: {e}")
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigurationError("Settings file must contain a mapping")
        data = _substitute(loaded or {})
    elif path is not None:
        raise ConfigurationError(f"Path is not a file: {settings_path}")

    env_tol = get_float_env(TOL_ENV_VAR)
    if env_tol is not None:
        data["tol"] = env_tol

    try:
        return Settings(**data)
    except ValidationError as e:
        raise ConfigurationError(f"Settings validation failed: {e}")


def resolve_tol(cli_tol: Optional[float], settings: Settings) -> float:
    """--tol wins over the environment and the settings file."""
    if cli_tol is None:
        return settings.tol
    if not 0.0 < cli_tol < 1e-2:
        raise ConfigurationError(f"Tolerance must lie in (0, 1e-2), got {cli_tol}")
    return cli_tol

import os
from typing import Optional

from dotenv import load_dotenv

from septrans.schemas.models import ConfigurationError

# Picks up SEPTRANS_* overrides from a .env file in the working directory
load_dotenv()


def get_env(key: str, default: Optional[str] = None, required: bool = False) -> str:
    """
    Get an environment variable value, optionally with default or raise error if required.

    Args:
        key: The environment variable key.
        default: Default value if the key is not found.
        required: If True, raise error when variable is missing.

    Returns:
        The environment variable value, default, or an empty string.

    Raises:
        EnvironmentError: If `required=True` and the key is missing.
    """
    value = os.getenv(key, default)
    if required and value is None:
        raise EnvironmentError(f"Missing required environment variable: {key}")
    return value or ""


def get_float_env(key: str) -> Optional[float]:
    """Parse a numeric override; unset or blank variables give None."""
    raw = get_env(key).strip()
    if not raw:
        return None
    try:
        return float(raw)
    except ValueError:
        raise ConfigurationError(f"{key} must be a number, got '{raw}'")

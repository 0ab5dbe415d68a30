from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from loguru import logger

from fexpd.core.exceptions import ConfigurationError
from fexpd.core.models.config import AppConfig
from fexpd.core.utils import config_hash

DEFAULT_CONFIG = "config.yaml"

_config_cache: Optional[AppConfig] = None
_config_file_path: Optional[str] = None


def read_config_file(path: Path) -> Dict[str, Any]:
    """
    Parse a YAML configuration file into a mapping. An empty file is ``{}``.

    Raises:
        FileNotFoundError: If ``path`` is not a file.
        yaml.YAMLError: If the file is not valid YAML.
        ConfigurationError: If the top level is not a mapping.
    """
    if not path.is_file():
        raise FileNotFoundError(f"Configuration file not found: {path}")
    with path.open("r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(
            message="configuration root must be a mapping",
            detail={"path": str(path), "type": type(data).__name__},
        )
    return data


def get_config(config_file_path: Optional[str] = None) -> AppConfig:
    """
    Load, validate and cache the application configuration.

    Resolution order: the explicit path, then the path of the cached
    configuration, then ``./config.yaml``. When none was requested and
    ``./config.yaml`` does not exist, the built-in defaults are used.

    Args:
        config_file_path (Optional[str]): Path to a YAML configuration file.

    Returns:
        AppConfig: The validated configuration.

    Raises:
        FileNotFoundError: If an explicitly requested file does not exist.
        yaml.YAMLError: If the file cannot be parsed.
        pydantic.ValidationError: If the data does not satisfy the schema.
    """
    global _config_cache, _config_file_path

    if _config_cache is not None and config_file_path is None:
        return _config_cache

    if config_file_path:
        path = Path(config_file_path).resolve()
    elif _config_file_path:
        path = Path(_config_file_path)
    else:
        path = Path(DEFAULT_CONFIG).resolve()
        if not path.is_file():
            logger.info(f"No {DEFAULT_CONFIG} found, using built-in defaults")
            _config_cache = AppConfig()
            return _config_cache

    logger.info(f"Loading configuration from {path}")
    try:
        config = AppConfig(**read_config_file(path))
    except yaml.YAMLError:
        logger.exception(f"Configuration file {path} is not valid YAML")
        raise
    except Exception as e:
        logger.error(f"Configuration file {path} rejected: {e}")
        raise

    _config_cache = config
    _config_file_path = str(path)
    logger.debug(f"Experiment config hash: {config_hash(config.experiment)}")
    return config


def reset_config() -> None:
    """Forget the cached configuration and its path."""
    global _config_cache, _config_file_path
    _config_cache = None
    _config_file_path = None

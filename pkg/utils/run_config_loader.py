import logging
from typing import Any, Dict, Optional

import yaml
from pydantic import ValidationError

from models import RunConfig
from utils.errors import ConfigError
from utils.file_system import FileSystemUtil, fs_util

logger = logging.getLogger(__name__)


def _validation_messages(error: ValidationError):
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "config"
        yield f"{location}: {item['msg']}"


def load_run_config(path: Optional[str] = None, cli_values: Optional[Dict[str, Any]] = None,
                    file_system: FileSystemUtil = fs_util) -> RunConfig:
    """
    Resolve a RunConfig from an optional YAML file and command-line values.

    Command-line values win over the file, the file over the environment settings,
    and those over the built-in defaults.

    :raises ConfigError: listing every problem found.
    """
    values: Dict[str, Any] = {}
    if path is not None:
        try:
            values = file_system.read_yaml_file(path)
        except FileNotFoundError as e:
            raise ConfigError([str(e)]) from None
        except yaml.YAMLError as e:
            raise ConfigError([str(e)]) from None
        if not isinstance(values, dict):
            raise ConfigError([f"{path}: top level must be a mapping, got {type(values).__name__}"])

    for key, value in (cli_values or {}).items():
        if value is None:
            continue
        if key == "overrides":
            values["overrides"] = {**(values.get("overrides") or {}), **value}
        else:
            values[key] = value

    try:
        config = RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(list(_validation_messages(e))) from None
    logger.debug(f"Resolved run configuration: {config.model_dump(mode='json')}")
    return config

import json
import logging
import os
from typing import Any, Dict

import pandas as pd
import yaml

# Create module-specific logger
logger = logging.getLogger(__name__)


class FileSystemUtil:
    """
    FileSystemUtil provides the file helpers used by the commands and the result recorder.

    All file operations are performed relative to the base_path unless an absolute path is provided.
    """

    def __init__(self, base_path: str = "."):
        """
        Initializes the FileSystemUtil with a base path.
        :param base_path: The base directory path for file operations.
        """
        self.base_path = base_path

    def _get_full_path(self, path: str) -> str:
        """
        Get the full path by combining base_path with relative path.
        :param path: Relative or absolute path.
        :return: Full absolute path.
        """
        return path if os.path.isabs(path) else os.path.join(self.base_path, path)

    def ensure_parent(self, file_path: str) -> str:
        """
        Creates the parent directory of a file if needed.
        :param file_path: The file path (relative to base_path or absolute).
        :return: The full path of the file.
        :raises PermissionError: If permission is denied to create the directory.
        """
        full_path = self._get_full_path(file_path)
        parent = os.path.dirname(full_path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return full_path

    def path_exists(self, path: str) -> bool:
        return os.path.exists(self._get_full_path(path))

    def read_yaml_file(self, file_path: str) -> dict:
        """
        Reads a YAML file and returns the data as a dictionary.
        :param file_path: The path to the YAML file (relative to base_path or absolute).
        :return: Dictionary containing the YAML file data.
        :raises FileNotFoundError: If the file doesn't exist.
        :raises yaml.YAMLError: If the YAML is invalid.
        """
        full_path = self._get_full_path(file_path)
        if not os.path.exists(full_path):
            raise FileNotFoundError(f"YAML file '{file_path}' not found")

        with open(full_path, 'r', encoding='utf-8') as file:
            try:
                data = yaml.safe_load(file)
                return data if data is not None else {}
            except yaml.YAMLError as e:
                raise yaml.YAMLError(f"Invalid YAML in file '{file_path}': {e}")

    def dump_json(self, file_path: str, data: Dict[str, Any]) -> None:
        with open(self.ensure_parent(file_path), 'w', encoding='utf-8') as file:
            json.dump(data, file, indent=2, sort_keys=True)
            file.write("\n")

    def write_csv(self, file_path: str, frame: pd.DataFrame) -> None:
        """
        Writes a DataFrame as UTF-8 CSV with a header row and '.' decimals.
        Floats use the shortest repr that round-trips, so equal frames give equal bytes.
        """
        frame.to_csv(self.ensure_parent(file_path), index=False, encoding="utf-8", lineterminator="\n")


fs_util = FileSystemUtil()

"""JSON helpers for configs, reports and run manifests.

Reports and manifests are written with sorted keys and a fixed float
representation so that identical runs produce identical bytes.
"""

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np


def _default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def json_load(path: Path) -> dict:
    """Load JSON from a file path with UTF-8 encoding.

    :param path: Path to the JSON file to load
    :type path: Path
    :return: Parsed JSON content as a dictionary
    :rtype: dict
    :raises FileNotFoundError: If the specified file path does not exist
    :raises json.JSONDecodeError: If the file contains invalid JSON
    """
    with Path(path).open("r", encoding="utf-8") as f:
        return json.load(f)


def json_dumps(payload: Any) -> str:
    """Serialize ``payload`` canonically (sorted keys, numpy aware).

    :param payload: JSON-compatible structure, numpy values allowed
    :type payload: Any
    :return: Canonical JSON text
    :rtype: str
    """
    return json.dumps(payload, sort_keys=True, indent=2, default=_default)


def json_dump(payload: Any, path: Path) -> Path:
    """Write ``payload`` canonically to ``path``, creating parent directories.

    :param payload: JSON-compatible structure
    :type payload: Any
    :param path: Destination file
    :type path: Path
    :return: The written path
    :rtype: Path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json_dumps(payload) + "\n", encoding="utf-8")
    return path


def config_hash(payload: Any) -> str:
    """SHA-256 of the canonical JSON form of ``payload``.

    :param payload: JSON-compatible structure
    :type payload: Any
    :return: Hex digest
    :rtype: str
    """
    return hashlib.sha256(json_dumps(payload).encode("utf-8")).hexdigest()


__all__ = ["json_load", "json_dump", "json_dumps", "config_hash"]

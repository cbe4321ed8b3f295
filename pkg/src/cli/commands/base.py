"""Helpers shared by the CLI subcommands."""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Type, TypeVar

from pydantic import BaseModel, ValidationError

from src.estimation.moments import EstimationData, prepare_data
from src.models.base_models import ModelSpec
from src.models.panel import Panel
from src.spatial.weights import SpatialWeightSet, load_weights
from src.utils.errors import ConfigError
from src.utils.jsonio import json_load
from src.utils.logging import get_logger

logger = get_logger("commands")

ModelT = TypeVar("ModelT", bound=BaseModel)


def validation_message(exc: ValidationError) -> str:
    """One ``field: message`` clause per pydantic error."""
    parts = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "config"
        parts.append(f"{where}: {err['msg']}")
    return "; ".join(parts)


def load_config(
    path: Path, model: Type[ModelT], overrides: Optional[Dict[str, Any]] = None
) -> ModelT:
    """Read a JSON config file into ``model``.

    :param path: JSON file
    :type path: Path
    :param model: Pydantic model to validate against
    :type model: Type[ModelT]
    :param overrides: Top-level keys replacing file values when not None
    :type overrides: Optional[Dict[str, Any]]
    :return: The validated config
    :rtype: ModelT
    :raises ConfigError: On malformed JSON (with line and column) or schema
        violations (naming each offending field)
    :raises OSError: If the file cannot be read
    """
    try:
        raw = json_load(Path(path))
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{Path(path).name}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
            field="json",
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{Path(path).name}: top level must be an object", field="json")
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]["loc"] if exc.errors() else ()
        raise ConfigError(
            f"{Path(path).name}: {validation_message(exc)}",
            field=str(first[0]) if first else None,
        ) from exc


def build_data(
    panel: Panel, weights: SpatialWeightSet, has_time_effects: bool = True
) -> EstimationData:
    """Prepare ``panel`` with the spec implied by the panel and weights."""
    spec = ModelSpec(p=weights.p, k=panel.k, has_time_effects=has_time_effects)
    return prepare_data(panel, weights, spec)


def read_weights(paths: Sequence[Path]) -> SpatialWeightSet:
    weights = load_weights(paths)
    logger.info("Weights loaded", extra={"n": weights.n, "p": weights.p})
    return weights


def output_dir(path: Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path

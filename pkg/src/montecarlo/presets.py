"""Experiment designs and named presets.

M1 and M2 use one queen matrix with (rho, gamma, delta) = (0.2, 0.2, -0.2)
and (0.2, 0.8, -0.2); M2 drops the time effects. M3 uses first- and
second-order queen matrices with very weak temporal and spatiotemporal
effects. All designs carry two regressors with beta = (0.5, 1).
"""

from typing import Dict, Tuple

from src.models.base_models import ExperimentConfig, ModelSpec, Theta, WeightsRecipe
from src.utils.errors import ConfigError

DESIGNS: Dict[str, Tuple[ModelSpec, Theta, str]] = {
    "M1": (
        ModelSpec(p=1, k=2, has_time_effects=True),
        Theta(rho=[0.2], gamma=0.2, delta=[-0.2], beta=[0.5, 1.0]),
        "queen",
    ),
    "M2": (
        ModelSpec(p=1, k=2, has_time_effects=False),
        Theta(rho=[0.2], gamma=0.8, delta=[-0.2], beta=[0.5, 1.0]),
        "queen",
    ),
    "M3": (
        ModelSpec(p=2, k=2, has_time_effects=True),
        Theta(rho=[0.6, 0.2], gamma=0.1, delta=[0.01, 0.01], beta=[0.5, 1.0]),
        "second_order",
    ),
}

# (design, side, T, error_dist) per preset; "small" and "large" follow the
# two sample sizes per design and error law
PRESETS: Dict[str, Tuple[str, int, int, str]] = {
    "table-a1-gaussian-small": ("M1", 8, 20, "gaussian"),
    "table-a1-gaussian-large": ("M1", 10, 40, "gaussian"),
    "table-a1-t3-small": ("M1", 8, 20, "student_t"),
    "table-a1-t3-large": ("M1", 10, 40, "student_t"),
    "table-a2-gaussian-small": ("M2", 8, 20, "gaussian"),
    "table-a2-gaussian-large": ("M2", 10, 40, "gaussian"),
    "table-a2-t3-small": ("M2", 8, 20, "student_t"),
    "table-a2-t3-large": ("M2", 10, 40, "student_t"),
    "table-a3-gaussian-small": ("M3", 7, 20, "gaussian"),
    "table-a3-gaussian-large": ("M3", 10, 40, "gaussian"),
    "table-a3-t3-small": ("M3", 7, 20, "student_t"),
    "table-a3-t3-large": ("M3", 10, 40, "student_t"),
}


def design_components(config: ExperimentConfig) -> Tuple[ModelSpec, Theta, WeightsRecipe]:
    """Resolve the spec, true theta and weights recipe of a config.

    :param config: Experiment configuration
    :type config: ExperimentConfig
    :return: (spec, theta0, weights recipe)
    :rtype: Tuple[ModelSpec, Theta, WeightsRecipe]
    """
    if config.design == "custom":
        return config.spec, config.theta, config.weights
    spec, theta, kind = DESIGNS[config.design]
    return spec, theta, WeightsRecipe(kind=kind, side=config.side)


def preset_config(name: str, seed: int, **overrides) -> ExperimentConfig:
    """Build the ExperimentConfig of a named preset.

    :param name: Preset name, e.g. ``table-a1-gaussian-small``
    :type name: str
    :param seed: Master seed
    :type seed: int
    :return: The configuration
    :rtype: ExperimentConfig
    :raises ConfigError: If ``name`` is not a preset; the message lists them
    """
    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset {name!r}; valid presets: {', '.join(sorted(PRESETS))}",
            field="preset",
        )
    design, side, T, dist = PRESETS[name]
    fields = {"design": design, "side": side, "T": T, "error_dist": dist, "seed": seed}
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**fields)


__all__ = ["DESIGNS", "PRESETS", "design_components", "preset_config"]

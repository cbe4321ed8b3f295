from .base_models import (
    DgpConfig as DgpConfig,
    ExperimentConfig as ExperimentConfig,
    ModelSpec as ModelSpec,
    Theta as Theta,
    WeightsRecipe as WeightsRecipe,
)
from .panel import Panel as Panel

"""Monte Carlo experiments."""

from .experiment import ExperimentResult, replication_seed, run_experiment
from .presets import DESIGNS, PRESETS, design_components, preset_config
from .tables import emit_table, table_frame

__all__ = [
    "DESIGNS",
    "ExperimentResult",
    "PRESETS",
    "design_components",
    "emit_table",
    "preset_config",
    "replication_seed",
    "run_experiment",
    "table_frame",
]

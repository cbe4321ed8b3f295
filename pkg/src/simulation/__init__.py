"""Panel simulation."""

from .dgp import SimulatedPanel, draw_errors, simulate

__all__ = ["SimulatedPanel", "draw_errors", "simulate"]

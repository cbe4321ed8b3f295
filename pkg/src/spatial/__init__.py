"""Spatial weight matrices."""

from .weights import (
    SpatialWeightSet,
    build_queen_contiguity,
    build_second_order_contiguity,
    load_weights,
    row_normalize,
    save_weights,
    weights_from_recipe,
)

__all__ = [
    "SpatialWeightSet",
    "build_queen_contiguity",
    "build_second_order_contiguity",
    "load_weights",
    "row_normalize",
    "save_weights",
    "weights_from_recipe",
]

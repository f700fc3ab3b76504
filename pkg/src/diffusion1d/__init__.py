# src/diffusion1d/__init__.py
from src.diffusion1d.green import GreenFunction, green_function, green_object, scale_speed
from src.diffusion1d.simulate import (
    DiffusionRun,
    drift_start,
    reset_value,
    simulate_clicks,
    simulate_diffusion,
)
from src.diffusion1d.model import DiffusionSpec, drift, rescale

__all__ = [
    "DiffusionRun",
    "DiffusionSpec",
    "GreenFunction",
    "drift",
    "drift_start",
    "green_function",
    "green_object",
    "rescale",
    "reset_value",
    "scale_speed",
    "simulate_clicks",
    "simulate_diffusion",
]

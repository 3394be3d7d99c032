"""Procedural row-crop fields, a geometric mask oracle and a closed-loop rover benchmark."""

from .errors import RowBenchError
from .field_gen import PRESET_NAMES, FieldLayout, FieldParams, generate_field, preset
from .sim import EpisodeConfig, Outcome, run_episode
from .terrain import Heightfield, generate_heightfield

__version__ = "0.1.0"

__all__ = ["RowBenchError", "PRESET_NAMES", "FieldLayout", "FieldParams", "generate_field", "preset",
           "EpisodeConfig", "Outcome", "run_episode", "Heightfield", "generate_heightfield",
           "__version__"]

from .config import ScenarioConfig, config_from_dict, dump_config, load_config
from .engine import Controller, EventTrace, LocalXapp, Simulator, run_scenario
from .model import (
    Behavior,
    ConfigError,
    ContextState,
    GnbModel,
    RrcContext,
    UeProfile,
    UnknownAttempt,
    enforce_rejection,
)
from .presets import PRESETS, TUNING_VARIANTS, LAB_POSITIONS, build_preset
from .radio import DegenerateGeometry, RadioModel, place_for_fingerprint, sample_fingerprint

__all__ = [
    "Behavior", "ConfigError", "ContextState", "Controller", "DegenerateGeometry",
    "EventTrace", "GnbModel", "LocalXapp", "PRESETS", "RadioModel", "RrcContext",
    "ScenarioConfig", "Simulator", "TUNING_VARIANTS", "LAB_POSITIONS", "UeProfile", "UnknownAttempt",
    "build_preset", "config_from_dict", "dump_config", "enforce_rejection", "load_config",
    "place_for_fingerprint", "run_scenario", "sample_fingerprint",
]

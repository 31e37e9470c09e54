"""Experiment orchestration: config, staged pipeline, reports, entry point."""

from .config import DEFAULT_CONFIG, validate_config
from .experiment import ExperimentManifest, load_manifest, run_experiment, stage_seed
from .report import emit_report

__all__ = [
    "DEFAULT_CONFIG", "validate_config",
    "ExperimentManifest", "load_manifest", "run_experiment", "stage_seed",
    "emit_report",
]

"""Pseudo-label filtering for continual test-time adaptation on synthetic streams."""
from .config import RunConfig, load_config
from .estimator import PLFClassifier
from .harness import RunTrace, compare_policies, run_adaptation, write_trace

__all__ = [
    "PLFClassifier",
    "RunConfig",
    "RunTrace",
    "compare_policies",
    "load_config",
    "run_adaptation",
    "write_trace",
]
__version__ = "0.1.0"

from .config import ExperimentConfig, ModelConfigSerializer, load_config, parse_config
from .runner import SUBCOMMANDS, ExperimentResult, ExperimentRunner, constants_summary, run_experiment

__all__ = [
    "SUBCOMMANDS",
    "ExperimentConfig",
    "ExperimentResult",
    "ExperimentRunner",
    "ModelConfigSerializer",
    "constants_summary",
    "load_config",
    "parse_config",
    "run_experiment",
]

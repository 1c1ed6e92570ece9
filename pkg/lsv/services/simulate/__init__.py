from .engine import (
    KEEP_FULL,
    KEEP_TERMINAL,
    PathBatch,
    Scheme,
    concatenate,
    default_steps,
    iter_batches,
    simulate,
    simulate_conditional,
)
from .storage import BatchWriter, load_batch, save_batch, save_chunks

__all__ = [
    "KEEP_FULL",
    "KEEP_TERMINAL",
    "BatchWriter",
    "PathBatch",
    "Scheme",
    "concatenate",
    "default_steps",
    "iter_batches",
    "load_batch",
    "save_batch",
    "save_chunks",
    "simulate",
    "simulate_conditional",
]

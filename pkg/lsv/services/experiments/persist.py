"""
Experiment persistence
Stores an ExperimentResult as an ExperimentRun row (``--save``).
"""
from __future__ import annotations

import logging

from django.db import transaction

from lsv.models import ExperimentRun

from .runner import ExperimentResult
from .writers import jsonable

logger = logging.getLogger(__name__)


@transaction.atomic
def save_run(result: ExperimentResult) -> ExperimentRun:
    meta = result.meta
    run = ExperimentRun.objects.create(
        subcommand=result.subcommand,
        family=meta["family"],
        config_hash=meta["config_hash"],
        spec_hash=meta["spec_hash"],
        seed=meta["seed"],
        n_paths=meta["n_paths"],
        n_steps=meta["n_steps"],
        scheme=meta["scheme"],
        engine_version=meta["version"],
        status="OK" if result.hypotheses_passed else "UNVERIFIED",
        meta=jsonable(meta),
        summary=jsonable(result.summary),
        artifacts=[str(p) for p in result.artifacts],
    )
    logger.info("Saved experiment run %s (%s)", run.pk, result.subcommand)
    return run

"""
Experiment run history
Read-only access to persisted ExperimentRun rows.
"""
from __future__ import annotations

from typing import Any, Dict, List, Optional

from lsv.models import ExperimentRun

LIMIT_HARD_CAP = 500
LIMIT_DEFAULT = 50


def _run_dict(run: ExperimentRun, include_summary: bool) -> Dict[str, Any]:
    out = {
        "id": run.pk,
        "subcommand": run.subcommand,
        "family": run.family,
        "config_hash": run.config_hash,
        "spec_hash": run.spec_hash,
        "seed": run.seed,
        "n_paths": run.n_paths,
        "n_steps": run.n_steps,
        "scheme": run.scheme,
        "engine_version": run.engine_version,
        "status": run.status,
        "artifacts": run.artifacts,
        "created_at": run.created_at.isoformat() if run.created_at else None,
    }
    if include_summary:
        out["meta"] = run.meta
        out["summary"] = run.summary
    return out


def get_run_history(
    *,
    subcommand: Optional[str] = None,
    family: Optional[str] = None,
    config_hash: Optional[str] = None,
    include_summary: bool = False,
    limit: int = LIMIT_DEFAULT,
) -> Dict[str, Any]:
    """
    Most recent runs first, optionally filtered. ``limit`` is capped at
    LIMIT_HARD_CAP; non-positive values fall back to the default.
    """
    limit = min(int(limit), LIMIT_HARD_CAP)
    if limit <= 0:
        limit = LIMIT_DEFAULT

    qs = ExperimentRun.objects.all().order_by("-created_at", "-id")
    if subcommand:
        qs = qs.filter(subcommand=subcommand)
    if family:
        qs = qs.filter(family=family)
    if config_hash:
        qs = qs.filter(config_hash__startswith=config_hash)

    total = qs.count()
    runs: List[Dict[str, Any]] = [_run_dict(r, include_summary) for r in qs[:limit]]
    return {
        "meta": {"count": len(runs), "total": total, "limit": limit},
        "runs": runs,
    }

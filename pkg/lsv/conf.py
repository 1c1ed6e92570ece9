"""
Engine settings access
Reads ``settings.VOLTUBE`` with safe defaults so services work under any settings module.
"""
from __future__ import annotations

import os
from typing import Any

DEFAULTS = {
    "C2": 1.0,
    "L_OVERRIDE": None,
    "C_STAR_FLOOR": 1.0,
    "WORKERS": os.cpu_count() or 1,
    "CHUNK_PATHS": 8192,
    "HYPOTHESIS_SAMPLES": 10_000,
    "OUTPUT_DIR": "runs",
    "ENGINE_VERSION": "",
}


def get_setting(name: str) -> Any:
    """
    Return a VOLTUBE setting, falling back to DEFAULTS when Django is not
    configured or the key is missing.
    """
    try:
        from django.conf import settings

        if settings.configured:
            value = getattr(settings, "VOLTUBE", {}).get(name)
            if value is not None:
                return value
    except ImportError:
        pass
    return DEFAULTS[name]


def engine_version() -> str:
    """
    ENGINE_VERSION from the environment/settings when set; otherwise the package version.
    """
    from lsv import __version__

    return get_setting("ENGINE_VERSION") or __version__

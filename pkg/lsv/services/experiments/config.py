"""
Experiment configuration
JSON config files are validated with DRF serializers. The family registry
is closed: a config can only name a builtin family and its parameters.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

from rest_framework import serializers

from lsv.conf import get_setting
from lsv.exceptions import ConfigError, ModelSpecError
from lsv.services.estimate import BRIDGE_CORRECTED, GRID_RESTRICTED
from lsv.services.model import FAMILIES, ModelSpec, build_family
from lsv.services.model.families import FAMILY_PARAMS
from lsv.services.simulate import Scheme

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")


class CustomBoundsSerializer(serializers.Serializer):
    K = serializers.FloatField(required=False, allow_null=True, default=None, min_value=1.0)
    C2 = serializers.FloatField(required=False, allow_null=True, default=None)
    L = serializers.FloatField(required=False, allow_null=True, default=None)

    def validate_C2(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("C2 must be > 0")
        return value

    def validate_L(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("L must be > 0")
        return value


class ModelConfigSerializer(serializers.Serializer):
    family = serializers.ChoiceField(choices=sorted(FAMILIES))
    params = serializers.DictField(child=serializers.FloatField())
    custom_bounds = CustomBoundsSerializer(required=False)

    def validate(self, attrs):
        family = attrs["family"]
        expected = FAMILY_PARAMS[family]
        params = attrs["params"]
        missing = [p for p in expected if p not in params]
        unknown = [p for p in params if p not in expected]
        if missing or unknown:
            raise serializers.ValidationError(
                {"params": f"family '{family}' expects {list(expected)}; missing={missing}, unknown={unknown}"}
            )
        attrs.setdefault("custom_bounds", {"K": None, "C2": None, "L": None})
        try:
            build_family(family, params, K=attrs["custom_bounds"].get("K"))
        except ModelSpecError as exc:
            raise serializers.ValidationError({"params": str(exc)}) from exc
        return attrs


class RunConfigSerializer(serializers.Serializer):
    n_paths = serializers.IntegerField(min_value=1, default=100_000)
    n_steps = serializers.IntegerField(min_value=1, required=False, allow_null=True, default=None)
    seed = serializers.IntegerField(min_value=0, default=0)
    scheme = serializers.ChoiceField(choices=[s.value for s in Scheme], default=Scheme.EULER_FULL_TRUNCATION.value)
    estimator = serializers.ChoiceField(choices=[GRID_RESTRICTED, BRIDGE_CORRECTED], default=GRID_RESTRICTED)


def _float_list(**kwargs):
    return serializers.ListField(child=serializers.FloatField(), required=False, **kwargs)


class TargetsSerializer(serializers.Serializer):
    y_list = _float_list(default=list)
    j_list = serializers.ListField(child=serializers.IntegerField(min_value=0), required=False, default=list)
    strikes = _float_list(default=list)
    p_list = _float_list(default=list)
    dt_list = _float_list(default=list)
    scaling_p = serializers.ListField(
        child=serializers.IntegerField(min_value=1), required=False, default=lambda: [1, 2]
    )
    y_grid = _float_list(default=list)
    wing_k_min = serializers.FloatField(min_value=0.0, default=1.0)
    oracle_wing_strikes = _float_list(default=list)
    density_fit_min = serializers.FloatField(default=0.5)
    curve_steps = serializers.IntegerField(min_value=2, default=1000)
    knots = serializers.IntegerField(min_value=3, default=200)


class OutputSerializer(serializers.Serializer):
    directory = serializers.CharField(required=False, allow_blank=True, default="")
    formats = serializers.ListField(
        child=serializers.ChoiceField(choices=FORMATS), required=False, default=lambda: list(FORMATS)
    )


class ExperimentConfigSerializer(serializers.Serializer):
    model = ModelConfigSerializer()
    run = RunConfigSerializer(required=False)
    targets = TargetsSerializer(required=False)
    output = OutputSerializer(required=False)


def _serializer_defaults(serializer_class) -> Dict[str, Any]:
    s = serializer_class(data={})
    s.is_valid()
    return dict(s.validated_data)


@dataclass
class ExperimentConfig:
    family: str
    params: Dict[str, float]
    custom_bounds: Dict[str, Optional[float]]
    run: Dict[str, Any]
    targets: Dict[str, Any]
    output: Dict[str, Any]
    source: Optional[str] = None
    overrides: Dict[str, Any] = field(default_factory=dict)

    @property
    def K(self) -> Optional[float]:
        return self.custom_bounds.get("K")

    @property
    def C2(self) -> float:
        value = self.custom_bounds.get("C2")
        return float(get_setting("C2") if value is None else value)

    @property
    def L(self) -> Optional[float]:
        value = self.custom_bounds.get("L")
        return get_setting("L_OVERRIDE") if value is None else value

    @property
    def scheme(self) -> Scheme:
        return Scheme(self.run["scheme"])

    @property
    def seed(self) -> int:
        return int(self.run["seed"])

    def build_spec(self) -> ModelSpec:
        return build_family(self.family, self.params, K=self.K)

    def canonical(self) -> Dict[str, Any]:
        """Everything that influences results; output location is excluded."""
        return {
            "model": {"family": self.family, "params": dict(sorted(self.params.items())),
                      "custom_bounds": self.custom_bounds},
            "run": self.run,
            "targets": self.targets,
        }

    @property
    def config_hash(self) -> str:
        payload = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def output_dir(self, override: Optional[str] = None) -> Path:
        directory = override or self.output.get("directory") or get_setting("OUTPUT_DIR")
        return Path(directory)


def _errors_to_text(errors) -> str:
    return json.dumps(errors, sort_keys=True, default=str)


def parse_config(data: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None, source: Optional[str] = None) -> ExperimentConfig:
    """
    Validate a config mapping. ``overrides`` may set seed, n_paths and n_steps
    (command-line flags win over the file).
    """
    serializer = ExperimentConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigError(f"Invalid experiment config: {_errors_to_text(serializer.errors)}")
    validated = serializer.validated_data

    run = _serializer_defaults(RunConfigSerializer)
    run.update(validated.get("run", {}))
    targets = _serializer_defaults(TargetsSerializer)
    targets.update(validated.get("targets", {}))
    output = _serializer_defaults(OutputSerializer)
    output.update(validated.get("output", {}))

    applied = {}
    for key in ("seed", "n_paths", "n_steps"):
        value = (overrides or {}).get(key)
        if value is not None:
            if int(value) < (0 if key == "seed" else 1):
                raise ConfigError(f"--{key.replace('n_', '')} must be positive, got {value}")
            run[key] = int(value)
            applied[key] = int(value)

    model = validated["model"]
    bounds = dict(model.get("custom_bounds") or {})
    for key in ("K", "C2", "L"):
        bounds.setdefault(key, None)

    return ExperimentConfig(
        family=model["family"],
        params={k: float(v) for k, v in model["params"].items()},
        custom_bounds=bounds,
        run=dict(run),
        targets={k: list(v) if isinstance(v, (list, tuple)) else v for k, v in targets.items()},
        output=dict(output),
        source=source,
        overrides=applied,
    )


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"Config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    config = parse_config(data, overrides, source=str(path))
    logger.info("Loaded config %s (family=%s, hash=%s)", path, config.family, config.config_hash[:12])
    return config


def default_targets() -> Dict[str, Any]:
    return _serializer_defaults(TargetsSerializer)

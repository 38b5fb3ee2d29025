"""Run configuration: reads JSON run manifests into in-memory objects.

A manifest describes one command (a test on a data file, or a Monte Carlo
study on a simulated model) together with its bandwidth, bootstrap and
optimizer settings. CLI flags are merged on top of the manifest's raw mapping
before parsing, so both paths go through the same validation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from core.errors import ConfigError

DEFAULT_C_GRID: Tuple[float, ...] = tuple(2.0 ** (k / 2) for k in (-2, -1, 0, 1, 2))
DEFAULT_B = {"mean": 499, "law": 199}
# Monte Carlo replications under the null and under alternatives
DEFAULT_REPS = {"mean": {"null": 500, "alternative": 250}, "law": {"null": 1000, "alternative": 500}}
DEFAULT_PROBE_REPS = 100


class Command(str, Enum):
    TEST_MEAN = "test-mean"
    TEST_LAW = "test-law"
    MC_LEVEL = "mc-level"
    MC_POWER = "mc-power"
    MC_PROBE = "mc-probe"


class PhiMode(str, Enum):
    EMPIRICAL = "empirical"
    NORMAL = "normal"


@dataclass(frozen=True)
class OptimizerConfig:
    """Nelder-Mead multi-start settings for the index estimators."""
    max_evals: int = 2000
    starts: int = 5
    bootstrap_starts: int = 2
    tolerance: float = 1e-8
    start_norms: Tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    seed: int = 0
    gy_start: Optional[float] = None

    def __post_init__(self):
        if self.max_evals < 1:
            raise ConfigError("optimizer.max_evals must be >= 1")
        if self.starts < 1 or self.bootstrap_starts < 1:
            raise ConfigError("optimizer.starts and optimizer.bootstrap_starts must be >= 1")
        if not self.tolerance > 0:
            raise ConfigError("optimizer.tolerance must be positive")
        if any(not s > 0 for s in self.start_norms):
            raise ConfigError("optimizer.start_norms must be positive")
        if self.gy_start is not None and not self.gy_start > 0:
            raise ConfigError("optimizer.gy_start must be positive")

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> OptimizerConfig:
        known = {k: raw[k] for k in cls.__dataclass_fields__ if k in raw}
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise ConfigError(f"Unknown optimizer keys: {unknown}")
        if "start_norms" in known:
            known["start_norms"] = tuple(float(v) for v in known["start_norms"])
        try:
            return cls(**known)
        except TypeError as e:
            raise ConfigError(f"Invalid optimizer block: {e}")


@dataclass(frozen=True)
class ModelBlock:
    """Simulation model selection for the Monte Carlo commands."""
    kind: str = "mean-homo"
    n: int = 100
    p: int = 2
    delta: float = 0.0
    sigma: float = 0.3
    mixing: str = "mixture"

    KINDS = ("mean-homo", "mean-hetero", "law")

    @property
    def is_law(self) -> bool:
        return self.kind == "law"


@dataclass
class RunConfig:
    """Parsed run manifest."""
    command: Command
    data: Optional[str] = None
    model: Optional[ModelBlock] = None
    c: float = 1.0
    h: Optional[float] = None
    B: Optional[int] = None
    alpha: float = 0.10
    seed: int = 0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    out: Optional[str] = None
    threads: int = 1
    c_grid: Tuple[float, ...] = DEFAULT_C_GRID
    delta_grid: Tuple[float, ...] = (0.0, 0.5, 1.0)
    reps: Optional[int] = None
    null_reps: Optional[int] = None
    known_index: bool = False
    phi: PhiMode = PhiMode.EMPIRICAL
    probe_exponents: Tuple[float, ...] = (0.5, 0.25)

    @property
    def is_law(self) -> bool:
        if self.command is Command.TEST_LAW:
            return True
        return self.model is not None and self.model.is_law

    @property
    def bootstrap_size(self) -> int:
        if self.B is not None:
            return self.B
        return DEFAULT_B["law" if self.is_law else "mean"]

    @property
    def replications(self) -> int:
        """--reps, else the default for the command: null count for level studies,
        alternative count for power studies."""
        if self.reps is not None:
            return self.reps
        if self.command is Command.MC_PROBE:
            return DEFAULT_PROBE_REPS
        defaults = DEFAULT_REPS["law" if self.is_law else "mean"]
        return defaults["alternative" if self.command is Command.MC_POWER else "null"]

    @property
    def null_replications(self) -> int:
        """Replications of the delta = 0 cell of a power study."""
        if self.null_reps is not None:
            return self.null_reps
        if self.reps is not None:
            return self.reps
        return DEFAULT_REPS["law" if self.is_law else "mean"]["null"]

    @classmethod
    def from_file(cls, path: str | Path, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        """Load a manifest from a JSON file, then apply ``overrides`` on top."""
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Manifest file not found: {path}")

        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in {path}: {e}")

        if not isinstance(raw, dict):
            raise ConfigError(f"Manifest must be a JSON object, got {type(raw)}")

        return cls._parse(merge_raw(raw, overrides or {}))

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> RunConfig:
        """Load a manifest from a dictionary (useful for testing and the CLI)."""
        return cls._parse(raw)

    @classmethod
    def _parse(cls, raw: Dict[str, Any]) -> RunConfig:
        command_name = raw.get("command")
        if not command_name:
            raise ConfigError("Manifest must have a 'command' field")
        try:
            command = Command(command_name)
        except ValueError:
            raise ConfigError(
                f"Unknown command '{command_name}'. Available: {[c.value for c in Command]}"
            )

        model = None
        model_raw = raw.get("model")
        if model_raw is not None:
            if not isinstance(model_raw, dict):
                raise ConfigError("'model' must be a mapping")
            model = _parse_model(model_raw)

        optimizer_raw = raw.get("optimizer", {})
        if not isinstance(optimizer_raw, dict):
            raise ConfigError("'optimizer' must be a mapping")

        config = cls(
            command=command,
            data=raw.get("data"),
            model=model,
            c=float(raw.get("c", 1.0)),
            h=_optional_float(raw.get("h")),
            B=_optional_int(raw.get("B")),
            alpha=float(raw.get("alpha", 0.10)),
            seed=int(raw.get("seed", 0)),
            optimizer=OptimizerConfig.from_dict(optimizer_raw),
            out=raw.get("out"),
            threads=int(raw.get("threads", 1)),
            c_grid=_float_tuple(raw.get("c_grid", DEFAULT_C_GRID), "c_grid"),
            delta_grid=_float_tuple(raw.get("delta_grid", (0.0, 0.5, 1.0)), "delta_grid"),
            reps=_optional_int(raw.get("reps")),
            null_reps=_optional_int(raw.get("null_reps")),
            known_index=bool(raw.get("known_index", False)),
            phi=_parse_phi(raw.get("phi", "empirical")),
            probe_exponents=_float_tuple(raw.get("probe_exponents", (0.5, 0.25)), "probe_exponents"),
        )
        config.validate()
        return config

    def validate(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ConfigError(f"c must be positive, got {self.c}")
        if self.h is not None and not self.h > 0:
            raise ConfigError(f"h must be positive, got {self.h}")
        if self.B is not None and self.B < 1:
            raise ConfigError(f"B must be >= 1, got {self.B}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if any(r is not None and r < 1 for r in (self.reps, self.null_reps)):
            raise ConfigError("reps and null_reps must be >= 1")
        if any(not c > 0 for c in self.c_grid):
            raise ConfigError("c_grid entries must be positive")
        if self.command in (Command.TEST_MEAN, Command.TEST_LAW) and not self.data:
            raise ConfigError(f"Command '{self.command.value}' needs a data file")
        if self.command in (Command.MC_LEVEL, Command.MC_POWER, Command.MC_PROBE):
            if self.model is None:
                raise ConfigError(f"Command '{self.command.value}' needs a model block")
            if self.command is Command.MC_LEVEL and self.model.delta != 0.0:
                raise ConfigError("A level study runs under the null: model.delta must be 0")
            if self.command is Command.MC_POWER and 0.0 not in self.delta_grid:
                raise ConfigError("delta_grid must include 0")


def merge_raw(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Overlay ``overrides`` on ``base``; nested mappings are merged one level deep."""
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict):
            nested = merged.get(key) if isinstance(merged.get(key), dict) else {}
            merged[key] = {**nested, **{k: v for k, v in value.items() if v is not None}}
        else:
            merged[key] = value
    return merged


def _parse_model(raw: Dict[str, Any]) -> ModelBlock:
    kind = raw.get("kind", "mean-homo")
    if kind not in ModelBlock.KINDS:
        raise ConfigError(f"Unknown model kind '{kind}'. Available: {list(ModelBlock.KINDS)}")
    mixing = raw.get("mixing", "mixture")
    if mixing not in ("mixture", "convex"):
        raise ConfigError(f"model.mixing must be 'mixture' or 'convex', got '{mixing}'")
    block = ModelBlock(
        kind=kind,
        n=int(raw.get("n", 100)),
        p=int(raw.get("p", 2)),
        delta=float(raw.get("delta", 0.0)),
        sigma=float(raw.get("sigma", 0.3)),
        mixing=mixing,
    )
    if block.n < 10:
        raise ConfigError(f"model.n must be >= 10, got {block.n}")
    if block.p < 2:
        raise ConfigError(f"model.p must be >= 2, got {block.p}")
    if block.is_law and block.p != 2:
        raise ConfigError("The law model is bivariate: model.p must be 2")
    if block.delta < 0 or (block.is_law and block.delta > 1):
        raise ConfigError(f"model.delta out of range: {block.delta}")
    if not block.sigma > 0:
        raise ConfigError(f"model.sigma must be positive, got {block.sigma}")
    return block


def _parse_phi(value: Any) -> PhiMode:
    try:
        return PhiMode(value)
    except ValueError:
        raise ConfigError(f"phi must be one of {[m.value for m in PhiMode]}, got '{value}'")


def _optional_float(value: Any) -> Optional[float]:
    return None if value is None else float(value)


def _optional_int(value: Any) -> Optional[int]:
    return None if value is None else int(value)


def _float_tuple(values: Any, name: str) -> Tuple[float, ...]:
    if isinstance(values, str):
        values = [v for v in values.split(",") if v.strip()]
    try:
        parsed = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigError(f"'{name}' must be a list of numbers, got {values!r}")
    if not parsed:
        raise ConfigError(f"'{name}' must not be empty")
    return parsed

"""
Line-oriented study configuration.

    # comment
    n = 50
    sizes = 75, 100, 150, 200
    estimators = brie, subex
    [scenario]
    p = 15
    r = 0.10

Global keys come before the first [scenario] header; each header opens a new scenario.
"""
import platform
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel, Field, ValidationError

from . import __version__
from .errors import ConfigError
from .harness import StudyConfig
from .utils_parsing import SelectError, convert_str_to_floats, convert_str_to_ints

SCENARIO_HEADER = "[scenario]"


def _as_int(raw: str) -> int:
    return int(raw)


def _as_float(raw: str) -> float:
    return float(raw)


def _as_str(raw: str) -> str:
    return raw.strip().lower()


def _as_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value not in ("true", "false", "yes", "no", "1", "0"):
        raise ValueError("expected true or false")
    return value in ("true", "yes", "1")


def _as_names(raw: str) -> list[str]:
    return [s.strip().lower() for s in raw.split(",") if s.strip()]


def _as_ints(raw: str) -> list[int]:
    return convert_str_to_ints(raw)


def _as_floats(raw: str) -> list[float]:
    return convert_str_to_floats(raw)


GLOBAL_KEYS = {
    "n": _as_int,
    "sizes": _as_ints,
    "estimators": _as_names,
    "model": _as_str,
    "replicates": _as_int,
    "B": _as_int,
    "N": _as_int,
    "seed": _as_int,
    "subex_B": _as_int,
    "subex_schedule": _as_ints,
    "subex_cv_anchor": _as_bool,
    "oracle_reps": _as_int,
    "oracle_N": _as_int,
    "kappa": _as_float,
}
SCENARIO_KEYS = {
    "p": _as_int,
    "r": _as_float,
    "beta": _as_floats,
}


def parse_config_text(text: str) -> StudyConfig:
    values: dict[str, Any] = {}
    scenarios: list[dict[str, Any]] = []
    # (scenario index or None, key) -> line number, for error locations
    lines: dict[tuple[Optional[int], str], int] = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if line.lower() != SCENARIO_HEADER:
                raise ConfigError(f"Unknown section '{line}'; only {SCENARIO_HEADER} is allowed.", line=line_no)
            scenarios.append({})
            lines[(len(scenarios) - 1, "")] = line_no
            continue
        if "=" not in line:
            raise ConfigError(f"Expected 'key = value', got '{line}'.", line=line_no)
        key, value = (part.strip() for part in line.split("=", 1))
        scope = len(scenarios) - 1 if scenarios else None
        allowed = SCENARIO_KEYS if scenarios else GLOBAL_KEYS
        if key not in allowed:
            where = "scenario" if scenarios else "global"
            raise ConfigError(f"Unknown {where} key; expected one of {sorted(allowed)}.", line=line_no, field=key)
        target = scenarios[-1] if scenarios else values
        if key in target:
            raise ConfigError("Key set twice.", line=line_no, field=key)
        if not value:
            raise ConfigError("Missing value.", line=line_no, field=key)
        try:
            target[key] = allowed[key](value)
        except (ValueError, SelectError) as e:
            raise ConfigError(f"Cannot parse '{value}': {e}", line=line_no, field=key)
        lines[(scope, key)] = line_no
    values["scenarios"] = scenarios
    try:
        return StudyConfig(**values)
    except ValidationError as e:
        err = e.errors()[0]
        loc = err.get("loc", ())
        if len(loc) >= 2 and loc[0] == "scenarios" and isinstance(loc[1], int):
            field = loc[2] if len(loc) > 2 else None
            line = lines.get((loc[1], field)) or lines.get((loc[1], ""))
        else:
            field = loc[0] if loc else None
            line = lines.get((None, field))
        raise ConfigError(err["msg"], line=line, field=field)


def load_config(path: Union[str, Path]) -> StudyConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file '{path}': {e}")
    return parse_config_text(text)


class RunManifest(BaseModel):
    """Everything needed to reproduce a command's outputs."""
    command: str = Field(..., description="truth, simulate or estimate")
    arguments: dict[str, Any] = Field(default_factory=dict, description="Resolved command-line arguments")
    config: Optional[StudyConfig] = Field(None, description="Resolved study configuration")
    master_seed: int = Field(..., description="Seed every random stream derives from")
    version: str = Field(__version__, description="lcurve version")
    python: str = Field(default_factory=platform.python_version)
    started_at: str = Field(..., description="ISO-8601 start time")
    wall_clock_seconds: float = 0.0
    scenario_seconds: list[float] = Field(default_factory=list)

    def write(self, path: Union[str, Path]):
        Path(path).write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: Union[str, Path]) -> 'RunManifest':
        try:
            return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValidationError) as e:
            raise ConfigError(f"Cannot load manifest '{path}': {e}")

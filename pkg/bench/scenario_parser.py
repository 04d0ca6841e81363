"""
Declarative run files: JSON trees navigated with glom paths.

A training space file may look like
```
{
  "preset": "generalized",
  "n_configs": 250,
  "n_seeds": 160,
  "master_seed": 2024,
  "randomization": {"cell_radius_m": [166, 300], "n_fb_ues": [10]}
}
```
A benchmark override file maps ids to field updates under "benchmarks",
e.g. `{"benchmarks": {"B5": {"ue_mix": {"full_buffer": 6, "chat": 2}}}}`.
A scenario file is a ScenarioConfig tree, optionally under "scenario".
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from glom import GlomError, glom
from pydantic import ValidationError

from bench.randomization import RandomizationSpace
from la_tools import get_logger
from radio_sim.scenario import ScenarioConfig, ScenarioError, validate_scenario

logger = get_logger("ScenarioParser")

_MISSING = object()


class ConfigFileError(ValueError):
    pass


class RunFile:
    """A parsed JSON tree with safe path access"""

    def __init__(self, tree: Dict[str, Any], source: str = "<memory>"):
        self.tree = tree
        self.source = source

    @classmethod
    def load(cls, path: str | Path) -> "RunFile":
        try:
            with open(path, encoding="utf-8") as f:
                return cls(json.load(f), str(path))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigFileError(f"cannot read {path}: {e}") from e

    def glom(self, path: str, default: Any = _MISSING) -> Any:
        """
        Value at a dotted path
        ```
        self.glom("randomization.cell_radius_m")
        # equivalent to
        self.tree["randomization"]["cell_radius_m"]
        ```
        Missing paths return `default` when given, otherwise raise ConfigFileError.
        """
        try:
            return glom(self.tree, path)
        except (GlomError, KeyError) as e:
            if default is not _MISSING:
                return default
            logger.error("RUN_FILE_PATH_MISSING", extra=dict(source=self.source, path=path))
            raise ConfigFileError(f"{self.source}: missing '{path}'") from e


@dataclass(frozen=True)
class TrainingSpace:
    preset: str
    space: RandomizationSpace
    n_configs: int
    n_seeds: int
    master_seed: int


def parse_space(run_file: RunFile) -> RandomizationSpace:
    tree = run_file.glom("randomization", default=None)
    try:
        return RandomizationSpace.model_validate(tree or {})
    except ValidationError as e:
        raise ConfigFileError(f"{run_file.source}: invalid randomization space: {e}") from e


def parse_training_space(run_file: RunFile, master_seed: int = 2024) -> TrainingSpace:
    preset = run_file.glom("preset", default="generalized")
    if preset not in ("generalized", "specialized"):
        raise ConfigFileError(f"{run_file.source}: unknown preset '{preset}'")
    return TrainingSpace(
        preset=preset,
        space=parse_space(run_file),
        n_configs=int(run_file.glom("n_configs", default=250)),
        n_seeds=int(run_file.glom("n_seeds", default=160)),
        master_seed=int(run_file.glom("master_seed", default=master_seed)),
    )


def parse_benchmark_overrides(run_file: Optional[RunFile]) -> Dict[str, dict]:
    if run_file is None:
        return {}
    overrides = run_file.glom("benchmarks", default={})
    if not isinstance(overrides, dict):
        raise ConfigFileError(f"{run_file.source}: 'benchmarks' must map ids to field updates")
    return overrides


def parse_scenario(run_file: RunFile) -> ScenarioConfig:
    tree = run_file.glom("scenario", default=run_file.tree)
    try:
        return validate_scenario(tree)
    except ScenarioError as e:
        raise ConfigFileError(f"{run_file.source}: {e}") from e

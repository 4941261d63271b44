"""Analysis configuration: command-line flags over an optional TOML file."""

from __future__ import annotations

import tomllib
from enum import StrEnum
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from neurocause.citest import DEFAULT_ALPHA
from neurocause.errors import InputError
from neurocause.interpret import DEFAULT_MAX_HIDDEN
from neurocause.scm import ExperimentKind

CONFIG_TABLE = "analyze"


class AnalysisMode(StrEnum):
    ORACLE = "oracle"
    DATA = "data"


class AnalysisConfig(BaseModel):
    """Validated settings for one ``analyze`` run.

    Oracle mode reads the graph of an SCM spec (``scm``) or a named
    fixture; data mode reads a dataset CSV (``data``).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ExperimentKind | None = None
    condition: str | None = None
    scm: Path | None = None
    fixture: str | None = None
    data: Path | None = None
    alpha: float = Field(DEFAULT_ALPHA, gt=0.0, lt=1.0)
    pipeline: Literal["continuous", "discrete"] = "continuous"
    bonferroni: bool = False
    sufficiency: bool = True
    max_hidden: int = Field(DEFAULT_MAX_HIDDEN, ge=0)
    combine: bool = True
    rfe: bool = False
    output: Path | None = None
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _exactly_one_source(self) -> AnalysisConfig:
        sources = [name for name in ("scm", "fixture", "data") if getattr(self, name) is not None]
        if len(sources) != 1:
            raise ValueError(
                "exactly one of scm, fixture (oracle mode) or data (data mode) is required, "
                f"got {sources or 'none'}"
            )
        if self.rfe and self.data is None:
            raise ValueError("rfe needs data mode")
        return self

    @property
    def mode(self) -> AnalysisMode:
        return AnalysisMode.DATA if self.data is not None else AnalysisMode.ORACLE


def read_config_file(path: Path) -> dict[str, Any]:
    """Return the ``[analyze]`` table of a TOML file (empty if absent)."""
    try:
        document = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"Malformed config file {path}: {exc}") from exc
    table = document.get(CONFIG_TABLE, {})
    if not isinstance(table, dict):
        raise InputError(f"[{CONFIG_TABLE}] in {path} must be a table")
    # Relative paths in the file are relative to the file.
    for key in ("scm", "data", "output"):
        if isinstance(table.get(key), str):
            table[key] = str(path.parent / table[key])
    return table


def build_config(flags: dict[str, Any], config_file: Path | None = None) -> AnalysisConfig:
    """Merge file defaults with flags; flags that are None do not override."""
    values: dict[str, Any] = read_config_file(config_file) if config_file else {}
    values.update({key: value for key, value in flags.items() if value is not None})
    try:
        return AnalysisConfig.model_validate(values)
    except ValidationError as exc:
        raise InputError(f"Invalid analysis configuration: {exc}") from exc

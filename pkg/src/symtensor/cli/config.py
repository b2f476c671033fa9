"""Run configurations for ``symtensor solve``."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from symtensor.charge_systems import su2_system
from symtensor.exception import ConfigError
from symtensor.rep_spaces import RepSpace


class SectorSpec(BaseModel):
    """One SU(2) sector of a bond space: twice the spin and its degeneracy."""

    model_config = ConfigDict(extra="forbid")

    twice_j: int = Field(ge=0)
    degeneracy: int = Field(ge=1)


class EdConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["ed"] = "ed"
    length: int = Field(ge=2, le=24, description="Number of spins one half")
    periodic: bool = True
    sectors: Optional[list[int]] = Field(default=None, description="Twice the total spins to solve")
    method: Literal["blocked", "dense"] = "blocked"

    @model_validator(mode="after")
    def _check_sectors(self) -> EdConfig:
        for n, c in enumerate(self.sectors or []):
            if c < 0 or c > self.length or (c - self.length) % 2:
                raise ValueError(f"sectors.{n}: 2J={c} is not reachable by {self.length} spins")
        return self


class MeraConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["mera"] = "mera"
    levels: int = Field(default=1, ge=1, le=3)
    assignments: Optional[list[list[SectorSpec]]] = Field(
        default=None, description="Coarse site sectors after each layer; the bottom site space by default"
    )
    top_charge: int = Field(default=0, ge=0, description="Twice the total spin of the top index")
    chi_top: int = Field(default=1, ge=1)
    sweeps: int = Field(default=100, ge=0)
    compare_ed: bool = True

    @model_validator(mode="after")
    def _check_assignments(self) -> MeraConfig:
        if self.assignments is not None and len(self.assignments) != self.levels:
            raise ValueError(f"{self.levels} layers need {self.levels} assignments, got {len(self.assignments)}")
        return self

    def spaces(self) -> list[RepSpace] | None:
        if self.assignments is None:
            return None
        system = su2_system()
        return [RepSpace.from_dict(system, {s.twice_j: s.degeneracy for s in level}) for level in self.assignments]


RunConfig = Union[EdConfig, MeraConfig]
_MODELS: dict[str, type[BaseModel]] = {"ed": EdConfig, "mera": MeraConfig}


def _location(exc: ValidationError) -> str:
    errors = exc.errors()
    if not errors:
        return ""
    return ".".join(str(part) for part in errors[0]["loc"])


def parse_config(data: object, kind: str) -> RunConfig:
    """Validate a decoded JSON document against the schema of ``kind``.

    Raises:
        ConfigError: Unknown kind or schema violation; ``location`` holds the
            dotted path of the first offending field.
    """
    model = _MODELS.get(kind)
    if model is None:
        raise ConfigError(f"unknown solver {kind!r}; expected one of {sorted(_MODELS)}")
    if isinstance(data, dict) and data.get("kind", kind) != kind:
        raise ConfigError(f"config is for {data['kind']!r}, not {kind!r}", "kind")
    try:
        return model.model_validate(data)  # type: ignore[return-value]
    except ValidationError as exc:
        location = _location(exc)
        message = exc.errors()[0]["msg"] if exc.errors() else str(exc)
        raise ConfigError(f"invalid {kind} config at {location or '<root>'}: {message}", location) from exc


def load_config(path: str | Path, kind: str) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data, kind)

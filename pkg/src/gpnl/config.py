"""Experiment configuration and seed streams."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

SCHEMA_VERSION = 1
U64_MAX = 2**64 - 1

Kind = Literal["gbs-prob", "amplitude", "reconstruct", "hadamard", "verify-all"]


class ConfigError(ValueError):
    pass


def derive_seed(master: int, name: str) -> int:
    """64-bit sub-seed for the stream ``name``; independent of which other streams exist."""
    digest = hashlib.sha256(f"{int(master)}/{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def stream(master: int, name: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, name))


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Kind = "verify-all"
    seed: int = Field(0, ge=0, le=U64_MAX)
    M: int = Field(4, ge=1, le=8)
    K: int = Field(3, ge=0)
    r: float = Field(0.4, ge=0.0, lt=5.0)
    N: int = Field(2, ge=1)
    c: float = Field(1.0, ge=1.0)
    alpha: float = Field(0.8, gt=0.0)
    t: list[float] = Field(default_factory=lambda: [0.0, 1.0])
    s_star: Optional[list[int]] = None
    j_max: Optional[int] = Field(None, ge=1)
    cutoff: Optional[int] = Field(None, ge=0)
    tail_threshold: Optional[float] = Field(None, gt=0.0, lt=1.0)
    unitary: Optional[dict] = None
    hadamard_instance: Optional[dict] = None
    out: Path = Path("results")
    csv: bool = True
    tolerance_scale: float = Field(1.0, gt=0.0)
    threads: int = Field(1, ge=1, le=256)

    @model_validator(mode="after")
    def _consistent(self):
        if self.cutoff is not None and self.tail_threshold is not None:
            raise ValueError("give either cutoff or tail_threshold, not both")
        if self.cutoff is None and self.tail_threshold is None:
            self.tail_threshold = 1e-10
        if self.K > self.M:
            raise ValueError(f"K={self.K} exceeds M={self.M}")
        if self.s_star is not None:
            if len(self.s_star) != self.M:
                raise ValueError(f"s_star has {len(self.s_star)} entries, M={self.M}")
            if any(s not in (0, 1) for s in self.s_star) or not any(self.s_star):
                raise ValueError("s_star must be a non-empty collision-free pattern")
        elif self.N > self.M:
            raise ValueError(f"N={self.N} exceeds M={self.M}")
        return self

    @property
    def target(self) -> tuple[int, ...]:
        if self.s_star is not None:
            return tuple(self.s_star)
        return tuple(1 if i < self.N else 0 for i in range(self.M))


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"field {loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse JSON text into a config, applying ``overrides`` on top.

    Raises:
        ConfigError: with line/column for malformed JSON or the offending field
            for invalid values.
    """
    data: dict = {}
    if text.strip():
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError("line 1, column 1: top level must be a JSON object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None


def load_config(path: str | Path | None, overrides: dict | None = None) -> ExperimentConfig:
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, overrides)

"""Experiment configuration: JSON round trip, overrides and a stable hash."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .errors import ValidationError

COMMANDS = ("mix", "check-q", "bc-run", "entropy", "maxlog", "hit")
FORMATS = ("csv", "json")

# keys that change where or how fast a run happens, never what it computes
NON_SEMANTIC = ("out", "workers", "format")


@dataclass
class ExperimentConfig:
    command: str = "bc-run"
    model: Dict[str, Any] = field(default_factory=lambda: {"kind": "iid-finite", "probs": [0.5, 0.5]})
    family: List[List[int]] = field(default_factory=lambda: [[0, 1]])
    schedule: Dict[str, Any] = field(
        default_factory=lambda: {"kind": "fixed", "interval": [0, 0], "constraints": [[0]]})
    N: int = 10**4
    radius: int = 200
    radii: List[int] = field(default_factory=lambda: [4, 5, 6, 7, 8])
    cap: int = 10**8
    k_max: int = 10
    replicates: int = 1
    seed: int = 0
    sidedness: Optional[str] = None
    gamma: float = 1.0
    epsilon: float = 0.5
    C: float = 20.0
    horizon: int = 10**6
    reach: int = 64
    out: str = "out"
    format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.format not in FORMATS:
            raise ValidationError(f"format must be csv or json, got {self.format!r}")
        for name in ("N", "radius", "cap", "k_max", "replicates", "horizon", "reach", "workers"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if not self.radii or any(not isinstance(r, int) or r < 0 for r in self.radii):
            raise ValidationError("radii must be nonnegative integers")
        if self.sidedness not in (None, "one-sided", "two-sided"):
            raise ValidationError(f"bad sidedness {self.sidedness!r}")
        for name in ("gamma", "epsilon", "C"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if not isinstance(self.model, dict) or "kind" not in self.model:
            raise ValidationError("model must be an object with a 'kind'")
        if not isinstance(self.schedule, dict) or "kind" not in self.schedule:
            raise ValidationError("schedule must be an object with a 'kind'")

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def with_overrides(self, overrides: Dict[str, Any]) -> "ExperimentConfig":
        data = self.to_dict()
        data.update(overrides)
        return self.from_dict(data)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON of every key that affects results."""
        data = {k: v for k, v in self.to_dict().items() if k not in NON_SEMANTIC}
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_value(text: str) -> Any:
    """A command-line override value: JSON when it parses, otherwise the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text

"""Application configuration, loadable from TOML or JSON."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Optional

try:
    import tomllib as tomli  # 3.11+
except ModuleNotFoundError:
    import tomli

from .gateway import ProviderSettings


@dataclasses.dataclass
class AppConfig:
    omega: float = 0.6
    similarity_threshold: float = 0.55
    semantic_top_k: int = 5
    interpret_cap: int = 4
    executor_timeout_s: float = 30.0
    memory_budget: int = 50
    ladders: Optional[dict] = None  # metric -> [[upper, score], ...] overrides
    cors_origins: tuple[str, ...] = ("http://localhost:5173",)
    provider: ProviderSettings = dataclasses.field(default_factory=ProviderSettings)

    def echo(self) -> dict:
        """The subset recorded in each session for provenance."""
        return {
            "omega": self.omega,
            "similarity_threshold": self.similarity_threshold,
            "semantic_top_k": self.semantic_top_k,
            "interpret_cap": self.interpret_cap,
            "memory_budget": self.memory_budget,
        }

    def ladder_tables(self) -> Optional[dict]:
        if self.ladders is None:
            return None
        return {
            metric: tuple((float(u), int(s)) for u, s in rungs)
            for metric, rungs in self.ladders.items()
        }


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    if path.suffix == ".toml":
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    else:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)

    provider_raw = raw.pop("provider", {})
    provider = ProviderSettings(
        **{k: v for k, v in provider_raw.items() if k in {f.name for f in dataclasses.fields(ProviderSettings)}}
    )
    known = {f.name for f in dataclasses.fields(AppConfig)} - {"provider"}
    kwargs = {k: v for k, v in raw.items() if k in known}
    if "cors_origins" in kwargs:
        kwargs["cors_origins"] = tuple(kwargs["cors_origins"])
    return AppConfig(provider=provider, **kwargs)

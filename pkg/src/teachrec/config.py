"""Service configuration: one JSON file plus TEACHREC_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .cf import CFParams
from .errors import MalformedRequest

ENV_PREFIX = "TEACHREC_"


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8420
    snapshot_path: Path = Path("bank.json")
    schema_path: Optional[Path] = None  # None selects the packaged default schema
    rules_path: Optional[Path] = None
    seed_path: Optional[Path] = None  # snapshot-format corpus used on first boot
    cf: CFParams = field(default_factory=CFParams)
    idle_timeout_minutes: float = 60.0

    @property
    def idle_timeout_s(self) -> float:
        return self.idle_timeout_minutes * 60.0


_FILE_KEYS = {
    "host", "port", "snapshot_path", "schema_path", "rules_path", "seed_path",
    "k", "theta", "rho", "idle_timeout_minutes",
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Defaults, overlaid by the config file, overlaid by environment variables."""
    values: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise MalformedRequest(f"{path}: config must be a JSON object")
        unknown = set(raw) - _FILE_KEYS
        if unknown:
            raise MalformedRequest(f"{path}: unknown config keys {sorted(unknown)}")
        values.update(raw)

    env = os.environ if env is None else env
    for key in _FILE_KEYS:
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            values[key] = env[env_key]

    def _path_or_none(key: str) -> Optional[Path]:
        value = values.get(key)
        return Path(value) if value else None

    params = CFParams(
        k=int(values.get("k", CFParams.k)),
        theta=float(values.get("theta", CFParams.theta)),
        rho=float(values.get("rho", CFParams.rho)),
    )
    return ServiceConfig(
        host=str(values.get("host", ServiceConfig.host)),
        port=int(values.get("port", ServiceConfig.port)),
        snapshot_path=Path(values.get("snapshot_path", ServiceConfig.snapshot_path)),
        schema_path=_path_or_none("schema_path"),
        rules_path=_path_or_none("rules_path"),
        seed_path=_path_or_none("seed_path"),
        cf=params,
        idle_timeout_minutes=float(
            values.get("idle_timeout_minutes", ServiceConfig.idle_timeout_minutes)
        ),
    )

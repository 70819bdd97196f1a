"""Service configuration from UNANI_CDSS_* environment variables."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

ENV_PREFIX = "UNANI_CDSS_"


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    data_dir: Path = Path("./data")
    kb_path: Path | None = None  # None: packaged seed corpus
    rules_path: Path | None = None  # None: packaged rule files
    token_ttl_hours: float = 24.0

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> ServiceConfig:
        env = os.environ if env is None else env

        def get(name: str, default: str | None = None) -> str | None:
            return env.get(ENV_PREFIX + name, default)

        kb_path = get("KB")
        rules_path = get("RULES")
        return cls(
            host=get("HOST", "127.0.0.1") or "127.0.0.1",
            port=int(get("PORT", "8000") or "8000"),
            data_dir=Path(get("DATA_DIR", "./data") or "./data"),
            kb_path=Path(kb_path) if kb_path else None,
            rules_path=Path(rules_path) if rules_path else None,
            token_ttl_hours=float(get("TOKEN_TTL_HOURS", "24") or "24"),
        )

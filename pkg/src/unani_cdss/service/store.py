"""Durable document store: append-only NDJSON log plus compacted snapshot.

Every write is one fsynced JSON line, so a killed process loses at most an
uncommitted request. Load order is snapshot first, then log replay; compact()
swaps in a fresh snapshot atomically (os.replace) before truncating the log.
Single-writer: all mutations funnel through one lock.
"""

from __future__ import annotations

import json
import logging
import os
import secrets
import threading
from datetime import datetime, timezone
from pathlib import Path

log = logging.getLogger(__name__)

COLLECTIONS = ("accounts", "sessions", "patients", "reports", "appointments")

_SNAPSHOT_VERSION = 1


class StoreCorruption(Exception):
    pass


def new_id(prefix: str) -> str:
    """Time-prefixed id; lexicographic order follows creation order."""
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    return f"{prefix}_{stamp}_{secrets.token_hex(4)}"


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class EventStore:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.snapshot_path = self.data_dir / "snapshot.json"
        self.log_path = self.data_dir / "events.ndjson"
        self._lock = threading.Lock()
        self._state: dict[str, dict[str, dict]] = {c: {} for c in COLLECTIONS}
        self._load()
        self._log_file = open(self.log_path, "a", encoding="utf-8")

    # -- loading ----------------------------------------------------------

    def _load(self) -> None:
        if self.snapshot_path.exists():
            doc = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
            if doc.get("version") != _SNAPSHOT_VERSION:
                raise StoreCorruption(f"unsupported snapshot version {doc.get('version')!r}")
            for collection, records in doc["state"].items():
                self._state.setdefault(collection, {}).update(records)
        if self.log_path.exists():
            raw = self.log_path.read_text(encoding="utf-8")
            lines = raw.split("\n")
            for n, line in enumerate(lines):
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    if n == len(lines) - 1:  # torn final write: drop it
                        log.warning("dropping torn trailing log line")
                        break
                    raise StoreCorruption(f"corrupt event at line {n + 1}") from exc
                self._apply(event)

    def _apply(self, event: dict) -> None:
        if event.get("op") != "put":
            raise StoreCorruption(f"unknown event op {event.get('op')!r}")
        collection, record = event["collection"], event["record"]
        self._state.setdefault(collection, {})[record["id"]] = record

    # -- writing ----------------------------------------------------------

    def put(self, collection: str, record: dict) -> dict:
        if "id" not in record:
            raise ValueError("record must carry an id")
        event = {"op": "put", "collection": collection, "record": record}
        line = json.dumps(event, ensure_ascii=False, sort_keys=True)
        with self._lock:
            self._log_file.write(line + "\n")
            self._log_file.flush()
            os.fsync(self._log_file.fileno())
            self._apply(event)
        return record

    def compact(self) -> None:
        with self._lock:
            doc = {"version": _SNAPSHOT_VERSION, "state": self._state}
            tmp = self.snapshot_path.with_suffix(".json.tmp")
            with open(tmp, "w", encoding="utf-8") as f:
                json.dump(doc, f, ensure_ascii=False, sort_keys=True)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, self.snapshot_path)
            self._log_file.close()
            self._log_file = open(self.log_path, "w", encoding="utf-8")
            self._log_file.flush()
            os.fsync(self._log_file.fileno())

    def close(self) -> None:
        with self._lock:
            if not self._log_file.closed:
                self._log_file.close()

    # -- reading ----------------------------------------------------------

    def get(self, collection: str, record_id: str) -> dict | None:
        with self._lock:
            record = self._state.get(collection, {}).get(record_id)
            return json.loads(json.dumps(record)) if record is not None else None

    def all(self, collection: str) -> list[dict]:
        with self._lock:
            records = sorted(self._state.get(collection, {}).items())
            return [json.loads(json.dumps(r)) for _, r in records]

    def find(self, collection: str, **fields) -> list[dict]:
        return [
            r for r in self.all(collection) if all(r.get(k) == v for k, v in fields.items())
        ]

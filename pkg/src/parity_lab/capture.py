"""JSON Lines capture of every request/response pair the host serves.

Each HTTP exchange becomes two records sharing a correlation id, one per
direction. Non-HTTP events (startup, shutdown) are written as separate
event lines without a ``direction`` field; the pairing invariant is over
direction records only. Authorization values are redacted unless the log
was opened for raw capture.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

REDACTED_BEARER = "Bearer ***"


@dataclass(frozen=True)
class CaptureRecord:
    timestamp: str  # UTC, ISO 8601
    direction: str  # "request" | "response"
    correlation_id: str
    method: str
    path: str
    headers: dict[str, str]
    body: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "timestamp": self.timestamp,
                "direction": self.direction,
                "correlation_id": self.correlation_id,
                "method": self.method,
                "path": self.path,
                "headers": self.headers,
                "body": self.body,
            }
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def new_correlation_id() -> str:
    return uuid.uuid4().hex[:12]


class CaptureLog:
    """Append-only JSONL writer; appends are serialized so lines never interleave."""

    def __init__(self, path: str | Path, redact_authorization: bool = True):
        self._path = Path(path)
        self._redact = redact_authorization
        self._lock = threading.Lock()
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._file = self._path.open("a", encoding="utf-8")

    def close(self) -> None:
        with self._lock:
            self._file.close()

    def event(self, event: str, **details: object) -> None:
        line = json.dumps({"timestamp": _now(), "event": event, **details})
        self._append(line)

    def record(
        self,
        direction: str,
        correlation_id: str,
        method: str,
        path: str,
        headers: dict[str, str],
        body: str,
    ) -> None:
        if self._redact:
            headers = {
                k: (REDACTED_BEARER if k.lower() == "authorization" else v)
                for k, v in headers.items()
            }
        record = CaptureRecord(_now(), direction, correlation_id, method, path, headers, body)
        self._append(record.to_json())

    def _append(self, line: str) -> None:
        with self._lock:
            self._file.write(line + "\n")
            self._file.flush()


def read_capture(path: str | Path) -> tuple[list[dict], list[dict]]:
    """Split a capture file into (HTTP records, event lines)."""
    records: list[dict] = []
    events: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            (records if "direction" in entry else events).append(entry)
    return records, events


def pairing_errors(records: list[dict]) -> list[str]:
    """Check the request/response bijection; empty list means it holds."""
    requests: dict[str, int] = {}
    responses: dict[str, int] = {}
    problems: list[str] = []
    for entry in records:
        cid = entry.get("correlation_id", "")
        bucket = requests if entry.get("direction") == "request" else responses
        bucket[cid] = bucket.get(cid, 0) + 1
    for cid, count in requests.items():
        if count != 1:
            problems.append(f"correlation id {cid} has {count} request records")
        if responses.get(cid, 0) != 1:
            problems.append(
                f"correlation id {cid} has {responses.get(cid, 0)} response records"
            )
    for cid in responses:
        if cid not in requests:
            problems.append(f"correlation id {cid} has a response but no request")
    return problems

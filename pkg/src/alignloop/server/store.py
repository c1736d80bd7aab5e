"""Durable session state: append-only event log plus periodic snapshots.

Each committed transition appends one JSON line {seq, kind, state} and is
flushed to disk before the in-memory state is considered committed, so a
crash between transitions loses nothing. Every `snapshot_every` events the
full state is also written to snapshot.json (atomically, via rename);
loading reads the snapshot and replays the newer events on top.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Optional

from ..errors import UnknownSession


class SessionStore:
    def __init__(self, root: Path, snapshot_every: int = 5):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.snapshot_every = snapshot_every

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def list_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())

    def exists(self, session_id: str) -> bool:
        return (self._dir(session_id) / "events.jsonl").exists()

    def commit(self, session_id: str, kind: str, seq: int, state: dict[str, Any]) -> None:
        """Append one committed transition; fsync before returning."""
        directory = self._dir(session_id)
        directory.mkdir(parents=True, exist_ok=True)
        line = json.dumps({"seq": seq, "kind": kind, "state": state}, sort_keys=True)
        with (directory / "events.jsonl").open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        if seq % self.snapshot_every == 0:
            self._write_snapshot(directory, seq, state)

    def _write_snapshot(self, directory: Path, seq: int, state: dict[str, Any]) -> None:
        tmp = directory / "snapshot.json.tmp"
        tmp.write_text(json.dumps({"seq": seq, "state": state}, sort_keys=True),
                       encoding="utf-8")
        os.replace(tmp, directory / "snapshot.json")

    def load(self, session_id: str) -> tuple[int, dict[str, Any]]:
        """Latest committed (seq, state) for a session."""
        directory = self._dir(session_id)
        events_path = directory / "events.jsonl"
        if not events_path.exists():
            raise UnknownSession(f"no session {session_id!r} in {self.root}")

        seq, state = -1, None
        snapshot = self._read_snapshot(directory)
        if snapshot is not None:
            seq, state = snapshot["seq"], snapshot["state"]
        with events_path.open("r", encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    event = json.loads(raw)
                except json.JSONDecodeError:
                    break   # torn tail write from a crash; everything before it is committed
                if event["seq"] > seq:
                    seq, state = event["seq"], event["state"]
        if state is None:
            raise UnknownSession(f"session {session_id!r} has no committed state")
        return seq, state

    def _read_snapshot(self, directory: Path) -> Optional[dict[str, Any]]:
        path = directory / "snapshot.json"
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return None   # half-written snapshot; the event log still has everything

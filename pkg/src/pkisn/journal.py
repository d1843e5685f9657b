"""Append-only journal backing the log's durability guarantees.

Every accepted submission is written and fsynced before its commitment is
returned, so a crash between any two API calls loses nothing the caller was
promised. Records carry a CRC so a torn tail from a crash is detected and
ignored on replay.
"""

from __future__ import annotations

import os
import zlib
from dataclasses import dataclass
from pathlib import Path

from .wire import u8, u32

REC_CERT = 1
REC_REVOCATION = 2
REC_TCRL = 3
REC_UPDATE = 4


@dataclass(frozen=True)
class JournalRecord:
    kind: int
    payload: bytes


class Journal:
    def __init__(self, path: str | Path, fsync: bool = True):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fsync = fsync
        self._fh = open(self.path, "ab")

    def append(self, kind: int, payload: bytes) -> None:
        self.append_all([(kind, payload)])

    def append_all(self, records: list[tuple[int, bytes]]) -> None:
        """Write several records with a single flush and fsync."""
        for kind, payload in records:
            frame = u8(kind) + u32(len(payload)) + payload
            frame += u32(zlib.crc32(frame))
            self._fh.write(frame)
        self._fh.flush()
        if self._fsync:
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()

    @staticmethod
    def replay(path: str | Path) -> list[JournalRecord]:
        """Read every intact record; stop silently at a truncated or corrupt tail."""
        records: list[JournalRecord] = []
        p = Path(path)
        if not p.exists():
            return records
        data = p.read_bytes()
        off = 0
        while off + 5 <= len(data):
            kind = data[off]
            length = int.from_bytes(data[off + 1 : off + 5], "big")
            end = off + 5 + length + 4
            if end > len(data):
                break
            payload = data[off + 5 : off + 5 + length]
            crc = int.from_bytes(data[off + 5 + length : end], "big")
            if zlib.crc32(data[off : off + 5 + length]) != crc:
                break
            records.append(JournalRecord(kind=kind, payload=payload))
            off = end
        return records

"""Persistent memo caches for invariant oracles.

One UTF-8 text file per cache, one entry per line: ``<key>;<p/q>``.
The key syntax is owned by the oracle that uses the cache (see point/p1);
this module only guarantees exact round-trips, malformed-line diagnostics,
and a single-writer insertion discipline (thread lock in-process plus an
advisory file lock across processes).
"""
from __future__ import annotations

import os
import re
import threading
from fractions import Fraction
from pathlib import Path

try:
    from filelock import FileLock
except ImportError:  # pragma: no cover - filelock is a declared dependency
    FileLock = None

_VALUE = re.compile(r"-?\d+(/\d+)?$")


class CacheError(Exception):
    """Raised for malformed cache files; includes path and line number."""


class MemoCache:
    """Exact key -> Fraction store, optionally persisted to a text file."""

    def __init__(self, path: str | os.PathLike | None = None):
        self._mem: dict[str, Fraction] = {}
        self._lock = threading.Lock()
        self._path = Path(path) if path is not None else None
        self._flock = None
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            if FileLock is not None:
                self._flock = FileLock(str(self._path) + ".lock")
                self._flock.acquire()
            if self._path.exists():
                self._load()
            self._fh = open(self._path, "a", encoding="utf-8")
        else:
            self._fh = None

    def _load(self) -> None:
        with open(self._path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                key, sep, value = line.rpartition(";")
                if not sep or not _VALUE.match(value):
                    raise CacheError(
                        "%s:%d: malformed cache line %r" % (self._path, lineno, line)
                    )
                self._mem[key] = Fraction(value)

    def get(self, key: str) -> Fraction | None:
        return self._mem.get(key)

    def put(self, key: str, value: Fraction) -> None:
        with self._lock:
            if key in self._mem:
                return
            self._mem[key] = value
            if self._fh is not None:
                self._fh.write("%s;%s\n" % (key, value))
                self._fh.flush()

    def __len__(self) -> int:
        return len(self._mem)

    def __contains__(self, key: str) -> bool:
        return key in self._mem

    def items(self):
        return self._mem.items()

    def export_text(self) -> str:
        """Canonical dump: sorted lines, one entry each."""
        return "".join(
            "%s;%s\n" % (k, v) for k, v in sorted(self._mem.items())
        )

    def clear(self) -> None:
        with self._lock:
            self._mem.clear()
            if self._fh is not None:
                self._fh.truncate(0)
                self._fh.seek(0)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
        if self._flock is not None:
            self._flock.release()
            self._flock = None

    def __del__(self):  # pragma: no cover - best effort cleanup
        try:
            self.close()
        except Exception:
            pass

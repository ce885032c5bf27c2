"""Small shared helpers: atomic file writes and worker-count resolution."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

THREADS_ENV = "SHADOW_EVAL_THREADS"


def atomic_write_bytes(path, data: bytes) -> None:
    """Write `data` to `path` via a temp file + rename, so readers never see
    a partially written file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def resolve_jobs(requested: int | None = None) -> int:
    """Worker count for per-utterance parallelism. The SHADOW_EVAL_THREADS
    environment variable, when set to a positive integer, overrides the
    requested value."""
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            value = 0
        if value >= 1:
            return value
    if requested is None or requested < 1:
        return 1
    return int(requested)

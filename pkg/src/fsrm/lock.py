"""Exclusive lock on a pipeline output directory."""

from __future__ import annotations

import contextlib
import logging
import os
import sys
from pathlib import Path

from fsrm.errors import OutputLockedError

logger = logging.getLogger("fsrm.lock")

LOCK_NAME = ".fsrm.lock"


def _flock(fd: int, exclusive: bool) -> bool:
    """Take (non-blocking) or drop the lock on fd; False when another process holds it."""
    try:
        if sys.platform == "win32":
            import msvcrt

            # msvcrt locks a byte range starting at the current position
            os.lseek(fd, 0, os.SEEK_SET)
            msvcrt.locking(fd, msvcrt.LK_NBLCK if exclusive else msvcrt.LK_UNLCK, 1)
        else:
            import fcntl

            fcntl.flock(fd, (fcntl.LOCK_EX | fcntl.LOCK_NB) if exclusive else fcntl.LOCK_UN)
    except OSError:
        return False
    return True


@contextlib.contextmanager
def output_lock(out_dir: Path):
    """Hold LOCK_NAME inside out_dir for the duration of the block, recording our pid in it."""
    lock_path = Path(out_dir) / LOCK_NAME
    lock_path.parent.mkdir(parents=True, exist_ok=True)
    fd = os.open(lock_path, os.O_RDWR | os.O_CREAT, 0o600)
    try:
        if not _flock(fd, exclusive=True):
            raise OutputLockedError(f"another fsrm run is writing to {out_dir}")
        os.ftruncate(fd, 0)
        os.write(fd, f"{os.getpid()}\n".encode())
        logger.debug("Locked output directory %s", out_dir)
        try:
            yield
        finally:
            _flock(fd, exclusive=False)
    finally:
        os.close(fd)

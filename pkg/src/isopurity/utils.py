"""Utility helpers: logging, timing, output directories, workers, random streams."""

import hashlib
import logging
import os
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from rich.console import Console
from rich.logging import RichHandler

console = Console()
# Logs and errors go to stderr; stdout carries command output.
err_console = Console(stderr=True)

THREADS_ENV = "ISOPURITY_THREADS"


def setup_logging(verbose: bool = False) -> logging.Logger:
    """Configure rich logging."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, rich_tracebacks=True, show_path=False)],
        force=True,
    )
    return logging.getLogger("isopurity")


@contextmanager
def timer(label: str, logger: logging.Logger | None = None):
    """Context manager that logs elapsed time."""
    start = time.monotonic()
    yield
    elapsed = time.monotonic() - start
    msg = f"{label}: {elapsed:.1f}s"
    if logger:
        logger.info(msg)
    else:
        err_console.print(f"  [dim]{msg}[/dim]")


def ensure_output_dir(path: Path) -> Path:
    """Ensure output directory exists."""
    path.mkdir(parents=True, exist_ok=True)
    return path


def worker_count(requested: int | None = None) -> int:
    """Number of workers: explicit request, then ISOPURITY_THREADS, then CPU count."""
    if requested is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        requested = int(env) if env else None
    if requested is None:
        requested = os.cpu_count() or 1
    return max(1, int(requested))


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sub-stream ``index`` of ``seed``.

    Equivalent to ``SeedSequence(seed).spawn(k)[index]`` for any k > index, so
    serial and parallel runs draw identical numbers per index.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def split_count(count: int, parts: int) -> list[int]:
    """Split ``count`` into ``parts`` near-equal shares, larger shares first."""
    base, extra = divmod(count, parts)
    return [base + (1 if k < extra else 0) for k in range(parts)]


def file_digest(path: Path) -> str:
    """SHA-256 hex digest of a file."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def format_file_size(size_bytes: int) -> str:
    """Format bytes as human-readable size."""
    for unit in ("B", "KB", "MB", "GB"):
        if size_bytes < 1024:
            return f"{size_bytes:.1f} {unit}"
        size_bytes /= 1024
    return f"{size_bytes:.1f} TB"
